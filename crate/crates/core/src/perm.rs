//! Permutations in one-line notation, their inversion graphs, direct sums and
//! block decompositions, brute-force pattern counting, and the two
//! characterizations of forest permutations.
//!
//! Positions and ranks are 1-based at every public boundary.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;

use crate::error::{Error, Result};

/// A permutation of `{1..n}` in one-line notation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    values: Vec<usize>,
}

impl Permutation {
    /// Validates `values` as a bijection of `{1..n}`, `n >= 1`.
    pub fn new(values: Vec<usize>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("permutation must have length >= 1"));
        }
        let n = values.len();
        let mut seen = vec![false; n + 1];
        for &v in &values {
            if v == 0 || v > n {
                return Err(Error::NotAPermutation(format!(
                    "rank {v} outside 1..={n}"
                )));
            }
            if seen[v] {
                return Err(Error::NotAPermutation(format!("duplicate rank {v}")));
            }
            seen[v] = true;
        }
        Ok(Permutation { values })
    }

    pub(crate) fn from_vec_unchecked(values: Vec<usize>) -> Self {
        debug_assert!(Permutation::new(values.clone()).is_ok());
        Permutation { values }
    }

    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("permutation must have length >= 1"));
        }
        Ok(Permutation {
            values: (1..=n).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// One-line notation, 1-based ranks.
    pub fn values(&self) -> &[usize] {
        &self.values
    }

    /// Rank at 1-based position `i`.
    pub fn at(&self, i: usize) -> usize {
        self.values[i - 1]
    }

    pub fn is_identity(&self) -> bool {
        self.values.iter().enumerate().all(|(i, &v)| v == i + 1)
    }

    /// Number of inversions, in `O(n log n)`.
    pub fn inversion_count(&self) -> u64 {
        let n = self.len();
        let mut tree = vec![0u32; n + 1];
        let mut inversions = 0u64;
        for (seen, &v) in self.values.iter().enumerate() {
            // count earlier values <= v
            let mut le = 0u64;
            let mut i = v;
            while i > 0 {
                le += tree[i] as u64;
                i &= i - 1;
            }
            inversions += seen as u64 - le;
            let mut i = v;
            while i <= n {
                tree[i] += 1;
                i += i & i.wrapping_neg();
            }
        }
        inversions
    }

    /// Parses either whitespace/comma separated ranks (`"2 4 1 3"`) or, for
    /// `n <= 9`, a compact digit string (`"2413"`).
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err(Error::Parse("empty permutation text".into()));
        }
        let has_separator = trimmed.contains(|c: char| c.is_whitespace() || c == ',');
        let values: Vec<usize> = if has_separator {
            trimmed
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|e| Error::Parse(format!("bad rank {t:?}: {e}")))
                })
                .collect::<Result<_>>()?
        } else if trimmed.len() > 1 {
            if trimmed.len() > 9 {
                return Err(Error::Parse(
                    "compact digit form is only accepted for n <= 9".into(),
                ));
            }
            trimmed
                .chars()
                .map(|c| {
                    c.to_digit(10)
                        .map(|d| d as usize)
                        .ok_or_else(|| Error::Parse(format!("bad digit {c:?}")))
                })
                .collect::<Result<_>>()?
        } else {
            vec![trimmed
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("bad rank {trimmed:?}: {e}")))?]
        };
        Permutation::new(values)
    }

    /// Compact digit rendering for `n <= 9`, spaced form otherwise.
    pub fn to_compact_string(&self) -> String {
        if self.len() <= 9 {
            self.values.iter().map(|v| v.to_string()).collect()
        } else {
            self.to_string()
        }
    }

    /// Restriction to the given 0-based positions, standardized to `{1..k}`.
    pub fn pattern_at(&self, positions: &[usize]) -> Permutation {
        let picked: Vec<usize> = positions.iter().map(|&i| self.values[i]).collect();
        standardize(&picked)
    }
}

/// Relabels distinct values to ranks `1..=k` preserving order.
fn standardize(values: &[usize]) -> Permutation {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by_key(|&i| values[i]);
    let mut ranks = vec![0; values.len()];
    for (rank, &i) in order.iter().enumerate() {
        ranks[i] = rank + 1;
    }
    Permutation { values: ranks }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for v in &self.values {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{v}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for Permutation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Permutation::parse(s)
    }
}

/// The permutation graph: an edge `(i, j)`, `i < j`, for every inversion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InversionGraph {
    pub n: usize,
    /// Sorted lexicographically, 1-based.
    pub edges: Vec<(usize, usize)>,
}

impl InversionGraph {
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Parses the `"i j"` per line text form.
    pub fn parse_edges(text: &str) -> Result<Vec<(usize, usize)>> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let parse = |t: Option<&str>| -> Result<usize> {
                t.ok_or_else(|| Error::Parse(format!("line {}: missing vertex", lineno + 1)))?
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            let i = parse(parts.next())?;
            let j = parse(parts.next())?;
            if parts.next().is_some() {
                return Err(Error::Parse(format!("line {}: trailing tokens", lineno + 1)));
            }
            edges.push((i, j));
        }
        Ok(edges)
    }

    pub fn edges_to_text(&self) -> String {
        let mut out = String::new();
        for (i, j) in &self.edges {
            out.push_str(&format!("{i} {j}\n"));
        }
        out
    }
}

pub fn inversion_graph(p: &Permutation) -> InversionGraph {
    let v = p.values();
    let n = v.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if v[i] > v[j] {
                edges.push((i + 1, j + 1));
            }
        }
    }
    InversionGraph { n, edges }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if `a` and `b` were already connected.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// Union-find over the inversion edges; stops at the first cycle.
fn inversion_graph_is_acyclic(p: &Permutation) -> bool {
    let v = p.values();
    let n = v.len();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if v[i] > v[j] && !uf.union(i, j) {
                return false;
            }
        }
    }
    true
}

/// True iff the inversion graph is a tree (connected and acyclic).
///
/// Uses `n - 1` inversions plus a single block, which is equivalent: a
/// connected graph on `n` vertices with `n - 1` edges is a tree.
pub fn is_tree_permutation(p: &Permutation) -> bool {
    p.inversion_count() == p.len() as u64 - 1 && block_count(p) == 1
}

/// Which of the two equivalent forest tests to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForestTest {
    /// Inversion graph has no cycle.
    Acyclic,
    /// Avoids both 321 and 3412.
    Avoidance,
}

pub fn is_forest_permutation(p: &Permutation, method: ForestTest) -> bool {
    match method {
        ForestTest::Acyclic => inversion_graph_is_acyclic(p),
        ForestTest::Avoidance => {
            let p321 = Permutation::from_vec_unchecked(vec![3, 2, 1]);
            let p3412 = Permutation::from_vec_unchecked(vec![3, 4, 1, 2]);
            !contains_pattern(p, &p321) && !contains_pattern(p, &p3412)
        }
    }
}

/// Forest test in `O(n log n)`: a graph with `c` components is a forest iff it
/// has `n - c` edges, and the components are the blocks.
pub(crate) fn is_forest_fast(p: &Permutation) -> bool {
    p.inversion_count() == (p.len() - block_count(p)) as u64
}

/// Walks increasing index tuples, pruning prefixes that are not
/// order-isomorphic to the pattern prefix. `visit` returns false to stop.
fn walk_occurrences(p: &[usize], pattern: &[usize], mut visit: impl FnMut(&[usize]) -> bool) {
    let m = pattern.len();
    let n = p.len();
    if m > n || m == 0 {
        return;
    }
    let mut idx = vec![0usize; m];
    // depth-first with explicit stack of next candidate
    let mut depth = 0usize;
    idx[0] = 0;
    loop {
        // room needed for remaining entries
        if idx[depth] + (m - depth) > n {
            if depth == 0 {
                return;
            }
            depth -= 1;
            idx[depth] += 1;
            continue;
        }
        let cand = p[idx[depth]];
        let ok = (0..depth).all(|s| (p[idx[s]] < cand) == (pattern[s] < pattern[depth]));
        if !ok {
            idx[depth] += 1;
            continue;
        }
        if depth + 1 == m {
            if !visit(&idx) {
                return;
            }
            idx[depth] += 1;
        } else {
            idx[depth + 1] = idx[depth] + 1;
            depth += 1;
        }
    }
}

fn contains_pattern(p: &Permutation, pattern: &Permutation) -> bool {
    let mut found = false;
    walk_occurrences(p.values(), pattern.values(), |_| {
        found = true;
        false
    });
    found
}

/// Number of occurrences of `pattern` in `p` by direct enumeration of index
/// subsets (with prefix pruning). Worst case `O(C(n, m))`; meant as an oracle.
pub fn count_occurrences_bruteforce(p: &Permutation, pattern: &Permutation) -> BigUint {
    BigUint::from(count_occurrences_u64(p, pattern))
}

pub(crate) fn count_occurrences_u64(p: &Permutation, pattern: &Permutation) -> u64 {
    let mut count = 0u64;
    walk_occurrences(p.values(), pattern.values(), |_| {
        count += 1;
        true
    });
    count
}

/// Ordered list of indecomposable summands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockDecomposition {
    pub blocks: Vec<Permutation>,
}

impl BlockDecomposition {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Number of blocks of length 1.
    pub fn singleton_count(&self) -> usize {
        self.blocks.iter().filter(|b| b.len() == 1).count()
    }

    pub fn recompose(&self) -> Result<Permutation> {
        direct_sum(&self.blocks)
    }
}

/// Block boundaries as exclusive 0-based end offsets.
fn block_ends(p: &Permutation) -> Vec<usize> {
    let mut ends = Vec::new();
    let mut max = 0;
    for (i, &v) in p.values().iter().enumerate() {
        max = max.max(v);
        if max == i + 1 {
            ends.push(i + 1);
        }
    }
    ends
}

pub fn block_count(p: &Permutation) -> usize {
    block_ends(p).len()
}

pub fn is_indecomposable(p: &Permutation) -> bool {
    block_count(p) == 1
}

pub fn block_decompose(p: &Permutation) -> BlockDecomposition {
    let mut blocks = Vec::new();
    let mut start = 0;
    for end in block_ends(p) {
        let block = p.values()[start..end].iter().map(|&v| v - start).collect();
        blocks.push(Permutation { values: block });
        start = end;
    }
    BlockDecomposition { blocks }
}

/// Direct sum `parts[0] ⊕ parts[1] ⊕ ...`.
pub fn direct_sum(parts: &[Permutation]) -> Result<Permutation> {
    if parts.is_empty() {
        return Err(Error::Empty("direct sum of an empty list"));
    }
    let mut values = Vec::with_capacity(parts.iter().map(Permutation::len).sum());
    let mut shift = 0;
    for part in parts {
        values.extend(part.values().iter().map(|&v| v + shift));
        shift += part.len();
    }
    Ok(Permutation { values })
}

/// Reconstructs the unique permutation whose inversion set is `edges`, using
/// `p(i) = i - #{j < i : (j,i) ∈ E} + #{j > i : (i,j) ∈ E}`.
pub fn permutation_from_inversion_graph(n: usize, edges: &[(usize, usize)]) -> Result<Permutation> {
    if n == 0 {
        return Err(Error::Empty("permutation must have length >= 1"));
    }
    let mut delta = vec![0i64; n];
    for &(i, j) in edges {
        if !(1 <= i && i < j && j <= n) {
            return Err(Error::NotAnInversionSet(format!(
                "edge ({i},{j}) is not an ordered pair in 1..={n}"
            )));
        }
        delta[i - 1] += 1;
        delta[j - 1] -= 1;
    }
    let mut values = Vec::with_capacity(n);
    for (i, d) in delta.iter().enumerate() {
        let v = i as i64 + 1 + d;
        if v < 1 || v > n as i64 {
            return Err(Error::NotAnInversionSet(format!(
                "reconstructed rank {v} at position {} is out of range",
                i + 1
            )));
        }
        values.push(v as usize);
    }
    let p = Permutation::new(values)
        .map_err(|e| Error::NotAnInversionSet(format!("reconstruction is not a bijection: {e}")))?;
    // The inversion sets agree iff every edge is an inversion of p and the
    // counts match (which also rules out duplicate edges).
    for &(i, j) in edges {
        if p.at(i) < p.at(j) {
            return Err(Error::NotAnInversionSet(format!(
                "edge ({i},{j}) is not an inversion of the reconstruction"
            )));
        }
    }
    if p.inversion_count() != edges.len() as u64 {
        return Err(Error::NotAnInversionSet(format!(
            "reconstruction has {} inversions, edge set has {}",
            p.inversion_count(),
            edges.len()
        )));
    }
    Ok(p)
}

/// All permutations of `{1..n}` in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Permutation> {
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let mut current: Vec<usize> = (1..=n).collect();
    loop {
        out.push(Permutation {
            values: current.clone(),
        });
        // next lexicographic permutation
        let Some(i) = (0..n - 1).rev().find(|&i| current[i] < current[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| current[j] > current[i]).unwrap();
        current.swap(i, j);
        current[i + 1..].reverse();
    }
    out
}
