//! L/R codes of tree permutations.
//!
//! Every tree permutation of length `n >= 2` labels each position either `L`
//! (a left-to-right maximum) or `R` (a right-to-left minimum), never both. The
//! resulting word starts with `L`, ends with `R`, and determines the
//! permutation. Codes are packed one bit per symbol (`L = 0`, `R = 1`).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::perm::{is_tree_permutation, permutation_from_inversion_graph, Permutation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    L,
    R,
}

impl Symbol {
    pub fn as_char(self) -> char {
        match self {
            Symbol::L => 'L',
            Symbol::R => 'R',
        }
    }
}

/// A word in `L{L,R}^{n-2}R`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Code {
    words: Vec<u64>,
    len: usize,
}

impl Code {
    /// Builds a code from 0-based bits (`true = R`), validating the end symbols.
    pub fn from_bits(bits: impl IntoIterator<Item = bool>) -> Result<Self> {
        let mut words = Vec::new();
        let mut len = 0;
        for bit in bits {
            if len % 64 == 0 {
                words.push(0);
            }
            if bit {
                words[len / 64] |= 1u64 << (len % 64);
            }
            len += 1;
        }
        let code = Code { words, len };
        code.validate()?;
        Ok(code)
    }

    pub fn from_symbols(symbols: &[Symbol]) -> Result<Self> {
        Code::from_bits(symbols.iter().map(|&s| s == Symbol::R))
    }

    /// The code whose runs are `runs[0]` L's, `runs[1]` R's, and so on.
    pub fn from_runs(runs: &[usize]) -> Result<Self> {
        if runs.is_empty() || runs.len() % 2 != 0 {
            return Err(Error::InvalidCode(
                "run list must be nonempty with an even number of runs".into(),
            ));
        }
        if runs.iter().any(|&r| r == 0) {
            return Err(Error::InvalidCode("run lengths must be >= 1".into()));
        }
        let bits = runs
            .iter()
            .enumerate()
            .flat_map(|(k, &r)| std::iter::repeat(k % 2 == 1).take(r));
        Code::from_bits(bits)
    }

    /// Builds a code from `(L_i, R_i)` pairs.
    pub fn from_pairs(pairs: &[(usize, usize)]) -> Result<Self> {
        let runs: Vec<usize> = pairs.iter().flat_map(|&(l, r)| [l, r]).collect();
        Code::from_runs(&runs)
    }

    fn validate(&self) -> Result<()> {
        if self.len < 2 {
            return Err(Error::InvalidCode(format!(
                "code length {} < 2",
                self.len
            )));
        }
        if self.bit(0) {
            return Err(Error::InvalidCode("first symbol must be L".into()));
        }
        if !self.bit(self.len - 1) {
            return Err(Error::InvalidCode("last symbol must be R".into()));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bits = text
            .trim()
            .chars()
            .map(|c| match c {
                'L' => Ok(false),
                'R' => Ok(true),
                other => Err(Error::InvalidCode(format!("unexpected symbol {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Code::from_bits(bits)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// Codes have length at least 2, so this is always false.
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    fn bit(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    /// Symbol at 1-based position `pos`.
    pub fn symbol_at(&self, pos: usize) -> Symbol {
        if self.bit(pos - 1) {
            Symbol::R
        } else {
            Symbol::L
        }
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> + '_ {
        (0..self.len).map(move |i| if self.bit(i) { Symbol::R } else { Symbol::L })
    }

    /// Maximal run lengths, starting with an L-run.
    pub fn runs(&self) -> Vec<usize> {
        let mut runs = Vec::new();
        let mut current = self.bit(0);
        let mut length = 0;
        for i in 0..self.len {
            let b = self.bit(i);
            if b == current {
                length += 1;
            } else {
                runs.push(length);
                current = b;
                length = 1;
            }
        }
        runs.push(length);
        runs
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in self.symbols() {
            write!(f, "{}", s.as_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Code({self})")
    }
}

impl FromStr for Code {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Code::parse(s)
    }
}

/// Run lengths `(ℓ₁, r₁, …, ℓ_m, r_m)` of a code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLengths {
    runs: Vec<usize>,
}

impl BlockLengths {
    pub fn runs(&self) -> &[usize] {
        &self.runs
    }

    /// Number of L-runs (equivalently R-runs).
    pub fn m(&self) -> usize {
        self.runs.len() / 2
    }

    /// `(ℓ_i, r_i)`, 1-based `i`.
    pub fn pair(&self, i: usize) -> (usize, usize) {
        (self.runs[2 * i - 2], self.runs[2 * i - 1])
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.runs.chunks(2).map(|c| (c[0], c[1])).collect()
    }

    pub fn total(&self) -> usize {
        self.runs.iter().sum()
    }

    pub fn to_code(&self) -> Code {
        Code::from_runs(&self.runs).expect("run lengths of a valid code")
    }
}

pub fn block_lengths(c: &Code) -> BlockLengths {
    BlockLengths { runs: c.runs() }
}

/// Code of a tree permutation of length >= 2.
pub fn encode(tau: &Permutation) -> Result<Code> {
    let n = tau.len();
    if n < 2 {
        return Err(Error::OutOfRange(
            "codes are defined for tree permutations of length >= 2".into(),
        ));
    }
    if !is_tree_permutation(tau) {
        return Err(Error::NotATree(tau.to_string()));
    }
    let v = tau.values();
    let mut is_max = vec![false; n];
    let mut running_max = 0;
    for i in 0..n {
        if v[i] > running_max {
            is_max[i] = true;
            running_max = v[i];
        }
    }
    let mut bits = vec![false; n];
    let mut running_min = usize::MAX;
    for i in (0..n).rev() {
        let is_min = v[i] < running_min;
        if is_min {
            running_min = v[i];
        }
        if is_max[i] == is_min {
            return Err(Error::Internal(format!(
                "position {} of {tau} is labelled {}",
                i + 1,
                if is_min { "both L and R" } else { "neither L nor R" }
            )));
        }
        bits[i] = is_min;
    }
    Code::from_bits(bits)
}

/// Edges of the inversion graph of `decode(c)`, read off the code:
/// each L with the nearest following R, each R with the nearest preceding L,
/// and the last L of run `B_{2k-1}` with the first R of run `B_{2k+2}`.
/// Sorted, 1-based, without duplicates.
pub fn code_edges(c: &Code) -> Vec<(usize, usize)> {
    let n = c.len();
    let mut edges = Vec::with_capacity(n + 1);

    let mut next_r = vec![usize::MAX; n];
    let mut upcoming = usize::MAX;
    for i in (0..n).rev() {
        if c.bit(i) {
            upcoming = i;
        }
        next_r[i] = upcoming;
    }
    let mut last_l = usize::MAX;
    for i in 0..n {
        if c.bit(i) {
            edges.push((last_l + 1, i + 1));
        } else {
            last_l = i;
            edges.push((i + 1, next_r[i] + 1));
        }
    }

    // run starts: run k (0-based) begins at starts[k]
    let runs = c.runs();
    let mut starts = Vec::with_capacity(runs.len());
    let mut pos = 0;
    for &r in &runs {
        starts.push(pos);
        pos += r;
    }
    let m = runs.len() / 2;
    // L-run k (0-based index 2k) pairs with R-run 2k+3
    for k in 0..m.saturating_sub(1) {
        let last_l_of_run = starts[2 * k] + runs[2 * k] - 1;
        let first_r = starts[2 * k + 3];
        edges.push((last_l_of_run + 1, first_r + 1));
    }

    edges.sort_unstable();
    edges.dedup();
    edges
}

/// 1-based positions that are leaves of the inversion graph, read off the code.
pub fn code_leaves(c: &Code) -> Vec<usize> {
    let n = c.len();
    let mut leaves = Vec::new();
    for i in 0..n {
        let leaf = if !c.bit(i) {
            let not_last_in_run = i + 1 < n && !c.bit(i + 1);
            not_last_in_run || i + 2 == n
        } else {
            let not_first_in_run = i > 0 && c.bit(i - 1);
            not_first_in_run || i == 1
        };
        if leaf {
            leaves.push(i + 1);
        }
    }
    leaves
}

/// The tree permutation with code `c`.
pub fn decode(c: &Code) -> Result<Permutation> {
    permutation_from_inversion_graph(c.len(), &code_edges(c))
        .map_err(|e| Error::Internal(format!("decoding {c} failed: {e}")))
}

/// Iterates over `L{L,R}^{n-2}R` in lexicographic order (`L < R`).
pub struct CodeIter {
    n: usize,
    next: u64,
    end: u64,
}

impl Iterator for CodeIter {
    type Item = Code;

    fn next(&mut self) -> Option<Code> {
        if self.next >= self.end {
            return None;
        }
        let middle = self.n - 2;
        let x = self.next;
        self.next += 1;
        let bits = std::iter::once(false)
            .chain((0..middle).map(move |j| (x >> (middle - 1 - j)) & 1 == 1))
            .chain(std::iter::once(true));
        Some(Code::from_bits(bits).expect("enumerated codes are valid"))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.end - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for CodeIter {}

pub fn enumerate_codes(n: usize) -> Result<CodeIter> {
    if n < 2 {
        return Err(Error::OutOfRange(format!("codes need n >= 2, got {n}")));
    }
    if n - 2 >= 63 {
        return Err(Error::OutOfRange(format!(
            "2^{} codes cannot be enumerated",
            n - 2
        )));
    }
    Ok(CodeIter {
        n,
        next: 0,
        end: 1u64 << (n - 2),
    })
}

/// Accepts either an L/R code or a permutation in one-line notation.
pub fn parse_tree_or_perm(text: &str) -> Result<Permutation> {
    let t = text.trim();
    if !t.is_empty() && t.chars().all(|c| c == 'L' || c == 'R') {
        decode(&Code::parse(t)?)
    } else {
        Permutation::parse(t)
    }
}

/// All tree permutations of length `n >= 1`, in code order.
pub fn enumerate_trees(n: usize) -> Result<Vec<Permutation>> {
    if n == 0 {
        return Err(Error::Empty("tree enumeration needs n >= 1"));
    }
    if n == 1 {
        return Ok(vec![Permutation::identity(1)?]);
    }
    enumerate_codes(n)?.map(|c| decode(&c)).collect()
}

/// All forest permutations of length `n`, as direct sums of trees over the
/// compositions of `n`.
pub fn enumerate_forests(n: usize) -> Result<Vec<Permutation>> {
    if n == 0 {
        return Err(Error::Empty("forest enumeration needs n >= 1"));
    }
    let trees: Vec<Vec<Permutation>> = (1..=n)
        .map(|k| enumerate_trees(k))
        .collect::<Result<_>>()?;
    let mut by_len: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new()]];
    for m in 1..=n {
        let mut here = Vec::new();
        for k in 1..=m {
            for prefix in &by_len[m - k] {
                for t in &trees[k - 1] {
                    let mut v = prefix.clone();
                    v.extend(t.values().iter().map(|x| x + (m - k)));
                    here.push(v);
                }
            }
        }
        by_len.push(here);
    }
    by_len
        .pop()
        .expect("nonempty")
        .into_iter()
        .map(Permutation::new)
        .collect()
}
