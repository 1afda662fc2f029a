//! Fast exact pattern counting through code block lengths.
//!
//! A tree pattern `σ` with `|σ| >= 3` and code runs `ℓ_1, r_1, …, ℓ_b, r_b`
//! is counted inside a tree permutation by sliding a window of `b` block pairs
//! over the host code and multiplying one binomial per run. Forest patterns
//! split into blocks, each handled by its own tree kernel.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::binomial::{binomial, binomial_u128};
use crate::code::{block_lengths, encode, BlockLengths, Code};
use crate::error::{Error, Result};
use crate::perm::{
    block_decompose, count_occurrences_u64, direct_sum, is_forest_fast, is_tree_permutation,
    Permutation,
};

/// A block-length pair `(ℓ', r')` of a host code.
pub type BlockPair = (usize, usize);

/// Counting domain: `u128` with overflow detection, or unbounded integers.
trait Acc: Sized + Clone {
    fn nil() -> Self;
    fn unit() -> Self;
    fn from_usize(v: usize) -> Self;
    fn binom(n: i64, k: i64) -> Option<Self>;
    fn times(&self, other: &Self) -> Option<Self>;
    fn plus(&self, other: &Self) -> Option<Self>;
    fn is_nil(&self) -> bool;
}

impl Acc for u128 {
    fn nil() -> Self {
        0
    }
    fn unit() -> Self {
        1
    }
    fn from_usize(v: usize) -> Self {
        v as u128
    }
    fn binom(n: i64, k: i64) -> Option<Self> {
        binomial_u128(n, k)
    }
    fn times(&self, other: &Self) -> Option<Self> {
        self.checked_mul(*other)
    }
    fn plus(&self, other: &Self) -> Option<Self> {
        self.checked_add(*other)
    }
    fn is_nil(&self) -> bool {
        *self == 0
    }
}

impl Acc for BigUint {
    fn nil() -> Self {
        Zero::zero()
    }
    fn unit() -> Self {
        One::one()
    }
    fn from_usize(v: usize) -> Self {
        BigUint::from(v)
    }
    fn binom(n: i64, k: i64) -> Option<Self> {
        Some(binomial(n, k))
    }
    fn times(&self, other: &Self) -> Option<Self> {
        Some(self * other)
    }
    fn plus(&self, other: &Self) -> Option<Self> {
        Some(self + other)
    }
    fn is_nil(&self) -> bool {
        Zero::is_zero(self)
    }
}

/// Runs a `u128` computation, recomputing with `BigUint` on overflow.
fn with_fallback(
    small: impl FnOnce() -> Option<u128>,
    big: impl FnOnce() -> Option<BigUint>,
) -> BigUint {
    match small() {
        Some(v) => BigUint::from(v),
        None => big().expect("unbounded arithmetic cannot overflow"),
    }
}

/// Binomial parameters `α(x) = C(x - 1 + shift, lower)` for one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct AlphaParams {
    shift: i64,
    lower: i64,
}

impl AlphaParams {
    fn eval<A: Acc>(self, x: i64) -> Option<A> {
        A::binom(x - 1 + self.shift, self.lower)
    }
}

/// The kernel `f_σ` of a tree pattern, with the per-run binomial factors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreePatternKernel {
    sigma: Permutation,
    b: usize,
    sigma_runs: Option<BlockLengths>,
    l1_gt1: bool,
    rb_gt1: bool,
    alpha_l: Vec<AlphaParams>,
    alpha_r: Vec<AlphaParams>,
}

impl TreePatternKernel {
    pub fn new(sigma: &Permutation) -> Result<Self> {
        if !is_tree_permutation(sigma) {
            return Err(Error::NotATree(sigma.to_string()));
        }
        if sigma.len() <= 2 {
            return Ok(TreePatternKernel {
                sigma: sigma.clone(),
                b: 1,
                sigma_runs: None,
                l1_gt1: false,
                rb_gt1: false,
                alpha_l: Vec::new(),
                alpha_r: Vec::new(),
            });
        }
        let runs = block_lengths(&encode(sigma)?);
        let b = runs.m();
        let l1_gt1 = runs.pair(1).0 > 1;
        let rb_gt1 = runs.pair(b).1 > 1;
        let ind = |c: bool| c as i64;
        let mut alpha_l = Vec::with_capacity(b);
        let mut alpha_r = Vec::with_capacity(b);
        for i in 1..=b {
            let (l, r) = runs.pair(i);
            let last_r1 = ind(i == b && !rb_gt1);
            alpha_l.push(AlphaParams {
                shift: ind(i == 1 && l1_gt1) + last_r1,
                lower: l as i64 - 1 + last_r1,
            });
            let first_l1 = ind(i == 1 && !l1_gt1);
            alpha_r.push(AlphaParams {
                shift: ind(i == b && rb_gt1) + first_l1,
                lower: r as i64 - 1 + first_l1,
            });
        }
        Ok(TreePatternKernel {
            sigma: sigma.clone(),
            b,
            sigma_runs: Some(runs),
            l1_gt1,
            rb_gt1,
            alpha_l,
            alpha_r,
        })
    }

    pub fn sigma(&self) -> &Permutation {
        &self.sigma
    }

    /// Number of L-runs of the code of `σ`; 1 when `|σ| <= 2`.
    pub fn b(&self) -> usize {
        self.b
    }

    pub fn sigma_runs(&self) -> Option<&BlockLengths> {
        self.sigma_runs.as_ref()
    }

    /// True for the patterns `1` and `21`, whose kernel is `ℓ' + r'`.
    pub fn is_small(&self) -> bool {
        self.sigma.len() <= 2
    }

    pub fn l1_gt1(&self) -> bool {
        self.l1_gt1
    }

    pub fn rb_gt1(&self) -> bool {
        self.rb_gt1
    }

    /// `((shift, lower) of α_L, (shift, lower) of α_R)` per run, where
    /// `α(x) = C(x - 1 + shift, lower)`.
    pub(crate) fn alpha_shapes(&self) -> Vec<((i64, i64), (i64, i64))> {
        self.alpha_l
            .iter()
            .zip(&self.alpha_r)
            .map(|(l, r)| ((l.shift, l.lower), (r.shift, r.lower)))
            .collect()
    }

    fn check_run_index(&self, i: usize) -> Result<()> {
        if self.is_small() {
            return Err(Error::OutOfRange(format!(
                "pattern {} has no run factors",
                self.sigma
            )));
        }
        if i == 0 || i > self.b {
            return Err(Error::OutOfRange(format!("run index {i} not in 1..={}", self.b)));
        }
        Ok(())
    }

    /// `(α_{L,i}(ℓ'), α_{R,i}(r'))`.
    pub fn alpha_factors(&self, i: usize, ell_prime: usize, r_prime: usize) -> Result<(BigUint, BigUint)> {
        self.check_run_index(i)?;
        let l = self.alpha_l[i - 1].eval::<BigUint>(ell_prime as i64).expect("big");
        let r = self.alpha_r[i - 1].eval::<BigUint>(r_prime as i64).expect("big");
        Ok((l, r))
    }

    /// `f_σ(x_1, …, x_b)`.
    pub fn kernel_eval(&self, xs: &[BlockPair]) -> Result<BigUint> {
        if xs.len() != self.b {
            return Err(Error::Arity {
                expected: self.b,
                got: xs.len(),
            });
        }
        Ok(with_fallback(|| self.eval_generic(xs), || self.eval_generic(xs)))
    }

    /// `f_σ` as `u64` for simulation; `None` on overflow.
    pub fn kernel_eval_u64(&self, xs: &[BlockPair]) -> Option<u64> {
        self.eval_generic::<u128>(xs).and_then(|v| v.to_u64())
    }

    fn eval_generic<A: Acc>(&self, xs: &[BlockPair]) -> Option<A> {
        if self.is_small() {
            return Some(A::from_usize(xs[0].0 + xs[0].1));
        }
        let mut acc = A::unit();
        for (i, &(l, r)) in xs.iter().enumerate() {
            acc = acc.times(&self.alpha_l[i].eval::<A>(l as i64)?)?;
            if acc.is_nil() {
                return Some(acc);
            }
            acc = acc.times(&self.alpha_r[i].eval::<A>(r as i64)?)?;
        }
        Some(acc)
    }

    /// `occ_σ(τ)` for the tree permutation `τ` with code `c`.
    pub fn occ_in_code(&self, c: &Code) -> BigUint {
        let n = c.len();
        match self.sigma.len() {
            1 => return BigUint::from(n),
            2 => return BigUint::from(n - 1),
            _ => {}
        }
        if n < 3 {
            return BigUint::zero();
        }
        let xs = block_lengths(c).pairs();
        with_fallback(|| self.ltt_sum(&xs), || self.ltt_sum(&xs))
    }

    /// `occ_σ(τ)` from the block pairs of `τ`'s code; `None` if it overflows.
    pub fn occ_in_pairs_u128(&self, xs: &[BlockPair]) -> Option<u128> {
        let n: usize = xs.iter().map(|&(l, r)| l + r).sum();
        match self.sigma.len() {
            1 => Some(n as u128),
            2 => Some(n as u128 - 1),
            _ if n < 3 => Some(0),
            _ => self.ltt_sum(xs),
        }
    }

    fn ltt_sum<A: Acc>(&self, xs: &[BlockPair]) -> Option<A> {
        let m = xs.len();
        let b = self.b;
        if m < b {
            return Some(A::nil());
        }
        let mut total = A::nil();
        for s in 0..=(m - b) {
            let mut prod = A::unit();
            for i in 0..b {
                let k = i + s + 1;
                let (l, r) = xs[k - 1];
                let l_t = l as i64 - (k == 1 && self.l1_gt1) as i64;
                let r_t = r as i64 - (k == m && self.rb_gt1) as i64;
                prod = prod.times(&self.alpha_l[i].eval::<A>(l_t)?)?;
                if prod.is_nil() {
                    break;
                }
                prod = prod.times(&self.alpha_r[i].eval::<A>(r_t)?)?;
                if prod.is_nil() {
                    break;
                }
            }
            total = total.plus(&prod)?;
        }
        Some(total)
    }

    /// `occ_σ(τ)` for a tree permutation host given directly.
    pub fn occ_in_tree(&self, tau: &Permutation) -> Result<BigUint> {
        match tau.len() {
            0 => Err(Error::Empty("host permutation")),
            1 => Ok(BigUint::from((self.sigma.len() == 1) as u32)),
            _ => Ok(self.occ_in_code(&encode(tau)?)),
        }
    }
}

/// `occ_σ(τ)` for a tree pattern `σ` and the tree permutation with code `tau_code`.
pub fn occ_tree_in_tree(sigma: &Permutation, tau_code: &Code) -> Result<BigUint> {
    Ok(TreePatternKernel::new(sigma)?.occ_in_code(tau_code))
}

/// `kernel.alpha_factors(i, ℓ', r')`.
pub fn alpha_factors(
    kernel: &TreePatternKernel,
    i: usize,
    ell_prime: usize,
    r_prime: usize,
) -> Result<(BigUint, BigUint)> {
    kernel.alpha_factors(i, ell_prime, r_prime)
}

pub fn kernel_eval(kernel: &TreePatternKernel, xs: &[BlockPair]) -> Result<BigUint> {
    kernel.kernel_eval(xs)
}

/// `(lower, upper)` window sums bracketing `occ_σ(τ)`; requires `|σ| >= 3`.
pub fn sandwich_bounds(sigma: &Permutation, tau_code: &Code) -> Result<(BigUint, BigUint)> {
    let kernel = TreePatternKernel::new(sigma)?;
    if kernel.is_small() {
        return Err(Error::OutOfRange(format!(
            "sandwich bounds need |σ| >= 3, got {}",
            sigma.len()
        )));
    }
    let xs = block_lengths(tau_code).pairs();
    let (m, b) = (xs.len(), kernel.b());
    if m < b {
        return Ok((BigUint::zero(), BigUint::zero()));
    }
    let window = |s: usize| kernel.kernel_eval(&xs[s..s + b]).expect("arity b");
    let upper = (0..=m - b).map(window).sum();
    let lower = (1..(m - b)).map(window).sum();
    Ok((lower, upper))
}

/// The product kernel of a forest pattern `σ = σ_1 ⊕ … ⊕ σ_d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForestPatternKernel {
    sigma: Permutation,
    blocks: Vec<TreePatternKernel>,
}

impl ForestPatternKernel {
    pub fn new(sigma: &Permutation) -> Result<Self> {
        if sigma.is_empty() {
            return Err(Error::Empty("pattern"));
        }
        if !is_forest_fast(sigma) {
            return Err(Error::NotAForest(sigma.to_string()));
        }
        let blocks = block_decompose(sigma)
            .blocks
            .iter()
            .map(TreePatternKernel::new)
            .collect::<Result<Vec<_>>>()?;
        Ok(ForestPatternKernel {
            sigma: sigma.clone(),
            blocks,
        })
    }

    pub fn sigma(&self) -> &Permutation {
        &self.sigma
    }

    pub fn blocks(&self) -> &[TreePatternKernel] {
        &self.blocks
    }

    pub fn d(&self) -> usize {
        self.blocks.len()
    }

    /// `b_j` for each block.
    pub fn widths(&self) -> Vec<usize> {
        self.blocks.iter().map(TreePatternKernel::b).collect()
    }

    /// Number of singleton blocks.
    pub fn lambda(&self) -> usize {
        self.blocks.iter().filter(|k| k.sigma().len() == 1).count()
    }

    /// `Π_j f_{σ_j}(group_j)`.
    pub fn eval(&self, groups: &[&[BlockPair]]) -> Result<BigUint> {
        if groups.len() != self.d() {
            return Err(Error::Arity {
                expected: self.d(),
                got: groups.len(),
            });
        }
        let mut acc = BigUint::one();
        for (k, g) in self.blocks.iter().zip(groups) {
            acc *= k.kernel_eval(g)?;
        }
        Ok(acc)
    }

    /// Block-wise values `w_j(i) = f_{σ_j}(x_i, …, x_{i+b_j-1})` (0-based `i`).
    fn window_values(&self, xs: &[BlockPair]) -> Vec<Vec<BigUint>> {
        self.blocks
            .iter()
            .map(|k| {
                let b = k.b();
                if xs.len() < b {
                    return Vec::new();
                }
                (0..=xs.len() - b)
                    .map(|i| k.kernel_eval(&xs[i..i + b]).expect("arity"))
                    .collect()
            })
            .collect()
    }

    /// Constrained U-statistic by suffix-sum dynamic programming.
    pub fn ustat_dp(&self, xs: &[BlockPair]) -> BigUint {
        let m = xs.len();
        let widths = self.widths();
        let w = self.window_values(xs);
        // tail[i] = Σ over admissible placements of blocks j.. with i_j >= i
        let mut tail: Vec<BigUint> = vec![BigUint::one(); m + 2];
        for j in (0..self.d()).rev() {
            let mut next = vec![BigUint::zero(); m + 2];
            for i in (0..m).rev() {
                let here = if i < w[j].len() {
                    let after = i + widths[j];
                    &w[j][i] * &tail[after.min(m + 1)]
                } else {
                    BigUint::zero()
                };
                next[i] = &next[i + 1] + here;
            }
            tail = next;
        }
        tail[0].clone()
    }

    /// Constrained U-statistic by direct enumeration of admissible tuples.
    pub fn ustat_enumerate(&self, xs: &[BlockPair]) -> BigUint {
        constrained_ustat(&self.widths(), xs, |groups| {
            self.eval(groups).expect("arity matches widths")
        })
        .expect("widths are nonempty")
    }

    /// `UU_m(f_σ)`: enumeration for `d <= 3`, dynamic programming beyond.
    pub fn ustat(&self, xs: &[BlockPair]) -> BigUint {
        if self.d() <= 3 {
            self.ustat_enumerate(xs)
        } else {
            self.ustat_dp(xs)
        }
    }

    /// The boundary sum bounding `|occ_σ(τ) - UU_m(f_σ)|` for the tree with
    /// block pairs `xs`: over nondecreasing `i_1 <= … <= i_d` whose windows
    /// fit in `1..=m` and with `i_1 = 1`, or `i_d = m - b_d + 1`, or some
    /// `i_{j+1} <= i_j + b_j + 1` (all 1-based).
    pub fn boundary_sum(&self, xs: &[BlockPair]) -> BigUint {
        let m = xs.len();
        let d = self.d();
        let widths = self.widths();
        let w = self.window_values(xs);
        if w.iter().any(Vec::is_empty) {
            return BigUint::zero();
        }
        let mut total = BigUint::zero();
        let mut idx = vec![0usize; d];
        loop {
            let near = (0..d - 1).any(|j| idx[j + 1] <= idx[j] + widths[j] + 1);
            let edge = idx[0] == 0 || idx[d - 1] + widths[d - 1] == m;
            if near || edge {
                let mut prod = BigUint::one();
                for j in 0..d {
                    prod *= &w[j][idx[j]];
                }
                total += prod;
            }
            // advance the nondecreasing odometer
            let mut j = d;
            loop {
                if j == 0 {
                    return total;
                }
                j -= 1;
                if idx[j] + 1 < w[j].len() {
                    idx[j] += 1;
                    let base = idx[j];
                    let mut ok = true;
                    for t in j + 1..d {
                        if base >= w[t].len() {
                            ok = false;
                            break;
                        }
                        idx[t] = base;
                    }
                    if ok {
                        break;
                    }
                }
            }
        }
    }
}

/// `Σ f((x_{i_1+k})_{k<b_1}, …, (x_{i_d+k})_{k<b_d})` over index tuples with
/// `i_j + b_j <= i_{j+1}` (0-based windows that do not overlap).
pub fn constrained_ustat<F>(widths: &[usize], xs: &[BlockPair], f: F) -> Result<BigUint>
where
    F: Fn(&[&[BlockPair]]) -> BigUint,
{
    let d = widths.len();
    if d == 0 {
        return Err(Error::Arity { expected: 1, got: 0 });
    }
    if widths.contains(&0) {
        return Err(Error::OutOfRange("window widths must be positive".into()));
    }
    let m = xs.len();
    let need: usize = widths.iter().sum();
    let mut total = BigUint::zero();
    if need > m {
        return Ok(total);
    }
    let mut idx: Vec<usize> = Vec::with_capacity(d);
    let mut pos = 0;
    for &b in widths {
        idx.push(pos);
        pos += b;
    }
    // room[j] = total width of windows j..d
    let mut room = vec![0usize; d + 1];
    for j in (0..d).rev() {
        room[j] = room[j + 1] + widths[j];
    }
    loop {
        let groups: Vec<&[BlockPair]> = (0..d).map(|j| &xs[idx[j]..idx[j] + widths[j]]).collect();
        total += f(&groups);
        let mut j = d;
        loop {
            if j == 0 {
                return Ok(total);
            }
            j -= 1;
            if idx[j] + room[j] < m {
                idx[j] += 1;
                let mut p = idx[j] + widths[j];
                for t in j + 1..d {
                    idx[t] = p;
                    p += widths[t];
                }
                break;
            }
        }
    }
}

/// Per-block counts `occ_{σ_j}(π_i)` with rows indexed by `j`.
fn block_counts(kernel: &ForestPatternKernel, host_blocks: &[Permutation]) -> Result<Vec<Vec<BigUint>>> {
    let codes = host_codes(host_blocks)?;
    Ok(kernel
        .blocks()
        .iter()
        .map(|k| {
            host_blocks
                .iter()
                .zip(&codes)
                .map(|(blk, c)| match c {
                    Some(c) => k.occ_in_code(c),
                    None => BigUint::from((k.sigma().len() == blk.len()) as u32),
                })
                .collect()
        })
        .collect())
}

fn host_codes(host_blocks: &[Permutation]) -> Result<Vec<Option<Code>>> {
    host_blocks
        .iter()
        .map(|b| if b.len() >= 2 { encode(b).map(Some) } else { Ok(None) })
        .collect()
}

fn forest_inputs(sigma: &Permutation, pi: &Permutation) -> Result<(ForestPatternKernel, Vec<Permutation>)> {
    if pi.is_empty() {
        return Err(Error::Empty("host permutation"));
    }
    if !is_forest_fast(pi) {
        return Err(Error::NotAForest(pi.to_string()));
    }
    Ok((ForestPatternKernel::new(sigma)?, block_decompose(pi).blocks))
}

/// Occurrences of `σ` in `π` that send distinct blocks of `σ` to distinct
/// blocks of `π`.
pub fn occ_prime_forest(sigma: &Permutation, pi: &Permutation) -> Result<BigUint> {
    let (kernel, host) = forest_inputs(sigma, pi)?;
    occ_prime_blocks(&kernel, &host)
}

/// [`occ_prime_forest`] on a host given by its block list.
pub fn occ_prime_blocks(kernel: &ForestPatternKernel, host_blocks: &[Permutation]) -> Result<BigUint> {
    let w = block_counts(kernel, host_blocks)?;
    let d = kernel.d();
    let mut dp = vec![BigUint::zero(); d + 1];
    dp[0] = BigUint::one();
    for i in 0..host_blocks.len() {
        for j in (1..=d).rev() {
            if !dp[j - 1].is_zero() && !w[j - 1][i].is_zero() {
                let add = &dp[j - 1] * &w[j - 1][i];
                dp[j] += add;
            }
        }
    }
    Ok(dp[d].clone())
}

/// Occurrences of `σ` in `π` that put two blocks of `σ` into one block of `π`.
pub fn occ_double_prime(sigma: &Permutation, pi: &Permutation) -> Result<BigUint> {
    let (kernel, host) = forest_inputs(sigma, pi)?;
    let brute = BigUint::from(count_occurrences_u64(pi, sigma));
    let prime = occ_prime_blocks(&kernel, &host)?;
    if prime > brute {
        return Err(Error::Internal("occ' exceeds the total count".into()));
    }
    Ok(brute - prime)
}

/// Exact `occ_σ(π)` for forest `σ` and forest `π` given by blocks.
///
/// Each block of `σ` lands inside a single block of `π`, so occurrences are
/// grouped by which consecutive runs of `σ`-blocks share a `π`-block. Runs of
/// one block use the fast tree counter; longer runs are counted directly
/// inside the (small) host block.
pub fn occ_forest_in_blocks(kernel: &ForestPatternKernel, host_blocks: &[Permutation]) -> Result<BigUint> {
    let d = kernel.d();
    let sigma_blocks: Vec<Permutation> = kernel.blocks().iter().map(|k| k.sigma().clone()).collect();
    let single = block_counts(kernel, host_blocks)?;
    // group patterns for runs a..b with b - a >= 2
    let mut groups: Vec<Vec<Option<Permutation>>> = vec![vec![None; d + 1]; d + 1];
    let mut group_len = vec![vec![0usize; d + 1]; d + 1];
    for a in 0..d {
        for b in a + 1..=d {
            group_len[a][b] = sigma_blocks[a..b].iter().map(Permutation::len).sum();
            if b - a >= 2 {
                groups[a][b] = Some(direct_sum(&sigma_blocks[a..b])?);
            }
        }
    }
    let mut dp = vec![BigUint::zero(); d + 1];
    dp[0] = BigUint::one();
    for (i, blk) in host_blocks.iter().enumerate() {
        for b in (1..=d).rev() {
            let mut add = BigUint::zero();
            for a in 0..b {
                if dp[a].is_zero() || group_len[a][b] > blk.len() {
                    continue;
                }
                let w = match &groups[a][b] {
                    None => single[a][i].clone(),
                    Some(g) => BigUint::from(count_occurrences_u64(blk, g)),
                };
                if !w.is_zero() {
                    add += &dp[a] * w;
                }
            }
            dp[b] += add;
        }
    }
    Ok(dp[d].clone())
}

/// Exact `occ_σ(π)` for forest permutations `σ` and `π`.
pub fn occ_forest_in_forest(sigma: &Permutation, pi: &Permutation) -> Result<BigUint> {
    let (kernel, host) = forest_inputs(sigma, pi)?;
    occ_forest_in_blocks(&kernel, &host)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{decode, enumerate_codes};
    use crate::perm::{all_permutations, count_occurrences_bruteforce, ForestTest};
    use crate::perm::is_forest_permutation;
    use proptest::prelude::*;

    fn perm(s: &str) -> Permutation {
        Permutation::parse(s).unwrap()
    }

    fn code(s: &str) -> Code {
        Code::parse(s).unwrap()
    }

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    fn trees_up_to(k: usize) -> Vec<Permutation> {
        (1..=k)
            .flat_map(all_permutations)
            .filter(is_tree_permutation)
            .collect()
    }

    #[test]
    fn alpha_examples() {
        let k = TreePatternKernel::new(&perm("312")).unwrap();
        assert_eq!(k.b(), 1);
        assert_eq!(k.alpha_factors(1, 1, 1).unwrap(), (big(1), big(1)));
        assert_eq!(k.kernel_eval(&[(1, 1)]).unwrap(), big(1));
        assert_eq!(k.kernel_eval(&[(2, 2)]).unwrap(), big(3));
        assert!(k.alpha_factors(2, 1, 1).is_err());
        assert!(k.kernel_eval(&[(1, 1), (1, 1)]).is_err());
    }

    #[test]
    fn alpha_monotone_in_ell() {
        for sigma in trees_up_to(5).iter().filter(|s| s.len() >= 3) {
            let k = TreePatternKernel::new(sigma).unwrap();
            for i in 1..=k.b() {
                let vals: Vec<BigUint> = (0..30).map(|l| k.alpha_factors(i, l, 1).unwrap().0).collect();
                assert!(vals.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }

    #[test]
    fn small_kernel_is_h() {
        let k = TreePatternKernel::new(&perm("21")).unwrap();
        assert_eq!(k.kernel_eval(&[(3, 2)]).unwrap(), big(5));
        let k1 = TreePatternKernel::new(&perm("1")).unwrap();
        assert_eq!(k1.kernel_eval(&[(4, 4)]).unwrap(), big(8));
    }

    #[test]
    fn occ_examples() {
        assert_eq!(occ_tree_in_tree(&perm("312"), &code("LLRR")).unwrap(), big(1));
        for n in 2..=9 {
            for c in enumerate_codes(n).unwrap() {
                assert_eq!(occ_tree_in_tree(&perm("21"), &c).unwrap(), big(n as u64 - 1));
                assert_eq!(occ_tree_in_tree(&perm("1"), &c).unwrap(), big(n as u64));
            }
        }
        for sigma in trees_up_to(6).iter().filter(|s| s.len() >= 2) {
            let c = encode(sigma).unwrap();
            assert_eq!(occ_tree_in_tree(sigma, &c).unwrap(), big(1), "{sigma}");
        }
        assert!(occ_tree_in_tree(&perm("12"), &code("LR")).is_err());
    }

    #[test]
    fn short_host_guard() {
        let k = TreePatternKernel::new(&perm("312")).unwrap();
        assert_eq!(k.occ_in_code(&code("LR")), big(0));
    }

    #[test]
    fn ltt_matches_bruteforce_exhaustive() {
        let patterns: Vec<Permutation> = trees_up_to(5).into_iter().filter(|s| s.len() >= 3).collect();
        for n in 2..=10 {
            for c in enumerate_codes(n).unwrap() {
                let tau = decode(&c).unwrap();
                for sigma in &patterns {
                    let fast = occ_tree_in_tree(sigma, &c).unwrap();
                    assert_eq!(fast, count_occurrences_bruteforce(&tau, sigma), "σ={sigma} τ={c}");
                }
            }
        }
    }

    #[test]
    fn sandwich_examples() {
        let (lo, hi) = sandwich_bounds(&perm("312"), &code("LLRR")).unwrap();
        assert_eq!(lo, big(0));
        assert_eq!(hi, big(3));
        let sigma = decode(&code("LRLR")).unwrap();
        let (lo, hi) = sandwich_bounds(&sigma, &encode(&sigma).unwrap()).unwrap();
        assert!(lo <= big(1) && big(1) <= hi);
        assert_eq!(
            sandwich_bounds(&sigma, &code("LR")).unwrap(),
            (big(0), big(0))
        );
        assert!(sandwich_bounds(&perm("21"), &code("LR")).is_err());
    }

    #[test]
    fn occ_prime_examples() {
        assert_eq!(occ_prime_forest(&perm("12"), &perm("12")).unwrap(), big(1));
        assert_eq!(occ_prime_forest(&perm("12"), &perm("3124")).unwrap(), big(3));
        assert_eq!(occ_double_prime(&perm("12"), &perm("3124")).unwrap(), big(1));
        assert_eq!(occ_double_prime(&perm("1"), &perm("3124")).unwrap(), big(0));
        assert_eq!(occ_double_prime(&perm("21"), &perm("21435")).unwrap(), big(0));
        assert_eq!(occ_prime_forest(&perm("312"), &perm("3124")).unwrap(), big(1));
        assert!(occ_prime_forest(&perm("321"), &perm("3124")).is_err());
        assert!(occ_prime_forest(&perm("12"), &perm("321")).is_err());
    }

    #[test]
    fn forest_counters_match_bruteforce_small() {
        let forests: Vec<Permutation> = (1..=7)
            .flat_map(all_permutations)
            .filter(|p| is_forest_permutation(p, ForestTest::Avoidance))
            .collect();
        let patterns: Vec<&Permutation> = forests.iter().filter(|p| p.len() <= 4).collect();
        for pi in forests.iter().filter(|p| p.len() >= 5) {
            for sigma in &patterns {
                let brute = count_occurrences_bruteforce(pi, sigma);
                assert_eq!(occ_forest_in_forest(sigma, pi).unwrap(), brute, "σ={sigma} π={pi}");
                let split = occ_prime_forest(sigma, pi).unwrap() + occ_double_prime(sigma, pi).unwrap();
                assert_eq!(split, brute);
            }
        }
    }

    #[test]
    fn ustat_examples() {
        let h = |g: &[&[BlockPair]]| BigUint::from(g[0][0].0 + g[0][0].1);
        let xs = [(1, 2), (3, 4), (4, 5)];
        assert_eq!(constrained_ustat(&[1], &xs, h).unwrap(), big(19));
        let k = ForestPatternKernel::new(&perm("312")).unwrap();
        assert_eq!(k.ustat(&[(2, 2)]), big(3));
        let xs2 = [(1, 2), (2, 2)];
        let two = ForestPatternKernel::new(&decode(&code("LRLR")).unwrap()).unwrap();
        assert_eq!(two.widths(), vec![2]);
        assert_eq!(two.ustat(&xs2), two.eval(&[&xs2]).unwrap());
        let pair = ForestPatternKernel::new(&perm("12")).unwrap();
        let hv: Vec<u64> = xs.iter().map(|&(l, r)| (l + r) as u64).collect();
        let naive: u64 = (0..3).flat_map(|i| (i + 1..3).map(move |j| (i, j))).map(|(i, j)| hv[i] * hv[j]).sum();
        assert_eq!(pair.ustat(&xs), big(naive));
        assert_eq!(pair.ustat_dp(&xs), big(naive));
        assert!(constrained_ustat(&[], &xs, h).is_err());
    }

    fn pairs_strategy(max_m: usize, max_run: usize) -> impl Strategy<Value = Vec<BlockPair>> {
        prop::collection::vec((1..=max_run, 1..=max_run), 1..=max_m)
    }

    fn forest_pattern_strategy() -> impl Strategy<Value = Permutation> {
        let trees = trees_up_to(4);
        prop::collection::vec(prop::sample::select(trees), 1..=3)
            .prop_map(|parts| direct_sum(&parts).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn ltt_matches_bruteforce_random(
            xs in pairs_strategy(8, 3),
            sigma in prop::sample::select(trees_up_to(5)),
        ) {
            let c = Code::from_pairs(&xs).unwrap();
            let tau = decode(&c).unwrap();
            prop_assert_eq!(occ_tree_in_tree(&sigma, &c).unwrap(), count_occurrences_bruteforce(&tau, &sigma));
        }

        #[test]
        fn sandwich_holds(xs in pairs_strategy(60, 4), sigma in prop::sample::select(trees_up_to(6))) {
            prop_assume!(sigma.len() >= 3);
            let c = Code::from_pairs(&xs).unwrap();
            let (lo, hi) = sandwich_bounds(&sigma, &c).unwrap();
            let occ = occ_tree_in_tree(&sigma, &c).unwrap();
            prop_assert!(lo <= occ && occ <= hi);
            let k = TreePatternKernel::new(&sigma).unwrap();
            if !k.l1_gt1() && !k.rb_gt1() {
                prop_assert_eq!(hi, occ);
            }
        }

        #[test]
        fn ustat_paths_agree(xs in pairs_strategy(10, 3), sigma in forest_pattern_strategy()) {
            let k = ForestPatternKernel::new(&sigma).unwrap();
            prop_assert_eq!(k.ustat_enumerate(&xs), k.ustat_dp(&xs));
        }

        #[test]
        fn unit_widths_give_plain_ustat(xs in pairs_strategy(9, 3), d in 1usize..=3) {
            let h = |x: &BlockPair| (x.0 + x.1) as u64;
            let f = |g: &[&[BlockPair]]| BigUint::from(g.iter().map(|w| h(&w[0])).product::<u64>());
            let got = constrained_ustat(&vec![1; d], &xs, f).unwrap();
            let m = xs.len();
            let mut naive = 0u64;
            for mask in 0u32..(1 << m) {
                if mask.count_ones() as usize == d {
                    naive += (0..m).filter(|i| mask >> i & 1 == 1).map(|i| h(&xs[i])).product::<u64>();
                }
            }
            prop_assert_eq!(got, BigUint::from(naive));
        }

        #[test]
        fn lk_bound_holds(xs in pairs_strategy(12, 3), sigma in forest_pattern_strategy()) {
            prop_assume!(sigma.len() <= 6);
            let k = ForestPatternKernel::new(&sigma).unwrap();
            let tau = decode(&Code::from_pairs(&xs).unwrap()).unwrap();
            let occ = count_occurrences_bruteforce(&tau, &sigma);
            let uu = k.ustat(&xs);
            let diff = if occ > uu { &occ - &uu } else { &uu - &occ };
            prop_assert!(diff <= k.boundary_sum(&xs), "σ={} xs={:?}", sigma, xs);
        }
    }
}
