//! Closed-form limit constants, exact in `Q(√5)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::error::{Error, Result};
use crate::exact::rat;
use crate::geom::{geom_binomial_moment, geom_expectation, GeomPolynomial};
use crate::pattern::{ForestPatternKernel, TreePatternKernel};
use crate::perm::{is_tree_permutation, Permutation};
use crate::quad::QuadRat;

fn factorial(n: usize) -> BigInt {
    (1..=n as u64).map(BigInt::from).product()
}

/// `ν = E|τ̃| = φ + 2`.
pub fn nu() -> QuadRat {
    &QuadRat::phi() + &QuadRat::from_int(2)
}

/// `μ_σ = E occ_σ(τ̃)` for a tree pattern.
pub fn mu_sigma(sigma: &Permutation) -> Result<QuadRat> {
    if !is_tree_permutation(sigma) {
        return Err(Error::NotATree(sigma.to_string()));
    }
    if sigma.len() == 1 {
        return Ok(nu());
    }
    QuadRat::phi().pow(4 - sigma.len() as i64)
}

/// `μ̃_σ`, the leading coefficient of `E occ_σ(π_n) ~ μ̃_σ n^d` for forests.
pub fn tilde_mu_sigma(sigma: &Permutation) -> Result<QuadRat> {
    let kernel = ForestPatternKernel::new(sigma)?;
    let (d, lambda, k) = (kernel.d() as i64, kernel.lambda() as i64, sigma.len() as i64);
    let v = &nu().pow(lambda - d)? * &QuadRat::phi().pow(4 * d - 3 * lambda - k)?;
    Ok(v.scale(&BigRational::new(BigInt::one(), factorial(d as usize))))
}

/// The second closed form `(1/d!) 5^{-(d-λ)/2} φ^{3d-2λ-|σ|}`.
pub fn tilde_mu_sigma_alt(sigma: &Permutation) -> Result<QuadRat> {
    let kernel = ForestPatternKernel::new(sigma)?;
    let (d, lambda, k) = (kernel.d() as i64, kernel.lambda() as i64, sigma.len() as i64);
    let v = &QuadRat::sqrt5().pow(lambda - d)? * &QuadRat::phi().pow(3 * d - 2 * lambda - k)?;
    Ok(v.scale(&BigRational::new(BigInt::one(), factorial(d as usize))))
}

/// `E f_σ(X_1, …, X_b)` over i.i.d. geometric block pairs.
pub fn laga_expectation(sigma: &Permutation) -> Result<BigRational> {
    let kernel = TreePatternKernel::new(sigma)?;
    if kernel.is_small() {
        let l = GeomPolynomial::monomial(1);
        return Ok(geom_expectation(&l) + geom_expectation(&l));
    }
    let mut acc = BigRational::one();
    for ((ls, ll), (rs, rl)) in kernel.alpha_shapes() {
        // α(x) = C(x - 1 + shift, lower) = C(L + (shift - 1), lower)
        acc *= geom_binomial_moment(ls - 1, ll as usize)?;
        acc *= geom_binomial_moment(rs - 1, rl as usize)?;
    }
    Ok(acc)
}

fn binom_square_moment(shift: i64, k: usize) -> BigRational {
    geom_expectation(&GeomPolynomial::binomial(shift, k).pow(2))
}

/// Asymptotic variance `γ²` of `occ_σ(τ_n)/√n` for the tree pattern whose
/// code is `L^ℓ R^r`.
pub fn gamma_lr(ell: usize, r: usize) -> Result<BigRational> {
    if ell == 0 || r == 0 {
        return Err(Error::OutOfRange(format!("run lengths must be >= 1, got ({ell}, {r})")));
    }
    let quarter = BigRational::new(BigInt::one(), BigInt::from(4));
    let v = match (ell, r) {
        (1, 1) => rat(0),
        (l, 1) | (1, l) => quarter * binom_square_moment(1, l) - rat(4 * l as i64) + rat(1),
        (l, r) => {
            quarter * binom_square_moment(0, l - 1) * binom_square_moment(0, r - 1)
                - rat(4 * (l + r) as i64)
                + rat(9)
        }
    };
    Ok(v)
}

/// `γ(ℓ, r)` for `1 <= ℓ, r <= 5`, row `ℓ`, column `r`.
pub fn table1() -> Vec<Vec<BigRational>> {
    (1..=5)
        .map(|l| (1..=5).map(|r| gamma_lr(l, r).expect("positive")).collect())
        .collect()
}

/// The published integer grid.
pub const TABLE1_PUBLISHED: [[i64; 5]; 5] = [
    [0, 6, 52, 306, 1664],
    [6, 2, 28, 174, 944],
    [52, 28, 154, 800, 4150],
    [306, 174, 800, 3946, 20196],
    [1664, 944, 4150, 20196, 103010],
];

/// `γ²` for inversions (and blocks) of a random forest permutation: `3·5^{-3/2}`.
pub fn forest_gamma_closed() -> QuadRat {
    QuadRat::from_fracs(0, 1, 3, 25)
}

/// Mean number of blocks per unit length in a random forest permutation.
pub fn block_mean_rate() -> QuadRat {
    QuadRat::from_fracs(1, 2, -1, 10)
}

/// Mean number of inversions per unit length in a random forest permutation.
pub fn inversion_mean_rate() -> QuadRat {
    QuadRat::from_fracs(1, 2, 1, 10)
}

/// Coefficient `c_d` of the correction `C(n,d) - c_d n^{d-1}` for the
/// identity pattern `1⋯d`, `d >= 2`.
pub fn identity_correction(d: usize) -> Result<QuadRat> {
    if d < 2 {
        return Err(Error::OutOfRange(format!("identity correction needs d >= 2, got {d}")));
    }
    Ok(inversion_mean_rate().scale(&BigRational::new(BigInt::one(), factorial(d - 2))))
}

/// Known exact `γ²` in the tree harness: tree patterns with one L-run.
pub fn tree_gamma_known(sigma: &Permutation) -> Option<BigRational> {
    let kernel = TreePatternKernel::new(sigma).ok()?;
    if kernel.is_small() {
        return Some(rat(0));
    }
    let runs = kernel.sigma_runs()?;
    if runs.m() != 1 {
        return None;
    }
    let (l, r) = runs.pair(1);
    gamma_lr(l, r).ok()
}

/// Known exact `γ²` in the forest harness: `21` and the identity `12`.
pub fn forest_gamma_known(sigma: &Permutation) -> Option<QuadRat> {
    match sigma.values() {
        [1] => Some(QuadRat::zero()),
        [2, 1] | [1, 2] => Some(forest_gamma_closed()),
        _ => None,
    }
}
