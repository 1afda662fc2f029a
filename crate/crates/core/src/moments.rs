//! Certified intervals for mixed moments `E[occ_σ1(τ̃) occ_σ2(τ̃)]`.
//!
//! The moment is `Σ_n p^n S_n` with `S_n = Σ_{τ ∈ T_n} occ_σ1(τ) occ_σ2(τ)`.
//! Terms up to a cutoff `N` are summed exactly in `Q(√5)`; the rest is bounded
//! by `Σ_{n>N} n^K (2p)^n / 4`, using `occ_σ(τ) <= n^{|σ|}` and `t_n = 2^{n-2}`.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::code::{decode, enumerate_codes, Code};
use crate::error::{Error, Result};
use crate::exact::{marked_occurrence_count, tree_count};
use crate::pattern::{occ_forest_in_blocks, ForestPatternKernel, TreePatternKernel};
use crate::perm::{is_forest_permutation, is_tree_permutation, ForestTest, Permutation};
use crate::quad::QuadRat;

/// Largest `n` for which all of `T_n` is enumerated.
pub const ENUMERATION_LIMIT: usize = 22;

/// Largest cutoff considered before giving up.
const MAX_CUTOFF: usize = 20_000;

/// Rational `q = 191/250 >= 2p = 3 - √5`.
fn q_bound() -> BigRational {
    BigRational::new(BigInt::from(191), BigInt::from(250))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentInterval {
    pub lo: BigRational,
    pub hi: BigRational,
    /// Largest `n` summed exactly.
    pub cutoff: usize,
}

impl MomentInterval {
    pub fn contains(&self, x: &QuadRat) -> bool {
        let lo = QuadRat::from_rational(self.lo.clone());
        let hi = QuadRat::from_rational(self.hi.clone());
        &lo <= x && x <= &hi
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn midpoint_f64(&self) -> f64 {
        crate::exact::rational_to_f64(&((&self.lo + &self.hi) / BigRational::from_integer(2.into())))
    }
}

/// How `occ_σ` is obtained on `T_n`.
#[derive(Debug, Clone)]
enum Factor {
    /// `occ` is the same for every tree of length `n`.
    Fixed(fn(usize) -> BigUint, u32),
    /// A tree pattern of length at least 3; `Σ_τ occ` is known exactly.
    Tree(TreePatternKernel),
    /// Any other forest pattern.
    Forest(ForestPatternKernel),
}

fn occ_one(n: usize) -> BigUint {
    BigUint::from(n)
}

fn occ_21(n: usize) -> BigUint {
    BigUint::from(n.saturating_sub(1))
}

fn occ_12(n: usize) -> BigUint {
    // C(n,2) - (n-1) non-inversions
    BigUint::from((n * n.saturating_sub(1) / 2 + 1).saturating_sub(n))
}

fn occ_unit(_: usize) -> BigUint {
    BigUint::one()
}

impl Factor {
    fn new(sigma: Option<&Permutation>) -> Result<Self> {
        let Some(sigma) = sigma else {
            return Ok(Factor::Fixed(occ_unit, 0));
        };
        if !is_forest_permutation(sigma, ForestTest::Avoidance) {
            return Err(Error::NotAForest(sigma.to_string()));
        }
        Ok(match sigma.values() {
            [1] => Factor::Fixed(occ_one, 1),
            [2, 1] => Factor::Fixed(occ_21, 1),
            [1, 2] => Factor::Fixed(occ_12, 2),
            _ if is_tree_permutation(sigma) => Factor::Tree(TreePatternKernel::new(sigma)?),
            _ => Factor::Forest(ForestPatternKernel::new(sigma)?),
        })
    }

    fn degree(&self) -> u32 {
        match self {
            Factor::Fixed(_, k) => *k,
            Factor::Tree(k) => k.sigma().len() as u32,
            Factor::Forest(k) => k.sigma().len() as u32,
        }
    }

    fn len(&self) -> usize {
        self.degree() as usize
    }

    /// `occ_σ(τ)` for a tree `τ` of length `n >= 2` given by its code.
    fn occ(&self, n: usize, code: &Code) -> Result<BigUint> {
        match self {
            Factor::Fixed(g, _) => Ok(g(n)),
            Factor::Tree(k) => Ok(k.occ_in_code(code)),
            Factor::Forest(k) => occ_forest_in_blocks(k, &[decode(code)?]),
        }
    }

    fn occ_singleton(&self) -> Result<BigUint> {
        match self {
            Factor::Fixed(g, _) => Ok(g(1)),
            Factor::Tree(k) => Ok(BigUint::from((k.sigma().len() == 1) as u32)),
            Factor::Forest(_) => Ok(BigUint::zero()),
        }
    }
}

/// `S_n`, or `None` when it would need enumeration beyond the limit.
fn level_sum(f1: &Factor, f2: &Factor, n: usize) -> Result<Option<BigUint>> {
    if n == 1 {
        return Ok(Some(f1.occ_singleton()? * f2.occ_singleton()?));
    }
    let marked = |k: &TreePatternKernel| -> Result<BigUint> {
        let len = k.sigma().len();
        if n < len {
            Ok(BigUint::zero())
        } else {
            marked_occurrence_count(len, n)
        }
    };
    match (f1, f2) {
        (Factor::Fixed(g1, _), Factor::Fixed(g2, _)) => Ok(Some(tree_count(n)? * g1(n) * g2(n))),
        (Factor::Fixed(g, _), Factor::Tree(k)) | (Factor::Tree(k), Factor::Fixed(g, _)) => {
            Ok(Some(g(n) * marked(k)?))
        }
        _ if n > ENUMERATION_LIMIT => Ok(None),
        _ => {
            if n < f1.len().max(f2.len()) {
                return Ok(Some(BigUint::zero()));
            }
            let codes: Vec<_> = enumerate_codes(n)?.collect();
            let parts: Result<Vec<BigUint>> = codes
                .par_iter()
                .map(|c| Ok(f1.occ(n, c)? * f2.occ(n, c)?))
                .collect();
            Ok(Some(parts?.into_iter().sum()))
        }
    }
}

/// Smallest cutoff `N` whose certified tail is below `bound`, with the tail.
fn tail_cutoff(exponent: u32, bound: &BigRational) -> Result<(usize, BigRational)> {
    let q = q_bound();
    let quarter = BigRational::new(BigInt::one(), BigInt::from(4));
    // term(n) = n^K q^n / 4, starting at n = 2
    let mut q_pow = &q * &q;
    for n in 1..MAX_CUTOFF {
        let next = n + 1;
        let term = BigRational::from_integer(BigInt::from(next).pow(exponent)) * &q_pow * &quarter;
        let ratio_base = BigRational::new(BigInt::from(next + 1), BigInt::from(next));
        let rho = num_traits::pow(ratio_base, exponent as usize) * &q;
        if rho < BigRational::one() {
            let tail = term / (BigRational::one() - rho);
            if &tail < bound {
                return Ok((n, tail));
            }
        }
        q_pow *= &q;
    }
    Err(Error::Infeasible(format!(
        "no cutoff below {MAX_CUTOFF} reaches the requested precision"
    )))
}

/// `E[occ_σ1(τ̃) occ_σ2(τ̃)]` as an interval of width below `2^{-tail_bits}`;
/// `sigma2 = None` gives `E occ_σ1(τ̃)`.
///
/// Patterns `1`, `21`, `12` have the same count on every tree of a given
/// length, and a tree pattern has a known total over `T_n`, so any product
/// involving one of the former is summed in closed form to any cutoff. Other
/// products enumerate `T_n` and fail with [`Error::Infeasible`] once the
/// cutoff exceeds [`ENUMERATION_LIMIT`].
pub fn tilde_tau_moments(
    sigma1: &Permutation,
    sigma2: Option<&Permutation>,
    tail_bits: u32,
) -> Result<MomentInterval> {
    let f1 = Factor::new(Some(sigma1))?;
    let f2 = Factor::new(sigma2)?;
    let bound = BigRational::new(BigInt::one(), BigInt::one() << (tail_bits as usize + 1));
    let (cutoff, tail) = tail_cutoff(f1.degree() + f2.degree(), &bound)?;
    if level_sum(&f1, &f2, cutoff.max(ENUMERATION_LIMIT + 1))?.is_none() && cutoff > ENUMERATION_LIMIT {
        return Err(Error::Infeasible(format!(
            "precision 2^-{tail_bits} needs all trees up to length {cutoff}, \
             enumeration stops at {ENUMERATION_LIMIT}"
        )));
    }
    let p = QuadRat::p();
    let mut p_pow = QuadRat::one();
    let mut partial = QuadRat::zero();
    for n in 1..=cutoff {
        p_pow = &p_pow * &p;
        let s = level_sum(&f1, &f2, n)?
            .ok_or_else(|| Error::Internal(format!("level {n} beyond the enumeration limit")))?;
        if !s.is_zero() {
            let s = QuadRat::from_rational(BigRational::from_integer(BigInt::from(s)));
            partial = &partial + &(&s * &p_pow);
        }
    }
    let (lo, hi) = partial.bracket(tail_bits + 2);
    // round the upper end up to the same dyadic grid
    let grid = BigRational::from_integer(BigInt::one() << (tail_bits as usize + 2));
    let hi = ((hi + tail) * &grid).ceil() / grid;
    Ok(MomentInterval { lo, hi, cutoff })
}
