//! Exact counting with rational generating functions: tree and forest counts,
//! marked-occurrence counts, and the exact expected number of occurrences of
//! a tree pattern in a uniform tree permutation.
//!
//! No floating point is used anywhere in this module.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::binomial::binomial;
use crate::error::{Error, Result};

/// Arbitrary-precision rational, always reduced with a positive denominator.
pub type ExactRational = BigRational;

pub(crate) fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub(crate) fn rat_frac(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// A power series given as `numerator / denominator` of two polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFunctionSeries {
    pub numerator: Vec<BigRational>,
    pub denominator: Vec<BigRational>,
}

/// `a * b` for coefficient lists.
pub(crate) fn poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub(crate) fn poly_pow(base: &[BigRational], exp: usize) -> Vec<BigRational> {
    let mut acc = vec![BigRational::one()];
    for _ in 0..exp {
        acc = poly_mul(&acc, base);
    }
    acc
}

fn int_poly(coeffs: &[i64]) -> Vec<BigRational> {
    coeffs.iter().map(|&c| rat(c)).collect()
}

impl RationalFunctionSeries {
    pub fn new(numerator: Vec<BigRational>, denominator: Vec<BigRational>) -> Result<Self> {
        if denominator.first().map_or(true, Zero::is_zero) {
            return Err(Error::NotExpandable);
        }
        Ok(RationalFunctionSeries {
            numerator,
            denominator,
        })
    }

    pub fn from_integers(numerator: &[i64], denominator: &[i64]) -> Result<Self> {
        Self::new(int_poly(numerator), int_poly(denominator))
    }

    /// `T(z) = (z - z^2) / (1 - 2z)`.
    pub fn tree_gf() -> Self {
        Self::from_integers(&[0, 1, -1], &[1, -2]).expect("expandable")
    }

    /// `F(z) = (1 - 2z) / (1 - 3z + z^2)`.
    pub fn forest_gf() -> Self {
        Self::from_integers(&[1, -2], &[1, -3, 1]).expect("expandable")
    }

    /// `A(z) = z^k / ((1-z)^{k-2} (1-2z)^2)` for patterns of length `k >= 2`.
    pub fn marked_occurrence_gf(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::OutOfRange(format!("pattern length {k} < 2")));
        }
        let mut numerator = vec![BigRational::zero(); k + 1];
        numerator[k] = BigRational::one();
        let denominator = poly_mul(
            &poly_pow(&int_poly(&[1, -1]), k - 2),
            &poly_pow(&int_poly(&[1, -2]), 2),
        );
        Self::new(numerator, denominator)
    }

    /// Taylor coefficients `[z^0], …, [z^N]`.
    pub fn coefficients(&self, max_index: usize) -> Vec<BigRational> {
        let d0 = &self.denominator[0];
        let mut out: Vec<BigRational> = Vec::with_capacity(max_index + 1);
        for k in 0..=max_index {
            let mut acc = self.numerator.get(k).cloned().unwrap_or_else(BigRational::zero);
            for (j, dj) in self.denominator.iter().enumerate().skip(1).take(k) {
                if !dj.is_zero() {
                    acc -= dj * &out[k - j];
                }
            }
            out.push(acc / d0);
        }
        out
    }
}

pub fn series_coefficients(rf: &RationalFunctionSeries, max_index: usize) -> Vec<BigRational> {
    rf.coefficients(max_index)
}

fn to_biguint(r: &BigRational) -> BigUint {
    debug_assert!(r.is_integer() && !r.is_negative());
    r.to_integer().to_biguint().expect("nonnegative integer")
}

/// Number of tree permutations of length `n`: 1 for `n = 1`, else `2^{n-2}`.
pub fn tree_count(n: usize) -> Result<BigUint> {
    match n {
        0 => Err(Error::OutOfRange("tree_count needs n >= 1".into())),
        1 => Ok(BigUint::one()),
        _ => Ok(BigUint::one() << (n - 2)),
    }
}

/// Number of forest permutations: `f_0 = f_1 = 1`, `f_n = 3 f_{n-1} - f_{n-2}`.
pub fn forest_count(n: usize) -> BigUint {
    forest_counts(n).pop().expect("nonempty")
}

/// `[f_0, …, f_n]` by the recurrence.
pub fn forest_counts(n: usize) -> Vec<BigUint> {
    let mut out = vec![BigUint::one()];
    if n >= 1 {
        out.push(BigUint::one());
    }
    for k in 2..=n {
        let next = &out[k - 1] * 3u32 - &out[k - 2];
        out.push(next);
    }
    out
}

/// `a_{n;σ}`: pairs of a tree permutation of length `n` and a marked
/// occurrence of a fixed tree pattern of length `sigma_len`.
pub fn marked_occurrence_count(sigma_len: usize, n: usize) -> Result<BigUint> {
    check_pattern_range(sigma_len, n)?;
    let coeffs = RationalFunctionSeries::marked_occurrence_gf(sigma_len)?.coefficients(n);
    Ok(to_biguint(&coeffs[n]))
}

fn check_pattern_range(sigma_len: usize, n: usize) -> Result<()> {
    if sigma_len < 2 {
        return Err(Error::OutOfRange(format!(
            "pattern length {sigma_len} < 2"
        )));
    }
    if n < sigma_len {
        return Err(Error::OutOfRange(format!(
            "n = {n} is smaller than the pattern length {sigma_len}"
        )));
    }
    Ok(())
}

/// `E occ_σ(τ_n)` for a uniform tree permutation `τ_n` and any tree pattern
/// of length `sigma_len`, as `[z^{n-k}] (2-z)^{2-k} (1-z)^{-2}`.
pub fn expected_occurrences_tree(sigma_len: usize, n: usize) -> Result<BigRational> {
    check_pattern_range(sigma_len, n)?;
    let k = sigma_len;
    let denominator = poly_mul(
        &poly_pow(&int_poly(&[2, -1]), k - 2),
        &poly_pow(&int_poly(&[1, -1]), 2),
    );
    let rf = RationalFunctionSeries::new(vec![BigRational::one()], denominator)?;
    Ok(rf.coefficients(n - k).pop().expect("nonempty"))
}

/// Closed form `n + 3 - 2k + 2^{-n} Σ_{i=0}^{k-3} (k-2-i) 2^{k-i-1} C(n-k+i, i)`,
/// computed independently of the coefficient extraction.
pub fn expected_occurrences_tree_closed_form(sigma_len: usize, n: usize) -> Result<BigRational> {
    check_pattern_range(sigma_len, n)?;
    let k = sigma_len as i64;
    let n_i = n as i64;
    let mut correction = BigInt::zero();
    for i in 0..=(k - 3) {
        let term = BigInt::from(k - 2 - i)
            * (BigInt::one() << ((k - i - 1) as usize))
            * BigInt::from(binomial(n_i - k + i, i));
        correction += term;
    }
    let correction = BigRational::new(correction, BigInt::one() << n);
    Ok(rat(n_i + 3 - 2 * k) + correction)
}

/// `a_{n;σ} / t_n`.
pub fn expected_occurrences_via_marked(sigma_len: usize, n: usize) -> Result<BigRational> {
    let a = marked_occurrence_count(sigma_len, n)?;
    let t = tree_count(n)?;
    Ok(BigRational::new(BigInt::from(a), BigInt::from(t)))
}

/// Lossy rendering for reports only.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[BigRational]) -> Vec<i64> {
        v.iter().map(|x| x.to_integer().try_into().unwrap()).collect()
    }

    #[test]
    fn tree_count_examples() {
        assert_eq!(tree_count(1).unwrap(), BigUint::from(1u32));
        assert_eq!(tree_count(2).unwrap(), BigUint::from(1u32));
        assert_eq!(tree_count(6).unwrap(), BigUint::from(16u32));
        assert!(tree_count(0).is_err());
    }

    #[test]
    fn forest_count_examples() {
        assert_eq!(forest_count(0), BigUint::from(1u32));
        assert_eq!(forest_count(3), BigUint::from(5u32));
        assert_eq!(forest_count(4), BigUint::from(13u32));
    }

    #[test]
    fn series_examples() {
        let geo = RationalFunctionSeries::from_integers(&[1], &[1, -2]).unwrap();
        assert_eq!(ints(&geo.coefficients(3)), vec![1, 2, 4, 8]);
        assert_eq!(
            ints(&RationalFunctionSeries::forest_gf().coefficients(4)),
            vec![1, 1, 2, 5, 13]
        );
        assert_eq!(
            ints(&RationalFunctionSeries::tree_gf().coefficients(4)),
            vec![0, 1, 1, 2, 4]
        );
        assert_eq!(
            RationalFunctionSeries::from_integers(&[1], &[0, 1]),
            Err(Error::NotExpandable)
        );
    }

    #[test]
    fn tree_series_matches_tree_count() {
        let c = RationalFunctionSeries::tree_gf().coefficients(40);
        for n in 1..=40 {
            assert_eq!(to_biguint(&c[n]), tree_count(n).unwrap());
        }
    }

    #[test]
    fn forest_recurrence_matches_series() {
        let c = RationalFunctionSeries::forest_gf().coefficients(200);
        let f = forest_counts(200);
        for n in 0..=200 {
            assert_eq!(to_biguint(&c[n]), f[n], "n={n}");
        }
    }

    #[test]
    fn marked_count_examples() {
        assert_eq!(marked_occurrence_count(3, 3).unwrap(), BigUint::from(1u32));
        assert_eq!(marked_occurrence_count(3, 4).unwrap(), BigUint::from(5u32));
        for k in 2..=9 {
            assert_eq!(marked_occurrence_count(k, k).unwrap(), BigUint::from(1u32));
        }
        assert!(marked_occurrence_count(1, 3).is_err());
        assert!(marked_occurrence_count(4, 3).is_err());
    }

    #[test]
    fn marked_count_for_21_is_edges_times_trees() {
        for n in 2..=30 {
            let expected = BigUint::from(n as u64 - 1) * tree_count(n).unwrap();
            assert_eq!(marked_occurrence_count(2, n).unwrap(), expected);
        }
    }

    #[test]
    fn expectation_examples() {
        assert_eq!(expected_occurrences_tree(3, 3).unwrap(), rat_frac(1, 2));
        assert_eq!(expected_occurrences_tree(3, 4).unwrap(), rat_frac(5, 4));
        assert_eq!(
            expected_occurrences_tree(3, 10).unwrap(),
            rat(7) + rat_frac(4, 1024)
        );
    }

    #[test]
    fn expectation_routes_agree() {
        for k in 2..=8 {
            for n in k..=60 {
                let series = expected_occurrences_tree(k, n).unwrap();
                assert_eq!(series, expected_occurrences_tree_closed_form(k, n).unwrap());
                assert_eq!(series, expected_occurrences_via_marked(k, n).unwrap());
            }
        }
    }
}
