//! Exact moments of polynomials in a geometric variable `L` with
//! `P(L = ℓ) = 2^{-ℓ}`, `ℓ >= 1`.
//!
//! A polynomial is rewritten in the basis `C(ℓ, j)` using Stirling numbers
//! of the second kind; then `E C(L, j) = 2 - [j = 0]` gives the expectation
//! with no truncation.

use std::ops::{Add, Mul};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::{poly_mul, rat};

/// Polynomial over the rationals, coefficients in increasing degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeomPolynomial {
    coeffs: Vec<BigRational>,
}

impl GeomPolynomial {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        GeomPolynomial { coeffs }
    }

    pub fn constant(c: BigRational) -> Self {
        GeomPolynomial::new(vec![c])
    }

    /// `x^k`.
    pub fn monomial(k: usize) -> Self {
        let mut c = vec![BigRational::zero(); k + 1];
        c[k] = BigRational::one();
        GeomPolynomial::new(c)
    }

    /// `C(x + shift, k)` as a polynomial in `x`.
    pub fn binomial(shift: i64, k: usize) -> Self {
        let mut acc = vec![BigRational::one()];
        for j in 0..k as i64 {
            acc = poly_mul(&acc, &[rat(shift - j), BigRational::one()]);
        }
        let fact: BigInt = (1..=k as u64).map(BigInt::from).product();
        let fact = BigRational::from_integer(fact);
        GeomPolynomial::new(acc.into_iter().map(|c| c / &fact).collect())
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.coeffs
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(GeomPolynomial::constant(BigRational::one()), |acc, _| &acc * self)
    }
}

impl Add for &GeomPolynomial {
    type Output = GeomPolynomial;
    fn add(self, rhs: &GeomPolynomial) -> GeomPolynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let get = |v: &[BigRational], i: usize| v.get(i).cloned().unwrap_or_else(BigRational::zero);
        GeomPolynomial::new((0..n).map(|i| get(&self.coeffs, i) + get(&rhs.coeffs, i)).collect())
    }
}

impl Mul for &GeomPolynomial {
    type Output = GeomPolynomial;
    fn mul(self, rhs: &GeomPolynomial) -> GeomPolynomial {
        GeomPolynomial::new(poly_mul(&self.coeffs, &rhs.coeffs))
    }
}

/// `S(k, j)` for `0 <= j <= k <= max`.
fn stirling2_table(max: usize) -> Vec<Vec<BigInt>> {
    let mut s = vec![vec![BigInt::zero(); max + 1]; max + 1];
    s[0][0] = BigInt::one();
    for k in 1..=max {
        for j in 1..=k {
            s[k][j] = BigInt::from(j) * &s[k - 1][j] + &s[k - 1][j - 1];
        }
    }
    s
}

/// `E P(L)` exactly.
pub fn geom_expectation(p: &GeomPolynomial) -> BigRational {
    let Some(deg) = p.degree() else {
        return BigRational::zero();
    };
    let s = stirling2_table(deg);
    let mut fact = vec![BigInt::one(); deg + 1];
    for j in 1..=deg {
        fact[j] = &fact[j - 1] * j;
    }
    let mut total = BigRational::zero();
    for (k, c) in p.coeffs().iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        // E L^k = Σ_j S(k,j) j! E C(L,j)
        let mut moment = BigInt::zero();
        for j in 0..=k {
            let e_binom = if j == 0 { 1 } else { 2 };
            moment += &s[k][j] * &fact[j] * e_binom;
        }
        total += c * BigRational::from_integer(moment);
    }
    total
}

/// `E C(L + shift, k)` for `shift ∈ {-1, 0, 1}`.
pub fn geom_binomial_moment(shift: i64, k: usize) -> Result<BigRational> {
    if !(-1..=1).contains(&shift) {
        return Err(Error::OutOfRange(format!("shift {shift} not in -1..=1")));
    }
    Ok(geom_expectation(&GeomPolynomial::binomial(shift, k)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binomial::binomial;
    use num_traits::Signed;
    use proptest::prelude::*;

    /// `Σ_{ℓ=1}^{N} 2^{-ℓ} P(ℓ)`, an independent truncated oracle.
    fn truncated(p: &GeomPolynomial, n: i64) -> BigRational {
        (1..=n)
            .map(|l| p.eval(&rat(l)) / BigRational::from_integer(BigInt::one() << l as usize))
            .sum()
    }

    #[test]
    fn examples() {
        assert_eq!(geom_expectation(&GeomPolynomial::constant(rat(1))), rat(1));
        assert_eq!(geom_expectation(&GeomPolynomial::monomial(1)), rat(2));
        assert_eq!(geom_expectation(&GeomPolynomial::monomial(2)), rat(6));
        assert_eq!(geom_binomial_moment(-1, 5).unwrap(), rat(1));
        assert_eq!(geom_binomial_moment(0, 3).unwrap(), rat(2));
        assert_eq!(geom_binomial_moment(1, 2).unwrap(), rat(4));
        assert!(geom_binomial_moment(2, 2).is_err());
    }

    #[test]
    fn binomial_moment_table() {
        for k in 0..12 {
            assert_eq!(geom_binomial_moment(-1, k).unwrap(), rat(1));
            assert_eq!(geom_binomial_moment(0, k).unwrap(), rat(if k == 0 { 1 } else { 2 }));
            let plus = match k {
                0 => 1,
                1 => 3,
                _ => 4,
            };
            assert_eq!(geom_binomial_moment(1, k).unwrap(), rat(plus));
        }
    }

    #[test]
    fn binomial_polynomial_agrees_with_integers() {
        for shift in -1..=1 {
            for k in 0..8usize {
                let p = GeomPolynomial::binomial(shift, k);
                for l in 1..20i64 {
                    let want = BigRational::from_integer(BigInt::from(binomial(l + shift, k as i64)));
                    assert_eq!(p.eval(&rat(l)), want);
                }
            }
        }
    }

    #[test]
    fn variance_of_l_is_two() {
        let l = GeomPolynomial::monomial(1);
        let var = geom_expectation(&l.pow(2)) - geom_expectation(&l).pow(2);
        assert_eq!(var, rat(2));
        assert_eq!(geom_expectation(&GeomPolynomial::monomial(3)), rat(26));
    }

    proptest! {
        #[test]
        fn matches_truncated_sum(coeffs in prop::collection::vec(-20i64..20, 1..6)) {
            let p = GeomPolynomial::new(coeffs.into_iter().map(rat).collect());
            let exact = geom_expectation(&p);
            let approx = truncated(&p, 400);
            let diff = (exact - approx).abs();
            prop_assert!(diff < BigRational::new(BigInt::one(), BigInt::one() << 300));
        }
    }
}
