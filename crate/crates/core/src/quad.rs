//! Exact arithmetic in `Q(√5)`: numbers `a + b√5` with rational `a`, `b`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exact::{rat, rat_frac};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuadRat {
    pub a: BigRational,
    pub b: BigRational,
}

impl QuadRat {
    pub fn new(a: BigRational, b: BigRational) -> Self {
        QuadRat { a, b }
    }

    pub fn from_rational(a: BigRational) -> Self {
        QuadRat::new(a, BigRational::zero())
    }

    pub fn from_int(a: i64) -> Self {
        QuadRat::from_rational(rat(a))
    }

    /// `(a_num/a_den) + (b_num/b_den)√5`.
    pub fn from_fracs(a_num: i64, a_den: i64, b_num: i64, b_den: i64) -> Self {
        QuadRat::new(rat_frac(a_num, a_den), rat_frac(b_num, b_den))
    }

    pub fn zero() -> Self {
        QuadRat::from_int(0)
    }

    pub fn one() -> Self {
        QuadRat::from_int(1)
    }

    pub fn sqrt5() -> Self {
        QuadRat::new(BigRational::zero(), BigRational::one())
    }

    /// The golden ratio `(1 + √5)/2`.
    pub fn phi() -> Self {
        QuadRat::from_fracs(1, 2, 1, 2)
    }

    /// `p = (3 - √5)/2`, the positive root of `T(p) = 1`.
    pub fn p() -> Self {
        QuadRat::from_fracs(3, 2, -1, 2)
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn conjugate(&self) -> Self {
        QuadRat::new(self.a.clone(), -self.b.clone())
    }

    /// `a² - 5b²`, the field norm.
    pub fn norm(&self) -> BigRational {
        &self.a * &self.a - rat(5) * &self.b * &self.b
    }

    pub fn inverse(&self) -> Result<Self> {
        let n = self.norm();
        if n.is_zero() {
            return Err(Error::OutOfRange("inverse of zero in Q(sqrt 5)".into()));
        }
        Ok(QuadRat::new(&self.a / &n, -&self.b / &n))
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        let base = if e < 0 { self.inverse()? } else { self.clone() };
        let mut e = e.unsigned_abs();
        let mut acc = QuadRat::one();
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &sq;
            }
            sq = &sq * &sq;
            e >>= 1;
        }
        Ok(acc)
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        QuadRat::new(&self.a * r, &self.b * r)
    }

    pub fn signum(&self) -> Ordering {
        let sa = self.a.cmp(&BigRational::zero());
        let sb = self.b.cmp(&BigRational::zero());
        if sa == sb || sb == Ordering::Equal {
            return sa;
        }
        if sa == Ordering::Equal {
            return sb;
        }
        // opposite signs: compare a² with 5b²
        let a2 = &self.a * &self.a;
        let b2 = rat(5) * &self.b * &self.b;
        match a2.cmp(&b2) {
            Ordering::Greater => sa,
            Ordering::Less => sb,
            Ordering::Equal => Ordering::Equal,
        }
    }

    /// `floor(self · 2^bits)`, exact.
    pub fn floor_scaled(&self, bits: u32) -> BigInt {
        let scale = BigInt::one() << bits;
        // common denominator: value = (A + B√5)/D
        let d = self.a.denom().lcm(self.b.denom());
        let a = self.a.numer() * (&d / self.a.denom()) * &scale;
        let b = self.b.numer() * (&d / self.b.denom()) * &scale;
        let s = floor_sqrt5_times(&b);
        (a + s).div_floor(&d)
    }

    /// Rational bracket `lo <= self < hi` of width `2^-bits`.
    pub fn bracket(&self, bits: u32) -> (BigRational, BigRational) {
        let f = self.floor_scaled(bits);
        let den = BigInt::one() << bits;
        (
            BigRational::new(f.clone(), den.clone()),
            BigRational::new(f + 1, den),
        )
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        if self.is_rational() {
            return self.a.to_f64().unwrap_or(f64::NAN);
        }
        let mut bits = 64u32;
        loop {
            let f = self.floor_scaled(bits);
            if f.bits() >= 60 || bits > 4096 {
                let (mant, exp) = (f.to_f64().unwrap_or(f64::NAN), bits as i32);
                return mant * 2f64.powi(-exp.min(1000)) * 2f64.powi(-(exp - exp.min(1000)));
            }
            bits += 64;
        }
    }

    /// Renders as `a/b + (c/d)√5`, omitting zero parts.
    pub fn to_exact_string(&self) -> String {
        match (self.a.is_zero(), self.b.is_zero()) {
            (_, true) => self.a.to_string(),
            (true, false) => format!("({})√5", self.b),
            (false, false) => {
                if self.b.is_negative() {
                    format!("{} - ({})√5", self.a, -&self.b)
                } else {
                    format!("{} + ({})√5", self.a, self.b)
                }
            }
        }
    }
}

/// `floor(b·√5)` for an integer `b`.
fn floor_sqrt5_times(b: &BigInt) -> BigInt {
    if b.is_zero() {
        return BigInt::zero();
    }
    let r: BigInt = (b * b * 5u32).sqrt();
    // 5b² is never a perfect square for b != 0
    if b.sign() == Sign::Minus {
        -(r + BigInt::one())
    } else {
        r
    }
}

impl PartialOrd for QuadRat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QuadRat {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).signum()
    }
}

impl fmt::Display for QuadRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_exact_string())
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl<'a> $tr<&'a QuadRat> for &'a QuadRat {
            type Output = QuadRat;
            fn $method(self, rhs: &'a QuadRat) -> QuadRat {
                let f: fn(&QuadRat, &QuadRat) -> QuadRat = $body;
                f(self, rhs)
            }
        }
        impl $tr<QuadRat> for QuadRat {
            type Output = QuadRat;
            fn $method(self, rhs: QuadRat) -> QuadRat {
                (&self).$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, |x, y| QuadRat::new(&x.a + &y.a, &x.b + &y.b));
forward_binop!(Sub, sub, |x, y| QuadRat::new(&x.a - &y.a, &x.b - &y.b));
forward_binop!(Mul, mul, |x, y| QuadRat::new(
    &x.a * &y.a + rat(5) * &x.b * &y.b,
    &x.a * &y.b + &x.b * &y.a
));
forward_binop!(Div, div, |x, y| x
    * &y.inverse().expect("division by zero in Q(sqrt 5)"));

impl Neg for QuadRat {
    type Output = QuadRat;
    fn neg(self) -> QuadRat {
        QuadRat::new(-self.a, -self.b)
    }
}

impl Neg for &QuadRat {
    type Output = QuadRat;
    fn neg(self) -> QuadRat {
        QuadRat::new(-&self.a, -&self.b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn phi() -> QuadRat {
        QuadRat::phi()
    }

    #[test]
    fn golden_identities() {
        let one = QuadRat::one();
        let two = QuadRat::from_int(2);
        assert_eq!(&phi() * &phi(), &phi() + &one);
        let p = QuadRat::p();
        assert_eq!(p, phi().pow(-2).unwrap());
        assert_eq!(p, &two - &phi());
        assert_eq!(&one - &p, phi().pow(-1).unwrap());
        assert_eq!(&one - &(&two * &p), phi().pow(-3).unwrap());
        assert_eq!(&one - &(&two * &p), &p * &(&one - &p));
    }

    #[test]
    fn p_is_root_of_tree_gf() {
        // T(p) = (p - p²)/(1 - 2p) = 1
        let p = QuadRat::p();
        let num = &p - &(&p * &p);
        let den = &QuadRat::one() - &(&QuadRat::from_int(2) * &p);
        assert_eq!(&num / &den, QuadRat::one());
    }

    #[test]
    fn floats_and_ordering() {
        assert!((phi().to_f64() - 1.618_033_988_749_895).abs() < 1e-15);
        assert!((QuadRat::p().to_f64() - 0.381_966_011_250_105).abs() < 1e-15);
        assert!(QuadRat::p() < QuadRat::from_fracs(1, 2, 0, 1));
        assert!(phi() > QuadRat::from_fracs(8, 5, 0, 1));
        let tiny = QuadRat::p().pow(80).unwrap();
        let rel = (tiny.to_f64() - 0.381_966_011_250_105f64.powi(80)).abs()
            / 0.381_966_011_250_105f64.powi(80);
        assert!(rel < 1e-12, "{rel}");
    }

    #[test]
    fn floor_scaled_brackets() {
        let s5 = QuadRat::sqrt5();
        assert_eq!(s5.floor_scaled(0), BigInt::from(2));
        assert_eq!((-s5.clone()).floor_scaled(0), BigInt::from(-3));
        let (lo, hi) = QuadRat::p().bracket(100);
        assert!(QuadRat::from_rational(lo) < QuadRat::p());
        assert!(QuadRat::p() < QuadRat::from_rational(hi));
    }

    #[test]
    fn exact_string() {
        assert_eq!(phi().to_exact_string(), "1/2 + (1/2)√5");
        assert_eq!(QuadRat::p().to_exact_string(), "3/2 - (1/2)√5");
        assert_eq!(QuadRat::from_int(7).to_exact_string(), "7");
    }

    fn small() -> impl Strategy<Value = QuadRat> {
        (-50i64..50, 1i64..20, -50i64..50, 1i64..20)
            .prop_map(|(a, b, c, d)| QuadRat::from_fracs(a, b, c, d))
    }

    proptest! {
        #[test]
        fn field_laws(x in small(), y in small(), z in small()) {
            prop_assert_eq!(&(&x * &y) * &z, &x * &(&y * &z));
            prop_assert_eq!(&x * &(&y + &z), &(&x * &y) + &(&x * &z));
            if !x.is_zero() {
                prop_assert_eq!(&x * &x.inverse().unwrap(), QuadRat::one());
            }
        }

        #[test]
        fn ordering_matches_floats(x in small(), y in small()) {
            let (fx, fy) = (x.to_f64(), y.to_f64());
            if (fx - fy).abs() > 1e-9 {
                prop_assert_eq!(x < y, fx < fy);
            }
        }
    }
}
