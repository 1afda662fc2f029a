//! Binomial coefficients with the conventions used by the pattern formulas:
//! `C(n, k) = 0` whenever `k < 0`, `n < 0` or `k > n`.

use num_bigint::BigUint;
use num_traits::One;
#[cfg(test)]
use num_traits::Zero;

/// `C(n, k)` as `u128`, or `None` on overflow.
pub fn binomial_u128(n: i64, k: i64) -> Option<u128> {
    if k < 0 || n < 0 || k > n {
        return Some(0);
    }
    let k = k.min(n - k) as u128;
    let n = n as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) after the multiplication
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

pub fn binomial(n: i64, k: i64) -> BigUint {
    if let Some(v) = binomial_u128(n, k) {
        return BigUint::from(v);
    }
    let k = k.min(n - k) as u64;
    let n = n as u64;
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Pascal-triangle oracle; only for tests.
#[cfg(test)]
pub(crate) fn binomial_pascal(n: i64, k: i64) -> BigUint {
    if k < 0 || n < 0 || k > n {
        return BigUint::zero();
    }
    let n = n as usize;
    let mut row = vec![BigUint::one()];
    for _ in 0..n {
        let mut next = vec![BigUint::one(); row.len() + 1];
        for j in 1..row.len() {
            next[j] = &row[j - 1] + &row[j];
        }
        row = next;
    }
    row[k as usize].clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_pascal() {
        for n in -2..=70 {
            for k in -2..=72 {
                assert_eq!(binomial(n, k), binomial_pascal(n, k), "C({n},{k})");
            }
        }
    }

    #[test]
    fn big_values_fall_back() {
        assert!(binomial_u128(200, 100).is_none());
        assert_eq!(binomial(200, 100), binomial_pascal(200, 100));
    }
}
