//! Goodness-of-fit tests and sample moments.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

fn chi_square_p(statistic: f64, dof: usize) -> Result<f64> {
    let dist = ChiSquared::new(dof as f64)
        .map_err(|e| Error::InsufficientSamples(format!("chi-square with {dof} dof: {e}")))?;
    Ok(dist.sf(statistic))
}

/// Pearson test of observed counts against cell probabilities.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> Result<ChiSquareTest> {
    if observed.len() != probs.len() {
        return Err(Error::Arity {
            expected: probs.len(),
            got: observed.len(),
        });
    }
    if observed.len() < 2 {
        return Err(Error::InsufficientSamples("need at least two cells".into()));
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(Error::InsufficientSamples("no observations".into()));
    }
    let mut statistic = 0.0;
    for (&o, &p) in observed.iter().zip(probs) {
        let e = p * total as f64;
        if e <= 0.0 {
            if o > 0 {
                return Ok(ChiSquareTest {
                    statistic: f64::INFINITY,
                    dof: observed.len() - 1,
                    p_value: 0.0,
                });
            }
            continue;
        }
        statistic += (o as f64 - e).powi(2) / e;
    }
    let dof = observed.len() - 1;
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value: chi_square_p(statistic, dof)?,
    })
}

/// Homogeneity test of two count vectors over the same cells.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> Result<ChiSquareTest> {
    if a.len() != b.len() {
        return Err(Error::Arity {
            expected: a.len(),
            got: b.len(),
        });
    }
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    if na == 0 || nb == 0 {
        return Err(Error::InsufficientSamples("empty sample".into()));
    }
    let n = (na + nb) as f64;
    let mut statistic = 0.0;
    let mut cells = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        let col = (x + y) as f64;
        if col == 0.0 {
            continue;
        }
        cells += 1;
        for (o, row) in [(x, na), (y, nb)] {
            let e = col * row as f64 / n;
            statistic += (o as f64 - e).powi(2) / e;
        }
    }
    if cells < 2 {
        return Err(Error::InsufficientSamples("fewer than two occupied cells".into()));
    }
    let dof = cells - 1;
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value: chi_square_p(statistic, dof)?,
    })
}

/// Kolmogorov–Smirnov distance between the empirical law of `xs` and `N(0,1)`.
pub fn ks_distance_normal(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = normal.cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

/// Sample mean, unbiased variance, and moment-ratio skewness and kurtosis.
pub fn moments(xs: &[f64]) -> Moments {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in xs {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    Moments {
        mean,
        variance: if xs.len() > 1 { m2 * n / (n - 1.0) } else { 0.0 },
        skewness: if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 },
        excess_kurtosis: if m2 > 0.0 { m4 / (m2 * m2) - 3.0 } else { 0.0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gof_perfect_fit() {
        let t = chi_square_gof(&[250, 250, 250, 250], &[0.25; 4]).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert!((t.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gof_known_value() {
        // statistic 4 with 1 dof has upper tail 0.0455
        let t = chi_square_gof(&[60, 40], &[0.5, 0.5]).unwrap();
        assert!((t.statistic - 4.0).abs() < 1e-12);
        assert!((t.p_value - 0.045_500_263_896_358_4).abs() < 1e-9);
    }

    #[test]
    fn gof_rejects_impossible_cell() {
        let t = chi_square_gof(&[5, 1], &[1.0, 0.0]).unwrap();
        assert_eq!(t.p_value, 0.0);
        assert!(chi_square_gof(&[1], &[1.0]).is_err());
        assert!(chi_square_gof(&[1, 2], &[1.0]).is_err());
    }

    #[test]
    fn two_sample_identical() {
        let t = chi_square_two_sample(&[10, 20, 30], &[20, 40, 60]).unwrap();
        assert!(t.statistic.abs() < 1e-12);
        assert_eq!(t.dof, 2);
    }

    #[test]
    fn ks_of_quantiles_is_small() {
        let normal = Normal::new(0.0, 1.0).unwrap();
        let xs: Vec<f64> = (0..1000).map(|i| normal.inverse_cdf((i as f64 + 0.5) / 1000.0)).collect();
        assert!(ks_distance_normal(&xs) <= 0.0005 + 1e-9);
        let shifted: Vec<f64> = xs.iter().map(|x| x + 1.0).collect();
        assert!(ks_distance_normal(&shifted) > 0.3);
    }

    #[test]
    fn moments_of_small_sample() {
        let m = moments(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.variance - 5.0 / 3.0).abs() < 1e-12);
        assert!(m.skewness.abs() < 1e-12);
        assert!((m.excess_kurtosis - (-1.36)).abs() < 1e-12);
    }
}
