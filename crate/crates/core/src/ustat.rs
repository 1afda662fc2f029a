//! Monte Carlo estimates of the U-statistic limit constants `μ`, `ν`, `σ_ij`,
//! `σ²` and the renewal-stopped variance `γ²`.
//!
//! The projections `f_i(x) = E f(X_1, …, x, …, X_d) - μ` (with `x` in slot
//! `i`) are estimated by averaging the kernel over resampled co-arguments. Two
//! independent halves `A_i(x)`, `B_i(x)` make `Cov(A_i, B_j)` unbiased for
//! `σ_ij`; the inner noise drops out.

use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UstatConfig {
    /// Outer samples `x` at which projections are evaluated.
    pub outer: usize,
    /// Kernel evaluations per projection, split into two halves.
    pub inner: usize,
    /// Batches for the batch-means standard errors.
    pub batches: usize,
}

impl Default for UstatConfig {
    fn default() -> Self {
        UstatConfig {
            outer: 20_000,
            inner: 16,
            batches: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UstatEstimate {
    pub d: usize,
    pub mu: f64,
    pub nu: f64,
    /// `σ_ij = Cov(f_i(X), f_j(X))`.
    pub sigma_ij: Vec<Vec<f64>>,
    /// `Cov(f_i(X), h(X))`.
    pub cov_fh: Vec<f64>,
    pub var_h: f64,
    pub sigma2: f64,
    pub gamma2: f64,
    pub se_mu: f64,
    pub se_nu: f64,
    pub se_sigma2: f64,
    pub se_gamma2: f64,
    pub outer: usize,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Weight of `σ_ij` in `σ²`, for 1-based `i`, `j`.
pub fn sigma_weight(d: usize, i: usize, j: usize) -> f64 {
    factorial(i + j - 2) * factorial(2 * d - i - j)
        / (factorial(i - 1)
            * factorial(j - 1)
            * factorial(d - i)
            * factorial(d - j)
            * factorial(2 * d - 1))
}

/// Per-sample data: `h(x)` and the two projection halves for every slot.
struct Row {
    h: f64,
    a: Vec<f64>,
    b: Vec<f64>,
}

struct Constants {
    mu: f64,
    nu: f64,
    sigma_ij: Vec<Vec<f64>>,
    cov_fh: Vec<f64>,
    var_h: f64,
    sigma2: f64,
    gamma2: f64,
}

fn cov(xs: impl Iterator<Item = (f64, f64)> + Clone, n: usize) -> f64 {
    let (sx, sy) = xs.clone().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n as f64, sy / n as f64);
    xs.map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (n as f64 - 1.0)
}

fn constants(rows: &[Row], d: usize) -> Constants {
    let n = rows.len();
    let nu = rows.iter().map(|r| r.h).sum::<f64>() / n as f64;
    let mu = rows
        .iter()
        .map(|r| r.a.iter().chain(&r.b).sum::<f64>() / (2 * d) as f64)
        .sum::<f64>()
        / n as f64;
    let mut sigma_ij = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            let ab = cov(rows.iter().map(|r| (r.a[i], r.b[j])), n);
            let ba = cov(rows.iter().map(|r| (r.b[i], r.a[j])), n);
            sigma_ij[i][j] = (ab + ba) / 2.0;
        }
    }
    let cov_fh: Vec<f64> = (0..d)
        .map(|i| cov(rows.iter().map(|r| ((r.a[i] + r.b[i]) / 2.0, r.h)), n))
        .collect();
    let var_h = cov(rows.iter().map(|r| (r.h, r.h)), n);
    let mut sigma2 = 0.0;
    for i in 0..d {
        for j in 0..d {
            sigma2 += sigma_weight(d, i + 1, j + 1) * sigma_ij[i][j];
        }
    }
    let di = d as i32;
    let c1 = factorial(d - 1) * factorial(d);
    let c2 = factorial(d - 1).powi(2);
    let gamma2 = nu.powi(1 - 2 * di) * sigma2
        - 2.0 * mu * nu.powi(-2 * di) / c1 * cov_fh.iter().sum::<f64>()
        + mu * mu * nu.powi(-2 * di - 1) / c2 * var_h;
    Constants {
        mu,
        nu,
        sigma_ij,
        cov_fh,
        var_h,
        sigma2,
        gamma2,
    }
}

fn batch_se(values: &[f64]) -> f64 {
    let k = values.len() as f64;
    let m = values.iter().sum::<f64>() / k;
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
}

/// Estimates the limit constants of `Σ f(X_{i_1}, …, X_{i_d})` stopped when
/// `Σ h(X_i)` reaches `n`.
///
/// For `d = 1` the projection is `f` itself and `γ² = Var[f - (μ/ν) h] / ν`.
pub fn ustat_constants_estimate<X, S, F, H>(
    kernel: F,
    h: H,
    d: usize,
    config: &UstatConfig,
    rng: &mut RngStream,
    sampler: S,
) -> Result<UstatEstimate>
where
    S: Fn(&mut RngStream) -> X,
    F: Fn(&[&X]) -> f64,
    H: Fn(&X) -> f64,
{
    if d == 0 {
        return Err(Error::OutOfRange("kernel arity must be at least 1".into()));
    }
    if config.batches < 2 || config.outer < 2 * config.batches {
        return Err(Error::InsufficientSamples(format!(
            "need at least 2 batches of 2 samples, got {} samples in {} batches",
            config.outer, config.batches
        )));
    }
    if d > 1 && config.inner < 2 {
        return Err(Error::InsufficientSamples(
            "projections need at least 2 inner evaluations".into(),
        ));
    }
    let half = (config.inner / 2).max(1);
    let mut rows = Vec::with_capacity(config.outer);
    for _ in 0..config.outer {
        let x = sampler(rng);
        let hx = h(&x);
        if d == 1 {
            let f = kernel(&[&x]);
            rows.push(Row {
                h: hx,
                a: vec![f],
                b: vec![f],
            });
            continue;
        }
        let mut a = vec![0.0; d];
        let mut b = vec![0.0; d];
        for slot in 0..d {
            for target in [&mut a, &mut b] {
                let mut acc = 0.0;
                for _ in 0..half {
                    let others: Vec<X> = (0..d - 1).map(|_| sampler(rng)).collect();
                    let mut args: Vec<&X> = others.iter().collect();
                    args.insert(slot, &x);
                    acc += kernel(&args);
                }
                target[slot] = acc / half as f64;
            }
        }
        rows.push(Row { h: hx, a, b });
    }
    let all = constants(&rows, d);
    let size = rows.len() / config.batches;
    let per_batch: Vec<Constants> = rows
        .chunks(size)
        .take(config.batches)
        .map(|c| constants(c, d))
        .collect();
    let pick = |f: fn(&Constants) -> f64| batch_se(&per_batch.iter().map(f).collect::<Vec<_>>());
    let estimate = UstatEstimate {
        d,
        se_mu: pick(|c| c.mu),
        se_nu: pick(|c| c.nu),
        se_sigma2: pick(|c| c.sigma2),
        se_gamma2: pick(|c| c.gamma2),
        mu: all.mu,
        nu: all.nu,
        sigma_ij: all.sigma_ij,
        cov_fh: all.cov_fh,
        var_h: all.var_h,
        sigma2: all.sigma2,
        gamma2: all.gamma2,
        outer: rows.len(),
    };
    if !estimate.gamma2.is_finite() {
        return Err(Error::InsufficientSamples("estimate is not finite".into()));
    }
    Ok(estimate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::forest_gamma_closed;
    use crate::pattern::TreePatternKernel;
    use crate::perm::Permutation;
    use crate::sample::{sample_geom_pair, sample_tilde_tau, GeomPair};

    fn config(outer: usize) -> UstatConfig {
        UstatConfig {
            outer,
            inner: 8,
            batches: 20,
        }
    }

    #[test]
    fn weights_for_small_d() {
        assert_eq!(sigma_weight(1, 1, 1), 1.0);
        assert!((sigma_weight(2, 1, 1) - 2.0 / 6.0).abs() < 1e-15);
        assert!((sigma_weight(2, 1, 2) - 1.0 / 6.0).abs() < 1e-15);
        assert!((sigma_weight(2, 2, 2) - 2.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn kernel_equal_to_h_is_degenerate() {
        let mut rng = RngStream::new(1, 0);
        let est = ustat_constants_estimate(
            |xs: &[&Permutation]| xs[0].len() as f64,
            |x: &Permutation| x.len() as f64,
            1,
            &config(2000),
            &mut rng,
            sample_tilde_tau,
        )
        .unwrap();
        assert!(est.gamma2.abs() < 1e-9, "{}", est.gamma2);
        assert!((est.mu - est.nu).abs() < 1e-12);
    }

    #[test]
    fn inversions_of_tilde_tau() {
        let mut rng = RngStream::new(2, 0);
        let est = ustat_constants_estimate(
            |xs: &[&Permutation]| xs[0].inversion_count() as f64,
            |x: &Permutation| x.len() as f64,
            1,
            &config(40_000),
            &mut rng,
            sample_tilde_tau,
        )
        .unwrap();
        let want = forest_gamma_closed().to_f64();
        assert!((est.gamma2 - want).abs() < 4.0 * est.se_gamma2 + 1e-3, "{} vs {want}", est.gamma2);
        assert!((est.nu - 3.618).abs() < 0.05);
    }

    #[test]
    fn block_model_312() {
        let kernel = TreePatternKernel::new(&Permutation::parse("312").unwrap()).unwrap();
        let mut rng = RngStream::new(3, 0);
        let est = ustat_constants_estimate(
            |xs: &[&GeomPair]| {
                kernel.kernel_eval_u64(&[(xs[0].l as usize, xs[0].r as usize)]).unwrap() as f64
            },
            |x: &GeomPair| x.h() as f64,
            1,
            &config(100_000),
            &mut rng,
            sample_geom_pair,
        )
        .unwrap();
        assert!((est.mu - 4.0).abs() < 0.1);
        assert!((est.gamma2 - 6.0).abs() < 4.0 * est.se_gamma2 + 0.05, "{}", est.gamma2);
    }

    #[test]
    fn two_slot_kernel_recovers_projections() {
        // f(x, y) = x + 2y on i.i.d. L: f_1 = L - 2, f_2 = 2(L - 2), σ_11 = 2, σ_12 = 4, σ_22 = 8
        let mut rng = RngStream::new(4, 0);
        let est = ustat_constants_estimate(
            |xs: &[&u64]| (*xs[0] + 2 * *xs[1]) as f64,
            |x: &u64| *x as f64,
            2,
            &config(40_000),
            &mut rng,
            crate::sample::sample_geometric,
        )
        .unwrap();
        assert!((est.mu - 6.0).abs() < 0.1);
        for (i, j, want) in [(0, 0, 2.0), (0, 1, 4.0), (1, 1, 8.0)] {
            assert!((est.sigma_ij[i][j] - want).abs() < 0.35, "σ_{i}{j} = {}", est.sigma_ij[i][j]);
        }
    }

    #[test]
    fn too_few_samples() {
        let mut rng = RngStream::new(0, 0);
        let bad = UstatConfig {
            outer: 3,
            inner: 4,
            batches: 2,
        };
        let r = ustat_constants_estimate(|_: &[&u64]| 0.0, |_: &u64| 1.0, 1, &bad, &mut rng, crate::sample::sample_geometric);
        assert!(matches!(r, Err(Error::InsufficientSamples(_))));
        let r = ustat_constants_estimate(|_: &[&u64]| 0.0, |_: &u64| 1.0, 0, &config(100), &mut rng, crate::sample::sample_geometric);
        assert!(r.is_err());
    }
}
