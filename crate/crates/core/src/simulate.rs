//! Monte Carlo harness for the pattern-count central limit theorems.
//!
//! Trials run on a fixed-size pool; trial `i` draws from stream `(seed, i)`
//! and results are reduced as exact power sums, so a report depends only on
//! the configuration and never on the worker count.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::code::block_lengths;
use crate::constants::{
    block_mean_rate, forest_gamma_closed, forest_gamma_known, identity_correction, tilde_mu_sigma,
    tree_gamma_known,
};
use crate::error::{Error, Result};
use crate::pattern::{occ_forest_in_blocks, ForestPatternKernel, TreePatternKernel};
use crate::perm::{is_forest_permutation, is_tree_permutation, ForestTest, Permutation};
use crate::quad::QuadRat;
use crate::rng::RngStream;
use crate::sample::{
    sample_forest_renewal, sample_uniform_tree, sample_uniform_tree_code, ForestMethod, ForestSampler,
};
use crate::stats::ks_distance_normal;

pub const SCHEMA: &str = "forestperm/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HostClass {
    Tree,
    Forest,
}

impl FromStr for HostClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tree" => Ok(HostClass::Tree),
            "forest" => Ok(HostClass::Forest),
            other => Err(Error::Parse(format!("unknown class {other:?}"))),
        }
    }
}

impl fmt::Display for HostClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HostClass::Tree => "tree",
            HostClass::Forest => "forest",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub class: HostClass,
    pub pattern: Permutation,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub workers: usize,
    pub method: ForestMethod,
    /// Also estimate the growth exponent of the variance from runs at
    /// `n/4`, `n/2` and `n`.
    pub explore_degenerate: bool,
}

impl ExperimentConfig {
    pub fn new(class: HostClass, pattern: Permutation, n: usize, trials: usize, seed: u64) -> Self {
        ExperimentConfig {
            class,
            pattern,
            n,
            trials,
            seed,
            workers: 1,
            method: ForestMethod::Recursive,
            explore_degenerate: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::OutOfRange("trials must be >= 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::OutOfRange("workers must be >= 1".into()));
        }
        if self.n == 0 || self.n < self.pattern.len() {
            return Err(Error::OutOfRange(format!(
                "n = {} must be positive and at least the pattern length {}",
                self.n,
                self.pattern.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub class: HostClass,
    pub pattern: String,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub method: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Standardization {
    /// `tree`, `forest`, `forest-identity` or `blocks`.
    pub kind: String,
    pub centering: f64,
    pub centering_exact: String,
    /// The scale is `n^scale_exponent`.
    pub scale_exponent: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RawSummary {
    pub mean: f64,
    pub variance: f64,
    /// `mean / n^d`.
    pub mean_scaled: f64,
    /// `variance / n^{2d-1}`.
    pub variance_scaled: f64,
    /// `Σ x^k` over trials for `k = 1..4`, as decimal integers.
    pub power_sums: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StandardizedSummary {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegenerateSummary {
    pub ns: Vec<usize>,
    pub variances: Vec<f64>,
    /// Least-squares slope of `log Var` against `log n`.
    pub variance_exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltReport {
    pub schema: &'static str,
    pub experiment: String,
    pub config: ConfigEcho,
    pub standardization: Standardization,
    pub raw: RawSummary,
    pub standardized: StandardizedSummary,
    pub gamma2_exact: Option<f64>,
    pub gamma2_exact_string: Option<String>,
    pub ks_studentized: f64,
    pub ks_exact_gamma: Option<f64>,
    pub degenerate: Option<DegenerateSummary>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub samples: Vec<BigUint>,
}

/// Rounds to 15 significant digits for reporting.
fn sig15(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.14e}").parse().unwrap_or(x)
}

impl CltReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One header row and one value row of the scalar fields.
    pub fn to_csv(&self) -> String {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        let fields: Vec<(&str, String)> = vec![
            ("schema", self.schema.to_string()),
            ("experiment", self.experiment.clone()),
            ("class", self.config.class.to_string()),
            ("pattern", self.config.pattern.clone()),
            ("n", self.config.n.to_string()),
            ("trials", self.config.trials.to_string()),
            ("seed", self.config.seed.to_string()),
            ("method", self.config.method.clone()),
            ("standardization", self.standardization.kind.clone()),
            ("centering", self.standardization.centering.to_string()),
            ("scale", self.standardization.scale.to_string()),
            ("raw_mean", self.raw.mean.to_string()),
            ("raw_variance", self.raw.variance.to_string()),
            ("mean_scaled", self.raw.mean_scaled.to_string()),
            ("variance_scaled", self.raw.variance_scaled.to_string()),
            ("std_mean", self.standardized.mean.to_string()),
            ("std_variance", self.standardized.variance.to_string()),
            ("std_skewness", self.standardized.skewness.to_string()),
            ("std_excess_kurtosis", self.standardized.excess_kurtosis.to_string()),
            ("gamma2_exact", opt(self.gamma2_exact)),
            ("ks_studentized", self.ks_studentized.to_string()),
            ("ks_exact_gamma", opt(self.ks_exact_gamma)),
            (
                "variance_exponent",
                opt(self.degenerate.as_ref().map(|d| d.variance_exponent)),
            ),
        ];
        let header: Vec<&str> = fields.iter().map(|(k, _)| *k).collect();
        let values: Vec<String> = fields.into_iter().map(|(_, v)| v).collect();
        format!("{}\n{}\n", header.join(","), values.join(","))
    }

    /// Per-trial counts as `trial,value` rows.
    pub fn samples_csv(&self) -> String {
        let mut out = String::from("trial,value\n");
        for (i, x) in self.samples.iter().enumerate() {
            out.push_str(&format!("{i},{x}\n"));
        }
        out
    }
}

/// What a trial measures.
enum Counter {
    Zero,
    /// `occ` depends only on `n` and the number of blocks.
    ByBlocks(fn(usize, usize) -> BigUint),
    Tree(TreePatternKernel),
    Forest(ForestPatternKernel),
}

fn by_blocks(pattern: &Permutation) -> Option<fn(usize, usize) -> BigUint> {
    match pattern.values() {
        [1] => Some(|n, _| BigUint::from(n)),
        [2, 1] => Some(|n, beta| BigUint::from(n - beta)),
        [1, 2] => Some(|n, beta| BigUint::from(n * (n - 1) / 2 + beta - n)),
        _ => None,
    }
}

impl Counter {
    fn new(pattern: &Permutation, class: HostClass) -> Result<Self> {
        if !is_forest_permutation(pattern, ForestTest::Avoidance) {
            return Ok(Counter::Zero);
        }
        if let Some(f) = by_blocks(pattern) {
            return Ok(Counter::ByBlocks(f));
        }
        if class == HostClass::Tree && is_tree_permutation(pattern) {
            return Ok(Counter::Tree(TreePatternKernel::new(pattern)?));
        }
        Ok(Counter::Forest(ForestPatternKernel::new(pattern)?))
    }
}

fn tree_trial(counter: &Counter, n: usize, rng: &mut RngStream) -> Result<BigUint> {
    match counter {
        Counter::Zero => Ok(BigUint::zero()),
        Counter::ByBlocks(f) => Ok(f(n, 1)),
        Counter::Tree(kernel) => {
            if n < 2 {
                return Ok(BigUint::from((kernel.sigma().len() == 1) as u32));
            }
            let code = sample_uniform_tree_code(n, rng)?;
            let pairs = block_lengths(&code).pairs();
            Ok(match kernel.occ_in_pairs_u128(&pairs) {
                Some(v) => BigUint::from(v),
                None => kernel.occ_in_code(&code),
            })
        }
        Counter::Forest(kernel) => occ_forest_in_blocks(kernel, &[sample_uniform_tree(n, rng)?]),
    }
}

fn forest_lengths(
    n: usize,
    method: ForestMethod,
    sampler: &ForestSampler,
    rng: &mut RngStream,
) -> Result<Vec<usize>> {
    match method {
        ForestMethod::Recursive => sampler.block_lengths(n, rng),
        ForestMethod::Renewal => Ok(sample_forest_renewal(n, rng)?
            .blocks
            .iter()
            .map(Permutation::len)
            .collect()),
    }
}

fn forest_trial(
    counter: &Counter,
    n: usize,
    method: ForestMethod,
    sampler: &ForestSampler,
    rng: &mut RngStream,
) -> Result<BigUint> {
    match counter {
        Counter::Zero => Ok(BigUint::zero()),
        Counter::ByBlocks(f) => Ok(f(n, forest_lengths(n, method, sampler, rng)?.len())),
        Counter::Tree(_) => Err(Error::Internal("tree counter in forest host".into())),
        Counter::Forest(kernel) => {
            let blocks = match method {
                ForestMethod::Recursive => sampler.sample_blocks(n, rng)?,
                ForestMethod::Renewal => sample_forest_renewal(n, rng)?.blocks,
            };
            occ_forest_in_blocks(kernel, &blocks)
        }
    }
}

fn run_trials<F>(config: &ExperimentConfig, trial: F) -> Result<Vec<BigUint>>
where
    F: Fn(&mut RngStream) -> Result<BigUint> + Sync,
{
    let pool = crate::thread_pool(config.workers)?;
    pool.install(|| {
        (0..config.trials as u64)
            .into_par_iter()
            .map(|i| trial(&mut RngStream::new(config.seed, i)))
            .collect()
    })
}

fn to_rat(x: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(x.clone()))
}

fn rat_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn pow_rat(n: usize, e: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(n).pow(e as u32))
}

/// Exact sample moments from power sums.
struct ExactMoments {
    sums: [BigUint; 4],
    mean: BigRational,
    variance: BigRational,
    skewness: f64,
    excess_kurtosis: f64,
}

fn exact_moments(xs: &[BigUint]) -> ExactMoments {
    let mut sums = [BigUint::zero(), BigUint::zero(), BigUint::zero(), BigUint::zero()];
    for x in xs {
        let mut p = x.clone();
        for s in sums.iter_mut() {
            *s += &p;
            p *= x;
        }
    }
    let t = BigRational::from_integer(BigInt::from(xs.len()));
    let [s1, s2, s3, s4] = sums.clone().map(|s| to_rat(&s) / &t);
    let mean = s1.clone();
    let m2 = &s2 - &mean * &mean;
    let m3 = &s3 - BigRational::from_integer(3.into()) * &mean * &s2
        + BigRational::from_integer(2.into()) * mean.pow(3);
    let m4 = &s4 - BigRational::from_integer(4.into()) * &mean * &s3
        + BigRational::from_integer(6.into()) * mean.pow(2) * &s2
        - BigRational::from_integer(3.into()) * mean.pow(4);
    let variance = if xs.len() > 1 {
        &m2 * &t / (&t - BigRational::one())
    } else {
        BigRational::zero()
    };
    let (skewness, excess_kurtosis) = if m2.is_zero() {
        (0.0, 0.0)
    } else {
        let m2f = rat_f64(&m2);
        (rat_f64(&m3) / m2f.powf(1.5), rat_f64(&(&m4 / (&m2 * &m2))) - 3.0)
    };
    ExactMoments {
        sums,
        mean,
        variance,
        skewness,
        excess_kurtosis,
    }
}

/// Centering, scale exponent and the degree used to normalize raw moments.
struct Norming {
    kind: &'static str,
    centering: QuadRat,
    scale_exponent: BigRational,
    degree: usize,
    gamma2: Option<QuadRat>,
}

fn factorial(n: usize) -> BigInt {
    (1..=n as u64).map(BigInt::from).product()
}

fn quad_int(n: &BigInt) -> QuadRat {
    QuadRat::from_rational(BigRational::from_integer(n.clone()))
}

fn tree_norming(pattern: &Permutation, n: usize) -> Norming {
    let d = if is_forest_permutation(pattern, ForestTest::Avoidance) {
        ForestPatternKernel::new(pattern).map(|k| k.d()).unwrap_or(1)
    } else {
        1
    };
    let centering = QuadRat::from_rational(pow_rat(n, d) / BigRational::from_integer(factorial(d)));
    let gamma2 = tree_gamma_known(pattern).map(QuadRat::from_rational);
    Norming {
        kind: "tree",
        centering,
        scale_exponent: BigRational::new(BigInt::from(2 * d as i64 - 1), BigInt::from(2)),
        degree: d,
        gamma2,
    }
}

fn forest_norming(pattern: &Permutation, n: usize) -> Result<Norming> {
    let kernel = ForestPatternKernel::new(pattern)?;
    let d = kernel.d();
    if d >= 2 && pattern.is_identity() {
        let c = identity_correction(d)?;
        let choose = crate::binomial::binomial(n as i64, d as i64);
        let centering = &quad_int(&BigInt::from(choose)) - &c.scale(&pow_rat(n, d - 1));
        return Ok(Norming {
            kind: "forest-identity",
            centering,
            scale_exponent: BigRational::new(BigInt::from(2 * d as i64 - 3), BigInt::from(2)),
            degree: d,
            gamma2: if d == 2 { Some(forest_gamma_closed()) } else { None },
        });
    }
    let mu = tilde_mu_sigma(pattern)?;
    Ok(Norming {
        kind: "forest",
        centering: mu.scale(&pow_rat(n, d)),
        scale_exponent: BigRational::new(BigInt::from(2 * d as i64 - 1), BigInt::from(2)),
        degree: d,
        gamma2: forest_gamma_known(pattern),
    })
}

fn blocks_norming(n: usize) -> Norming {
    Norming {
        kind: "blocks",
        centering: block_mean_rate().scale(&pow_rat(n, 1)),
        scale_exponent: BigRational::new(BigInt::one(), BigInt::from(2)),
        degree: 1,
        gamma2: Some(forest_gamma_closed()),
    }
}

fn build_report(
    experiment: &str,
    config: &ExperimentConfig,
    norming: Norming,
    samples: Vec<BigUint>,
    warnings: Vec<String>,
    degenerate: Option<DegenerateSummary>,
) -> CltReport {
    let n = config.n;
    let m = exact_moments(&samples);
    let exp_f = rat_f64(&norming.scale_exponent);
    // scale² = n^{2·exponent}, an integer power
    let scale_sq_exp = (&norming.scale_exponent * BigRational::from_integer(2.into()))
        .to_integer()
        .to_usize()
        .unwrap_or(0);
    let scale_sq = pow_rat(n, scale_sq_exp);
    let scale = (n as f64).powf(exp_f);
    let centered = &QuadRat::from_rational(m.mean.clone()) - &norming.centering;
    let std_mean = centered.to_f64() / scale;
    let std_var = rat_f64(&(&m.variance / &scale_sq));
    let centering_f = norming.centering.to_f64();
    let d = norming.degree;
    let raw = RawSummary {
        mean: sig15(rat_f64(&m.mean)),
        variance: sig15(rat_f64(&m.variance)),
        mean_scaled: sig15(rat_f64(&(&m.mean / pow_rat(n, d)))),
        variance_scaled: sig15(rat_f64(&(&m.variance / pow_rat(n, 2 * d - 1)))),
        power_sums: m.sums.iter().map(BigUint::to_string).collect(),
    };
    let xs: Vec<f64> = samples.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect();
    let mean_f = rat_f64(&m.mean);
    let sd = rat_f64(&m.variance).sqrt();
    let ks_studentized = if sd > 0.0 {
        let z: Vec<f64> = xs.iter().map(|x| (x - mean_f) / sd).collect();
        ks_distance_normal(&z)
    } else {
        f64::NAN
    };
    let ks_exact_gamma = norming.gamma2.as_ref().and_then(|g| {
        let g = g.to_f64();
        (g > 0.0).then(|| {
            let s = scale * g.sqrt();
            let z: Vec<f64> = xs.iter().map(|x| (x - centering_f) / s).collect();
            sig15(ks_distance_normal(&z))
        })
    });
    CltReport {
        schema: SCHEMA,
        experiment: experiment.to_string(),
        config: ConfigEcho {
            class: config.class,
            pattern: config.pattern.to_string(),
            n,
            trials: config.trials,
            seed: config.seed,
            method: config.method.to_string(),
        },
        standardization: Standardization {
            kind: norming.kind.to_string(),
            centering: sig15(centering_f),
            centering_exact: norming.centering.to_exact_string(),
            scale_exponent: exp_f,
            scale: sig15(scale),
        },
        raw,
        standardized: StandardizedSummary {
            mean: sig15(std_mean),
            variance: sig15(std_var),
            skewness: sig15(m.skewness),
            excess_kurtosis: sig15(m.excess_kurtosis),
        },
        gamma2_exact: norming.gamma2.as_ref().map(|g| sig15(g.to_f64())),
        gamma2_exact_string: norming.gamma2.as_ref().map(QuadRat::to_exact_string),
        ks_studentized: sig15(ks_studentized),
        ks_exact_gamma,
        degenerate,
        warnings,
        samples,
    }
}

fn pattern_warnings(pattern: &Permutation) -> Vec<String> {
    if is_forest_permutation(pattern, ForestTest::Avoidance) {
        Vec::new()
    } else {
        vec![format!("{pattern} is not a forest permutation; every count is 0")]
    }
}

/// Runs at `n/4`, `n/2`, `n` and fits the growth exponent of the variance.
fn explore<F>(config: &ExperimentConfig, run: F) -> Result<Option<DegenerateSummary>>
where
    F: Fn(usize) -> Result<Vec<BigUint>>,
{
    if !config.explore_degenerate {
        return Ok(None);
    }
    let ns: Vec<usize> = [config.n / 4, config.n / 2, config.n]
        .into_iter()
        .filter(|&m| m >= config.pattern.len().max(2))
        .collect();
    let mut variances = Vec::new();
    for &m in &ns {
        variances.push(rat_f64(&exact_moments(&run(m)?).variance));
    }
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .zip(&variances)
        .filter(|(_, v)| **v > 0.0)
        .map(|(&m, v)| ((m as f64).ln(), v.ln()))
        .collect();
    let exponent = if pts.len() >= 2 {
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    } else {
        f64::NAN
    };
    Ok(Some(DegenerateSummary {
        ns,
        variances: variances.into_iter().map(sig15).collect(),
        variance_exponent: sig15(exponent),
    }))
}

/// Pattern counts in uniform tree permutations, centred by `n^d/d!` and
/// scaled by `n^{d-1/2}`.
pub fn run_tree_clt(config: &ExperimentConfig) -> Result<CltReport> {
    config.validate()?;
    let counter = Counter::new(&config.pattern, HostClass::Tree)?;
    let run = |n: usize| run_trials(config, |rng| tree_trial(&counter, n, rng));
    let samples = run(config.n)?;
    let degenerate = explore(config, run)?;
    Ok(build_report(
        "tree-clt",
        config,
        tree_norming(&config.pattern, config.n),
        samples,
        pattern_warnings(&config.pattern),
        degenerate,
    ))
}

/// Pattern counts in uniform forest permutations, centred by `μ̃_σ n^d` and
/// scaled by `n^{d-1/2}`; identity patterns with `d >= 2` use the refined
/// centering `C(n,d) - c_d n^{d-1}` and scale `n^{d-3/2}`.
pub fn run_forest_clt(config: &ExperimentConfig) -> Result<CltReport> {
    config.validate()?;
    let counter = Counter::new(&config.pattern, HostClass::Forest)?;
    let run = |n: usize| {
        let sampler = ForestSampler::new(n);
        run_trials(config, |rng| forest_trial(&counter, n, config.method, &sampler, rng))
    };
    let samples = run(config.n)?;
    let degenerate = explore(config, run)?;
    let norming = if matches!(counter, Counter::Zero) {
        tree_norming(&config.pattern, config.n)
    } else {
        forest_norming(&config.pattern, config.n)?
    };
    Ok(build_report(
        "forest-clt",
        config,
        norming,
        samples,
        pattern_warnings(&config.pattern),
        degenerate,
    ))
}

/// Number of blocks of a uniform forest permutation, centred by
/// `(5-√5)n/10` and scaled by `√n`.
pub fn run_blocks_clt(config: &ExperimentConfig) -> Result<CltReport> {
    config.validate()?;
    let mut warnings = Vec::new();
    if config.class != HostClass::Forest {
        warnings.push("block counts are always taken in forest permutations".to_string());
    }
    let n = config.n;
    let sampler = ForestSampler::new(n);
    let samples = run_trials(config, |rng| {
        Ok(BigUint::from(forest_lengths(n, config.method, &sampler, rng)?.len()))
    })?;
    let mut echo = config.clone();
    echo.class = HostClass::Forest;
    Ok(build_report("blocks-clt", &echo, blocks_norming(n), samples, warnings, None))
}
