//! Subcommand implementations.

use std::fmt::Display;
use std::io::Write;
use std::path::PathBuf;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use serde_json::{json, Value};

use forestperm::code::{encode, enumerate_forests, enumerate_trees, parse_tree_or_perm};
use forestperm::constants::{
    block_mean_rate, forest_gamma_closed, gamma_lr, identity_correction, inversion_mean_rate,
    laga_expectation, mu_sigma, table1, tilde_mu_sigma, tilde_mu_sigma_alt,
};
use forestperm::exact::{
    expected_occurrences_tree, expected_occurrences_tree_closed_form, forest_count,
    marked_occurrence_count, rational_to_f64, tree_count,
};
use forestperm::moments::tilde_tau_moments;
use forestperm::pattern::{occ_forest_in_forest, occ_tree_in_tree};
use forestperm::perm::{
    count_occurrences_bruteforce, is_forest_permutation, is_tree_permutation, ForestTest, Permutation,
};
use forestperm::quad::QuadRat;
use forestperm::rng::RngStream;
use forestperm::sample::{
    sample_forest_renewal, sample_tilde_tau, sample_tree_via_renewal, sample_uniform_tree, ForestMethod,
    ForestSampler,
};
use forestperm::simulate::{run_blocks_clt, run_forest_clt, run_tree_clt, ExperimentConfig, HostClass, SCHEMA};
use forestperm::verify::{verify_exact, Suite};

use crate::config::{resolve, resolve_opt, resolve_workers, FileConfig};
use crate::{Cli, CltClass, Command, ConstantKind, Format, OccMethod, SampleClass};

/// Largest `n` for exhaustive averages over `F_n`.
const COMPARE_LIMIT: usize = 12;
/// Largest `n` for brute-force averages over `T_n`.
const CHECK_LIMIT: usize = 16;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Display) -> Self {
        CliError {
            code: 2,
            message: message.to_string(),
        }
    }
}

impl From<forestperm::Error> for CliError {
    fn from(e: forestperm::Error) -> Self {
        let code = if matches!(e, forestperm::Error::Internal(_)) { 1 } else { 2 };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<String> for CliError {
    fn from(message: String) -> Self {
        CliError::usage(message)
    }
}

type CliResult<T> = Result<T, CliError>;

struct Output {
    json: Value,
    csv: String,
    default_format: Format,
    /// 0 on success, 1 when a check failed.
    status: u8,
}

impl Output {
    fn new(json: Value, csv: String) -> Self {
        Output {
            json,
            csv,
            default_format: Format::Json,
            status: 0,
        }
    }
}

fn parse_pattern(text: &str) -> CliResult<Permutation> {
    Ok(parse_tree_or_perm(text)?)
}

fn quad_json(name: &str, q: &QuadRat) -> Value {
    json!({"name": name, "exact": q.to_exact_string(), "value": q.to_f64()})
}

fn rational_json(name: &str, r: &BigRational) -> Value {
    json!({"name": name, "exact": r.to_string(), "value": rational_to_f64(r)})
}

fn values_csv(values: &[Value]) -> String {
    let mut out = String::from("name,exact,value\n");
    for v in values {
        out.push_str(&format!(
            "{},{},{}\n",
            v["name"].as_str().unwrap_or(""),
            v["exact"].as_str().unwrap_or(""),
            v["value"]
        ));
    }
    out
}

pub fn run(cli: Cli) -> CliResult<u8> {
    let file = match &cli.global.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let out_path: Option<PathBuf> = resolve_opt(cli.global.out.clone(), &file, "out")?;
    let format: Option<Format> = resolve_opt(cli.global.format, &file, "format")?;
    let output = match cli.command {
        Command::Count { n, sigma_len } => count(resolve(n, &file, "n", 12)?, sigma_len)?,
        Command::Occ { pattern, host, method } => occ(&pattern, &host, method)?,
        Command::Sample { class, n, count, method } => {
            let class = resolve(class, &file, "class", SampleClass::Tree)?;
            let n = resolve_opt(n, &file, "n")?;
            let count = resolve(count, &file, "count", 1usize)?;
            let seed = resolve(cli.global.seed, &file, "seed", 0u64)?;
            let method = resolve_opt(method, &file, "method")?;
            sample(class, n, count, seed, method)?
        }
        Command::Expect {
            pattern,
            sigma_len,
            n,
            check,
            compare,
            tilde,
            pattern2,
            bits,
        } => {
            let pattern = resolve_opt(pattern, &file, "pattern")?;
            let n = resolve_opt(n, &file, "n")?;
            if tilde {
                let bits = resolve(bits, &file, "bits", 30u32)?;
                expect_tilde(pattern.as_deref(), pattern2.as_deref(), bits)?
            } else if let Some(other) = compare {
                expect_compare(pattern.as_deref(), &other, n)?
            } else {
                expect(pattern.as_deref(), sigma_len, n, check)?
            }
        }
        Command::Constants { which, pattern, ell, r, d } => constants(which, pattern.as_deref(), ell, r, d)?,
        Command::Clt {
            class,
            blocks,
            pattern,
            n,
            method,
            explore_degenerate,
            samples_out,
        } => {
            let class = resolve(class, &file, "class", CltClass::Tree)?;
            let pattern: Option<String> = resolve_opt(pattern, &file, "pattern")?;
            let n: usize = resolve_opt(n, &file, "n")?.ok_or_else(|| CliError::usage("clt needs --n"))?;
            let method = resolve(method, &file, "method", "recursive".to_string())?;
            let pattern = match (&pattern, blocks) {
                (Some(p), _) => parse_pattern(p)?,
                (None, true) => Permutation::identity(1)?,
                (None, false) => return Err(CliError::usage("clt needs --pattern (or --blocks)")),
            };
            let mut config = ExperimentConfig::new(
                match class {
                    CltClass::Tree => HostClass::Tree,
                    CltClass::Forest => HostClass::Forest,
                },
                pattern,
                n,
                resolve(cli.global.trials, &file, "trials", 1000usize)?,
                resolve(cli.global.seed, &file, "seed", 0u64)?,
            );
            config.workers = resolve_workers(cli.global.workers, &file)?;
            config.method = method.parse()?;
            config.explore_degenerate = explore_degenerate;
            clt(&config, blocks, samples_out)?
        }
        Command::Verify { suite } => {
            let suite: String = resolve(suite, &file, "suite", "all".to_string())?;
            let workers = resolve_workers(cli.global.workers, &file)?;
            verify(suite.parse()?, workers)?
        }
    };
    let text = match format.unwrap_or(output.default_format) {
        Format::Json => format!("{}\n", serde_json::to_string_pretty(&output.json).expect("json")),
        Format::Csv => output.csv,
    };
    match out_path {
        Some(p) => std::fs::write(&p, text).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(text.as_bytes());
        }
    }
    Ok(output.status)
}

fn count(max_n: usize, sigma_len: Option<usize>) -> CliResult<Output> {
    let mut rows = Vec::new();
    let mut csv;
    match sigma_len {
        None => {
            csv = String::from("n,t_n,f_n\n");
            for n in 1..=max_n {
                let (t, f) = (tree_count(n)?, forest_count(n));
                csv.push_str(&format!("{n},{t},{f}\n"));
                rows.push(json!({"n": n, "t_n": t.to_string(), "f_n": f.to_string()}));
            }
        }
        Some(k) => {
            csv = String::from("n,sigma_len,a_n,expected_occ\n");
            for n in k..=max_n {
                let a = marked_occurrence_count(k, n)?;
                let e = expected_occurrences_tree(k, n)?;
                csv.push_str(&format!("{n},{k},{a},{e}\n"));
                rows.push(json!({"n": n, "sigma_len": k, "a_n": a.to_string(), "expected_occ": e.to_string()}));
            }
        }
    }
    let mut out = Output::new(json!({"schema": SCHEMA, "rows": rows}), csv);
    out.default_format = Format::Csv;
    Ok(out)
}

fn occ(pattern: &str, host: &str, method: OccMethod) -> CliResult<Output> {
    let sigma = parse_pattern(pattern)?;
    let pi = parse_pattern(host)?;
    let brute = matches!(method, OccMethod::Brute | OccMethod::Both).then(|| count_occurrences_bruteforce(&pi, &sigma));
    let fast = if matches!(method, OccMethod::Fast | OccMethod::Both) {
        if !is_forest_permutation(&pi, ForestTest::Avoidance) {
            return Err(CliError::usage("fast counting needs a forest host"));
        }
        Some(if !is_forest_permutation(&sigma, ForestTest::Avoidance) {
            BigUint::default()
        } else if sigma.len() >= 3 && is_tree_permutation(&sigma) && is_tree_permutation(&pi) {
            occ_tree_in_tree(&sigma, &encode(&pi)?)?
        } else {
            occ_forest_in_forest(&sigma, &pi)?
        })
    } else {
        None
    };
    let equal = match (&brute, &fast) {
        (Some(a), Some(b)) => Some(a == b),
        _ => None,
    };
    let s = |x: &Option<BigUint>| x.as_ref().map(|v| v.to_string());
    let csv = format!(
        "pattern,host,brute,fast,equal\n{},{},{},{},{}\n",
        sigma,
        pi,
        s(&brute).unwrap_or_default(),
        s(&fast).unwrap_or_default(),
        equal.map(|e| e.to_string()).unwrap_or_default()
    );
    let mut out = Output::new(
        json!({"schema": SCHEMA, "pattern": sigma.to_string(), "host": pi.to_string(),
               "brute": s(&brute), "fast": s(&fast), "equal": equal}),
        csv,
    );
    if equal == Some(false) {
        out.status = 1;
    }
    Ok(out)
}

fn sample(class: SampleClass, n: Option<usize>, count: usize, seed: u64, method: Option<String>) -> CliResult<Output> {
    let need_n = || n.ok_or_else(|| CliError::usage("sample needs --n"));
    let mut perms = Vec::with_capacity(count);
    match class {
        SampleClass::Tree => {
            let n = need_n()?;
            let renewal = match method.as_deref() {
                None | Some("direct") => false,
                Some("renewal") => true,
                Some(other) => return Err(CliError::usage(format!("unknown tree method {other:?}"))),
            };
            for i in 0..count as u64 {
                let mut rng = RngStream::new(seed, i);
                perms.push(if renewal && n >= 2 {
                    sample_tree_via_renewal(n, &mut rng)?
                } else {
                    sample_uniform_tree(n, &mut rng)?
                });
            }
        }
        SampleClass::Forest => {
            let n = need_n()?;
            let method: ForestMethod = method.as_deref().unwrap_or("recursive").parse()?;
            let sampler = ForestSampler::new(n);
            for i in 0..count as u64 {
                let mut rng = RngStream::new(seed, i);
                let blocks = match method {
                    ForestMethod::Recursive => sampler.sample_blocks(n, &mut rng)?,
                    ForestMethod::Renewal => sample_forest_renewal(n, &mut rng)?.blocks,
                };
                perms.push(forestperm::perm::direct_sum(&blocks)?);
            }
        }
        SampleClass::Tilde => {
            for i in 0..count as u64 {
                perms.push(sample_tilde_tau(&mut RngStream::new(seed, i)));
            }
        }
    }
    let lines: Vec<String> = perms.iter().map(Permutation::to_string).collect();
    let csv = lines.iter().map(|l| format!("{l}\n")).collect();
    let mut out = Output::new(json!({"schema": SCHEMA, "seed": seed, "permutations": lines}), csv);
    out.default_format = Format::Csv;
    Ok(out)
}

fn expect(pattern: Option<&str>, sigma_len: Option<usize>, n: Option<usize>, check: bool) -> CliResult<Output> {
    let n = n.ok_or_else(|| CliError::usage("expect needs --n"))?;
    let sigma = pattern.map(parse_pattern).transpose()?;
    if let Some(s) = &sigma {
        if !is_tree_permutation(s) {
            return Err(CliError::usage(format!(
                "{s} is not a tree permutation; use --compare or --tilde for forest patterns"
            )));
        }
    }
    let k = match (&sigma, sigma_len) {
        (Some(s), _) => s.len(),
        (None, Some(k)) => k,
        (None, None) => return Err(CliError::usage("expect needs --pattern or --sigma-len")),
    };
    let value = expected_occurrences_tree(k, n)?;
    let closed = expected_occurrences_tree_closed_form(k, n)?;
    let mut status = u8::from(value != closed);
    let mut brute = None;
    if check {
        let s = sigma.as_ref().ok_or_else(|| CliError::usage("--check needs --pattern"))?;
        if n > CHECK_LIMIT {
            return Err(CliError::usage(format!("--check enumerates T_n, n <= {CHECK_LIMIT}")));
        }
        let avg = average_occ(&enumerate_trees(n)?, s);
        status |= u8::from(avg != value);
        brute = Some(avg);
    }
    let csv = format!(
        "n,sigma_len,expected,closed_form,brute\n{n},{k},{value},{closed},{}\n",
        brute.as_ref().map(|b| b.to_string()).unwrap_or_default()
    );
    let mut out = Output::new(
        json!({"schema": SCHEMA, "n": n, "sigma_len": k, "expected": value.to_string(),
               "expected_f64": rational_to_f64(&value), "closed_form": closed.to_string(),
               "brute": brute.map(|b| b.to_string())}),
        csv,
    );
    out.status = status;
    Ok(out)
}

fn average_occ(hosts: &[Permutation], sigma: &Permutation) -> BigRational {
    let total: BigUint = hosts.iter().map(|h| count_occurrences_bruteforce(h, sigma)).sum();
    BigRational::new(BigInt::from(total), BigInt::from(hosts.len()))
}

/// Exact averages of two forest patterns over `T_m` and `F_m`; reports
/// equality without asserting it.
fn expect_compare(pattern: Option<&str>, other: &str, n: Option<usize>) -> CliResult<Output> {
    let a = parse_pattern(pattern.ok_or_else(|| CliError::usage("--compare needs --pattern"))?)?;
    let b = parse_pattern(other)?;
    let n = n.unwrap_or(8);
    if n > COMPARE_LIMIT {
        return Err(CliError::usage(format!("--compare enumerates F_n, n <= {COMPARE_LIMIT}")));
    }
    let mut rows = Vec::new();
    let mut csv = String::from("n,host,first,second,equal\n");
    for m in a.len().max(b.len()).max(1)..=n {
        for (host, perms) in [("tree", enumerate_trees(m)?), ("forest", enumerate_forests(m)?)] {
            let (ea, eb) = (average_occ(&perms, &a), average_occ(&perms, &b));
            csv.push_str(&format!("{m},{host},{ea},{eb},{}\n", ea == eb));
            rows.push(json!({"n": m, "host": host, "first": ea.to_string(),
                             "second": eb.to_string(), "equal": ea == eb}));
        }
    }
    Ok(Output::new(
        json!({"schema": SCHEMA, "first": a.to_string(), "second": b.to_string(), "rows": rows}),
        csv,
    ))
}

fn expect_tilde(pattern: Option<&str>, pattern2: Option<&str>, bits: u32) -> CliResult<Output> {
    let a = parse_pattern(pattern.ok_or_else(|| CliError::usage("--tilde needs --pattern"))?)?;
    let b = pattern2.map(parse_pattern).transpose()?;
    let iv = tilde_tau_moments(&a, b.as_ref(), bits)?;
    let csv = format!(
        "lo,hi,lo_f64,hi_f64,cutoff\n{},{},{},{},{}\n",
        iv.lo,
        iv.hi,
        rational_to_f64(&iv.lo),
        rational_to_f64(&iv.hi),
        iv.cutoff
    );
    Ok(Output::new(
        json!({"schema": SCHEMA, "first": a.to_string(), "second": b.map(|p| p.to_string()),
               "lo": iv.lo.to_string(), "hi": iv.hi.to_string(),
               "lo_f64": rational_to_f64(&iv.lo), "hi_f64": rational_to_f64(&iv.hi),
               "cutoff": iv.cutoff, "bits": bits}),
        csv,
    ))
}

fn constants(
    which: ConstantKind,
    pattern: Option<&str>,
    ell: Option<usize>,
    r: Option<usize>,
    d: usize,
) -> CliResult<Output> {
    let need_pattern = || -> CliResult<Permutation> {
        parse_pattern(pattern.ok_or_else(|| CliError::usage("this constant needs --pattern"))?)
    };
    let values: Vec<Value> = match which {
        ConstantKind::Table1 => {
            let t = table1();
            let mut csv = String::from("ell,r,gamma\n");
            let mut rows = Vec::new();
            for (i, row) in t.iter().enumerate() {
                for (j, g) in row.iter().enumerate() {
                    csv.push_str(&format!("{},{},{g}\n", i + 1, j + 1));
                }
                rows.push(row.iter().map(|g| g.to_string()).collect::<Vec<_>>());
            }
            return Ok(Output::new(json!({"schema": SCHEMA, "which": "table1", "rows": rows}), csv));
        }
        ConstantKind::GammaLr => {
            let (l, r) = ell
                .zip(r)
                .ok_or_else(|| CliError::usage("gamma-lr needs --ell and --r"))?;
            vec![rational_json(&format!("gamma({l},{r})"), &gamma_lr(l, r)?)]
        }
        ConstantKind::Mu => {
            let s = need_pattern()?;
            vec![quad_json(&format!("mu[{s}]"), &mu_sigma(&s)?)]
        }
        ConstantKind::TildeMu => {
            let s = need_pattern()?;
            let v = tilde_mu_sigma(&s)?;
            if v != tilde_mu_sigma_alt(&s)? {
                return Err(CliError {
                    code: 1,
                    message: "closed forms disagree".into(),
                });
            }
            vec![quad_json(&format!("tilde_mu[{s}]"), &v)]
        }
        ConstantKind::Laga => match pattern {
            Some(_) => {
                let s = need_pattern()?;
                vec![rational_json(&format!("laga[{s}]"), &laga_expectation(&s)?)]
            }
            None => {
                let mut v = Vec::new();
                for k in 1..=7 {
                    for s in enumerate_trees(k)? {
                        v.push(rational_json(&format!("laga[{s}]"), &laga_expectation(&s)?));
                    }
                }
                v
            }
        },
        ConstantKind::ForestGamma => vec![
            quad_json("gamma2_21", &forest_gamma_closed()),
            quad_json("block_mean_rate", &block_mean_rate()),
            quad_json("inversion_mean_rate", &inversion_mean_rate()),
            quad_json(&format!("identity_correction[d={d}]"), &identity_correction(d)?),
        ],
    };
    let csv = values_csv(&values);
    Ok(Output::new(json!({"schema": SCHEMA, "values": values}), csv))
}

fn clt(config: &ExperimentConfig, blocks: bool, samples_out: Option<PathBuf>) -> CliResult<Output> {
    let report = if blocks {
        run_blocks_clt(config)?
    } else {
        match config.class {
            HostClass::Tree => run_tree_clt(config)?,
            HostClass::Forest => run_forest_clt(config)?,
        }
    };
    if let Some(p) = samples_out {
        std::fs::write(&p, report.samples_csv()).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?;
    }
    let json: Value = serde_json::from_str(&report.to_json()).expect("report json");
    Ok(Output::new(json, report.to_csv()))
}

fn verify(suite: Suite, workers: usize) -> CliResult<Output> {
    let pool = rayon_pool(workers)?;
    let report = pool.install(|| verify_exact(suite))?;
    let json: Value = serde_json::from_str(&report.to_json()).expect("report json");
    let mut out = Output::new(json, report.to_csv());
    out.status = u8::from(!report.passed);
    Ok(out)
}

fn rayon_pool(workers: usize) -> CliResult<forestperm::ThreadPool> {
    forestperm::thread_pool(workers).map_err(CliError::from)
}
