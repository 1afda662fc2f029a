//! Exhaustive and randomized invariant suites with machine-readable results.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::code::{block_lengths, decode, encode, enumerate_codes, Code};
use crate::constants::{gamma_lr, laga_expectation, TABLE1_PUBLISHED};
use crate::error::{Error, Result};
use crate::exact::{expected_occurrences_tree, forest_count, rat, tree_count};
use crate::pattern::{occ_tree_in_tree, sandwich_bounds, ForestPatternKernel, TreePatternKernel};
use crate::perm::{
    all_permutations, count_occurrences_u64, direct_sum, is_forest_permutation, is_tree_permutation,
    ForestTest, Permutation,
};
use crate::rng::RngStream;
use crate::sample::sample_uniform_tree;
use crate::simulate::SCHEMA;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Counts,
    Te,
    Table1,
    Laga,
    Bijection,
    Ltt,
    Sandwich,
    All,
}

impl Suite {
    pub const EACH: [Suite; 7] = [
        Suite::Counts,
        Suite::Te,
        Suite::Table1,
        Suite::Laga,
        Suite::Bijection,
        Suite::Ltt,
        Suite::Sandwich,
    ];
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "counts" => Suite::Counts,
            "te" => Suite::Te,
            "table1" => Suite::Table1,
            "laga" => Suite::Laga,
            "bijection" => Suite::Bijection,
            "ltt" => Suite::Ltt,
            "sandwich" => Suite::Sandwich,
            "all" => Suite::All,
            other => return Err(Error::Parse(format!("unknown suite {other:?}"))),
        })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("serializes");
        f.write_str(s.as_str().expect("string"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: Value,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: Value) -> Self {
        Check {
            name: name.into(),
            passed,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub schema: &'static str,
    pub suite: Suite,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,passed\n");
        for c in &self.checks {
            out.push_str(&format!("{},{}\n", c.name, c.passed));
        }
        out
    }
}

pub fn verify_exact(suite: Suite) -> Result<VerifyReport> {
    let checks = match suite {
        Suite::Counts => suite_counts(8)?,
        Suite::Te => suite_te(14)?,
        Suite::Table1 => suite_table1()?,
        Suite::Laga => suite_laga(7)?,
        Suite::Bijection => suite_bijection(12, 8)?,
        Suite::Ltt => suite_ltt(10, 1000, 25, 0)?,
        Suite::Sandwich => suite_sandwich(1000, 0)?,
        Suite::All => {
            let mut all = Vec::new();
            for s in Suite::EACH {
                all.extend(verify_exact(s)?.checks);
            }
            all
        }
    };
    Ok(VerifyReport {
        schema: SCHEMA,
        suite,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

/// `t_n` and `f_n` against filtering `S_n`, forests by both characterizations.
pub fn suite_counts(max_n: usize) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for n in 1..=max_n {
        let perms = all_permutations(n);
        let trees = perms.par_iter().filter(|p| is_tree_permutation(p)).count();
        let acyclic = perms
            .par_iter()
            .filter(|p| is_forest_permutation(p, ForestTest::Acyclic))
            .count();
        let avoid = perms
            .par_iter()
            .filter(|p| is_forest_permutation(p, ForestTest::Avoidance))
            .count();
        let t = tree_count(n)?;
        let f = forest_count(n);
        checks.push(Check::new(
            format!("counts/n={n}"),
            BigUint::from(trees) == t && BigUint::from(acyclic) == f && acyclic == avoid,
            json!({"n": n, "t_n": t.to_string(), "trees": trees, "f_n": f.to_string(),
                   "acyclic": acyclic, "avoiding": avoid}),
        ));
    }
    Ok(checks)
}

/// Exact `E occ_σ(τ_n)` against the average over all of `T_n`, for every
/// tree pattern of length 3 to 5; the averages must not depend on `σ`.
pub fn suite_te(max_n: usize) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for k in 3..=5usize {
        let patterns: Vec<Permutation> = enumerate_codes(k)?.map(|c| decode(&c)).collect::<Result<_>>()?;
        for n in k..=max_n {
            let trees: Vec<Permutation> = enumerate_codes(n)?.map(|c| decode(&c)).collect::<Result<_>>()?;
            let t = BigRational::from_integer(tree_count(n)?.into());
            let want = expected_occurrences_tree(k, n)?;
            let averages: Vec<BigRational> = patterns
                .par_iter()
                .map(|s| {
                    let total: u64 = trees.iter().map(|tau| count_occurrences_u64(tau, s)).sum();
                    BigRational::from_integer(total.into()) / &t
                })
                .collect();
            let mismatches = averages.iter().filter(|a| **a != want).count();
            checks.push(Check::new(
                format!("te/k={k}/n={n}"),
                mismatches == 0,
                json!({"k": k, "n": n, "patterns": patterns.len(), "expected": want.to_string(),
                       "mismatches": mismatches}),
            ));
        }
    }
    Ok(checks)
}

pub fn suite_table1() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (l, row) in TABLE1_PUBLISHED.iter().enumerate() {
        for (r, &want) in row.iter().enumerate() {
            let got = gamma_lr(l + 1, r + 1)?;
            checks.push(Check::new(
                format!("table1/{}-{}", l + 1, r + 1),
                got == rat(want),
                json!({"ell": l + 1, "r": r + 1, "computed": got.to_string(), "published": want}),
            ));
        }
    }
    Ok(checks)
}

pub fn suite_laga(max_len: usize) -> Result<Vec<Check>> {
    let mut patterns = vec![Permutation::identity(1)?];
    for k in 2..=max_len {
        for c in enumerate_codes(k)? {
            patterns.push(decode(&c)?);
        }
    }
    let values: Vec<BigRational> = patterns.iter().map(laga_expectation).collect::<Result<_>>()?;
    let bad: Vec<String> = patterns
        .iter()
        .zip(&values)
        .filter(|(_, v)| **v != rat(4))
        .map(|(p, v)| format!("{p}: {v}"))
        .collect();
    Ok(vec![Check::new(
        format!("laga/len<={max_len}"),
        bad.is_empty(),
        json!({"patterns": patterns.len(), "failures": bad}),
    )])
}

/// Round trips on all codes up to `max_code`, and `decode(Σ_n)` equal to the
/// brute-force tree set up to `max_set`.
pub fn suite_bijection(max_code: usize, max_set: usize) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for n in 2..=max_code {
        let codes: Vec<Code> = enumerate_codes(n)?.collect();
        let mismatches = codes
            .par_iter()
            .filter(|c| decode(c).and_then(|t| encode(&t)).map(|back| &back != *c).unwrap_or(true))
            .count();
        checks.push(Check::new(
            format!("bijection/roundtrip/n={n}"),
            mismatches == 0,
            json!({"n": n, "codes": codes.len(), "mismatches": mismatches}),
        ));
    }
    for n in 2..=max_set {
        let decoded: BTreeSet<Vec<usize>> = enumerate_codes(n)?
            .map(|c| decode(&c).map(|p| p.values().to_vec()))
            .collect::<Result<_>>()?;
        let brute: BTreeSet<Vec<usize>> = all_permutations(n)
            .into_iter()
            .filter(is_tree_permutation)
            .map(|p| p.values().to_vec())
            .collect();
        checks.push(Check::new(
            format!("bijection/image/n={n}"),
            decoded == brute,
            json!({"n": n, "decoded": decoded.len(), "trees": brute.len(),
                   "mismatches": decoded.symmetric_difference(&brute).count()}),
        ));
    }
    Ok(checks)
}

fn random_code(n: usize, rng: &mut RngStream) -> Result<Code> {
    crate::sample::sample_uniform_tree_code(n, rng)
}

/// Fast tree-in-tree counts against brute force: exhaustive for patterns of
/// length 3 to 5 and hosts up to `max_exhaustive`, then `random` cases with
/// hosts up to `max_random`.
pub fn suite_ltt(max_exhaustive: usize, random: usize, max_random: usize, seed: u64) -> Result<Vec<Check>> {
    let mut patterns = Vec::new();
    for k in 3..=5 {
        for c in enumerate_codes(k)? {
            patterns.push(decode(&c)?);
        }
    }
    let mut checks = Vec::new();
    let mut total = 0usize;
    let mut mismatches = 0usize;
    for n in 2..=max_exhaustive {
        let codes: Vec<Code> = enumerate_codes(n)?.collect();
        let bad: usize = codes
            .par_iter()
            .map(|c| {
                let tau = decode(c).expect("valid code");
                patterns
                    .iter()
                    .filter(|s| {
                        let fast = occ_tree_in_tree(s, c).expect("tree pattern");
                        fast != BigUint::from(count_occurrences_u64(&tau, s))
                    })
                    .count()
            })
            .sum();
        total += codes.len() * patterns.len();
        mismatches += bad;
    }
    checks.push(Check::new(
        format!("ltt/exhaustive/n<={max_exhaustive}"),
        mismatches == 0,
        json!({"cases": total, "mismatches": mismatches}),
    ));
    let bad: Vec<String> = (0..random as u64)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = RngStream::new(seed, i);
            let sigma = &patterns[rng.below_u64(patterns.len() as u64) as usize];
            let n = 3 + rng.below_u64(max_random as u64 - 2) as usize;
            let c = random_code(n, &mut rng).ok()?;
            let tau = decode(&c).ok()?;
            let fast = occ_tree_in_tree(sigma, &c).ok()?;
            let brute = BigUint::from(count_occurrences_u64(&tau, sigma));
            (fast != brute).then(|| format!("{sigma} in {c}: {fast} vs {brute}"))
        })
        .collect();
    checks.push(Check::new(
        format!("ltt/random/n<={max_random}"),
        bad.is_empty(),
        json!({"cases": random, "failures": bad}),
    ));
    Ok(checks)
}

/// `lower <= occ <= upper` for random tree pairs, and the boundary-sum bound
/// `|occ - UU| <= Σ'` for random forest patterns in random trees.
pub fn suite_sandwich(cases: usize, seed: u64) -> Result<Vec<Check>> {
    let sandwich_bad: Vec<String> = (0..cases as u64)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = RngStream::new(seed, i);
            let k = 3 + rng.below_u64(4) as usize;
            let sigma = sample_uniform_tree(k, &mut rng).ok()?;
            let n = k + rng.below_u64(200) as usize;
            let c = random_code(n, &mut rng).ok()?;
            let (lo, hi) = sandwich_bounds(&sigma, &c).ok()?;
            let occ = TreePatternKernel::new(&sigma).ok()?.occ_in_code(&c);
            (lo > occ || occ > hi).then(|| format!("{sigma} in {c}: {lo} <= {occ} <= {hi}"))
        })
        .collect();
    let lk_bad: Vec<String> = (0..cases as u64)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = RngStream::new(seed ^ 0x5eed, i);
            let d = 1 + rng.below_u64(3) as usize;
            let mut parts = Vec::new();
            let mut len = 0;
            for _ in 0..d {
                let k = 1 + rng.below_u64(4) as usize;
                if len + k > 6 {
                    break;
                }
                len += k;
                parts.push(sample_uniform_tree(k, &mut rng).ok()?);
            }
            let sigma = direct_sum(&parts).ok()?;
            let m = 1 + rng.below_u64(12) as usize;
            let xs: Vec<(usize, usize)> = (0..m)
                .map(|_| (1 + rng.below_u64(3) as usize, 1 + rng.below_u64(3) as usize))
                .collect();
            let code = Code::from_pairs(&xs).ok()?;
            let tau = decode(&code).ok()?;
            let kernel = ForestPatternKernel::new(&sigma).ok()?;
            let occ = BigUint::from(count_occurrences_u64(&tau, &sigma));
            let uu = kernel.ustat(&block_lengths(&code).pairs());
            let diff = if occ > uu { &occ - &uu } else { &uu - &occ };
            let bound = kernel.boundary_sum(&xs);
            (diff > bound).then(|| format!("{sigma} in {code}: |{occ} - {uu}| > {bound}"))
        })
        .collect();
    Ok(vec![
        Check::new(
            "sandwich/window-bounds",
            sandwich_bad.is_empty(),
            json!({"cases": cases, "failures": sandwich_bad}),
        ),
        Check::new(
            "sandwich/boundary-sum",
            lk_bad.is_empty(),
            json!({"cases": cases, "failures": lk_bad}),
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        for checks in [
            suite_counts(6).unwrap(),
            suite_te(8).unwrap(),
            suite_table1().unwrap(),
            suite_laga(5).unwrap(),
            suite_bijection(8, 6).unwrap(),
            suite_ltt(7, 50, 15, 1).unwrap(),
            suite_sandwich(50, 1).unwrap(),
        ] {
            for c in checks {
                assert!(c.passed, "{} {}", c.name, c.detail);
            }
        }
    }

    #[test]
    fn table1_has_25_checks() {
        let r = verify_exact(Suite::Table1).unwrap();
        assert!(r.passed);
        assert_eq!(r.checks.len(), 25);
        assert_eq!(r.to_csv().lines().count(), 26);
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::EACH.iter().chain([Suite::All].iter()) {
            assert_eq!(s.to_string().parse::<Suite>().unwrap(), *s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }
}
