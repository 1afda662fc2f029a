//! Exact samplers for tree and forest permutations and for the geometric
//! block model.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_traits::One;

use crate::code::{decode, Code};
use crate::error::{Error, Result};
use crate::exact::forest_counts;
use crate::perm::{direct_sum, Permutation};
use crate::quad::QuadRat;
use crate::rng::RngStream;

/// `X = (L, R)` with independent `Ge(1/2)` coordinates on `{1, 2, …}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeomPair {
    pub l: u64,
    pub r: u64,
}

impl GeomPair {
    /// `h(x) = ℓ + r`.
    pub fn h(&self) -> u64 {
        self.l + self.r
    }
}

/// `P(G = k) = 2^{-k}` by counting fair-bit trials up to the first success.
pub fn sample_geometric(rng: &mut RngStream) -> u64 {
    let mut k = 1;
    while !rng.bit() {
        k += 1;
    }
    k
}

pub fn sample_geom_pair(rng: &mut RngStream) -> GeomPair {
    let l = sample_geometric(rng);
    let r = sample_geometric(rng);
    GeomPair { l, r }
}

/// Uniform code in `L{L,R}^{n-2}R`; `n >= 2`.
pub fn sample_uniform_tree_code(n: usize, rng: &mut RngStream) -> Result<Code> {
    if n < 2 {
        return Err(Error::OutOfRange(format!("codes need n >= 2, got {n}")));
    }
    let bits = std::iter::once(false)
        .chain((0..n - 2).map(|_| rng.bit()))
        .chain(std::iter::once(true));
    Code::from_bits(bits)
}

/// Uniform tree permutation of length `n`; `n = 1` gives the singleton.
pub fn sample_uniform_tree(n: usize, rng: &mut RngStream) -> Result<Permutation> {
    match n {
        0 => Err(Error::OutOfRange("tree permutations need n >= 1".into())),
        1 => Permutation::identity(1),
        _ => decode(&sample_uniform_tree_code(n, rng)?),
    }
}

/// Cumulative law of `|τ̃|`: `P(|τ̃| <= k) = 1 - (2p)^{k+1} / (4(1-2p))`.
pub fn tilde_length_cdf(k: usize) -> QuadRat {
    let p = QuadRat::p();
    let two_p = &QuadRat::from_int(2) * &p;
    let denom = &QuadRat::from_int(4) * &(&QuadRat::one() - &two_p);
    let tail = &two_p.pow(k as i64 + 1).expect("nonnegative power") / &denom;
    &QuadRat::one() - &tail
}

/// Inverse-transform tables for the length of `τ̃`.
struct TildeLengthTable {
    /// `floor(2^64 · P(|τ̃| <= k))` for `k = 1..=len`.
    thresholds: Vec<u64>,
}

/// Table length; the tail mass `P(|τ̃| > N)` beyond it is below `2^-64`.
const TILDE_TABLE_LEN: usize = 170;

fn tilde_table() -> &'static TildeLengthTable {
    static TABLE: OnceLock<TildeLengthTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let thresholds = (1..=TILDE_TABLE_LEN)
            .map(|k| {
                let f = tilde_length_cdf(k).floor_scaled(64);
                u64::try_from(f).expect("cdf below one")
            })
            .collect();
        TildeLengthTable { thresholds }
    })
}

/// Draws `|τ̃|` with `P(|τ̃| = k) = t_k p^k`, exactly.
///
/// A uniform `V ∈ [0,1)` is revealed 64 bits at a time; the answer is the
/// first `k` with `V < P(|τ̃| <= k)`. The first word decides except when it
/// equals a table entry, which happens with probability about `2^-56`.
pub fn sample_tilde_length(rng: &mut RngStream) -> usize {
    let table = &tilde_table().thresholds;
    let u = rng.next_word();
    let k = table.partition_point(|&t| t <= u);
    let tied = k > 0 && table[k - 1] == u;
    if k < table.len() && !tied {
        return k + 1;
    }
    tilde_length_refined(u, rng)
}

fn tilde_length_refined(first: u64, rng: &mut RngStream) -> usize {
    let mut prefix = BigInt::from(first);
    let mut bits = 64u32;
    let mut k = 1usize;
    loop {
        let f = tilde_length_cdf(k).floor_scaled(bits);
        match prefix.cmp(&f) {
            std::cmp::Ordering::Less => return k,
            std::cmp::Ordering::Greater => k += 1,
            std::cmp::Ordering::Equal => {
                prefix = (prefix << 64u32) + BigInt::from(rng.next_word());
                bits += 64;
            }
        }
    }
}

/// Random tree permutation with `P(τ̃ = τ) = p^{|τ|}`.
pub fn sample_tilde_tau(rng: &mut RngStream) -> Permutation {
    let n = sample_tilde_length(rng);
    sample_uniform_tree(n, rng).expect("n >= 1")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForestMethod {
    /// First-block split `f_n = Σ_k t_k f_{n-k}`; never rejects.
    Recursive,
    /// Concatenate `τ̃` until the length reaches `n`, accepting exact hits.
    Renewal,
}

impl FromStr for ForestMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "recursive" => Ok(ForestMethod::Recursive),
            "renewal" => Ok(ForestMethod::Renewal),
            other => Err(Error::Parse(format!("unknown forest method {other:?}"))),
        }
    }
}

impl fmt::Display for ForestMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ForestMethod::Recursive => "recursive",
            ForestMethod::Renewal => "renewal",
        })
    }
}

/// Exact uniform sampler on `F_n` for `n` up to a fixed bound.
#[derive(Debug, Clone)]
pub struct ForestSampler {
    f: Vec<BigUint>,
}

impl ForestSampler {
    pub fn new(max_n: usize) -> Self {
        ForestSampler {
            f: forest_counts(max_n),
        }
    }

    pub fn max_n(&self) -> usize {
        self.f.len() - 1
    }

    fn check(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::OutOfRange("forest permutations need n >= 1".into()));
        }
        if n > self.max_n() {
            return Err(Error::OutOfRange(format!(
                "sampler built for n <= {}, asked for {n}",
                self.max_n()
            )));
        }
        Ok(())
    }

    /// Block lengths of a uniform forest permutation of length `n`.
    pub fn block_lengths(&self, n: usize, rng: &mut RngStream) -> Result<Vec<usize>> {
        self.check(n)?;
        let mut out = Vec::new();
        let mut m = n;
        while m > 0 {
            let x = rng.below(&self.f[m]);
            let mut cum = BigUint::ZERO;
            let mut k = 1;
            loop {
                // t_k f_{m-k}
                let term = if k == 1 {
                    self.f[m - 1].clone()
                } else {
                    &self.f[m - k] << (k - 2)
                };
                cum += term;
                if x < cum {
                    break;
                }
                k += 1;
            }
            out.push(k);
            m -= k;
        }
        Ok(out)
    }

    /// Blocks of a uniform forest permutation; the direct sum is uniform on `F_n`.
    pub fn sample_blocks(&self, n: usize, rng: &mut RngStream) -> Result<Vec<Permutation>> {
        self.block_lengths(n, rng)?
            .into_iter()
            .map(|k| sample_uniform_tree(k, rng))
            .collect()
    }
}

/// Outcome of the renewal construction, with the number of attempts used.
#[derive(Debug, Clone)]
pub struct RenewalForest {
    pub blocks: Vec<Permutation>,
    pub attempts: u64,
}

/// Renewal construction: i.i.d. `τ̃` concatenated until length `>= n`,
/// accepted when the length is exactly `n`.
pub fn sample_forest_renewal(n: usize, rng: &mut RngStream) -> Result<RenewalForest> {
    if n == 0 {
        return Err(Error::OutOfRange("forest permutations need n >= 1".into()));
    }
    let mut attempts = 0;
    loop {
        attempts += 1;
        let mut lengths = Vec::new();
        let mut total = 0;
        while total < n {
            let k = sample_tilde_length(rng);
            lengths.push(k);
            total += k;
        }
        if total == n {
            let blocks = lengths
                .into_iter()
                .map(|k| sample_uniform_tree(k, rng))
                .collect::<Result<Vec<_>>>()?;
            return Ok(RenewalForest { blocks, attempts });
        }
    }
}

pub fn sample_uniform_forest(n: usize, rng: &mut RngStream, method: ForestMethod) -> Result<Permutation> {
    let blocks = match method {
        ForestMethod::Recursive => ForestSampler::new(n).sample_blocks(n, rng)?,
        ForestMethod::Renewal => sample_forest_renewal(n, rng)?.blocks,
    };
    direct_sum(&blocks)
}

/// Smallest `N` with `h_1 + … + h_N >= x`.
pub fn renewal_stop<I>(h_values: I, x: u64) -> Result<usize>
where
    I: IntoIterator<Item = u64>,
{
    if x == 0 {
        return Err(Error::OutOfRange("renewal target must be >= 1".into()));
    }
    let mut sum = 0u64;
    for (i, h) in h_values.into_iter().enumerate() {
        sum = sum.saturating_add(h);
        if sum >= x {
            return Ok(i + 1);
        }
    }
    Err(Error::StreamExhausted(x))
}

/// Tree code from geometric block pairs, accepted when `Σ h(X_i) = n` exactly.
pub fn sample_tree_code_via_renewal(n: usize, rng: &mut RngStream) -> Result<Code> {
    if n < 2 {
        return Err(Error::OutOfRange(format!("codes need n >= 2, got {n}")));
    }
    loop {
        let mut pairs = Vec::new();
        let mut total = 0usize;
        while total < n {
            let x = sample_geom_pair(rng);
            total += x.h() as usize;
            pairs.push((x.l as usize, x.r as usize));
        }
        if total == n {
            return Code::from_pairs(&pairs);
        }
    }
}

pub fn sample_tree_via_renewal(n: usize, rng: &mut RngStream) -> Result<Permutation> {
    decode(&sample_tree_code_via_renewal(n, rng)?)
}

/// `P(|τ̃| = k) = t_k p^k` as an exact value.
pub fn tilde_length_mass(k: usize) -> QuadRat {
    assert!(k >= 1);
    let t = if k == 1 {
        QuadRat::one()
    } else {
        QuadRat::from_rational(num_rational::BigRational::from_integer(BigInt::one() << (k - 2)))
    };
    &t * &QuadRat::p().pow(k as i64).expect("power")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::encode;
    use crate::perm::{all_permutations, is_forest_permutation, is_tree_permutation, ForestTest};
    use crate::stats::{chi_square_gof, chi_square_two_sample};
    use std::collections::HashMap;

    fn index_of(set: &[Permutation]) -> HashMap<Permutation, usize> {
        set.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect()
    }

    fn trees(n: usize) -> Vec<Permutation> {
        all_permutations(n).into_iter().filter(is_tree_permutation).collect()
    }

    fn forests(n: usize) -> Vec<Permutation> {
        all_permutations(n)
            .into_iter()
            .filter(|p| is_forest_permutation(p, ForestTest::Avoidance))
            .collect()
    }

    fn histogram(set: &[Permutation], draws: usize, mut f: impl FnMut(u64) -> Permutation) -> Vec<u64> {
        let idx = index_of(set);
        let mut counts = vec![0u64; set.len()];
        for t in 0..draws {
            counts[idx[&f(t as u64)]] += 1;
        }
        counts
    }

    const P_MIN: f64 = 1e-3;

    #[test]
    fn tree_sampler_small_cases() {
        let mut rng = RngStream::new(1, 0);
        assert_eq!(sample_uniform_tree(2, &mut rng).unwrap(), Permutation::parse("21").unwrap());
        assert_eq!(sample_uniform_tree(1, &mut rng).unwrap().len(), 1);
        assert!(sample_uniform_tree(0, &mut rng).is_err());
        assert_eq!(sample_tree_via_renewal(2, &mut rng).unwrap(), Permutation::parse("21").unwrap());
        let a = sample_uniform_tree(40, &mut RngStream::new(9, 4)).unwrap();
        let b = sample_uniform_tree(40, &mut RngStream::new(9, 4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tree_samplers_uniform() {
        for n in [4usize, 5] {
            let set = trees(n);
            let probs = vec![1.0 / set.len() as f64; set.len()];
            let direct = histogram(&set, 20_000, |t| sample_uniform_tree(n, &mut RngStream::new(11, t)).unwrap());
            let renewal = histogram(&set, 20_000, |t| sample_tree_via_renewal(n, &mut RngStream::new(12, t)).unwrap());
            assert!(chi_square_gof(&direct, &probs).unwrap().p_value > P_MIN);
            assert!(chi_square_gof(&renewal, &probs).unwrap().p_value > P_MIN);
            assert!(chi_square_two_sample(&direct, &renewal).unwrap().p_value > P_MIN);
        }
    }

    #[test]
    fn forest_samplers_uniform() {
        let mut rng = RngStream::new(0, 0);
        assert_eq!(sample_uniform_forest(1, &mut rng, ForestMethod::Recursive).unwrap().len(), 1);
        assert_eq!(sample_uniform_forest(1, &mut rng, ForestMethod::Renewal).unwrap().len(), 1);
        for n in [3usize, 4] {
            let set = forests(n);
            let probs = vec![1.0 / set.len() as f64; set.len()];
            let sampler = ForestSampler::new(n);
            let rec = histogram(&set, 20_000, |t| {
                direct_sum(&sampler.sample_blocks(n, &mut RngStream::new(21, t)).unwrap()).unwrap()
            });
            let ren = histogram(&set, 20_000, |t| {
                sample_uniform_forest(n, &mut RngStream::new(22, t), ForestMethod::Renewal).unwrap()
            });
            assert!(chi_square_gof(&rec, &probs).unwrap().p_value > P_MIN);
            assert!(chi_square_gof(&ren, &probs).unwrap().p_value > P_MIN);
            assert!(chi_square_two_sample(&rec, &ren).unwrap().p_value > P_MIN);
        }
    }

    #[test]
    fn cdf_matches_mass_sum() {
        let mut acc = QuadRat::zero();
        for k in 1..=25 {
            acc = &acc + &tilde_length_mass(k);
            assert_eq!(acc, tilde_length_cdf(k), "k={k}");
        }
        assert!((tilde_length_mass(1).to_f64() - 0.381_966).abs() < 1e-6);
    }

    #[test]
    fn table_tail_is_below_2_pow_64() {
        let tail = &QuadRat::one() - &tilde_length_cdf(TILDE_TABLE_LEN);
        assert_eq!(tail.floor_scaled(64), BigInt::from(0));
        let table = &tilde_table().thresholds;
        assert!(table.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn refined_path_agrees_with_table() {
        let table = &tilde_table().thresholds;
        for (k, &t) in table.iter().enumerate().take(40) {
            // just below and above a threshold the answer is decided by the first word
            assert_eq!(tilde_length_refined(t - 1, &mut RngStream::new(0, 0)), k + 1);
            assert_eq!(tilde_length_refined(t + 1, &mut RngStream::new(0, 0)), k + 2);
            // a tie resolves to k+1 or k+2 depending on further bits
            let r = tilde_length_refined(t, &mut RngStream::new(0, k as u64));
            assert!(r == k + 1 || r == k + 2);
        }
    }

    #[test]
    fn tilde_length_law() {
        let mut rng = RngStream::new(3, 0);
        let draws = 100_000;
        let lens: Vec<usize> = (0..draws).map(|_| sample_tilde_length(&mut rng)).collect();
        let cells = 10;
        let mut counts = vec![0u64; cells + 1];
        for &k in &lens {
            counts[(k - 1).min(cells)] += 1;
        }
        let mut probs: Vec<f64> = (1..=cells).map(|k| tilde_length_mass(k).to_f64()).collect();
        probs.push(1.0 - probs.iter().sum::<f64>());
        assert!(chi_square_gof(&counts, &probs).unwrap().p_value > P_MIN);
        let mean = lens.iter().sum::<usize>() as f64 / draws as f64;
        let var = lens.iter().map(|&k| (k as f64 - mean).powi(2)).sum::<f64>() / draws as f64;
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((mean / (golden + 2.0) - 1.0).abs() < 0.01, "mean {mean}");
        assert!((var / (6.0 * golden + 3.0) - 1.0).abs() < 0.03, "var {var}");
    }

    #[test]
    fn tilde_tau_is_uniform_given_length() {
        let mut rng = RngStream::new(4, 0);
        let set = trees(4);
        let idx = index_of(&set);
        let mut counts = vec![0u64; set.len()];
        let mut seen = 0;
        while seen < 8_000 {
            let t = sample_tilde_tau(&mut rng);
            if t.len() == 4 {
                counts[idx[&t]] += 1;
                seen += 1;
            }
            assert!(t.len() == 1 || encode(&t).is_ok());
        }
        assert!(chi_square_gof(&counts, &[0.25; 4]).unwrap().p_value > P_MIN);
    }

    #[test]
    fn geometric_pairs() {
        let mut rng = RngStream::new(5, 0);
        let draws = 50_000;
        let xs: Vec<GeomPair> = (0..draws).map(|_| sample_geom_pair(&mut rng)).collect();
        let ones = xs.iter().filter(|x| x.l == 1).count() as f64 / draws as f64;
        let mean_l = xs.iter().map(|x| x.l).sum::<u64>() as f64 / draws as f64;
        let mean_h = xs.iter().map(GeomPair::h).sum::<u64>() as f64 / draws as f64;
        assert!((ones - 0.5).abs() < 0.01);
        assert!((mean_l - 2.0).abs() < 0.03);
        assert!((mean_h - 4.0).abs() < 0.05);
        assert!(xs.iter().all(|x| x.l >= 1 && x.r >= 1));
    }

    #[test]
    fn renewal_stop_examples() {
        assert_eq!(renewal_stop([3, 7, 9], 5).unwrap(), 2);
        assert_eq!(renewal_stop([3, 7, 9], 3).unwrap(), 1);
        assert_eq!(renewal_stop(std::iter::repeat(1), 17).unwrap(), 17);
        assert_eq!(renewal_stop([1, 1], 5), Err(Error::StreamExhausted(5)));
        assert!(renewal_stop([1], 0).is_err());
    }

    #[test]
    fn renewal_acceptance_rate() {
        let n = 500;
        let trials = 40_000;
        let mut attempts = 0;
        for t in 0..trials {
            attempts += sample_forest_renewal(n, &mut RngStream::new(6, t)).unwrap().attempts;
        }
        let rate = trials as f64 / attempts as f64;
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((rate * (golden + 2.0) - 1.0).abs() < 0.02, "rate {rate}");
    }

    #[test]
    fn forest_method_parse() {
        assert_eq!("renewal".parse::<ForestMethod>().unwrap(), ForestMethod::Renewal);
        assert!("other".parse::<ForestMethod>().is_err());
        assert_eq!(ForestMethod::Recursive.to_string(), "recursive");
    }
}
