//! Replicated runs of the isolation procedure and the statistics used to
//! compare them with exact laws and limit laws.
//!
//! # Random streams
//!
//! Every experiment gets a ChaCha8 key: the 32 bytes produced by a ChaCha8
//! generator seeded with `seed_from_u64(seed)` on stream
//! `n << 20 | (l mod 2^18) << 2 | rule`. Replicate `i` then runs on that key
//! with stream number `i`. Replicates never share a stream, so results do
//! not depend on scheduling, and the values are gathered in replicate order
//! before any reduction.
//!
//! # Samplers
//!
//! [`Sampler::Direct`] grows an explicit tree and cuts it. [`Sampler::Splitting`]
//! uses the fact that every kept part of a uniform random recursive tree,
//! relabelled in order, is again uniform and independent of the others, so
//! only part sizes and the ranks of the targets inside them need tracking.
//! In a part of size `s` the cut-off subtree has size `m` with
//! `P(m = j) = s / ((s-1) j (j+1))`, and its label set is `A \ {min A}` for
//! a uniform `(m+1)`-subset `A` of `1..=s`. Both samplers produce the same law.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::asymptotics::{beta_cdf, beta_moment, normalize_r, scale_ly, stable_cf, LimitTarget};
use crate::cutter::{select_labels, CutRecord, Isolator, Rule};
use crate::error::{invalid, Error, Result};
use crate::numeric::Weight;
use crate::tree::grow_random;

/// Replicate values are kept in memory, eight bytes each.
pub const MAX_REPLICATES: usize = 1 << 28;

/// Default characteristic-function arguments.
pub const DEFAULT_TS: [f64; 8] = [-2.0, -1.0, -0.5, -0.25, 0.25, 0.5, 1.0, 2.0];

/// Slack allowed between consecutive grid points in a trend verdict.
pub const TREND_SLACK: f64 = 1.1;

/// Above this many targets the splitting sampler's per-cut rank bookkeeping
/// costs more than cutting an explicit tree.
const SPLITTING_MAX_TARGETS: usize = 32;

const CHUNK: usize = 1 << 14;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    /// Splitting when possible, direct for traces or many targets.
    #[default]
    Auto,
    Direct,
    Splitting,
}

impl Sampler {
    pub fn as_str(self) -> &'static str {
        match self {
            Sampler::Auto => "auto",
            Sampler::Direct => "direct",
            Sampler::Splitting => "splitting",
        }
    }
}

impl fmt::Display for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sampler {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Sampler::Auto),
            "direct" => Ok(Sampler::Direct),
            "splitting" => Ok(Sampler::Splitting),
            _ => Err(invalid!("unknown sampler {s:?} (expected auto, direct or splitting)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub rule: Rule,
    pub n: usize,
    pub ell: usize,
    pub replicates: usize,
    pub seed: u64,
    /// Thread count; `None` uses the global pool. Never affects results.
    pub workers: Option<usize>,
    pub sampler: Sampler,
    /// Stop between chunks once exceeded and flag the summary incomplete.
    #[serde(skip)]
    pub time_budget: Option<Duration>,
}

impl ExperimentConfig {
    pub fn new(rule: Rule, n: usize, ell: usize, replicates: usize, seed: u64) -> Self {
        ExperimentConfig { rule, n, ell, replicates, seed, workers: None, sampler: Sampler::Auto, time_budget: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ell == 0 || self.ell > self.n {
            return Err(invalid!("need 1 <= l <= n, got l = {}, n = {}", self.ell, self.n));
        }
        if self.n > u32::MAX as usize {
            return Err(invalid!("n = {} exceeds the u32 label range", self.n));
        }
        if self.replicates == 0 {
            return Err(invalid!("need at least one replicate"));
        }
        if self.replicates > MAX_REPLICATES {
            return Err(Error::BudgetExceeded(format!(
                "{} replicates exceed the in-memory cap of {MAX_REPLICATES}",
                self.replicates
            )));
        }
        if self.workers == Some(0) {
            return Err(invalid!("worker count must be positive"));
        }
        Ok(())
    }

    /// Sampler actually used for counts-only runs.
    pub fn resolved_sampler(&self) -> Sampler {
        match self.sampler {
            Sampler::Auto if self.ell > SPLITTING_MAX_TARGETS => Sampler::Direct,
            Sampler::Auto => Sampler::Splitting,
            s => s,
        }
    }

    /// ChaCha8 key of this experiment.
    pub fn key(&self) -> [u8; 32] {
        let rule = match self.rule {
            Rule::First => 0u64,
            Rule::Last => 1,
            Rule::Random => 2,
        };
        let mut g = ChaCha8Rng::seed_from_u64(self.seed);
        g.set_stream(((self.n as u64) << 20) | ((self.ell as u64 & 0x3_ffff) << 2) | rule);
        let mut key = [0u8; 32];
        g.fill_bytes(&mut key);
        key
    }
}

/// Generator of replicate `index` under `key`.
pub fn replicate_rng(key: [u8; 32], index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// One replicate with an explicit tree; the only path that can record a
/// trace.
pub fn run_replicate_direct(cfg: &ExperimentConfig, index: u64, want_trace: bool) -> Result<CutRecord> {
    cfg.validate()?;
    let mut rng = replicate_rng(cfg.key(), index);
    let mut iso = Isolator::default();
    direct_once(cfg, &mut rng, &mut iso, want_trace)
}

fn direct_once(
    cfg: &ExperimentConfig,
    rng: &mut ChaCha8Rng,
    iso: &mut Isolator,
    want_trace: bool,
) -> Result<CutRecord> {
    let t = grow_random(cfg.n, rng)?;
    let s = select_labels(cfg.rule, cfg.n, cfg.ell, rng)?;
    iso.run(&t, &s, rng, want_trace)
}

/// Size of the subtree cut off by a uniform edge of a uniform random
/// recursive tree of size `s >= 2`.
///
/// `P(m >= j) = (s - j) / ((s - 1) j)`, so `m = floor(s / (1 + V (s - 1)))`
/// for `V = (U + 1) / 2^53` uniform on `(0, 1]`; the floor is settled with
/// exact integer comparisons.
pub fn sample_removed_size<R: Rng + ?Sized>(s: u64, rng: &mut R) -> u64 {
    debug_assert!(s >= 2);
    if s == 2 {
        return 1;
    }
    let v = (rng.next_u64() >> 11) + 1;
    let scale = 1u128 << 53;
    // m >= j  <=>  j (V (s - 1) + 1) <= s
    let lhs = v as u128 * (s as u128 - 1) + scale;
    let fits = |j: u64| j as u128 * lhs <= s as u128 * scale;
    let guess = (s as f64 / (1.0 + (v as f64 / scale as f64) * (s - 1) as f64)) as u64;
    let mut j = guess.clamp(1, s - 1);
    while !fits(j) {
        j -= 1;
    }
    while j + 1 < s && fits(j + 1) {
        j += 1;
    }
    j
}

/// Uniform `k`-subset `A` of `1..=s`, stored ascending in `out` either as
/// `A` itself or, when `k > s/2`, as its complement; returns whether the
/// complement was stored. Costs `O(min(k, s-k))` expected.
fn sample_subset<R: Rng + ?Sized>(s: u64, k: u64, rng: &mut R, out: &mut Vec<u64>) -> bool {
    let complement = 2 * k > s;
    let want = if complement { s - k } else { k } as usize;
    out.clear();
    if want <= 64 {
        while out.len() < want {
            let x = rng.random_range(1..=s);
            if !out.contains(&x) {
                out.push(x);
            }
        }
        out.sort_unstable();
    } else {
        while out.len() < want {
            let missing = want - out.len();
            out.extend((0..missing).map(|_| rng.random_range(1..=s)));
            out.sort_unstable();
            out.dedup();
        }
    }
    complement
}

type Ranks = SmallVec<[u32; 4]>;

/// Buffers for the splitting sampler.
#[derive(Debug, Default)]
pub struct Splitter {
    stack: Vec<(u64, Ranks)>,
    counts: Vec<(u64, u64)>,
    subset: Vec<u64>,
}

impl Splitter {
    /// Cuts needed to isolate the targets of ranks `targets` (ascending,
    /// 1-based) in a uniform random recursive tree of size `n`.
    pub fn run<R: Rng + ?Sized>(&mut self, n: u64, targets: &[u32], rng: &mut R) -> u64 {
        if targets == [1] {
            return root_only(n, rng);
        }
        self.stack.clear();
        self.stack.push((n, targets.iter().copied().collect()));
        let mut cuts = 0u64;
        while let Some((s, ranks)) = self.stack.pop() {
            if s < 2 {
                continue;
            }
            cuts += 1;
            let m = sample_removed_size(s, rng);
            let (sub, rest) = self.split(s, m, &ranks, rng);
            if !rest.is_empty() {
                self.stack.push((s - m, rest));
            }
            if !sub.is_empty() {
                self.stack.push((m, sub));
            }
        }
        cuts
    }

    /// Cuts needed for `k` targets forming a uniform `k`-subset of `1..=n`.
    ///
    /// The cut-off part is independent of the targets, so the targets stay
    /// a uniform subset of each kept part and only their number is tracked.
    pub fn run_uniform<R: Rng + ?Sized>(&mut self, n: u64, k: u64, rng: &mut R) -> u64 {
        self.counts.clear();
        self.counts.push((n, k));
        let mut cuts = 0u64;
        while let Some((s, k)) = self.counts.pop() {
            if s < 2 {
                continue;
            }
            cuts += 1;
            let m = sample_removed_size(s, rng);
            // targets among the m cut-off labels, drawn one target at a time
            let mut j = 0;
            for i in 0..k {
                if rng.random_range(0..s - i) < m - j {
                    j += 1;
                }
            }
            if j < k {
                self.counts.push((s - m, k - j));
            }
            if j > 0 {
                self.counts.push((m, j));
            }
        }
        cuts
    }

    /// Targets of ranks `ranks` after a cut removing `m` of `s` labels:
    /// those cut off and those kept, with their new ranks.
    ///
    /// Draws the uniform `(m+1)`-subset `A` only where the targets need it:
    /// label by label below the highest target or above the lowest one,
    /// whichever window is shorter, or as a whole set when that is cheaper.
    fn split<R: Rng + ?Sized>(&mut self, s: u64, m: u64, ranks: &[u32], rng: &mut R) -> (Ranks, Ranks) {
        let d = m + 1;
        let lo = ranks[0] as u64;
        let hi = *ranks.last().expect("nonempty") as u64;
        let whole = 4 * d.min(s - d);
        let how = if hi <= s - lo + 1 && hi <= whole {
            Draw::Bottom
        } else if s - lo < whole {
            Draw::Top
        } else {
            Draw::Whole
        };
        self.split_by(how, s, m, ranks, rng)
    }

    fn split_by<R: Rng + ?Sized>(&mut self, how: Draw, s: u64, m: u64, ranks: &[u32], rng: &mut R) -> (Ranks, Ranks) {
        let d = m + 1;
        let (lo, hi) = (ranks[0] as u64, *ranks.last().expect("nonempty") as u64);
        let mut sub = Ranks::new();
        let mut rest = Ranks::new();
        let mut place = |t: u64, below: u64, in_a: bool| match split_rank(t, below, in_a) {
            Side::Sub(r) => sub.push(r as u32),
            Side::Rest(r) => rest.push(r as u32),
        };
        if how == Draw::Bottom {
            let mut c = 0;
            let mut next = 0;
            for i in 1..=hi {
                let in_a = c < d && rng.random_range(0..s - i + 1) < d - c;
                if i == ranks[next] as u64 {
                    place(i, c, in_a);
                    next += 1;
                }
                c += in_a as u64;
            }
        } else if how == Draw::Top {
            let mut above = 0;
            let mut found: SmallVec<[(u64, u64, bool); 4]> = SmallVec::new();
            let mut next = ranks.len();
            for i in (lo..=s).rev() {
                let in_a = above < d && rng.random_range(0..i) < d - above;
                if next > 0 && i == ranks[next - 1] as u64 {
                    found.push((i, d - above - in_a as u64, in_a));
                    next -= 1;
                }
                above += in_a as u64;
            }
            for &(t, below, in_a) in found.iter().rev() {
                place(t, below, in_a);
            }
        } else {
            let comp = sample_subset(s, d, rng, &mut self.subset);
            let mut p = 0;
            for &t in ranks {
                let (below, in_a) = locate(&self.subset, comp, &mut p, t as u64);
                place(t as u64, below, in_a);
            }
        }
        (sub, rest)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Draw {
    Bottom,
    Top,
    Whole,
}

/// Classic root isolation: the root always stays on the root side.
fn root_only<R: Rng + ?Sized>(mut s: u64, rng: &mut R) -> u64 {
    let mut cuts = 0;
    while s >= 2 {
        s -= sample_removed_size(s, rng);
        cuts += 1;
    }
    cuts
}

/// Number of elements of `A` below `t` and whether `t` is in `A`, where
/// the sorted `stored` is `A` or its complement; `p` carries the scan
/// position across ascending calls.
fn locate(stored: &[u64], complement: bool, p: &mut usize, t: u64) -> (u64, bool) {
    while *p < stored.len() && stored[*p] < t {
        *p += 1;
    }
    let hit = *p < stored.len() && stored[*p] == t;
    if complement {
        (t - 1 - *p as u64, !hit)
    } else {
        (*p as u64, hit)
    }
}

enum Side {
    Sub(u64),
    Rest(u64),
}

/// New rank of label `t` when the cut-off part is `A \ {min A}`, given the
/// number of elements of `A` below `t` and whether `t` is in `A`.
fn split_rank(t: u64, a_below: u64, in_a: bool) -> Side {
    if in_a && a_below > 0 {
        Side::Sub(a_below)
    } else {
        Side::Rest(t - a_below.saturating_sub(1))
    }
}

fn target_ranks<R: Rng + ?Sized>(cfg: &ExperimentConfig, rng: &mut R) -> Result<Ranks> {
    Ok(select_labels(cfg.rule, cfg.n, cfg.ell, rng)?.labels().iter().copied().collect())
}

/// Cut counts of replicates `range`, in replicate order.
fn run_range(cfg: &ExperimentConfig, key: [u8; 32], range: std::ops::Range<usize>) -> Result<Vec<u64>> {
    match cfg.resolved_sampler() {
        Sampler::Splitting => range
            .into_par_iter()
            .map_init(Splitter::default, |sp, i| {
                let mut rng = replicate_rng(key, i as u64);
                if cfg.rule == Rule::Random {
                    return Ok(sp.run_uniform(cfg.n as u64, cfg.ell as u64, &mut rng));
                }
                let targets = target_ranks(cfg, &mut rng)?;
                Ok(sp.run(cfg.n as u64, &targets, &mut rng))
            })
            .collect(),
        _ => range
            .into_par_iter()
            .map_init(Isolator::default, |iso, i| {
                let mut rng = replicate_rng(key, i as u64);
                Ok(direct_once(cfg, &mut rng, iso, false)?.cuts)
            })
            .collect(),
    }
}

/// Compensated (Neumaier) running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Raw moments `1..=4`, summed in slice order.
pub fn raw_moments(values: &[f64]) -> [f64; 4] {
    let mut acc = [CompensatedSum::default(); 4];
    for &x in values {
        let mut p = 1.0;
        for a in acc.iter_mut() {
            p *= x;
            a.add(p);
        }
    }
    let m = values.len().max(1) as f64;
    acc.map(|a| a.value() / m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub config: ExperimentConfig,
    pub sampler: Sampler,
    /// Replicates actually run; smaller than requested only when the time
    /// budget ran out.
    pub replicates: usize,
    pub complete: bool,
    /// Cut counts in replicate order.
    pub cuts: Vec<u64>,
    /// Raw moments `1..=4` of the cut counts.
    pub raw_moments: [f64; 4],
}

/// Statistics of the normalized sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledStats {
    pub moments: [f64; 4],
    pub cdf_grid: Vec<f64>,
    pub cdf: Vec<f64>,
    pub ts: Vec<f64>,
    /// `[re, im]` per entry of `ts`.
    pub cf: Vec<[f64; 2]>,
    pub sorted: Vec<f64>,
}

impl SampleSummary {
    pub fn mean(&self) -> f64 {
        self.raw_moments[0]
    }

    pub fn variance(&self) -> f64 {
        self.raw_moments[1] - self.raw_moments[0] * self.raw_moments[0]
    }

    /// `counts[m]` = number of replicates with `m` cuts.
    pub fn pmf_counts(&self) -> Vec<u64> {
        let max = self.cuts.iter().copied().max().unwrap_or(0) as usize;
        let mut counts = vec![0u64; max + 1];
        for &c in &self.cuts {
            counts[c as usize] += 1;
        }
        counts
    }

    /// The sample under the rule's normalization: centred and scaled for
    /// the first labels, `(log n / n) X` otherwise.
    pub fn normalized(&self) -> Result<Vec<f64>> {
        let cfg = &self.config;
        match cfg.rule {
            Rule::First => self.cuts.iter().map(|&c| normalize_r(c as f64, cfg.n, cfg.ell)).collect(),
            Rule::Last | Rule::Random => {
                let lo = scale_ly((cfg.ell - 1) as f64, cfg.n);
                let hi = scale_ly((cfg.n - 1) as f64, cfg.n);
                let xs: Vec<f64> = self.cuts.iter().map(|&c| scale_ly(c as f64, cfg.n)).collect();
                assert!(
                    xs.iter().all(|&x| x >= lo - 1e-12 && x <= hi + 1e-12),
                    "normalized sample left [(l-1) log n / n, (n-1) log n / n]"
                );
                Ok(xs)
            }
        }
    }

    pub fn scaled_stats(&self, ts: &[f64]) -> Result<ScaledStats> {
        let xs = self.normalized()?;
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        let cdf_grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let m = sorted.len() as f64;
        let cdf = cdf_grid.iter().map(|&g| sorted.partition_point(|&x| x <= g) as f64 / m).collect();
        let cf = empirical_cf(&xs, ts)?.into_iter().map(|c| [c.re, c.im]).collect();
        Ok(ScaledStats { moments: raw_moments(&xs), cdf_grid, cdf, ts: ts.to_vec(), cf, sorted })
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<SampleSummary> {
    cfg.validate()?;
    let work = || -> Result<(Vec<u64>, bool)> {
        let key = cfg.key();
        let start = Instant::now();
        let mut cuts = Vec::with_capacity(cfg.replicates);
        let mut lo = 0;
        while lo < cfg.replicates {
            if cfg.time_budget.is_some_and(|b| start.elapsed() > b) {
                return Ok((cuts, false));
            }
            let hi = (lo + CHUNK).min(cfg.replicates);
            cuts.extend(run_range(cfg, key, lo..hi)?);
            lo = hi;
        }
        Ok((cuts, true))
    };
    let (cuts, complete) = match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| invalid!("cannot start {w} workers: {e}"))?
            .install(work)?,
        None => work()?,
    };
    let as_f64: Vec<f64> = cuts.iter().map(|&c| c as f64).collect();
    Ok(SampleSummary {
        config: cfg.clone(),
        sampler: cfg.resolved_sampler(),
        replicates: cuts.len(),
        complete,
        raw_moments: raw_moments(&as_f64),
        cuts,
    })
}

/// `sup_x |F_emp(x) - x^l|` over a sorted sample.
pub fn ks_statistic(sorted: &[f64], target: LimitTarget) -> Result<f64> {
    let ell = match target {
        LimitTarget::Beta { ell } => ell,
        LimitTarget::Stable => return Err(invalid!("KS distance is only defined here against beta targets")),
    };
    if sorted.is_empty() {
        return Err(invalid!("KS distance of an empty sample"));
    }
    if sorted.windows(2).any(|w| w[0] > w[1]) {
        return Err(invalid!("KS distance needs a sorted sample"));
    }
    let m = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = beta_cdf(ell, x);
        d = d.max((i + 1) as f64 / m - f).max(f - i as f64 / m);
    }
    Ok(d)
}

/// `(1/m) Σ_j exp(i t x_j)` for each `t`.
pub fn empirical_cf(sample: &[f64], ts: &[f64]) -> Result<Vec<Complex64>> {
    if sample.is_empty() {
        return Err(invalid!("characteristic function of an empty sample"));
    }
    let m = sample.len() as f64;
    Ok(ts
        .iter()
        .map(|&t| {
            let (mut re, mut im) = (CompensatedSum::default(), CompensatedSum::default());
            for &x in sample {
                let (s, c) = (t * x).sin_cos();
                re.add(c);
                im.add(s);
            }
            Complex64::new(re.value() / m, im.value() / m)
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Pearson test of `counts` against `probs` (same indexing). Adjacent
/// cells are pooled left to right until each expects at least 5.
pub fn chi_square<T: Weight>(counts: &[u64], probs: &[T]) -> Result<ChiSquareTest> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(invalid!("chi-square test of an empty sample"));
    }
    let len = counts.len().max(probs.len());
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    for i in 0..len {
        let c = counts.get(i).copied().unwrap_or(0) as f64;
        let p = probs.get(i).map(Weight::to_f64).unwrap_or(0.0);
        if p == 0.0 && c > 0.0 {
            // an impossible value was observed
            return Ok(ChiSquareTest { statistic: f64::INFINITY, df: 0, p_value: 0.0 });
        }
        obs += c;
        exp += p * total as f64;
        if exp >= 5.0 {
            cells.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    if exp > 0.0 || obs > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += obs;
                last.1 += exp;
            }
            None => cells.push((obs, exp)),
        }
    }
    let statistic: f64 = cells.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let df = cells.len().saturating_sub(1);
    let p_value = if df == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(df as f64).map_err(|e| invalid!("chi-square law: {e}"))?;
        1.0 - dist.cdf(statistic)
    };
    Ok(ChiSquareTest { statistic, df, p_value })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stat {
    Ks,
    Moments,
    Cf,
}

impl FromStr for Stat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ks" => Ok(Stat::Ks),
            "moments" => Ok(Stat::Moments),
            "cf" => Ok(Stat::Cf),
            _ => Err(invalid!("unknown statistic {s:?} (expected ks, moments or cf)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub n: usize,
    pub replicates: usize,
    pub ks: Option<f64>,
    /// `(s, |E(X^s) - l/(l+s)| / (l/(l+s)))` on the normalized sample.
    pub moment_rel_err: Vec<(usize, f64)>,
    /// `(t, |φ_emp(t) - φ(t)|)`.
    pub cf_err: Vec<(f64, f64)>,
}

/// One distance followed along the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub statistic: String,
    pub values: Vec<f64>,
    /// Every step strictly decreases.
    pub strict: bool,
    /// Every step stays below the slack factor times its predecessor.
    pub within_slack: bool,
}

impl Trend {
    fn new(statistic: String, values: Vec<f64>, slack: f64) -> Self {
        let strict = values.windows(2).all(|w| w[1] < w[0]);
        let within_slack = values.windows(2).all(|w| w[1] <= slack * w[0]);
        Trend { statistic, values, strict, within_slack }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitFitReport {
    pub rule: Rule,
    pub ell: usize,
    pub target: LimitTarget,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub slack: f64,
    pub points: Vec<GridPoint>,
    pub trends: Vec<Trend>,
}

impl LimitFitReport {
    pub fn passed(&self) -> bool {
        self.trends.iter().all(|t| t.within_slack)
    }
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub rule: Rule,
    pub ell: usize,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub stats: Vec<Stat>,
    pub ts: Vec<f64>,
    pub moment_orders: Vec<usize>,
    pub workers: Option<usize>,
    pub sampler: Sampler,
}

impl SweepConfig {
    pub fn new(rule: Rule, ell: usize, n_grid: Vec<usize>, replicates: usize, seed: u64) -> Self {
        let stats = match rule {
            Rule::First => vec![Stat::Cf],
            Rule::Last | Rule::Random => vec![Stat::Ks, Stat::Moments],
        };
        SweepConfig {
            rule,
            ell,
            n_grid,
            replicates,
            seed,
            stats,
            ts: DEFAULT_TS.to_vec(),
            moment_orders: vec![1, 2],
            workers: None,
            sampler: Sampler::Auto,
        }
    }
}

/// Runs one experiment per grid point and follows every requested distance
/// to its target along the grid.
pub fn convergence_sweep(sc: &SweepConfig) -> Result<LimitFitReport> {
    if sc.n_grid.is_empty() || sc.n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid!("the n grid must be non-empty and strictly increasing"));
    }
    let target = LimitTarget::for_rule(sc.rule, sc.ell);
    if target == LimitTarget::Stable && sc.stats.iter().any(|s| *s != Stat::Cf) {
        return Err(invalid!("the first-labels limit is only compared through its characteristic function"));
    }
    let mut points = Vec::with_capacity(sc.n_grid.len());
    for &n in &sc.n_grid {
        let mut cfg = ExperimentConfig::new(sc.rule, n, sc.ell, sc.replicates, sc.seed);
        cfg.workers = sc.workers;
        cfg.sampler = sc.sampler;
        let summary = run_experiment(&cfg)?;
        let xs = summary.normalized()?;
        let mut point =
            GridPoint { n, replicates: summary.replicates, ks: None, moment_rel_err: Vec::new(), cf_err: Vec::new() };
        if sc.stats.contains(&Stat::Ks) {
            let mut sorted = xs.clone();
            sorted.sort_by(f64::total_cmp);
            point.ks = Some(ks_statistic(&sorted, target)?);
        }
        if sc.stats.contains(&Stat::Moments) {
            let mut acc = vec![CompensatedSum::default(); sc.moment_orders.len()];
            for &x in &xs {
                for (a, &s) in acc.iter_mut().zip(&sc.moment_orders) {
                    a.add(x.powi(s as i32));
                }
            }
            for (a, &s) in acc.iter().zip(&sc.moment_orders) {
                let exact = beta_moment(sc.ell, s).to_f64();
                let emp = a.value() / xs.len() as f64;
                point.moment_rel_err.push((s, (emp - exact).abs() / exact));
            }
        }
        if sc.stats.contains(&Stat::Cf) {
            let cf = empirical_cf(&xs, &sc.ts)?;
            let reference = |t: f64| match target {
                LimitTarget::Stable => stable_cf(t),
                LimitTarget::Beta { ell } => beta_cf(ell, t),
            };
            point.cf_err = sc.ts.iter().zip(cf).map(|(&t, c)| (t, (c - reference(t)).norm())).collect();
        }
        points.push(point);
    }
    let mut trends = Vec::new();
    if sc.stats.contains(&Stat::Ks) {
        trends.push(Trend::new("ks".into(), points.iter().map(|p| p.ks.unwrap_or(f64::NAN)).collect(), TREND_SLACK));
    }
    if sc.stats.contains(&Stat::Moments) {
        for (i, s) in sc.moment_orders.iter().enumerate() {
            let values = points.iter().map(|p| p.moment_rel_err[i].1).collect();
            trends.push(Trend::new(format!("moment{s}"), values, TREND_SLACK));
        }
    }
    if sc.stats.contains(&Stat::Cf) {
        for (i, t) in sc.ts.iter().enumerate() {
            let values = points.iter().map(|p| p.cf_err[i].1).collect();
            trends.push(Trend::new(format!("cf({t})"), values, TREND_SLACK));
        }
    }
    Ok(LimitFitReport {
        rule: sc.rule,
        ell: sc.ell,
        target,
        n_grid: sc.n_grid.clone(),
        replicates: sc.replicates,
        seed: sc.seed,
        slack: TREND_SLACK,
        points,
        trends,
    })
}

/// `E(exp(i t Z))` for `Z ~ beta(l, 1)`, by the series
/// `Σ_k (i t)^k / k! · l/(l+k)`.
pub fn beta_cf(ell: usize, t: f64) -> Complex64 {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(1.0, 0.0);
    for k in 1..200 {
        term *= Complex64::new(0.0, t) / k as f64;
        let add = term * (ell as f64 / (ell + k) as f64);
        sum += add;
        if add.norm() < 1e-17 {
            break;
        }
    }
    sum
}
