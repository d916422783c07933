//! Exact laws of the cut count for the three selection rules, by dynamic
//! programming over the distributional recurrences.
//!
//! For `n >= 2` every rule satisfies
//! `X(n, l) = X'(k, r) + X''(n - k, l - r) + 1` with `(k, r)` drawn from the
//! rule's joint splitting law and independent copies on both sides; the
//! boundary law `X(m, 0) = 0` absorbs the target-free side. Full PMFs are
//! convolved, not just moments, so the tables also feed the generating
//! function checks.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cutter::Rule;
use crate::error::{invalid, Error, Result};
use crate::numeric::{falling, int, stirling2_row, Rational, Weight};
use crate::splitprob::{joint_table, JointKind};

/// Which random variable a PMF describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Law {
    First,
    Last,
    Random,
    PerTree,
}

impl From<Rule> for Law {
    fn from(r: Rule) -> Self {
        match r {
            Rule::First => Law::First,
            Rule::Last => Law::Last,
            Rule::Random => Law::Random,
        }
    }
}

impl Law {
    pub fn as_str(self) -> &'static str {
        match self {
            Law::First => "first",
            Law::Last => "last",
            Law::Random => "random",
            Law::PerTree => "per-tree",
        }
    }
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Law {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-tree" => Ok(Law::PerTree),
            other => other.parse::<Rule>().map(Law::from),
        }
    }
}

/// Arithmetic backend of the recurrences.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Rational,
    Float,
}

impl FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rational" => Ok(Backend::Rational),
            "float" => Ok(Backend::Float),
            other => Err(invalid!("unknown backend {other:?}")),
        }
    }
}

/// Float PMFs must sum to one within this tolerance.
pub const FLOAT_MASS_TOLERANCE: f64 = 1e-12;

/// Law of a cut count: `probs[m] = P(X = m)`, no trailing zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactPmf<T> {
    pub law: Law,
    pub n: usize,
    pub ell: usize,
    probs: Vec<T>,
}

impl<T: Weight> ExactPmf<T> {
    /// Checks support and normalisation before accepting `probs`.
    pub fn new(law: Law, n: usize, ell: usize, mut probs: Vec<T>) -> Result<Self> {
        while probs.last().is_some_and(|p| p.is_zero()) {
            probs.pop();
        }
        let lo = ell.saturating_sub(1);
        for (m, p) in probs.iter().enumerate() {
            if p.is_negative_value() {
                return Err(invalid!("negative probability at m = {m}"));
            }
            if !p.is_zero() && (m < lo || m + 1 > n.max(1)) {
                return Err(invalid!("mass at m = {m} outside [{lo}, {}]", n.saturating_sub(1)));
            }
        }
        let pmf = ExactPmf { law, n, ell, probs };
        pmf.check_mass()?;
        Ok(pmf)
    }

    fn check_mass(&self) -> Result<()> {
        let total = self.probs.iter().fold(T::zero(), |acc, p| acc + p.clone());
        let ok = if T::EXACT { total.is_one() } else { (total.to_f64() - 1.0).abs() <= FLOAT_MASS_TOLERANCE };
        if ok {
            Ok(())
        } else {
            Err(invalid!("probabilities sum to {:?}, not 1", total))
        }
    }

    pub fn prob(&self, m: usize) -> T {
        self.probs.get(m).cloned().unwrap_or_else(T::zero)
    }

    /// Dense probabilities from `m = 0`; also the PGF coefficients.
    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    /// `(m, P(X = m))` for every `m` with positive mass.
    pub fn support(&self) -> impl Iterator<Item = (usize, &T)> {
        self.probs.iter().enumerate().filter(|(_, p)| !p.is_zero())
    }

    pub fn to_f64(&self) -> ExactPmf<f64> {
        ExactPmf { law: self.law, n: self.n, ell: self.ell, probs: self.probs.iter().map(Weight::to_f64).collect() }
    }

    pub fn mean(&self) -> T {
        self.factorial_moment(1)
    }

    /// `E[X (X-1) ... (X-s+1)]`.
    pub fn factorial_moment(&self, s: usize) -> T {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero())
            .fold(T::zero(), |acc, (m, p)| acc + falling::<T>(m as i64, s as i64) * p.clone())
    }

    /// `E[X^s]` assembled from factorial moments with Stirling numbers of the
    /// second kind.
    pub fn raw_moment(&self, s: usize) -> T {
        stirling2_row(s)
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .fold(T::zero(), |acc, (j, c)| acc + T::from_ratio(c, &BigInt::one()) * self.factorial_moment(j))
    }

    /// `sum m^s P(m)` summed directly.
    pub fn direct_raw_moment(&self, s: usize) -> T {
        self.probs.iter().enumerate().fold(T::zero(), |acc, (m, p)| {
            let pow = (0..s).fold(T::one(), |x, _| x * int::<T>(m as i64));
            acc + pow * p.clone()
        })
    }
}

/// Immutable table of PMFs for one rule, for all `m <= n_max` and all
/// target counts `j <= min(m, ell_max)`.
///
/// Row `m` only reads rows below it, so the cells of a row are computed in
/// parallel and published once.
pub struct RecurrenceTable<T> {
    rule: Rule,
    ell_max: usize,
    rows: Vec<Vec<Arc<Vec<T>>>>,
}

impl<T: Weight> RecurrenceTable<T> {
    pub fn build(rule: Rule, n_max: usize, ell_max: usize) -> Result<Self> {
        if n_max == 0 || ell_max == 0 {
            return Err(invalid!("table needs n_max >= 1 and l_max >= 1"));
        }
        let kind = match rule {
            Rule::First => JointKind::R,
            Rule::Last => JointKind::L,
            Rule::Random => JointKind::Y,
        };
        let point_zero = Arc::new(vec![T::one()]);
        // rows[0] is a placeholder so that rows[m] is size m
        let mut rows: Vec<Vec<Arc<Vec<T>>>> = vec![Vec::new()];
        rows.push(vec![point_zero.clone(), point_zero.clone()]);
        for m in 2..=n_max {
            let width = m.min(ell_max);
            let done = &rows;
            let row: Vec<Arc<Vec<T>>> = (0..=width)
                .into_par_iter()
                .map(|j| {
                    if j == 0 {
                        return Ok(point_zero.clone());
                    }
                    let mut acc: Vec<T> = vec![T::zero(); m];
                    for (k, r, p) in joint_table::<T>(kind, m, j)? {
                        let left = &done[k][r];
                        let right = &done[m - k][j - r];
                        convolve_shifted_into(&mut acc, left, right, &p);
                    }
                    while acc.last().is_some_and(|x| x.is_zero()) {
                        acc.pop();
                    }
                    Ok(Arc::new(acc))
                })
                .collect::<Result<_>>()?;
            rows.push(row);
        }
        Ok(RecurrenceTable { rule, ell_max, rows })
    }

    pub fn n_max(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn get(&self, n: usize, ell: usize) -> Result<ExactPmf<T>> {
        if ell == 0 || ell > n {
            return Err(invalid!("need 1 <= l <= n, got l = {ell}, n = {n}"));
        }
        if n > self.n_max() || ell > self.ell_max {
            return Err(invalid!("({n}, {ell}) is outside the tabulated range"));
        }
        ExactPmf::new(Law::from(self.rule), n, ell, self.rows[n][ell].as_ref().clone())
    }
}

/// `acc[a + b + 1] += w * left[a] * right[b]`.
fn convolve_shifted_into<T: Weight>(acc: &mut [T], left: &[T], right: &[T], w: &T) {
    for (a, pa) in left.iter().enumerate() {
        if pa.is_zero() {
            continue;
        }
        let wa = w.clone() * pa.clone();
        for (b, pb) in right.iter().enumerate() {
            if pb.is_zero() {
                continue;
            }
            let slot = &mut acc[a + b + 1];
            *slot = slot.clone() + wa.clone() * pb.clone();
        }
    }
}

pub fn pmf<T: Weight>(rule: Rule, n: usize, ell: usize) -> Result<ExactPmf<T>> {
    if ell == 0 || ell > n {
        return Err(invalid!("need 1 <= l <= n, got l = {ell}, n = {n}"));
    }
    RecurrenceTable::<T>::build(rule, n, ell)?.get(n, ell)
}

/// Law of the cuts isolating `1..=l`.
pub fn pmf_r<T: Weight>(n: usize, ell: usize) -> Result<ExactPmf<T>> {
    pmf(Rule::First, n, ell)
}

/// Law of the cuts isolating `n+1-l..=n`.
pub fn pmf_l<T: Weight>(n: usize, ell: usize) -> Result<ExactPmf<T>> {
    pmf(Rule::Last, n, ell)
}

/// Law of the cuts isolating a uniform `l`-subset.
pub fn pmf_y<T: Weight>(n: usize, ell: usize) -> Result<ExactPmf<T>> {
    pmf(Rule::Random, n, ell)
}

/// JSON shape of an emitted PMF. Exact PMFs carry `num`/`den` integer
/// arrays, float PMFs carry `prob`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PmfJson {
    pub rule: Law,
    pub n: usize,
    pub ell: usize,
    pub support: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub num: Option<Vec<serde_json::Number>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub den: Option<Vec<serde_json::Number>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub prob: Option<Vec<f64>>,
}

fn big_number(x: &BigInt) -> serde_json::Number {
    x.to_string().parse().expect("integer literal is valid JSON")
}

fn parse_big(x: &serde_json::Number) -> Result<BigInt> {
    x.to_string().parse().map_err(|_| invalid!("{x} is not an integer"))
}

impl ExactPmf<Rational> {
    pub fn to_json(&self) -> PmfJson {
        let (support, (num, den)): (Vec<usize>, (Vec<_>, Vec<_>)) =
            self.support().map(|(m, p)| (m, (big_number(p.numer()), big_number(p.denom())))).unzip();
        PmfJson { rule: self.law, n: self.n, ell: self.ell, support, num: Some(num), den: Some(den), prob: None }
    }

    pub fn from_json(j: &PmfJson) -> Result<Self> {
        let (num, den) = match (&j.num, &j.den) {
            (Some(a), Some(b)) if a.len() == j.support.len() && b.len() == j.support.len() => (a, b),
            _ => return Err(invalid!("exact PMF needs num and den arrays matching support")),
        };
        let len = j.support.iter().max().map_or(0, |m| m + 1);
        let mut probs = vec![Rational::zero(); len];
        for ((&m, a), b) in j.support.iter().zip(num).zip(den) {
            let d = parse_big(b)?;
            if !d.is_positive() {
                return Err(invalid!("denominator must be positive"));
            }
            probs[m] = Rational::new(parse_big(a)?, d);
        }
        ExactPmf::new(j.rule, j.n, j.ell, probs)
    }
}

impl ExactPmf<f64> {
    pub fn to_json(&self) -> PmfJson {
        let (support, prob) = self.support().map(|(m, p)| (m, *p)).unzip();
        PmfJson { rule: self.law, n: self.n, ell: self.ell, support, num: None, den: None, prob: Some(prob) }
    }

    pub fn from_json(j: &PmfJson) -> Result<Self> {
        let prob = match &j.prob {
            Some(p) if p.len() == j.support.len() => p,
            _ => return Err(invalid!("float PMF needs a prob array matching support")),
        };
        let len = j.support.iter().max().map_or(0, |m| m + 1);
        let mut probs = vec![0.0; len];
        for (&m, &p) in j.support.iter().zip(prob) {
            probs[m] = p;
        }
        ExactPmf::new(j.rule, j.n, j.ell, probs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;

    #[test]
    fn diagonal_is_point_mass() {
        for rule in Rule::ALL {
            for ell in 1..=7 {
                let p = pmf::<Rational>(rule, ell, ell).unwrap();
                assert_eq!(p.prob(ell - 1), rat(1, 1), "{rule} l={ell}");
            }
        }
    }

    #[test]
    fn small_laws() {
        let r31 = pmf_r::<Rational>(3, 1).unwrap();
        assert_eq!(r31.probs(), &[rat(0, 1), rat(1, 4), rat(3, 4)]);
        assert_eq!(r31.mean(), rat(7, 4));
        assert_eq!(r31.raw_moment(1), rat(7, 4));
        assert_eq!(pmf_l::<Rational>(2, 1).unwrap().probs(), &[rat(0, 1), rat(1, 1)]);
        assert_eq!(pmf_y::<Rational>(2, 1).unwrap().probs(), &[rat(0, 1), rat(1, 1)]);
        assert!(pmf_r::<Rational>(2, 3).is_err());
        assert!(pmf_r::<Rational>(2, 0).is_err());
    }

    #[test]
    fn point_mass_moments() {
        let p = ExactPmf::new(Law::First, 5, 5, vec![0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        for s in 0..5 {
            assert_eq!(p.raw_moment(s), 4f64.powi(s as i32));
        }
    }

    #[test]
    fn stirling_conversion_matches_direct_sum() {
        for rule in Rule::ALL {
            let table = RecurrenceTable::<Rational>::build(rule, 20, 3).unwrap();
            for n in 1..=20 {
                for ell in 1..=n.min(3) {
                    let p = table.get(n, ell).unwrap();
                    for s in 0..=4 {
                        assert_eq!(p.raw_moment(s), p.direct_raw_moment(s), "{rule} n={n} l={ell} s={s}");
                    }
                }
            }
        }
    }

    #[test]
    fn backends_agree() {
        for rule in Rule::ALL {
            let exact = RecurrenceTable::<Rational>::build(rule, 25, 4).unwrap();
            let float = RecurrenceTable::<f64>::build(rule, 25, 4).unwrap();
            for n in 1..=25 {
                for ell in 1..=n.min(4) {
                    let a = exact.get(n, ell).unwrap();
                    let b = float.get(n, ell).unwrap();
                    for m in 0..n {
                        assert!((a.prob(m).to_f64() - b.prob(m)).abs() <= 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn invariants_rejected() {
        assert!(ExactPmf::new(Law::First, 3, 2, vec![rat(1, 2), rat(1, 2)]).is_err());
        assert!(ExactPmf::new(Law::First, 3, 1, vec![rat(0, 1), rat(1, 2)]).is_err());
        assert!(ExactPmf::new(Law::First, 3, 1, vec![rat(0, 1), rat(3, 2), rat(-1, 2)]).is_err());
        assert!(ExactPmf::new(Law::First, 3, 1, vec![0.0, 0.5, 0.5 + 1e-9]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let p = pmf_l::<Rational>(9, 3).unwrap();
        let text = serde_json::to_string(&p.to_json()).unwrap();
        let back: PmfJson = serde_json::from_str(&text).unwrap();
        assert_eq!(ExactPmf::<Rational>::from_json(&back).unwrap(), p);

        let f = pmf_y::<f64>(12, 2).unwrap();
        let text = serde_json::to_string(&f.to_json()).unwrap();
        let back: PmfJson = serde_json::from_str(&text).unwrap();
        assert_eq!(ExactPmf::<f64>::from_json(&back).unwrap(), f);
    }

    #[test]
    fn json_schema_for_small_law() {
        let j = pmf_r::<Rational>(3, 1).unwrap().to_json();
        let v = serde_json::to_value(&j).unwrap();
        assert_eq!(
            v,
            serde_json::json!({"rule": "first", "n": 3, "ell": 1, "support": [1, 2], "num": [1, 3], "den": [4, 4]})
        );
    }
}
