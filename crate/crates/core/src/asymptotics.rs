//! Limit-law targets and the normalizations that go with them.
//!
//! All logarithms are natural.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::cutter::Rule;
use crate::error::{invalid, Result};
use crate::exactdist::RecurrenceTable;
use crate::numeric::{binom, factorial, Rational};

/// Target law of a normalized cut count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LimitTarget {
    /// Density `l x^{l-1}` on `[0, 1]`.
    Beta { ell: usize },
    /// Characteristic function `exp(i t log|t| - π|t|/2)`.
    Stable,
}

impl LimitTarget {
    /// Target for `rule`: the stable law for the first labels, beta
    /// otherwise.
    pub fn for_rule(rule: Rule, ell: usize) -> Self {
        match rule {
            Rule::First => LimitTarget::Stable,
            Rule::Last | Rule::Random => LimitTarget::Beta { ell },
        }
    }
}

/// `E(Z^s) = l / (l + s)` for `Z ~ beta(l, 1)`.
pub fn beta_moment(ell: usize, s: usize) -> Rational {
    Rational::new(BigInt::from(ell), BigInt::from(ell + s))
}

/// `x^l` on `[0, 1]`, clamped outside.
pub fn beta_cdf(ell: usize, x: f64) -> f64 {
    x.clamp(0.0, 1.0).powi(ell as i32)
}

pub fn stable_cf(t: f64) -> Complex64 {
    if t == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let a = t.abs();
    Complex64::new(-std::f64::consts::FRAC_PI_2 * a, t * a.ln()).exp()
}

/// `n / log n + n log log n / (log n)^2`.
pub fn stable_centering(n: usize) -> f64 {
    let nf = n as f64;
    let ln = nf.ln();
    nf / ln + nf * ln.ln() / (ln * ln)
}

/// `(x - (l - 1) - n/log n - n log log n/(log n)^2) / (n/(log n)^2)`.
pub fn normalize_r(x: f64, n: usize, ell: usize) -> Result<f64> {
    if n < 3 {
        return Err(invalid!("normalization needs n >= 3 so that log log n > 0, got {n}"));
    }
    let nf = n as f64;
    let ln = nf.ln();
    Ok((x - (ell as f64 - 1.0) - stable_centering(n)) / (nf / (ln * ln)))
}

/// `(log n / n) x`.
pub fn scale_ly(x: f64, n: usize) -> f64 {
    let nf = n as f64;
    x * nf.ln() / nf
}

/// Leading term of `E(X^s)`: `n^s / log^s n` for the first labels,
/// `l/(l+s)` times that for the other rules.
pub fn leading_moment(rule: Rule, n: usize, ell: usize, s: usize) -> f64 {
    let nf = n as f64;
    let base = (nf / nf.ln()).powi(s as i32);
    match rule {
        Rule::First => base,
        Rule::Last | Rule::Random => base * ell as f64 / (ell + s) as f64,
    }
}

/// `α_{l,s} = (s! / (l + s)) binom(l + s - 1, s)`.
pub fn alpha_closed(ell: usize, s: usize) -> Result<Rational> {
    if ell == 0 {
        return Err(invalid!("l must be at least 1"));
    }
    Ok(factorial::<Rational>(s as i64) * binom::<Rational>((ell + s - 1) as i64, s as i64)
        / Rational::from_integer(BigInt::from(ell + s)))
}

/// All `α_{j,q}` for `j <= l_max`, `q <= s_max` from the recurrence
/// `α_{l,s} = [s (l+s-1)^2 α_{l,s-1} + Σ_r Σ_{s1+s2=s} binom(s,s1)
/// (r+s1) α_{r,s1} (l-r+s2) α_{l-r,s2}] / ((l+s)(l+s-1))`,
/// seeded with `α_{l,0} = 1/l`. Indexed `[l][s]`, row 0 unused.
pub fn alpha_table(ell_max: usize, s_max: usize) -> Vec<Vec<Rational>> {
    let mut a = vec![vec![Rational::zero(); s_max + 1]; ell_max + 1];
    for ell in 1..=ell_max {
        a[ell][0] = Rational::new(BigInt::from(1), BigInt::from(ell));
        for s in 1..=s_max {
            let big = |x: usize| Rational::from_integer(BigInt::from(x));
            let mut num = big(s) * big((ell + s - 1) * (ell + s - 1)) * &a[ell][s - 1];
            for r in 1..ell {
                for s1 in 0..=s {
                    let s2 = s - s1;
                    num += binom::<Rational>(s as i64, s1 as i64)
                        * big(r + s1)
                        * &a[r][s1]
                        * big(ell - r + s2)
                        * &a[ell - r][s2];
                }
            }
            a[ell][s] = num / big((ell + s) * (ell + s - 1));
        }
    }
    a
}

pub fn alpha_recurrence(ell: usize, s: usize) -> Result<Rational> {
    if ell == 0 {
        return Err(invalid!("l must be at least 1"));
    }
    Ok(alpha_table(ell, s)[ell][s].clone())
}

/// Fit of `|e_n - target| <= C / log n` where `e_n = E(X)·log n / n` from
/// the float recurrence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentTrend {
    pub rule: Rule,
    pub ell: usize,
    pub target: f64,
    pub ns: Vec<usize>,
    pub scaled_means: Vec<f64>,
    /// `|e_n - target| · log n` per grid point.
    pub fitted_c: Vec<f64>,
    /// `(max C - min C) / max C`.
    pub spread: f64,
}

impl MomentTrend {
    /// The fitted constants agree within the relative `tolerance`.
    pub fn stable_within(&self, tolerance: f64) -> bool {
        self.spread < tolerance
    }
}

/// Scaled first moments along `ns` against `l/(l+1)`, from one float
/// recurrence table sized for the largest `n`.
pub fn moment_trend(rule: Rule, ell: usize, ns: &[usize]) -> Result<MomentTrend> {
    if rule == Rule::First {
        return Err(invalid!("the first-labels law has no beta moment target"));
    }
    let n_max = *ns.iter().max().ok_or_else(|| invalid!("empty n grid"))?;
    if ns.iter().any(|&n| n < ell.max(2)) {
        return Err(invalid!("grid points must satisfy n >= max(l, 2)"));
    }
    let table = RecurrenceTable::<f64>::build(rule, n_max, ell)?;
    let target = ell as f64 / (ell + 1) as f64;
    let mut scaled_means = Vec::with_capacity(ns.len());
    let mut fitted_c = Vec::with_capacity(ns.len());
    for &n in ns {
        let e = scale_ly(table.get(n, ell)?.mean(), n);
        scaled_means.push(e);
        fitted_c.push((e - target).abs() * (n as f64).ln());
    }
    let hi = fitted_c.iter().cloned().fold(f64::MIN, f64::max);
    let lo = fitted_c.iter().cloned().fold(f64::MAX, f64::min);
    Ok(MomentTrend {
        rule,
        ell,
        target,
        ns: ns.to_vec(),
        scaled_means,
        fitted_c,
        spread: if hi > 0.0 { (hi - lo) / hi } else { 0.0 },
    })
}
