//! Truncated bivariate power series `Σ_i c_i(v) z^i` whose coefficients are
//! polynomials in `v` over the rationals.
//!
//! Only `z` is truncated; `v` stays symbolic. Division is restricted to
//! denominators with constant term `1`, which is all the generating functions
//! here ever need once the common factor `z` of `f`'s numerator and
//! denominator has been cancelled.
//!
//! Differentiation lowers the truncation order by one and integration raises
//! it by one, so a derived series never claims coefficients it cannot know.
//! Binary operations insist on equal truncation; use [`BivariateSeries::truncate`]
//! to line operands up explicitly.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::cutter::Rule;
use crate::error::{invalid, Result};
use crate::exactdist::{ExactPmf, RecurrenceTable};
use crate::numeric::{binom, factorial, falling, Rational};

/// Polynomial in `v`, lowest degree first, without trailing zeros.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Poly {
    coeffs: Vec<Rational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Poly::new(vec![c])
    }

    /// `c v^d`.
    pub fn monomial(c: Rational, d: usize) -> Self {
        let mut coeffs = vec![Rational::zero(); d + 1];
        coeffs[d] = c;
        Poly::new(coeffs)
    }

    /// The polynomial `v`.
    pub fn v() -> Self {
        Poly::monomial(Rational::one(), 1)
    }

    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Poly::new(coeffs.iter().map(|&c| Rational::from_integer(BigInt::from(c))).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, d: usize) -> Rational {
        self.coeffs.get(d).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn scale(&self, c: &Rational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly { coeffs: self.coeffs.iter().map(|x| x * c).collect() }
    }

    pub fn eval(&self, v: &Rational) -> Rational {
        self.coeffs.iter().rev().fold(Rational::zero(), |acc, c| acc * v + c)
    }

    /// Largest absolute coefficient, as a float.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs().to_f64().unwrap_or(f64::INFINITY)).fold(0.0, f64::max)
    }

    /// Probability generating function `Σ_m P(X = m) v^m`.
    pub fn pgf(p: &ExactPmf<Rational>) -> Poly {
        Poly::new(p.probs().to_vec())
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..len).map(|d| self.coeff(d) + rhs.coeff(d)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..len).map(|d| self.coeff(d) - rhs.coeff(d)).collect())
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Rational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        Poly::new(out)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for (d, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                f.write_str(if c.is_negative() { " - " } else { " + " })?;
            } else if c.is_negative() {
                f.write_str("-")?;
            }
            first = false;
            let a = c.abs();
            match d {
                0 => write!(f, "{a}")?,
                1 => write!(f, "{a} v")?,
                _ => write!(f, "{a} v^{d}")?,
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BivariateSeries {
    z_trunc: usize,
    // len == z_trunc + 1
    coeffs: Vec<Poly>,
}

fn check_same(a: &BivariateSeries, b: &BivariateSeries) -> Result<()> {
    if a.z_trunc != b.z_trunc {
        return Err(invalid!("series truncations differ: {} vs {}", a.z_trunc, b.z_trunc));
    }
    Ok(())
}

impl BivariateSeries {
    pub fn zero(z_trunc: usize) -> Self {
        BivariateSeries { z_trunc, coeffs: vec![Poly::zero(); z_trunc + 1] }
    }

    pub fn constant(z_trunc: usize, c: Poly) -> Self {
        let mut s = BivariateSeries::zero(z_trunc);
        s.coeffs[0] = c;
        s
    }

    pub fn one(z_trunc: usize) -> Self {
        BivariateSeries::constant(z_trunc, Poly::one())
    }

    /// Pads with zeros or drops coefficients beyond `z_trunc`.
    pub fn from_coeffs(z_trunc: usize, mut coeffs: Vec<Poly>) -> Self {
        coeffs.resize(z_trunc + 1, Poly::zero());
        BivariateSeries { z_trunc, coeffs }
    }

    /// Series in `z` alone.
    pub fn from_rationals(z_trunc: usize, coeffs: Vec<Rational>) -> Self {
        BivariateSeries::from_coeffs(z_trunc, coeffs.into_iter().map(Poly::constant).collect())
    }

    /// `c z^k`.
    pub fn monomial(z_trunc: usize, c: Poly, k: usize) -> Self {
        let mut s = BivariateSeries::zero(z_trunc);
        if k <= z_trunc {
            s.coeffs[k] = c;
        }
        s
    }

    /// `z`.
    pub fn z(z_trunc: usize) -> Self {
        BivariateSeries::monomial(z_trunc, Poly::one(), 1)
    }

    /// `1 - z`.
    pub fn one_minus_z(z_trunc: usize) -> Self {
        let mut s = BivariateSeries::one(z_trunc);
        if z_trunc >= 1 {
            s.coeffs[1] = Poly::from_ints(&[-1]);
        }
        s
    }

    /// `log(1/(1-z)) = Σ_{i>=1} z^i / i`.
    pub fn log_inv_one_minus_z(z_trunc: usize) -> Self {
        let coeffs = (0..=z_trunc)
            .map(|i| if i == 0 { Rational::zero() } else { Rational::new(BigInt::one(), BigInt::from(i)) })
            .collect();
        BivariateSeries::from_rationals(z_trunc, coeffs)
    }

    pub fn z_trunc(&self) -> usize {
        self.z_trunc
    }

    pub fn coeff(&self, i: usize) -> &Poly {
        &self.coeffs[i]
    }

    pub fn coeffs(&self) -> &[Poly] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Poly::is_zero)
    }

    /// Drops everything above `z_trunc`, which must not exceed the current
    /// order.
    pub fn truncate(&self, z_trunc: usize) -> Result<Self> {
        if z_trunc > self.z_trunc {
            return Err(invalid!("cannot raise truncation from {} to {z_trunc}", self.z_trunc));
        }
        Ok(BivariateSeries { z_trunc, coeffs: self.coeffs[..=z_trunc].to_vec() })
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        check_same(self, rhs)?;
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect();
        Ok(BivariateSeries { z_trunc: self.z_trunc, coeffs })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        check_same(self, rhs)?;
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect();
        Ok(BivariateSeries { z_trunc: self.z_trunc, coeffs })
    }

    pub fn neg(&self) -> Self {
        BivariateSeries { z_trunc: self.z_trunc, coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        check_same(self, rhs)?;
        let z = self.z_trunc;
        let mut coeffs = vec![Poly::zero(); z + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs[..=z - i].iter().enumerate() {
                if !b.is_zero() {
                    coeffs[i + j] = &coeffs[i + j] + &(a * b);
                }
            }
        }
        Ok(BivariateSeries { z_trunc: z, coeffs })
    }

    /// Multiplies every coefficient by the polynomial `c`.
    pub fn scalar_mul(&self, c: &Poly) -> Self {
        BivariateSeries { z_trunc: self.z_trunc, coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        BivariateSeries { z_trunc: self.z_trunc, coeffs: self.coeffs.iter().map(|a| a.scale(c)).collect() }
    }

    /// `∂/∂z`; the result is known to order `z_trunc - 1`.
    pub fn differentiate_z(&self) -> Result<Self> {
        if self.z_trunc == 0 {
            return Err(invalid!("derivative of a series truncated at z^0 carries no information"));
        }
        let coeffs =
            (1..=self.z_trunc).map(|i| self.coeffs[i].scale(&Rational::from_integer(BigInt::from(i)))).collect();
        Ok(BivariateSeries { z_trunc: self.z_trunc - 1, coeffs })
    }

    /// `∫_0^z`; zero constant term, known to order `z_trunc + 1`.
    pub fn integrate_z(&self) -> Self {
        let mut coeffs = Vec::with_capacity(self.z_trunc + 2);
        coeffs.push(Poly::zero());
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs.push(c.scale(&Rational::new(BigInt::one(), BigInt::from(i + 1))));
        }
        BivariateSeries { z_trunc: self.z_trunc + 1, coeffs }
    }

    /// Divides by `z`; the constant term must vanish. Known to one order
    /// less.
    pub fn shift_down(&self) -> Result<Self> {
        if !self.coeffs[0].is_zero() {
            return Err(invalid!("series is not divisible by z"));
        }
        if self.z_trunc == 0 {
            return Err(invalid!("dividing a series truncated at z^0 by z leaves nothing"));
        }
        Ok(BivariateSeries { z_trunc: self.z_trunc - 1, coeffs: self.coeffs[1..].to_vec() })
    }

    /// Substitutes a value for `v`, giving the coefficients of a series in
    /// `z`.
    pub fn eval_v(&self, v: &Rational) -> Vec<Rational> {
        self.coeffs.iter().map(|c| c.eval(v)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(Poly::max_abs).fold(0.0, f64::max)
    }
}

/// Quotient `num / den` for `den` with constant term exactly `1`.
pub fn divide_by_unit(num: &BivariateSeries, den: &BivariateSeries) -> Result<BivariateSeries> {
    check_same(num, den)?;
    if den.coeffs[0] != Poly::one() {
        return Err(invalid!("denominator must have constant term 1"));
    }
    let z = num.z_trunc;
    let mut q: Vec<Poly> = Vec::with_capacity(z + 1);
    for k in 0..=z {
        let mut acc = num.coeffs[k].clone();
        for j in 1..=k {
            if !den.coeffs[j].is_zero() {
                acc = &acc - &(&den.coeffs[j] * &q[k - j]);
            }
        }
        q.push(acc);
    }
    Ok(BivariateSeries { z_trunc: z, coeffs: q })
}

/// Formal exponential of a series with zero constant term, via
/// `E' = s' E`, i.e. `k E_k = Σ_{j=1}^k j s_j E_{k-j}`.
pub fn exp_series(s: &BivariateSeries) -> Result<BivariateSeries> {
    if !s.coeffs[0].is_zero() {
        return Err(invalid!("exponential needs a zero constant term"));
    }
    let z = s.z_trunc;
    let mut e: Vec<Poly> = Vec::with_capacity(z + 1);
    e.push(Poly::one());
    for k in 1..=z {
        let mut acc = Poly::zero();
        for j in 1..=k {
            if !s.coeffs[j].is_zero() {
                let term = (&s.coeffs[j] * &e[k - j]).scale(&Rational::from_integer(BigInt::from(j)));
                acc = &acc + &term;
            }
        }
        e.push(acc.scale(&Rational::new(BigInt::one(), BigInt::from(k))));
    }
    Ok(BivariateSeries { z_trunc: z, coeffs: e })
}

/// `(1-z) v log(1/(1-z)) + z (1-v)`, the common denominator of `f` and `g`.
pub fn g_denominator(z_trunc: usize) -> BivariateSeries {
    let lg = BivariateSeries::log_inv_one_minus_z(z_trunc);
    let a = BivariateSeries::one_minus_z(z_trunc).mul(&lg).expect("same truncation").scalar_mul(&Poly::v());
    let b = BivariateSeries::z(z_trunc).scalar_mul(&Poly::from_ints(&[1, -1]));
    a.add(&b).expect("same truncation")
}

/// `f(z,v) = v log(1/(1-z)) / ((1-z) v log(1/(1-z)) + z (1-v))` up to `z^Z`.
///
/// Numerator and denominator are both `z` times a series; after dividing
/// out `z` the denominator starts with `v + (1 - v) = 1`.
pub fn f_series(z_trunc: usize) -> BivariateSeries {
    let num = BivariateSeries::log_inv_one_minus_z(z_trunc + 1).scalar_mul(&Poly::v());
    let den = g_denominator(z_trunc + 1);
    let num = num.shift_down().expect("numerator is divisible by z");
    let den = den.shift_down().expect("denominator is divisible by z");
    divide_by_unit(&num, &den).expect("unit denominator after cancelling z")
}

/// `M_1(z,v) = exp(∫_0^z f(t,v) dt)`.
pub fn m1_series(z_trunc: usize) -> BivariateSeries {
    let integral = f_series(z_trunc).integrate_z().truncate(z_trunc).expect("raised by one");
    exp_series(&integral).expect("integral has no constant term")
}

/// Closed form `M_l(z,v) = v^{l-1} (l-1)! exp(∫_0^z l f(t,v) dt)`.
pub fn m_series(ell: usize, z_trunc: usize) -> Result<BivariateSeries> {
    if ell == 0 {
        return Err(invalid!("l must be at least 1"));
    }
    let integral = f_series(z_trunc).integrate_z().truncate(z_trunc)?.scale(&Rational::from_integer(BigInt::from(ell)));
    let e = exp_series(&integral)?;
    let lead = Poly::monomial(factorial::<Rational>(ell as i64 - 1), ell - 1);
    Ok(e.scalar_mul(&lead))
}

/// Exact recurrence tables for the three rules, large enough to rebuild the
/// generating functions of a given truncation.
pub struct DistTables {
    first: Option<RecurrenceTable<Rational>>,
    last: Option<RecurrenceTable<Rational>>,
    random: Option<RecurrenceTable<Rational>>,
}

impl DistTables {
    /// Tables covering `M_l` to `z^{m_trunc}`, `N_l` to `z^{n_trunc}` and
    /// `G_l` to `z^{g_trunc}` for all `l <= ell_max`; a `None` skips that
    /// rule.
    pub fn build(
        ell_max: usize,
        m_trunc: Option<usize>,
        n_trunc: Option<usize>,
        g_trunc: Option<usize>,
    ) -> Result<Self> {
        if ell_max == 0 {
            return Err(invalid!("l must be at least 1"));
        }
        let table = |rule, n_max: usize| RecurrenceTable::<Rational>::build(rule, n_max.max(ell_max), ell_max);
        Ok(DistTables {
            first: m_trunc.map(|z| table(Rule::First, z + ell_max)).transpose()?,
            last: n_trunc.map(|z| table(Rule::Last, z + ell_max - 1)).transpose()?,
            random: g_trunc.map(|z| table(Rule::Random, z)).transpose()?,
        })
    }

    fn table(&self, rule: Rule) -> Result<&RecurrenceTable<Rational>> {
        let t = match rule {
            Rule::First => &self.first,
            Rule::Last => &self.last,
            Rule::Random => &self.random,
        };
        t.as_ref().ok_or_else(|| invalid!("no {rule} table was built"))
    }

    /// `M_l(z,v) = Σ_{n>=l} (n-1)^{(l-1)} E(v^{R_{n,l}}) z^{n-l}`.
    pub fn m_series(&self, ell: usize, z_trunc: usize) -> Result<BivariateSeries> {
        let t = self.table(Rule::First)?;
        let coeffs = (0..=z_trunc)
            .map(|d| {
                let n = d + ell;
                let w = falling::<Rational>(n as i64 - 1, ell as i64 - 1);
                Ok(Poly::pgf(&t.get(n, ell)?).scale(&w))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BivariateSeries::from_coeffs(z_trunc, coeffs))
    }

    /// `N_l(z,v) = Σ_{n>=l} (n-1)^{(l-2)} E(v^{L_{n,l}}) z^{n+1-l}`, with
    /// `(n-1)^{(-1)} = 1/n`.
    pub fn n_series(&self, ell: usize, z_trunc: usize) -> Result<BivariateSeries> {
        let t = self.table(Rule::Last)?;
        let mut coeffs = vec![Poly::zero()];
        for d in 1..=z_trunc {
            let n = d + ell - 1;
            let w = falling::<Rational>(n as i64 - 1, ell as i64 - 2);
            coeffs.push(Poly::pgf(&t.get(n, ell)?).scale(&w));
        }
        Ok(BivariateSeries::from_coeffs(z_trunc, coeffs))
    }

    /// `G_l(z,v) = Σ_{n>=l} (binom(n,l)/n) E(v^{Y_{n,l}}) z^n`.
    pub fn g_series(&self, ell: usize, z_trunc: usize) -> Result<BivariateSeries> {
        let t = self.table(Rule::Random)?;
        let mut coeffs = vec![Poly::zero(); z_trunc + 1];
        for n in ell.max(1)..=z_trunc {
            let w = binom::<Rational>(n as i64, ell as i64) / Rational::from_integer(BigInt::from(n));
            coeffs[n] = Poly::pgf(&t.get(n, ell)?).scale(&w);
        }
        Ok(BivariateSeries::from_coeffs(z_trunc, coeffs))
    }
}

pub fn m_series_from_dist(ell: usize, z_trunc: usize) -> Result<BivariateSeries> {
    DistTables::build(ell, Some(z_trunc), None, None)?.m_series(ell, z_trunc)
}

pub fn n_series_from_dist(ell: usize, z_trunc: usize) -> Result<BivariateSeries> {
    DistTables::build(ell, None, Some(z_trunc), None)?.n_series(ell, z_trunc)
}

pub fn g_series_from_dist(ell: usize, z_trunc: usize) -> Result<BivariateSeries> {
    DistTables::build(ell, None, None, Some(z_trunc))?.g_series(ell, z_trunc)
}

/// Outcome of an exact identity check between two series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub check: String,
    pub ell: usize,
    pub z_trunc: usize,
    /// z-degrees whose residual coefficient is not the zero polynomial.
    pub nonzero_degrees: Vec<usize>,
    /// Largest absolute rational coefficient of the residual.
    pub max_abs: f64,
}

impl ResidualReport {
    fn from_residual(check: &str, ell: usize, residual: &BivariateSeries) -> Self {
        ResidualReport {
            check: check.to_string(),
            ell,
            z_trunc: residual.z_trunc(),
            nonzero_degrees: (0..=residual.z_trunc()).filter(|&i| !residual.coeff(i).is_zero()).collect(),
            max_abs: residual.max_abs(),
        }
    }

    pub fn passed(&self) -> bool {
        self.nonzero_degrees.is_empty()
    }
}

fn rat_int(x: i64) -> Rational {
    Rational::from_integer(BigInt::from(x))
}

/// `v Σ_{r=1}^{l-1} [binom(l-1,r) + binom(l-1,r-2)] M_r M_{l-r}`.
pub fn b_m(ms: &[BivariateSeries], ell: usize) -> Result<BivariateSeries> {
    let z = ms[1].z_trunc();
    let mut acc = BivariateSeries::zero(z);
    for r in 1..ell {
        let c = binom::<Rational>(ell as i64 - 1, r as i64) + binom::<Rational>(ell as i64 - 1, r as i64 - 2);
        acc = acc.add(&ms[r].mul(&ms[ell - r])?.scale(&c))?;
    }
    Ok(acc.scalar_mul(&Poly::v()))
}

/// Residual of the `M_l` equation in the form
/// `D ∂z M_l + (l - 1 - l v log(1/(1-z))) M_l - b_l = 0` with
/// `D = (1-z) v log(1/(1-z)) + z (1-v)`, compared up to `z^Z`.
///
/// `ms[r]` must hold `M_r` to order `Z + 1` for `1 <= r <= l`.
fn m_residual(ms: &[BivariateSeries], ell: usize, z_trunc: usize) -> Result<BivariateSeries> {
    let m = &ms[ell];
    let dm = m.differentiate_z()?.truncate(z_trunc)?;
    let m0 = m.truncate(z_trunc)?;
    let d = g_denominator(z_trunc);
    let lg = BivariateSeries::log_inv_one_minus_z(z_trunc);
    let coef = BivariateSeries::constant(z_trunc, Poly::constant(rat_int(ell as i64 - 1)))
        .sub(&lg.scalar_mul(&Poly::monomial(rat_int(ell as i64), 1)))?;
    let truncated: Vec<_> = ms.iter().map(|s| s.truncate(z_trunc)).collect::<Result<_>>()?;
    let b = b_m(&truncated, ell)?;
    d.mul(&dm)?.add(&coef.mul(&m0)?)?.sub(&b)
}

/// Which realization of `M_l` an ODE check runs on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MSource {
    ClosedForm,
    Distribution,
}

/// Checks the first order `M_l` equation up to `z^Z`.
pub fn check_ode_m(ell: usize, z_trunc: usize, source: MSource) -> Result<ResidualReport> {
    let tables = match source {
        MSource::Distribution => Some(DistTables::build(ell, Some(z_trunc + 1), None, None)?),
        MSource::ClosedForm => None,
    };
    check_ode_m_with(ell, z_trunc, source, tables.as_ref())
}

/// As [`check_ode_m`], reusing prebuilt tables for the distribution source.
pub fn check_ode_m_with(
    ell: usize,
    z_trunc: usize,
    source: MSource,
    tables: Option<&DistTables>,
) -> Result<ResidualReport> {
    if ell == 0 {
        return Err(invalid!("l must be at least 1"));
    }
    let mut ms = vec![BivariateSeries::zero(z_trunc + 1)];
    for r in 1..=ell {
        ms.push(match (source, tables) {
            (MSource::ClosedForm, _) => m_series(r, z_trunc + 1)?,
            (MSource::Distribution, Some(t)) => t.m_series(r, z_trunc + 1)?,
            (MSource::Distribution, None) => return Err(invalid!("distribution source needs tables")),
        });
    }
    let res = m_residual(&ms, ell, z_trunc)?;
    let name = match source {
        MSource::ClosedForm => "M-closed",
        MSource::Distribution => "M",
    };
    Ok(ResidualReport::from_residual(name, ell, &res))
}

/// Compares the sum defining `b_l` with `(l-1) v^{l-1} (l-1)! M_1^l`, both
/// built from the closed form.
pub fn check_b_simplification(ell: usize, z_trunc: usize) -> Result<ResidualReport> {
    if ell == 0 {
        return Err(invalid!("l must be at least 1"));
    }
    let mut ms = vec![BivariateSeries::zero(z_trunc)];
    for r in 1..ell.max(2) {
        ms.push(m_series(r, z_trunc)?);
    }
    let b = b_m(&ms, ell)?;
    let mut power = BivariateSeries::one(z_trunc);
    for _ in 0..ell {
        power = power.mul(&ms[1])?;
    }
    let lead = Poly::monomial(rat_int(ell as i64 - 1) * factorial::<Rational>(ell as i64 - 1), ell - 1);
    let res = b.sub(&power.scalar_mul(&lead))?;
    Ok(ResidualReport::from_residual("b-simplification", ell, &res))
}

/// `[z^{n-l}]` of the closed form against `(n-1)^{(l-1)}` times the PGF of
/// the first-labels law, for `l <= n <= n_max`.
pub fn check_m_coefficients(ell: usize, n_max: usize) -> Result<ResidualReport> {
    if ell == 0 || n_max < ell {
        return Err(invalid!("need 1 <= l <= n_max"));
    }
    let z = n_max - ell;
    let closed = m_series(ell, z)?;
    let dist = m_series_from_dist(ell, z)?;
    Ok(ResidualReport::from_residual("M-coefficients", ell, &closed.sub(&dist)?))
}

/// Residual of the `N_l` equation multiplied through by `(1-z)`:
/// `(1-z) D ∂z²N_l + (l-1)(1-z) ∂zN_l - v N_l - (1-z) b_l = 0`, with
/// `b_l = v Σ binom(l,r) N_r ∂z²N_{l-r} + Σ binom(l,r-1) (l-r-1)! v^{l-r} ∂zN_r`.
pub fn check_ode_n(ell: usize, z_trunc: usize) -> Result<ResidualReport> {
    let tables = DistTables::build(ell, None, Some(z_trunc + 2), None)?;
    check_ode_n_with(ell, z_trunc, &tables)
}

pub fn check_ode_n_with(ell: usize, z_trunc: usize, tables: &DistTables) -> Result<ResidualReport> {
    if ell == 0 {
        return Err(invalid!("l must be at least 1"));
    }
    let z = z_trunc;
    let mut n0 = vec![BivariateSeries::zero(z)];
    let mut n1 = vec![BivariateSeries::zero(z)];
    let mut n2 = vec![BivariateSeries::zero(z)];
    for r in 1..=ell {
        let s = tables.n_series(r, z + 2)?;
        let d1 = s.differentiate_z()?;
        n2.push(d1.differentiate_z()?);
        n1.push(d1.truncate(z)?);
        n0.push(s.truncate(z)?);
    }
    let omz = BivariateSeries::one_minus_z(z);
    let d = g_denominator(z);
    let mut b = BivariateSeries::zero(z);
    for r in 1..ell {
        let c = binom::<Rational>(ell as i64, r as i64);
        b = b.add(&n0[r].mul(&n2[ell - r])?.scalar_mul(&Poly::monomial(c, 1)))?;
        let c2 = binom::<Rational>(ell as i64, r as i64 - 1) * factorial::<Rational>((ell - r) as i64 - 1);
        b = b.add(&n1[r].scalar_mul(&Poly::monomial(c2, ell - r)))?;
    }
    let lhs = omz
        .mul(&d)?
        .mul(&n2[ell])?
        .add(&omz.mul(&n1[ell])?.scale(&rat_int(ell as i64 - 1)))?
        .sub(&n0[ell].scalar_mul(&Poly::v()))?;
    let res = lhs.sub(&omz.mul(&b)?)?;
    Ok(ResidualReport::from_residual("N", ell, &res))
}

/// Residual of the `G_l` equation, which already has polynomial
/// coefficients in `z` and `log(1/(1-z))`:
/// `(1-z) D ∂z²G_l - (z(1-v) + 2v(1-z)log(1/(1-z))) ∂zG_l + (1-v) G_l - b_l`.
pub fn check_ode_g(ell: usize, z_trunc: usize) -> Result<ResidualReport> {
    let tables = DistTables::build(ell, None, None, Some(z_trunc + 2))?;
    check_ode_g_with(ell, z_trunc, &tables)
}

pub fn check_ode_g_with(ell: usize, z_trunc: usize, tables: &DistTables) -> Result<ResidualReport> {
    if ell == 0 {
        return Err(invalid!("l must be at least 1"));
    }
    let z = z_trunc;
    let mut g0 = vec![BivariateSeries::zero(z)];
    let mut g1 = vec![BivariateSeries::zero(z)];
    let mut g2 = vec![BivariateSeries::zero(z)];
    for r in 1..=ell {
        let s = tables.g_series(r, z + 2)?;
        let d1 = s.differentiate_z()?;
        g2.push(d1.differentiate_z()?);
        g1.push(d1.truncate(z)?);
        g0.push(s.truncate(z)?);
    }
    let omz = BivariateSeries::one_minus_z(z);
    let omz2 = omz.mul(&omz)?;
    let lg = BivariateSeries::log_inv_one_minus_z(z);
    let v = Poly::v();
    let one_minus_v = Poly::from_ints(&[1, -1]);
    let d = g_denominator(z);

    let mut b = BivariateSeries::zero(z);
    let mut first = BivariateSeries::zero(z);
    let mut triple = BivariateSeries::zero(z);
    let mut cross = BivariateSeries::zero(z);
    let mut mixed = BivariateSeries::zero(z);
    for r in 1..ell {
        first = first.add(&g2[r].mul(&g0[ell - r])?)?;
        for q in 1..ell - r {
            triple = triple.add(&g1[r].mul(&g1[q])?.mul(&g0[ell - r - q])?)?;
        }
        cross = cross.add(&g1[r].mul(&g1[ell - r])?)?;
        mixed = mixed.add(&g1[r].mul(&g0[ell - r])?)?;
    }
    b = b.sub(&omz2.mul(&first)?)?;
    b = b.add(&omz2.mul(&triple)?.scalar_mul(&v))?;
    b = b.add(&omz2.mul(&lg)?.mul(&cross)?.scalar_mul(&v))?;
    b = b.add(&omz.mul(&mixed)?.scalar_mul(&Poly::monomial(rat_int(2), 1)))?;

    let first_order = BivariateSeries::z(z)
        .scalar_mul(&one_minus_v)
        .add(&omz.mul(&lg)?.scalar_mul(&Poly::monomial(rat_int(2), 1)))?;
    let lhs = omz.mul(&d)?.mul(&g2[ell])?.sub(&first_order.mul(&g1[ell])?)?.add(&g0[ell].scalar_mul(&one_minus_v))?;
    Ok(ResidualReport::from_residual("G", ell, &lhs.sub(&b)?))
}

/// `N_l(z,1)`: `log(1/(1-z))` for `l = 1`, `(l-2)!/(1-z)^{l-1} - (l-2)!`
/// otherwise.
pub fn n_at_one(ell: usize, z_trunc: usize) -> Vec<Rational> {
    if ell == 1 {
        return BivariateSeries::log_inv_one_minus_z(z_trunc).eval_v(&Rational::one());
    }
    let c = factorial::<Rational>(ell as i64 - 2);
    (0..=z_trunc)
        .map(|i| {
            if i == 0 {
                Rational::zero()
            } else {
                // [z^i] (1-z)^{-(l-1)} = binom(i + l - 2, i)
                &c * binom::<Rational>((i + ell - 2) as i64, i as i64)
            }
        })
        .collect()
}

/// `G_l(z,1) = z^l / (l (1-z)^l)`.
pub fn g_at_one(ell: usize, z_trunc: usize) -> Vec<Rational> {
    (0..=z_trunc)
        .map(|i| {
            if i < ell {
                Rational::zero()
            } else {
                binom::<Rational>((i - 1) as i64, (ell - 1) as i64) / rat_int(ell as i64)
            }
        })
        .collect()
}
