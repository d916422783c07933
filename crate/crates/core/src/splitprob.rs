//! Splitting laws of a single uniform cut in a uniform random recursive
//! tree, in exact rational arithmetic.
//!
//! `p_split(n, l, k, r)` is the probability that the part containing node `l`
//! has size `k` and `l` is its `r`-th smallest label. The three joint laws
//! drive the recurrences in [`crate::exactdist`]:
//!
//! * [`joint_r`] for targets `1..=l`, tracking node `l`,
//! * [`joint_l`] for targets `n+1-l..=n`, tracking node `n+1-l`,
//! * [`joint_y`] for a uniform target set, tracking the root.
//!
//! The joint laws are generic over [`Weight`] so the float backend of the
//! recurrences can evaluate them without big integers.

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::{invalid, Error, Result};
use crate::numeric::{binom, binom_big, factorial_big, falling, int, Rational, Weight};
use crate::tree::enumerate_all;

/// Largest `n` accepted by [`verify_against_enumeration`].
pub const ENUMERATION_CHECK_CAP: usize = 8;

fn check_split_args(n: usize, ell: usize, k: usize, r: usize) -> Result<()> {
    if n < 2 || ell == 0 || ell > n || k == 0 || k >= n || r == 0 || r > k.min(ell) {
        return Err(invalid!("splitting arguments out of range: n={n}, l={ell}, k={k}, r={r}"));
    }
    Ok(())
}

/// Direct two-case binomial form.
pub fn p_split(n: usize, ell: usize, k: usize, r: usize) -> Result<Rational> {
    check_split_args(n, ell, k, r)?;
    Ok(p_split_unchecked(n as i64, ell as i64, k as i64, r as i64))
}

fn p_split_unchecked(n: i64, ell: i64, k: i64, r: i64) -> Rational {
    let bracket: BigInt = if r == ell {
        (ell - 1) * binom_big(n - ell, n - k) + binom_big(n - ell + 1, n - k + 1)
    } else {
        (binom_big(ell - 1, r) + binom_big(ell - 1, r - 2)) * binom_big(n - ell, k - r)
    };
    let num = bracket * factorial_big(k - 1) * factorial_big(n - k - 1);
    let den = BigInt::from(n - 1) * factorial_big(n - 1);
    Rational::new(num, den)
}

/// `p_split` extended by zero outside `1 <= r <= min(k, l)`.
pub fn p_split_or_zero(n: usize, ell: usize, k: usize, r: usize) -> Rational {
    match check_split_args(n, ell, k, r) {
        Ok(()) => p_split_unchecked(n as i64, ell as i64, k as i64, r as i64),
        Err(_) => Rational::zero(),
    }
}

/// Probability that the root part of a uniform cut has size `k`.
pub fn p_root<T: Weight>(n: usize, k: usize) -> Result<T> {
    if n < 2 || k == 0 || k >= n {
        return Err(invalid!("p_root needs n >= 2 and 1 <= k <= n-1, got n={n}, k={k}"));
    }
    Ok(p_root_unchecked(n as i64, k as i64))
}

fn p_root_unchecked<T: Weight>(n: i64, k: i64) -> T {
    int::<T>(n) / (int::<T>(n - 1) * int::<T>(n - k + 1) * int::<T>(n - k))
}

/// Joint law of (size, rank of node `l`) with falling factorials; equals
/// [`p_split`] on its domain.
pub fn joint_r<T: Weight>(n: usize, ell: usize, k: usize, r: usize) -> Result<T> {
    check_split_args(n, ell, k, r)?;
    Ok(joint_r_unchecked(n as i64, ell as i64, k as i64, r as i64))
}

pub(crate) fn joint_r_unchecked<T: Weight>(n: i64, ell: i64, k: i64, r: i64) -> T {
    let tail = int::<T>(n - 1) * falling::<T>(n - 1, ell - 1);
    if r == ell {
        let lead = int::<T>(ell - 1) + int::<T>(n - ell + 1) / int::<T>(n - k + 1);
        lead * falling::<T>(k - 1, ell - 1) / (tail * int::<T>(n - k))
    } else {
        let lead = binom::<T>(ell - 1, r) + binom::<T>(ell - 1, r - 2);
        lead * falling::<T>(k - 1, r - 1) * falling::<T>(n - k - 1, ell - r - 1) / tail
    }
}

/// Joint law for the last `l` labels: size of the part holding node
/// `n+1-l` and the number `r` of targets inside it. Negative falling
/// factorial exponents use the reciprocal convention of
/// [`crate::numeric::falling`]; the Kronecker term only fires when the
/// other part consists of targets only, `k = n + r - l`. Outside
/// `l - r <= n - k` the law is zero.
pub fn joint_l<T: Weight>(n: usize, ell: usize, k: usize, r: usize) -> Result<T> {
    check_split_args(n, ell, k, r)?;
    Ok(joint_l_unchecked(n as i64, ell as i64, k as i64, r as i64))
}

pub(crate) fn joint_l_unchecked<T: Weight>(n: i64, ell: i64, k: i64, r: i64) -> T {
    // the closed form is only valid when the other part can hold the
    // remaining l - r targets
    if ell - r > n - k {
        return T::zero();
    }
    let tail = int::<T>(n - 1) * falling::<T>(n - 1, ell - 1);
    let main = binom::<T>(ell - 1, r - 1)
        * (falling::<T>(k - 1, r - 2) * falling::<T>(n - k - 1, ell - r)
            + falling::<T>(k - 1, r) * falling::<T>(n - k - 1, ell - r - 2))
        / tail;
    if r < ell && k == n + r - ell {
        let extra = binom::<T>(ell, r - 1) * crate::numeric::factorial::<T>(ell - r - 1)
            / (int::<T>(n - 1) * falling::<T>(n - 1, ell - r));
        main + extra
    } else {
        main
    }
}

fn check_y_args(n: usize, ell: usize, k: usize, r: usize) -> Result<()> {
    let lo = ell.saturating_sub(n.saturating_sub(k));
    if n < 2 || ell == 0 || ell > n || k == 0 || k >= n || r < lo || r > k.min(ell) {
        return Err(invalid!("random-rule arguments out of range: n={n}, l={ell}, k={k}, r={r}"));
    }
    Ok(())
}

/// Joint law of (root part size, number of uniformly placed targets in it).
pub fn joint_y<T: Weight>(n: usize, ell: usize, k: usize, r: usize) -> Result<T> {
    check_y_args(n, ell, k, r)?;
    Ok(joint_y_unchecked(n as i64, ell as i64, k as i64, r as i64))
}

pub(crate) fn joint_y_unchecked<T: Weight>(n: i64, ell: i64, k: i64, r: i64) -> T {
    binom::<T>(k, r) * binom::<T>(n - k, ell - r) / binom::<T>(n, ell) * p_root_unchecked::<T>(n, k)
}

/// Which joint law to tabulate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JointKind {
    R,
    L,
    Y,
}

/// Non-zero entries `(k, r, p)` of a joint table, by increasing `k` then `r`.
pub fn joint_table<T: Weight>(kind: JointKind, n: usize, ell: usize) -> Result<Vec<(usize, usize, T)>> {
    if n < 2 || ell == 0 || ell > n {
        return Err(invalid!("joint table needs n >= 2 and 1 <= l <= n"));
    }
    let mut out = Vec::new();
    for k in 1..n {
        let (lo, hi) = match kind {
            JointKind::R | JointKind::L => (1, k.min(ell)),
            JointKind::Y => (ell.saturating_sub(n - k), k.min(ell)),
        };
        for r in lo..=hi {
            let (ni, li, ki, ri) = (n as i64, ell as i64, k as i64, r as i64);
            let p: T = match kind {
                JointKind::R => joint_r_unchecked(ni, li, ki, ri),
                JointKind::L => joint_l_unchecked(ni, li, ki, ri),
                JointKind::Y => joint_y_unchecked(ni, li, ki, ri),
            };
            if !p.is_zero() {
                out.push((k, r, p));
            }
        }
    }
    Ok(out)
}

/// Outcome of [`verify_against_enumeration`].
#[derive(Clone, Debug)]
pub struct EnumerationReport {
    pub n: usize,
    pub ell: usize,
    pub checked: usize,
    /// `(k, r, counted, formula)` for every disagreeing cell.
    pub mismatches: Vec<(usize, usize, Rational, Rational)>,
}

impl EnumerationReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Counts, over all `(tree, edge)` pairs of size `n`, the part holding node
/// `l` by size and by the rank of `l` in it, and compares with [`p_split`].
pub fn verify_against_enumeration(n: usize, ell: usize) -> Result<EnumerationReport> {
    if n > ENUMERATION_CHECK_CAP {
        return Err(Error::BudgetExceeded(format!("enumeration check is capped at n <= {ENUMERATION_CHECK_CAP}")));
    }
    if n < 2 || ell == 0 || ell > n {
        return Err(invalid!("need n >= 2 and 1 <= l <= n"));
    }
    let mut counts = vec![vec![0u64; n + 1]; n + 1];
    let trees = enumerate_all(n)?;
    for t in &trees {
        for c in 2..=n {
            // hanging subtree of c in the full tree
            let mut below = vec![false; n + 1];
            below[c] = true;
            for v in c + 1..=n {
                if below[t.parent(v).expect("non-root")] {
                    below[v] = true;
                }
            }
            let side = below[ell];
            let size = (1..=n).filter(|&v| below[v] == side).count();
            let rank = (1..=ell).filter(|&v| below[v] == side).count();
            counts[size][rank] += 1;
        }
    }
    let total = BigInt::from(trees.len() as u64 * (n as u64 - 1));
    let mut report = EnumerationReport { n, ell, checked: 0, mismatches: Vec::new() };
    for k in 1..n {
        for r in 1..=k.min(ell) {
            let counted = Rational::new(BigInt::from(counts[k][r]), total.clone());
            let formula = p_split(n, ell, k, r)?;
            report.checked += 1;
            if counted != formula {
                report.mismatches.push((k, r, counted, formula));
            }
        }
    }
    // events outside the formula's domain must never occur
    debug_assert!((0..=n).all(|k| counts[k][0] == 0));
    Ok(report)
}

/// Exact sum of a joint table, for normalisation checks.
pub fn table_mass(kind: JointKind, n: usize, ell: usize) -> Result<Rational> {
    Ok(joint_table::<Rational>(kind, n, ell)?.into_iter().fold(Rational::zero(), |acc, (_, _, p)| acc + p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat;

    #[test]
    fn lemma_values() {
        assert_eq!(p_split(2, 1, 1, 1).unwrap(), rat(1, 1));
        assert_eq!(p_split(3, 1, 2, 1).unwrap(), rat(3, 4));
        let mut total = Rational::zero();
        for k in 1..7 {
            for r in 1..=k.min(3) {
                total += p_split(7, 3, k, r).unwrap();
            }
        }
        assert_eq!(total, rat(1, 1));
        assert!(p_split(1, 1, 1, 1).is_err());
        assert!(p_split(4, 2, 4, 1).is_err());
        assert!(p_split(4, 2, 1, 2).is_err());
    }

    #[test]
    fn root_split() {
        assert_eq!(p_root::<Rational>(2, 1).unwrap(), rat(1, 1));
        assert_eq!(p_root::<Rational>(3, 1).unwrap(), rat(1, 4));
        assert_eq!(p_root::<Rational>(3, 2).unwrap(), rat(3, 4));
        for n in 2..=25 {
            for k in 1..n {
                assert_eq!(p_root::<Rational>(n, k).unwrap(), p_split(n, 1, k, 1).unwrap());
            }
        }
        assert!(p_root::<f64>(3, 3).is_err());
    }

    #[test]
    fn simplified_r_matches_lemma() {
        assert_eq!(joint_r::<Rational>(2, 1, 1, 1).unwrap(), rat(1, 1));
        for n in 2..=12 {
            for ell in 1..=n {
                for k in 1..n {
                    for r in 1..=k.min(ell) {
                        assert_eq!(
                            joint_r::<Rational>(n, ell, k, r).unwrap(),
                            p_split(n, ell, k, r).unwrap(),
                            "n={n} l={ell} k={k} r={r}"
                        );
                    }
                }
            }
        }
        assert_eq!(table_mass(JointKind::R, 5, 2).unwrap(), rat(1, 1));
    }

    #[test]
    fn last_rule_matches_lemma() {
        assert_eq!(joint_l::<Rational>(2, 1, 1, 1).unwrap(), rat(1, 1));
        for n in 2..=12 {
            for ell in 1..=n {
                for k in 1..n {
                    for r in 1..=k.min(ell) {
                        let lhs = joint_l::<Rational>(n, ell, k, r).unwrap();
                        let rhs = p_split_or_zero(n, n + 1 - ell, k, k + 1 - r);
                        assert_eq!(lhs, rhs, "n={n} l={ell} k={k} r={r}");
                    }
                }
            }
        }
        assert_eq!(table_mass(JointKind::L, 6, 2).unwrap(), rat(1, 1));
    }

    #[test]
    fn random_rule_law() {
        assert_eq!(joint_y::<Rational>(3, 1, 2, 1).unwrap(), rat(1, 2));
        assert_eq!(joint_y::<Rational>(2, 2, 1, 1).unwrap(), rat(1, 1));
        assert_eq!(joint_y::<Rational>(4, 1, 2, 0).unwrap(), rat(1, 2) * p_root::<Rational>(4, 2).unwrap());
        assert!(joint_y::<Rational>(4, 3, 1, 2).is_err());
        assert!(joint_y::<Rational>(4, 3, 4, 1).is_err());
        for n in 2..=12 {
            for ell in 1..=n {
                assert_eq!(table_mass(JointKind::Y, n, ell).unwrap(), rat(1, 1));
            }
        }
    }

    #[test]
    fn float_evaluation_tracks_exact() {
        for n in 2..=15 {
            for ell in 1..=n {
                for kind in [JointKind::R, JointKind::L, JointKind::Y] {
                    let exact = joint_table::<Rational>(kind, n, ell).unwrap();
                    let float = joint_table::<f64>(kind, n, ell).unwrap();
                    assert_eq!(exact.len(), float.len());
                    for ((k1, r1, p), (k2, r2, q)) in exact.iter().zip(&float) {
                        assert_eq!((k1, r1), (k2, r2));
                        assert!((p.to_f64() - q).abs() <= 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn enumeration_small_cases() {
        assert!(verify_against_enumeration(2, 1).unwrap().passed());
        assert!(verify_against_enumeration(3, 1).unwrap().passed());
        let r = verify_against_enumeration(4, 2).unwrap();
        assert!(r.passed(), "{:?}", r.mismatches);
        assert_eq!(r.checked, 5);
        assert!(matches!(verify_against_enumeration(9, 1), Err(Error::BudgetExceeded(_))));
    }
}
