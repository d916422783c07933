//! Exact and floating scalar helpers shared by the probability modules.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational, always kept in lowest terms with a positive
/// denominator.
pub type Rational = BigRational;

/// Scalar field the recurrences can run over: exact rationals or `f64`.
pub trait Weight: Clone + Debug + PartialEq + Num + FromPrimitive + Send + Sync + 'static {
    /// Exact arithmetic: identities hold with equality, not up to rounding.
    const EXACT: bool;
    fn from_ratio(num: &BigInt, den: &BigInt) -> Self;
    fn to_f64(&self) -> f64;
    fn is_negative_value(&self) -> bool;
}

impl Weight for f64 {
    const EXACT: bool = false;
    fn from_ratio(num: &BigInt, den: &BigInt) -> Self {
        ToPrimitive::to_f64(&Rational::new(num.clone(), den.clone())).unwrap_or(f64::NAN)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_negative_value(&self) -> bool {
        *self < 0.0
    }
}

impl Weight for Rational {
    const EXACT: bool = true;
    fn from_ratio(num: &BigInt, den: &BigInt) -> Self {
        Rational::new(num.clone(), den.clone())
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_negative_value(&self) -> bool {
        self.is_negative()
    }
}

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int<T: Weight>(x: i64) -> T {
    T::from_i64(x).expect("integer fits the scalar type")
}

/// `binom(a, b)` with the convention that it vanishes for `b < 0`, `b > a`
/// or `a < 0`.
pub fn binom_big(a: i64, b: i64) -> BigInt {
    if a < 0 || b < 0 || b > a {
        return BigInt::zero();
    }
    let b = b.min(a - b);
    let mut acc = BigInt::one();
    for i in 0..b {
        acc *= a - i;
        acc /= i + 1;
    }
    acc
}

/// Same convention as [`binom_big`], evaluated in the scalar type.
pub fn binom<T: Weight>(a: i64, b: i64) -> T {
    if a < 0 || b < 0 || b > a {
        return T::zero();
    }
    if T::EXACT {
        return T::from_ratio(&binom_big(a, b), &BigInt::one());
    }
    let b = b.min(a - b);
    let mut acc = T::one();
    for i in 0..b {
        acc = acc * int::<T>(a - i) / int::<T>(i + 1);
    }
    acc
}

pub fn factorial_big(n: i64) -> BigInt {
    (2..=n).fold(BigInt::one(), |acc, i| acc * i)
}

pub fn factorial<T: Weight>(n: i64) -> T {
    if T::EXACT {
        return T::from_ratio(&factorial_big(n), &BigInt::one());
    }
    (2..=n).fold(T::one(), |acc, i| acc * int::<T>(i))
}

/// Product of the integers `lo..=hi`, one for an empty range.
fn product_big(lo: i64, hi: i64) -> BigInt {
    (lo..=hi).fold(BigInt::one(), |acc, i| acc * i)
}

/// Falling factorial `x (x-1) ... (x-k+1)`.
///
/// Negative exponents follow the reciprocal convention
/// `x^(-p) = 1 / ((x+1)(x+2)...(x+p))`, i.e. `(j-1)^(-p)` is the inverse of
/// the rising factorial `j (j+1) ... (j+p-1)`.
pub fn falling<T: Weight>(x: i64, k: i64) -> T {
    if T::EXACT {
        return if k >= 0 {
            T::from_ratio(&product_big(x - k + 1, x), &BigInt::one())
        } else {
            let denom = product_big(x + 1, x - k);
            debug_assert!(!denom.is_zero(), "reciprocal falling factorial of a pole");
            T::from_ratio(&BigInt::one(), &denom)
        };
    }
    if k >= 0 {
        (0..k).fold(T::one(), |acc, i| acc * int::<T>(x - i))
    } else {
        let denom = (1..=-k).fold(T::one(), |acc, i| acc * int::<T>(x + i));
        debug_assert!(!denom.is_zero(), "reciprocal falling factorial of a pole");
        T::one() / denom
    }
}

pub fn rising<T: Weight>(x: i64, k: i64) -> T {
    (0..k.max(0)).fold(T::one(), |acc, i| acc * int::<T>(x + i))
}

/// Stirling numbers of the second kind `S(s, j)` for `0 <= j <= s`.
pub fn stirling2_row(s: usize) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for m in 1..=s {
        let mut next = vec![BigInt::zero(); m + 1];
        for j in 1..=m {
            let keep = if j < row.len() { &row[j] * j } else { BigInt::zero() };
            next[j] = keep + &row[j - 1];
        }
        row = next;
    }
    row
}
