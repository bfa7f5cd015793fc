//! Exact rationals, staircase integer sequences and the two accumulation
//! constants τ⁴ = (7+3√5)/2 and σ² = 3+2√2.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{invalid, Result};

/// Arbitrary precision fraction, always kept in lowest terms with a positive
/// denominator.
pub type Rational = BigRational;

/// Index into one of the staircase sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StaircaseIndex(pub usize);

impl From<usize> for StaircaseIndex {
    fn from(n: usize) -> Self {
        StaircaseIndex(n)
    }
}

/// Builds the canonical rational `p/q`.
pub fn normalize(p: impl Into<BigInt>, q: impl Into<BigInt>) -> Result<Rational> {
    let q = q.into();
    if q.is_zero() {
        return invalid("zero denominator");
    }
    Ok(BigRational::new(p.into(), q))
}

/// Shorthand for small literal rationals. Panics on a zero denominator.
pub fn rat(p: i64, q: i64) -> Rational {
    normalize(p, q).expect("nonzero denominator")
}

pub fn int(p: i64) -> Rational {
    Rational::from_integer(BigInt::from(p))
}

/// Floor of a rational as a big integer.
pub fn floor(r: &Rational) -> BigInt {
    r.numer().div_floor(r.denom())
}

pub fn to_f64(r: &Rational) -> f64 {
    // Scale down huge operands before converting so the quotient stays finite.
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000);
            let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
            let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
            n / d
        }
    }
}

/// Exact rational with the same value as a finite float.
pub fn from_f64(x: f64) -> Result<Rational> {
    BigRational::from_float(x).ok_or_else(|| crate::Error::InvalidInput(format!("{x} is not finite")))
}

/// `p/q` rendering, or just `p` for integers.
pub fn render(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `p`, `p/q` or a finite decimal such as `2.5` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad_number(s))?;
        let q: BigInt = q.trim().parse().map_err(|_| bad_number(s))?;
        return normalize(p, q);
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad_number(s));
        }
        let negative = whole.starts_with('-');
        let whole_digits = whole.trim_start_matches(['-', '+']);
        let digits = format!("{}{}", if whole_digits.is_empty() { "0" } else { whole_digits }, frac);
        let mut p: BigInt = digits.parse().map_err(|_| bad_number(s))?;
        if negative {
            p = -p;
        }
        return normalize(p, BigInt::from(10u32).pow(frac.len() as u32));
    }
    let p: BigInt = s.parse().map_err(|_| bad_number(s))?;
    Ok(Rational::from_integer(p))
}

fn bad_number(s: &str) -> crate::Error {
    crate::Error::InvalidInput(format!("cannot parse `{s}` as a rational"))
}

/// Runs a two-term integer recurrence `x_{n+1} = a·x_n + b·x_{n-1}`.
fn linear_recurrence(seed0: i64, seed1: i64, a: i64, b: i64, n: usize) -> BigInt {
    let (mut prev, mut cur) = (BigInt::from(seed0), BigInt::from(seed1));
    if n == 0 {
        return prev;
    }
    for _ in 1..n {
        let next = &cur * a + &prev * b;
        prev = std::mem::replace(&mut cur, next);
    }
    cur
}

/// Odd-indexed Fibonacci numbers 1, 2, 5, 13, 34, ... via `g_{n+1} = 3g_n - g_{n-1}`.
pub fn odd_fibonacci(n: impl Into<StaircaseIndex>) -> BigInt {
    linear_recurrence(1, 2, 3, -1, n.into().0)
}

/// Pell numbers 0, 1, 2, 5, 12, 29, ...
pub fn pell(n: impl Into<StaircaseIndex>) -> BigInt {
    linear_recurrence(0, 1, 2, 1, n.into().0)
}

/// Half companion Pell numbers 1, 1, 3, 7, 17, 41, ...
pub fn half_companion_pell(n: impl Into<StaircaseIndex>) -> BigInt {
    linear_recurrence(1, 1, 2, 1, n.into().0)
}

/// `b_n = g_{n+2} / g_n`, the ball staircase abscissae.
pub fn b_ratio(n: impl Into<StaircaseIndex>) -> Rational {
    let n = n.into().0;
    BigRational::new(odd_fibonacci(n + 2), odd_fibonacci(n))
}

/// `β_n`: `H_{n+2}/H_n` for even `n`, `P_{n+2}/P_n` for odd `n`.
pub fn beta_ratio(n: impl Into<StaircaseIndex>) -> Rational {
    let n = n.into().0;
    if n % 2 == 0 {
        BigRational::new(half_companion_pell(n + 2), half_companion_pell(n))
    } else {
        BigRational::new(pell(n + 2), pell(n))
    }
}

/// A real quadratic irrational `(p + q√d) / r` with `r > 0` and `d` square free.
///
/// Comparisons against rationals are decided exactly by squaring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadraticSurd {
    pub p: BigInt,
    pub q: BigInt,
    pub d: u32,
    pub r: BigInt,
}

impl QuadraticSurd {
    pub fn new(p: i64, q: i64, d: u32, r: i64) -> Result<Self> {
        if r <= 0 {
            return invalid("surd denominator must be positive");
        }
        if d < 2 || (2..=d).any(|f| f * f <= d && d % (f * f) == 0) {
            return invalid(format!("radicand {d} is not square free"));
        }
        Ok(QuadraticSurd { p: p.into(), q: q.into(), d, r: r.into() })
    }

    /// Exact sign of `self - x`.
    pub fn cmp_rational(&self, x: &Rational) -> Ordering {
        // Compare q√d against y = x·r - p.
        let y = x * Rational::from_integer(self.r.clone()) - Rational::from_integer(self.p.clone());
        let lhs_sign = self.q.sign();
        let rhs_sign = if y.is_zero() { Sign::NoSign } else if y.is_positive() { Sign::Plus } else { Sign::Minus };
        let sign_rank = |s: Sign| match s {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        };
        if lhs_sign != rhs_sign {
            return sign_rank(lhs_sign).cmp(&sign_rank(rhs_sign));
        }
        if lhs_sign == Sign::NoSign {
            return Ordering::Equal;
        }
        let lhs_sq = Rational::from_integer(&self.q * &self.q * BigInt::from(self.d));
        let rhs_sq = &y * &y;
        let by_magnitude = lhs_sq.cmp(&rhs_sq);
        if lhs_sign == Sign::Plus {
            by_magnitude
        } else {
            by_magnitude.reverse()
        }
    }

    /// Coefficients `(b, c)` of the monic minimal polynomial `x² + b·x + c`.
    pub fn minimal_polynomial(&self) -> (Rational, Rational) {
        let r = Rational::from_integer(self.r.clone());
        let b = -Rational::from_integer(&self.p * 2) / &r;
        let c = Rational::from_integer(&self.p * &self.p - &self.q * &self.q * BigInt::from(self.d)) / (&r * &r);
        (b, c)
    }

    pub fn to_f64(&self) -> f64 {
        let p = self.p.to_f64().unwrap_or(f64::NAN);
        let q = self.q.to_f64().unwrap_or(f64::NAN);
        let r = self.r.to_f64().unwrap_or(f64::NAN);
        (p + q * f64::from(self.d).sqrt()) / r
    }

    /// Rational enclosure `[lo, hi]` of width `10^-digits` containing the value.
    pub fn enclosure(&self, digits: u32) -> (Rational, Rational) {
        let scale = BigInt::from(10u32).pow(digits);
        let radicand = &self.q * &self.q * BigInt::from(self.d) * &scale * &scale;
        let s = radicand.sqrt();
        // |q|√d·10^k lies in [s, s+1].
        let (lo_root, hi_root) = if self.q.is_negative() { (-(&s + 1u32), -s.clone()) } else { (s.clone(), &s + 1u32) };
        let base = &self.p * &scale;
        let den = &self.r * &scale;
        (BigRational::new(&base + lo_root, den.clone()), BigRational::new(&base + hi_root, den))
    }

    /// Decimal rendering truncated to `digits` places, certified by the enclosure.
    pub fn to_decimal_string(&self, digits: u32) -> String {
        let (lo, _) = self.enclosure(digits + 1);
        let scale = BigInt::from(10u32).pow(digits);
        let scaled = floor(&(lo * Rational::from_integer(scale)));
        let (int_part, frac_part) = scaled.div_mod_floor(&BigInt::from(10u32).pow(digits));
        format!("{}.{:0>width$}", int_part, frac_part.to_string(), width = digits as usize)
    }
}

impl fmt::Display for QuadraticSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}+{}√{})/{}", self.p, self.q, self.d, self.r)
    }
}

/// τ⁴ = (7+3√5)/2, limit of the ball staircase `b_n`.
pub fn tau_fourth() -> QuadraticSurd {
    QuadraticSurd::new(7, 3, 5, 2).expect("valid surd")
}

/// σ² = 3+2√2, limit of the cube staircase `β_n`.
pub fn sigma_squared() -> QuadraticSurd {
    QuadraticSurd::new(3, 2, 2, 1).expect("valid surd")
}
