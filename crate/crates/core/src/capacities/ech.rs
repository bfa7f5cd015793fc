//! ECH capacity sequences used as an independent four-dimensional oracle.

use num_traits::Signed;
use serde::Serialize;

use super::{CapacitySequence, Ellipsoid, Factor};
use crate::error::{invalid, Result};
use crate::exact_numbers::{to_f64, Rational};

/// k-th element (from 0, with multiplicity) of `{m·a + n·b : m, n ≥ 0}`.
pub fn ech_ellipsoid_sequence(a: &Rational, b: &Rational, k: usize) -> Result<Rational> {
    CapacitySequence::ech_ellipsoid(a, b)?.value(k)
}

/// `min { a·m + b·n : (m+1)(n+1) ≥ k+1 }`.
pub fn ech_polydisk_capacity(a: &Rational, b: &Rational, k: usize) -> Result<Rational> {
    CapacitySequence::ech_polydisk(a, b)?.value(k)
}

/// Four-dimensional target of an ECH comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EchTarget {
    Ball(Rational),
    Cube(Rational),
}

impl EchTarget {
    pub fn size(&self) -> &Rational {
        match self {
            EchTarget::Ball(r) | EchTarget::Cube(r) => r,
        }
    }

    pub(crate) fn with_size(&self, r: Rational) -> Self {
        match self {
            EchTarget::Ball(_) => EchTarget::Ball(r),
            EchTarget::Cube(_) => EchTarget::Cube(r),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Obstructed,
    PassesUpToK,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub k: usize,
    pub lhs: Rational,
    pub rhs: Rational,
}

/// Whether the comparison beyond the checked prefix is covered by the
/// lattice-count tail estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum TailStatus {
    NotApplicable,
    Certified { from_k: u64 },
    Uncertified,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingCertificate {
    pub verdict: Verdict,
    pub k_checked: usize,
    pub first_violation: Option<Violation>,
    pub tail: TailStatus,
}

impl EmbeddingCertificate {
    pub fn passes(&self) -> bool {
        self.verdict == Verdict::PassesUpToK
    }
}

/// Unit target sequences `N(1,1)_k` and `M(1,1)_k` as plain integers.
pub(crate) fn unit_target_sequence(cube: bool, last: usize) -> Vec<u64> {
    if cube {
        // min { m + n : (m+1)(n+1) ≥ k+1 }
        (0..=last as u64)
            .map(|k| (0..=k).map(|m| m + (k + 1).div_ceil(m + 1) - 1).min().unwrap_or(0))
            .collect()
    } else {
        // d appears d+1 times.
        let mut out = Vec::with_capacity(last + 1);
        let mut d = 0u64;
        while out.len() <= last {
            for _ in 0..=d {
                out.push(d);
            }
            d += 1;
        }
        out.truncate(last + 1);
        out
    }
}

pub(crate) fn source_factors(source: &Ellipsoid) -> Result<(Rational, Rational)> {
    match source.factors() {
        [Factor::Finite(a), Factor::Finite(b)] => Ok((a.clone(), b.clone())),
        _ => invalid("ECH comparison needs a four-dimensional ellipsoid with two finite factors"),
    }
}

/// Smallest `k` beyond which `N(a1,a2)_k ≤ R·unit_k` follows from lattice-point counts,
/// or `None` when the volume constraint leaves no room for a tail estimate.
///
/// Uses `N(a1,a2)_k ≤ √(2·a1·a2·(k+1))` (a triangle of area L²/(2·a1·a2) holds
/// at least that many lattice points) and `N(1,1)_k ≥ √(2(k+1)) − 2`,
/// `M(1,1)_k ≥ 2√(k+1) − 2`.
fn tail_threshold(a1: f64, a2: f64, r: f64, cube: bool) -> Option<u64> {
    let source_rate = (2.0 * a1 * a2).sqrt();
    let target_rate = if cube { 2.0 * r } else { std::f64::consts::SQRT_2 * r };
    let margin = target_rate - source_rate;
    if !(margin > 0.0) {
        return None;
    }
    // sqrt(k+1)·margin ≥ 2r, padded for rounding.
    let root = 2.0 * r / margin * 1.001;
    let k = (root * root).ceil();
    if k.is_finite() && k < 1e18 {
        Some(k as u64)
    } else {
        None
    }
}

/// Termwise comparison of `N(source)_k` against the target's ECH sequence for
/// `k ≤ max_k`.
pub fn ech_embeds(source: &Ellipsoid, target: &EchTarget, max_k: usize) -> Result<EmbeddingCertificate> {
    if max_k == 0 {
        return invalid("need at least one comparison (K ≥ 1)");
    }
    let (a1, a2) = source_factors(source)?;
    let mut seq = CapacitySequence::ech_ellipsoid(&a1, &a2)?;
    let cube = matches!(target, EchTarget::Cube(_));
    let unit = unit_target_sequence(cube, max_k);
    compare_prefix(seq.prefix(max_k)?, &unit, target, (&a1, &a2))
}

pub(crate) fn compare_prefix(
    source: &[Rational],
    unit: &[u64],
    target: &EchTarget,
    factors: (&Rational, &Rational),
) -> Result<EmbeddingCertificate> {
    let r = target.size();
    if !r.is_positive() {
        return invalid("target size must be positive");
    }
    let max_k = source.len().min(unit.len()) - 1;
    for k in 1..=max_k {
        let rhs = r * Rational::from_integer(unit[k].into());
        if source[k] > rhs {
            return Ok(EmbeddingCertificate {
                verdict: Verdict::Obstructed,
                k_checked: k,
                first_violation: Some(Violation { k, lhs: source[k].clone(), rhs }),
                tail: TailStatus::NotApplicable,
            });
        }
    }
    let cube = matches!(target, EchTarget::Cube(_));
    let tail = match tail_threshold(to_f64(factors.0), to_f64(factors.1), to_f64(r), cube) {
        Some(from) if from <= max_k as u64 + 1 => TailStatus::Certified { from_k: from },
        _ => TailStatus::Uncertified,
    };
    Ok(EmbeddingCertificate { verdict: Verdict::PassesUpToK, k_checked: max_k, first_violation: None, tail })
}

/// Largest ratio `N_k / unit_k` among indices violating at size `r`.
pub(crate) fn largest_violating_ratio(source: &[Rational], unit: &[u64], r: &Rational) -> Option<Rational> {
    source
        .iter()
        .zip(unit)
        .skip(1)
        .filter(|(_, &u)| u > 0)
        .map(|(s, &u)| s / Rational::from_integer(u.into()))
        .filter(|ratio| ratio > r)
        .max()
}
