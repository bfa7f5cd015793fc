//! Ekeland–Hofer capacities, ECH capacity sequences and the bisection solvers
//! for the four-dimensional functions `c_B` and `c_P`.

mod ech;
mod solve;

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::exact_numbers::{render, Rational};

pub use ech::{
    ech_embeds, ech_ellipsoid_sequence, ech_polydisk_capacity, EchTarget, EmbeddingCertificate, TailStatus,
    Verdict, Violation,
};
pub use solve::{solve_c_b, solve_c_p, CapacitySolution, SolverOptions, DEFAULT_MAX_TERMS};

/// One factor capacity of an ellipsoid or polydisk. `Infinite` encodes a `C` factor.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Factor {
    Finite(Rational),
    Infinite,
}

impl Factor {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Factor::Finite(r) => Some(r),
            Factor::Infinite => None,
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::Finite(r) => f.write_str(&render(r)),
            Factor::Infinite => f.write_str("inf"),
        }
    }
}

impl From<Rational> for Factor {
    fn from(r: Rational) -> Self {
        Factor::Finite(r)
    }
}

fn canonical_factors(mut factors: Vec<Factor>) -> Result<Vec<Factor>> {
    if factors.is_empty() {
        return invalid("a domain needs at least one factor");
    }
    for f in &factors {
        if let Factor::Finite(r) = f {
            if !r.is_positive() {
                return invalid(format!("factor capacities must be positive, got {}", render(r)));
            }
        }
    }
    if factors.iter().all(|f| matches!(f, Factor::Infinite)) {
        return invalid("at least one factor must be finite");
    }
    // Finite < Infinite in the derived order, so sorting puts finite entries first.
    factors.sort();
    Ok(factors)
}

/// `E(a_1, ..., a_n) = { Σ π|z_j|²/a_j ≤ 1 }`, factors sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ellipsoid {
    factors: Vec<Factor>,
}

impl Ellipsoid {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        Ok(Ellipsoid { factors: canonical_factors(factors)? })
    }

    pub fn finite(factors: &[Rational]) -> Result<Self> {
        Self::new(factors.iter().cloned().map(Factor::Finite).collect())
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn finite_factors(&self) -> impl Iterator<Item = &Rational> {
        self.factors.iter().filter_map(Factor::finite)
    }

    pub fn scaled(&self, by: &Rational) -> Result<Self> {
        if !by.is_positive() {
            return invalid("scale factor must be positive");
        }
        let factors = self
            .factors
            .iter()
            .map(|f| match f {
                Factor::Finite(r) => Factor::Finite(r * by),
                Factor::Infinite => Factor::Infinite,
            })
            .collect();
        Self::new(factors)
    }
}

/// `P(a_1, ..., a_n) = { π|z_j|² ≤ a_j for all j }`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polydisk {
    factors: Vec<Factor>,
}

impl Polydisk {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        Ok(Polydisk { factors: canonical_factors(factors)? })
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SequenceKind {
    Eh,
    EchEllipsoid,
    EchPolydisk,
}

#[derive(Debug, Clone)]
enum Enumerator {
    /// Multiples `m·a_i`, scaled to integers over a common denominator.
    Eh { scaled: Vec<BigInt>, heap: BinaryHeap<Reverse<(BigInt, usize)>> },
    /// Lattice values `m·A + n·B` over a common denominator.
    Lattice { a: BigInt, b: BigInt, heap: BinaryHeap<Reverse<(BigInt, u64, u64)>> },
    Polydisk { a: Rational, b: Rational },
}

/// Lazily enumerated nondecreasing capacity sequence with a memoized prefix.
///
/// Instances hold mutable enumerator state: they may be moved between threads
/// but are not meant to be shared concurrently.
#[derive(Debug, Clone)]
pub struct CapacitySequence {
    kind: SequenceKind,
    denominator: BigInt,
    enumerator: Enumerator,
    prefix: Vec<Rational>,
}

fn common_denominator<'a>(values: impl Iterator<Item = &'a Rational>) -> BigInt {
    values.fold(BigInt::from(1), |acc, r| num_integer::Integer::lcm(&acc, r.denom()))
}

fn scale_to_integer(r: &Rational, den: &BigInt) -> BigInt {
    r.numer() * (den / r.denom())
}

impl CapacitySequence {
    /// Ekeland–Hofer capacities of an ellipsoid: indexed from `k = 1`.
    pub fn ekeland_hofer(e: &Ellipsoid) -> Self {
        let finite: Vec<&Rational> = e.finite_factors().collect();
        let den = common_denominator(finite.iter().copied());
        let scaled: Vec<BigInt> = finite.iter().map(|r| scale_to_integer(r, &den)).collect();
        let heap = scaled.iter().enumerate().map(|(i, v)| Reverse((v.clone(), i))).collect();
        CapacitySequence {
            kind: SequenceKind::Eh,
            denominator: den,
            enumerator: Enumerator::Eh { scaled, heap },
            prefix: Vec::new(),
        }
    }

    /// ECH capacities of `E(a, b)`: sorted `{m·a + n·b}`, indexed from `k = 0`.
    pub fn ech_ellipsoid(a: &Rational, b: &Rational) -> Result<Self> {
        if !a.is_positive() || !b.is_positive() {
            return invalid("ellipsoid factors must be positive");
        }
        let den = common_denominator([a, b].into_iter());
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((BigInt::zero(), 0u64, 0u64)));
        Ok(CapacitySequence {
            kind: SequenceKind::EchEllipsoid,
            enumerator: Enumerator::Lattice { a: scale_to_integer(a, &den), b: scale_to_integer(b, &den), heap },
            denominator: den,
            prefix: Vec::new(),
        })
    }

    /// ECH capacities of `P(a, b)`, indexed from `k = 0`.
    pub fn ech_polydisk(a: &Rational, b: &Rational) -> Result<Self> {
        if !a.is_positive() || !b.is_positive() {
            return invalid("polydisk factors must be positive");
        }
        Ok(CapacitySequence {
            kind: SequenceKind::EchPolydisk,
            denominator: BigInt::from(1),
            enumerator: Enumerator::Polydisk { a: a.clone(), b: b.clone() },
            prefix: Vec::new(),
        })
    }

    pub fn kind(&self) -> SequenceKind {
        self.kind
    }

    fn first_index(&self) -> usize {
        match self.kind {
            SequenceKind::Eh => 1,
            _ => 0,
        }
    }

    fn produce_next(&mut self) -> Rational {
        let index = self.prefix.len() + self.first_index();
        match &mut self.enumerator {
            Enumerator::Eh { scaled, heap } => {
                let Reverse((value, i)) = heap.pop().expect("EH frontier never empties");
                heap.push(Reverse((&value + &scaled[i], i)));
                Rational::new(value, self.denominator.clone())
            }
            Enumerator::Lattice { a, b, heap } => {
                let Reverse((value, m, n)) = heap.pop().expect("lattice frontier never empties");
                // Each lattice point has a unique parent: (m, n) -> (m, n+1) always,
                // (m, 0) -> (m+1, 0) along the axis.
                heap.push(Reverse((&value + &*b, m, n + 1)));
                if n == 0 {
                    heap.push(Reverse((&value + &*a, m + 1, 0)));
                }
                Rational::new(value, self.denominator.clone())
            }
            Enumerator::Polydisk { a, b } => polydisk_value(a, b, index as u64),
        }
    }

    /// The value at index `k` (from 1 for EH, from 0 for ECH).
    pub fn value(&mut self, k: usize) -> Result<Rational> {
        let first = self.first_index();
        if k < first {
            return invalid(format!("index {k} below the first index {first}"));
        }
        let offset = k - first;
        while self.prefix.len() <= offset {
            let v = self.produce_next();
            self.prefix.push(v);
        }
        Ok(self.prefix[offset].clone())
    }

    /// Values at indices `first..=last`.
    pub fn prefix(&mut self, last: usize) -> Result<&[Rational]> {
        self.value(last)?;
        let len = last + 1 - self.first_index();
        Ok(&self.prefix[..len])
    }
}

fn polydisk_value(a: &Rational, b: &Rational, k: u64) -> Rational {
    // For fixed m the smallest admissible n is ceil((k+1)/(m+1)) - 1.
    let mut best: Option<Rational> = None;
    for m in 0..=k {
        let n = (k + 1).div_ceil(m + 1) - 1;
        let v = a * Rational::from_integer(m.into()) + b * Rational::from_integer(n.into());
        if best.as_ref().map_or(true, |cur| v < *cur) {
            best = Some(v);
        }
        if n == 0 {
            break;
        }
    }
    best.expect("k >= 0 always admits m = k")
}

/// k-th Ekeland–Hofer capacity (k ≥ 1): k-th smallest of `{m·a_i : m ≥ 1}`
/// with multiplicity; infinite factors contribute nothing.
pub fn eh_capacity(e: &Ellipsoid, k: usize) -> Result<Rational> {
    if k == 0 {
        return invalid("Ekeland–Hofer capacities are indexed from k = 1");
    }
    CapacitySequence::ekeland_hofer(e).value(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_numbers::{int, rat};
    use proptest::prelude::*;

    fn e(f: &[Factor]) -> Ellipsoid {
        Ellipsoid::new(f.to_vec()).unwrap()
    }

    #[test]
    fn eh_examples() {
        let fin = |r: Rational| Factor::Finite(r);
        assert_eq!(eh_capacity(&e(&[fin(int(1)), fin(rat(3, 2)), fin(int(7))]), 2).unwrap(), rat(3, 2));
        assert_eq!(eh_capacity(&e(&[fin(int(1)), fin(int(3)), fin(int(3))]), 2).unwrap(), int(2));
        let z = e(&[fin(rat(5, 2)), fin(rat(5, 2)), Factor::Infinite, Factor::Infinite]);
        assert_eq!(eh_capacity(&z, 2).unwrap(), rat(5, 2));
        assert_eq!(eh_capacity(&e(&[fin(int(1)), fin(int(5))]), 1).unwrap(), int(1));
        assert!(eh_capacity(&z, 0).is_err());
    }

    #[test]
    fn domain_validation() {
        assert!(Ellipsoid::new(vec![]).is_err());
        assert!(Ellipsoid::new(vec![Factor::Infinite]).is_err());
        assert!(Ellipsoid::finite(&[int(0), int(1)]).is_err());
        let sorted = Ellipsoid::new(vec![Factor::Infinite, Factor::Finite(int(3)), Factor::Finite(int(1))]).unwrap();
        assert_eq!(sorted.factors()[0], Factor::Finite(int(1)));
        assert_eq!(sorted.factors()[2], Factor::Infinite);
        assert!(Polydisk::new(vec![Factor::Finite(int(-1))]).is_err());
    }

    #[test]
    fn eh_brute_force() {
        let factors = [rat(3, 2), int(2), rat(7, 3)];
        let mut all: Vec<Rational> = Vec::new();
        for a in &factors {
            for m in 1..=60 {
                all.push(a * int(m));
            }
        }
        all.sort();
        let mut seq = CapacitySequence::ekeland_hofer(&Ellipsoid::finite(&factors).unwrap());
        for k in 1..=60 {
            assert_eq!(seq.value(k).unwrap(), all[k - 1]);
        }
    }

    fn small_rational() -> impl Strategy<Value = Rational> {
        (1i64..=24, 1i64..=8).prop_map(|(p, q)| rat(p, q))
    }

    proptest! {
        #[test]
        fn eh_monotone_under_inclusion(
            base in prop::collection::vec(small_rational(), 1..4),
            grow in prop::collection::vec(0i64..5, 4),
        ) {
            let bigger: Vec<Rational> = base.iter().zip(&grow).map(|(a, g)| a + rat(*g, 3)).collect();
            let small = Ellipsoid::finite(&base).unwrap();
            let large = Ellipsoid::finite(&bigger).unwrap();
            let mut s = CapacitySequence::ekeland_hofer(&small);
            let mut l = CapacitySequence::ekeland_hofer(&large);
            for k in 1..=50 {
                prop_assert!(s.value(k).unwrap() <= l.value(k).unwrap());
            }
        }

        #[test]
        fn eh_conformal(base in prop::collection::vec(small_rational(), 1..4), lambda in small_rational()) {
            let el = Ellipsoid::finite(&base).unwrap();
            let scaled = el.scaled(&lambda).unwrap();
            for k in 1..=30 {
                prop_assert_eq!(eh_capacity(&scaled, k).unwrap(), &lambda * eh_capacity(&el, k).unwrap());
            }
        }
    }
}
