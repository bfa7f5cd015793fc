//! Bounds on the stabilized capacity functions
//!
//! ```text
//! f(a_2, ..., a_n) = inf { R : E(1, a_2, ..., a_n) ↪ B⁴(R) × C^(n-2) }
//! g(a_2, ..., a_n) = inf { R : E(1, a_2, ..., a_n) ↪ P(R, R) × C^(n-2) }
//! ```
//!
//! Lower bounds come from Ekeland–Hofer capacities, nonsqueezing, and the
//! optimality of the folding bound at `a_2 = 3d − 1` (ball) or `a_2 = 2d + 1`
//! (cube) combined with monotonicity in `a_2`. All of them assume
//! `a_3, ..., a_n ≥ a_2`.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive};
use serde::Serialize;

use crate::capacities::{solve_c_b, solve_c_p, CapacitySolution, SolverOptions};
use crate::error::{invalid, Result};
use crate::exact_numbers::{b_ratio, beta_ratio, floor, int, sigma_squared, tau_fourth, to_f64, QuadraticSurd, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TargetKind {
    Ball,
    Cube,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LowerMechanism {
    Eh,
    Nonsqueezing,
    FoldOptimality,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum UpperMechanism {
    /// Folding construction: 3a/(a+1) or 2a/(a+1).
    Fold,
    /// Product of a four-dimensional embedding with the identity; here the inclusion.
    Product,
}

/// The standing hypothesis under which the lower bounds hold.
pub const HYPOTHESIS: &str = "a_3, ..., a_n >= a_2";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundReport {
    pub a2: Rational,
    pub target: TargetKind,
    pub lower: Rational,
    pub lower_mechanism: LowerMechanism,
    pub upper: Rational,
    pub upper_mechanism: UpperMechanism,
    pub optimal: bool,
    pub witness_d: Option<u64>,
    pub gap: Rational,
    pub hypothesis: &'static str,
    /// Informational only: staircase points carry the open conjecture that the
    /// product embedding is optimal there.
    pub conjecture_note: Option<String>,
}

fn check_a2(a2: &Rational) -> Result<()> {
    if *a2 < int(1) {
        return invalid(format!("a2 must be at least 1, got {}", crate::exact_numbers::render(a2)));
    }
    Ok(())
}

/// `3a₂/(a₂+1)`.
pub fn fold_upper_ball(a2: &Rational) -> Result<Rational> {
    check_a2(a2)?;
    Ok(int(3) * a2 / (a2 + int(1)))
}

/// `2a₂/(a₂+1)`.
pub fn fold_upper_cube(a2: &Rational) -> Result<Rational> {
    check_a2(a2)?;
    Ok(int(2) * a2 / (a2 + int(1)))
}

fn to_u64(b: &BigInt) -> Option<u64> {
    b.to_u64()
}

/// Picks the largest candidate; ties go to the earlier (simpler) mechanism.
fn best(candidates: Vec<(Rational, LowerMechanism)>) -> (Rational, LowerMechanism) {
    candidates
        .into_iter()
        .reduce(|acc, c| if c.0 > acc.0 { c } else { acc })
        .expect("at least one candidate")
}

/// Lower bound on `f` and its mechanism.
pub fn lower_bound_ball(a2: &Rational) -> Result<(Rational, LowerMechanism)> {
    check_a2(a2)?;
    let two = int(2);
    let mut candidates = Vec::new();
    if *a2 <= two {
        candidates.push((a2.clone(), LowerMechanism::Eh));
    } else {
        candidates.push((two.clone(), LowerMechanism::Eh));
    }
    if *a2 >= two {
        let d = floor(&((a2 + int(1)) / int(3)));
        candidates.push((int(3) - Rational::new(BigInt::one(), d), LowerMechanism::FoldOptimality));
    }
    Ok(best(candidates))
}

/// Lower bound on `g` and its mechanism.
pub fn lower_bound_cube(a2: &Rational) -> Result<(Rational, LowerMechanism)> {
    check_a2(a2)?;
    let mut candidates = vec![(int(1), LowerMechanism::Nonsqueezing)];
    if *a2 >= int(3) {
        let d = floor(&((a2 - int(1)) / int(2)));
        candidates.push((int(2) - Rational::new(BigInt::one(), d + 1), LowerMechanism::FoldOptimality));
    }
    Ok(best(candidates))
}

/// `dR − (3d−1) > 0`: true when an embedding into `B⁴(R) × C^(n-2)` is not
/// excluded by the degree-`d` plane.
pub fn plane_area_obstruction_ball(r: &Rational, d: u64) -> Result<bool> {
    if !r.is_positive() || d == 0 {
        return invalid("need R > 0 and d ≥ 1");
    }
    let d = int(d as i64);
    Ok(&d * r - (int(3) * &d - int(1)) > int(0))
}

/// `dR₁ + R₂ > 2d + 1` for `R₁ ≤ R₂`.
pub fn plane_area_obstruction_cube(r1: &Rational, r2: &Rational, d: u64) -> Result<bool> {
    if !r1.is_positive() || !r2.is_positive() || d == 0 {
        return invalid("need R1, R2 > 0 and d ≥ 1");
    }
    if r1 > r2 {
        return invalid("the bidegree (d,1) plane needs R1 ≤ R2");
    }
    let d = int(d as i64);
    Ok(&d * r1 + r2 > int(2) * d + int(1))
}

/// Index `n` with `b_n == a2` (or `β_n`), scanning while the staircase is below `a2`.
pub fn staircase_index(a2: &Rational, target: TargetKind) -> Option<usize> {
    let term = |n: usize| match target {
        TargetKind::Ball => b_ratio(n),
        TargetKind::Cube => beta_ratio(n),
    };
    // β_n oscillates, so scan a fixed window rather than stopping at the first overshoot.
    (0..200).find(|&n| term(n) == *a2)
}

fn accumulation_point(target: TargetKind) -> QuadraticSurd {
    match target {
        TargetKind::Ball => tau_fourth(),
        TargetKind::Cube => sigma_squared(),
    }
}

pub fn classify(a2: &Rational, target: TargetKind) -> Result<BoundReport> {
    check_a2(a2)?;
    let (lower, lower_mechanism) = match target {
        TargetKind::Ball => lower_bound_ball(a2)?,
        TargetKind::Cube => lower_bound_cube(a2)?,
    };
    let fold = match target {
        TargetKind::Ball => fold_upper_ball(a2)?,
        TargetKind::Cube => fold_upper_cube(a2)?,
    };
    // E(1, a2, ...) ⊂ B⁴(a2) × C^(n-2) and ⊂ P(a2, a2) × C^(n-2).
    let (upper, upper_mechanism) =
        if *a2 <= fold { (a2.clone(), UpperMechanism::Product) } else { (fold, UpperMechanism::Fold) };
    debug_assert!(lower <= upper);
    let optimal = lower == upper;
    let witness_d = match target {
        TargetKind::Ball if *a2 >= int(2) => {
            let d = floor(&((a2 + int(1)) / int(3)));
            let value = int(3) - Rational::new(BigInt::one(), d.clone());
            (value == lower).then(|| to_u64(&d)).flatten()
        }
        TargetKind::Cube if *a2 >= int(3) => {
            let d = floor(&((a2 - int(1)) / int(2)));
            let value = int(2) - Rational::new(BigInt::one(), &d + 1);
            (value == lower).then(|| to_u64(&d)).flatten()
        }
        _ => None,
    };
    let conjecture_note = staircase_index(a2, target).map(|n| match target {
        TargetKind::Ball => format!("a2 = b_{n}: product embedding conjectured optimal (open)"),
        TargetKind::Cube => format!("a2 = beta_{n}: product embedding conjectured optimal (open)"),
    });
    Ok(BoundReport {
        gap: &upper - &lower,
        a2: a2.clone(),
        target,
        lower,
        lower_mechanism,
        upper,
        upper_mechanism,
        optimal,
        witness_d,
        hypothesis: HYPOTHESIS,
        conjecture_note,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    ProductBetter,
    EqualAtStaircase,
    FoldBetter,
    /// Numerical agreement away from a staircase point.
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    pub a2: Rational,
    pub target: TargetKind,
    pub fold: Rational,
    pub product: CapacitySolution,
    pub regime: Regime,
    pub staircase_index: Option<usize>,
    /// Sign of `a2 − τ⁴` (ball) or `a2 − σ²` (cube), decided exactly.
    pub above_accumulation: bool,
}

pub fn compare_with_product(a2: &Rational, target: TargetKind, tol: f64, opts: SolverOptions) -> Result<RegimeReport> {
    check_a2(a2)?;
    let (fold, product) = match target {
        TargetKind::Ball => (fold_upper_ball(a2)?, solve_c_b(a2, tol, opts)?),
        TargetKind::Cube => (fold_upper_cube(a2)?, solve_c_p(a2, tol, opts)?),
    };
    let staircase = staircase_index(a2, target);
    let product_value = product.exact.as_ref().map(to_f64).unwrap_or(product.value);
    let fold_value = to_f64(&fold);
    let regime = if (fold_value - product_value).abs() <= tol {
        if staircase.is_some() {
            Regime::EqualAtStaircase
        } else {
            Regime::Indeterminate
        }
    } else if fold_value < product_value {
        Regime::FoldBetter
    } else {
        Regime::ProductBetter
    };
    let above_accumulation = accumulation_point(target).cmp_rational(a2) == Ordering::Less;
    Ok(RegimeReport { a2: a2.clone(), target, fold, product, regime, staircase_index: staircase, above_accumulation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_numbers::{odd_fibonacci, rat};
    use num_rational::BigRational;

    #[test]
    fn fold_examples() {
        assert_eq!(fold_upper_ball(&int(5)).unwrap(), rat(5, 2));
        assert_eq!(fold_upper_ball(&int(2)).unwrap(), int(2));
        assert_eq!(fold_upper_cube(&int(3)).unwrap(), rat(3, 2));
        assert_eq!(fold_upper_cube(&int(1)).unwrap(), int(1));
        assert!(fold_upper_ball(&rat(1, 2)).is_err());
        assert!(fold_upper_cube(&rat(99, 100)).is_err());
    }

    #[test]
    fn fold_bounds_increase_to_limits() {
        let mut prev_b = int(0);
        let mut prev_c = int(0);
        for step in 0..700 {
            let a = int(1) + rat(step, 7);
            let b = fold_upper_ball(&a).unwrap();
            let c = fold_upper_cube(&a).unwrap();
            assert!(b > prev_b && b < int(3));
            assert!(c > prev_c && c < int(2));
            prev_b = b;
            prev_c = c;
        }
        let big = int(1_000_000);
        assert!(fold_upper_ball(&big).unwrap() > int(3) - rat(1, 100_000));
        assert!(fold_upper_cube(&big).unwrap() > int(2) - rat(1, 100_000));
    }

    #[test]
    fn lower_examples() {
        assert_eq!(lower_bound_ball(&rat(3, 2)).unwrap(), (rat(3, 2), LowerMechanism::Eh));
        assert_eq!(lower_bound_ball(&int(5)).unwrap(), (rat(5, 2), LowerMechanism::FoldOptimality));
        assert_eq!(lower_bound_ball(&int(8)).unwrap(), (rat(8, 3), LowerMechanism::FoldOptimality));
        assert_eq!(lower_bound_ball(&int(3)).unwrap(), (int(2), LowerMechanism::Eh));
        assert_eq!(lower_bound_cube(&int(3)).unwrap(), (rat(3, 2), LowerMechanism::FoldOptimality));
        assert_eq!(lower_bound_cube(&int(2)).unwrap(), (int(1), LowerMechanism::Nonsqueezing));
        assert_eq!(lower_bound_cube(&int(7)).unwrap(), (rat(7, 4), LowerMechanism::FoldOptimality));
        assert!(lower_bound_ball(&rat(1, 3)).is_err());
    }

    #[test]
    fn plane_area_examples() {
        assert!(!plane_area_obstruction_ball(&rat(5, 2), 2).unwrap());
        for d in 1..20 {
            assert!(plane_area_obstruction_ball(&int(3), d).unwrap());
            assert!(plane_area_obstruction_cube(&int(2), &int(2), d).unwrap());
        }
        assert!(!plane_area_obstruction_ball(&rat(8, 3), 3).unwrap());
        assert!(!plane_area_obstruction_cube(&rat(3, 2), &rat(3, 2), 1).unwrap());
        assert!(!plane_area_obstruction_cube(&rat(5, 3), &rat(5, 3), 2).unwrap());
        assert!(plane_area_obstruction_cube(&int(2), &int(1), 1).is_err());
        assert!(plane_area_obstruction_ball(&int(0), 1).is_err());
    }

    #[test]
    fn classify_examples() {
        let r = classify(&int(5), TargetKind::Ball).unwrap();
        assert!(r.optimal);
        assert_eq!((r.lower.clone(), r.upper.clone(), r.witness_d), (rat(5, 2), rat(5, 2), Some(2)));
        assert!(r.conjecture_note.is_some());

        let r = classify(&int(8), TargetKind::Ball).unwrap();
        assert!(r.optimal);
        assert_eq!((r.lower, r.witness_d), (rat(8, 3), Some(3)));

        let r = classify(&int(6), TargetKind::Ball).unwrap();
        assert!(!r.optimal);
        assert_eq!((r.lower, r.upper, r.gap), (rat(5, 2), rat(18, 7), rat(1, 14)));

        let r = classify(&int(5), TargetKind::Cube).unwrap();
        assert!(r.optimal);
        assert_eq!((r.lower, r.witness_d), (rat(5, 3), Some(2)));

        let r = classify(&rat(3, 2), TargetKind::Ball).unwrap();
        assert!(r.optimal);
        assert_eq!(r.upper_mechanism, UpperMechanism::Product);
    }

    #[test]
    fn optimality_set_matches_integer_ladders() {
        for step in 0..=700 {
            let a = int(1) + rat(step, 7);
            let ball = classify(&a, TargetKind::Ball).unwrap();
            let cube = classify(&a, TargetKind::Cube).unwrap();
            assert!(ball.lower <= ball.upper && cube.lower <= cube.upper);
            assert_eq!(ball.optimal, ball.lower == ball.upper);
            let is_int = a.is_integer();
            let n = a.to_integer();
            let ball_case = a <= int(2) || (is_int && (&n + 1u32) % 3u32 == BigInt::from(0));
            let cube_case = a == int(1) || (is_int && n > BigInt::from(1) && &n % 2u32 == BigInt::from(1));
            assert_eq!(ball.optimal, ball_case, "ball a2 = {a}");
            assert_eq!(cube.optimal, cube_case, "cube a2 = {a}");
        }
    }

    #[test]
    fn fold_meets_ball_staircase() {
        for n in 0..=4usize {
            let b = b_ratio(n);
            let want = BigRational::new(odd_fibonacci(n + 2), odd_fibonacci(n + 1));
            assert_eq!(fold_upper_ball(&b).unwrap(), want);
        }
    }

    #[test]
    fn regimes() {
        let opts = SolverOptions::default();
        let r = compare_with_product(&int(5), TargetKind::Ball, 1e-9, opts).unwrap();
        assert_eq!((r.regime, r.staircase_index), (Regime::EqualAtStaircase, Some(0)));
        let r = compare_with_product(&int(8), TargetKind::Ball, 1e-9, opts).unwrap();
        assert_eq!(r.regime, Regime::FoldBetter);
        assert!(r.above_accumulation);
        assert_eq!(r.product.exact, Some(rat(17, 6)));
        let r = compare_with_product(&int(6), TargetKind::Ball, 1e-9, opts).unwrap();
        assert_eq!(r.regime, Regime::ProductBetter);
        assert!(!r.above_accumulation);
        let r = compare_with_product(&int(3), TargetKind::Cube, 1e-9, opts).unwrap();
        assert_eq!(r.regime, Regime::EqualAtStaircase);
    }
}
