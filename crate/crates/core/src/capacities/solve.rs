//! Bisection for `c_B(a)` and `c_P(a)` with the ECH comparison as the
//! monotone predicate.

use num_traits::{Signed, Zero};
use serde::Serialize;

use super::ech::{compare_prefix, largest_violating_ratio, unit_target_sequence, EchTarget, TailStatus};
use super::CapacitySequence;
use crate::error::{invalid, Error, Result};
use crate::exact_numbers::{from_f64, int, to_f64, Rational};

pub const DEFAULT_MAX_TERMS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Number of ECH terms compared per predicate evaluation.
    pub max_terms: usize,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { max_terms: DEFAULT_MAX_TERMS, max_iterations: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacitySolution {
    /// Smallest passing size found by bisection (within `tol` of the infimum).
    pub value: f64,
    /// Exact value when the rational re-check succeeds.
    #[serde(skip)]
    pub exact: Option<Rational>,
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub terms: usize,
    pub tail: TailStatus,
}

struct Problem {
    source: Vec<Rational>,
    unit: Vec<u64>,
    a: Rational,
    template: EchTarget,
}

impl Problem {
    fn new(a: &Rational, cube: bool, terms: usize) -> Result<Self> {
        let mut seq = CapacitySequence::ech_ellipsoid(&int(1), a)?;
        Ok(Problem {
            source: seq.prefix(terms)?.to_vec(),
            unit: unit_target_sequence(cube, terms),
            a: a.clone(),
            template: if cube { EchTarget::Cube(int(1)) } else { EchTarget::Ball(int(1)) },
        })
    }

    fn check(&self, r: &Rational) -> Result<super::ech::EmbeddingCertificate> {
        compare_prefix(&self.source, &self.unit, &self.template.with_size(r.clone()), (&int(1), &self.a))
    }

    fn passes_f64(&self, r: f64) -> Result<bool> {
        Ok(self.check(&from_f64(r)?)?.passes())
    }
}

fn solve(a: &Rational, tol: f64, cube: bool, opts: SolverOptions) -> Result<CapacitySolution> {
    if !(tol > 0.0) || !tol.is_finite() {
        return invalid(format!("tolerance must be positive, got {tol}"));
    }
    if *a < int(1) {
        return invalid("the ellipsoid E(1, a) needs a ≥ 1");
    }
    if opts.max_terms == 0 {
        return invalid("need at least one ECH term");
    }
    let problem = Problem::new(a, cube, opts.max_terms)?;
    let af = to_f64(a);
    // Volume bound below, inclusion E(1,a) ⊂ B(a) ⊂ P(a,a) above.
    let mut lo = if cube { (af / 2.0).sqrt() } else { af.sqrt() };
    let mut hi = af;
    if !problem.check(a)?.passes() {
        return Err(Error::Bracket(format!("inclusion size {af} fails the ECH comparison")));
    }
    let bracket = (lo, hi);
    let mut iterations = 0;
    if problem.passes_f64(lo)? {
        hi = lo;
    } else {
        while hi - lo > tol {
            if iterations >= opts.max_iterations {
                return Err(Error::Bracket(format!("no convergence after {iterations} iterations")));
            }
            let mid = 0.5 * (lo + hi);
            if problem.passes_f64(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
            iterations += 1;
        }
    }
    let value = hi;
    let exact = exact_recheck(&problem, value, tol)?;
    let final_size = match &exact {
        Some(r) => r.clone(),
        None => from_f64(value)?,
    };
    let tail = problem.check(&final_size)?.tail;
    Ok(CapacitySolution { value, exact, bracket, iterations, terms: opts.max_terms, tail })
}

/// The obstruction just below the bisection result is witnessed by some
/// index `k`; its exact ratio `N_k/unit_k` is the candidate. It is accepted
/// when it passes the comparison itself and lies within `2·tol`.
fn exact_recheck(problem: &Problem, value: f64, tol: f64) -> Result<Option<Rational>> {
    let probe = value - 2.0 * tol;
    if probe <= 0.0 {
        return Ok(None);
    }
    let probe = from_f64(probe)?;
    let Some(candidate) = largest_violating_ratio(&problem.source, &problem.unit, &probe) else {
        return Ok(None);
    };
    if candidate.is_zero() || !candidate.is_positive() {
        return Ok(None);
    }
    let close = (to_f64(&candidate) - value).abs() <= 2.0 * tol;
    if close && problem.check(&candidate)?.passes() {
        Ok(Some(candidate))
    } else {
        Ok(None)
    }
}

/// `c_B(a) = inf { R : E(1,a) ↪ B⁴(R) }`, as decided by the first
/// `opts.max_terms` ECH capacities.
pub fn solve_c_b(a: &Rational, tol: f64, opts: SolverOptions) -> Result<CapacitySolution> {
    solve(a, tol, false, opts)
}

/// `c_P(a) = inf { R : E(1,a) ↪ P(R,R) }`, as decided by the first
/// `opts.max_terms` ECH capacities.
pub fn solve_c_p(a: &Rational, tol: f64, opts: SolverOptions) -> Result<CapacitySolution> {
    solve(a, tol, true, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_numbers::{b_ratio, beta_ratio, odd_fibonacci, rat};
    use num_rational::BigRational;

    fn cb(a: Rational) -> CapacitySolution {
        solve_c_b(&a, 1e-9, SolverOptions::default()).unwrap()
    }

    #[test]
    fn spot_values() {
        assert_eq!(cb(int(5)).exact, Some(rat(5, 2)));
        assert_eq!(cb(int(6)).exact, Some(rat(5, 2)));
        assert_eq!(cb(int(4)).exact, Some(int(2)));
        assert_eq!(cb(int(8)).exact, Some(rat(17, 6)));
        let nine = solve_c_b(&int(9), 1e-6, SolverOptions::default()).unwrap();
        assert!((nine.value - 3.0).abs() < 1e-6);
        assert_eq!(solve_c_p(&int(3), 1e-9, SolverOptions::default()).unwrap().exact, Some(rat(3, 2)));
    }

    #[test]
    fn errors() {
        assert!(solve_c_b(&int(5), 0.0, SolverOptions::default()).is_err());
        assert!(solve_c_b(&int(5), -1.0, SolverOptions::default()).is_err());
        assert!(solve_c_b(&rat(1, 2), 1e-6, SolverOptions::default()).is_err());
    }

    #[test]
    fn identity_case() {
        let one = cb(int(1));
        assert_eq!(one.exact, Some(int(1)));
    }

    #[test]
    fn volume_and_inclusion_bounds() {
        for num in [1i64, 3, 7, 10, 13, 17, 22, 30] {
            let a = rat(num + 4, 4);
            let s = solve_c_b(&a, 1e-7, SolverOptions::default()).unwrap();
            let af = to_f64(&a);
            assert!(s.value >= af.sqrt() - 1e-12 && s.value <= af + 1e-12, "a = {af}");
        }
    }

    #[test]
    fn ball_staircase_first_four() {
        for n in 0..4usize {
            let b = b_ratio(n);
            let want = BigRational::new(odd_fibonacci(n + 2), odd_fibonacci(n + 1));
            assert_eq!(cb(b.clone()).exact, Some(want.clone()), "n = {n}");
            assert_eq!(want, int(3) * &b / (&b + int(1)));
        }
    }

    #[test]
    fn ball_staircase_n4_needs_more_terms() {
        // The obstruction at b_4 = 233/34 sits at ECH index 4094; with fewer
        // terms only the volume bound is seen.
        let b4 = b_ratio(4);
        let short = cb(b4.clone());
        assert_eq!(short.exact, None);
        assert!((short.value - to_f64(&b4).sqrt()).abs() < 1e-12);
        let long = solve_c_b(&b4, 1e-9, SolverOptions { max_terms: 4200, ..Default::default() }).unwrap();
        assert_eq!(long.exact, Some(rat(233, 89)));
    }

    #[test]
    fn cube_staircase() {
        for n in 0..4usize {
            let b = beta_ratio(n);
            let s = solve_c_p(&b, 1e-9, SolverOptions::default()).unwrap();
            assert_eq!(s.exact, Some(int(2) * &b / (&b + int(1))), "n = {n}");
        }
    }
}
