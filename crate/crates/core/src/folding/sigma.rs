//! The six-dimensional stages `σ_i`, flows of `χ_i(Re z₁)·G_i(z₂, z₃)`.

use serde::Serialize;

use super::config::Layout;
use super::cutoff::StageCutoff;
use super::fiber::{FiberChart, FiberMove};
use super::Point6;
use crate::error::{Error, Result};

const NEWTON_TOL: f64 = 1e-14;
const MAX_FIXED_POINT: usize = 50;
const MAX_HALVINGS: u32 = 8;

/// One implicit midpoint step `z' = z + dt·f((z + z')/2)` by fixed-point iteration.
fn midpoint_step<const D: usize>(f: &impl Fn(&[f64; D]) -> [f64; D], z: &[f64; D], dt: f64) -> Option<[f64; D]> {
    let k0 = f(z);
    let mut next = std::array::from_fn(|j| z[j] + dt * k0[j]);
    for _ in 0..MAX_FIXED_POINT {
        let mid: [f64; D] = std::array::from_fn(|j| 0.5 * (z[j] + next[j]));
        let k = f(&mid);
        let cand: [f64; D] = std::array::from_fn(|j| z[j] + dt * k[j]);
        let change = cand.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        next = cand;
        if !next.iter().all(|v| v.is_finite()) {
            return None;
        }
        if change <= NEWTON_TOL * (1.0 + next.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
            return Some(next);
        }
    }
    None
}

/// A step that failed to converge is retried as two half steps, recursively.
fn adaptive_step<const D: usize>(
    f: &impl Fn(&[f64; D]) -> [f64; D],
    z: &[f64; D],
    dt: f64,
    depth: u32,
) -> Option<[f64; D]> {
    if let Some(next) = midpoint_step(f, z, dt) {
        return Some(next);
    }
    if depth >= MAX_HALVINGS {
        return None;
    }
    let half = adaptive_step(f, z, dt / 2.0, depth + 1)?;
    adaptive_step(f, &half, dt / 2.0, depth + 1)
}

/// Integrates `ż = f(z)` from time 0 to `t_end` with implicit midpoint steps of
/// size at most `dt`, calling `observe` after every step.
pub fn implicit_midpoint<const D: usize>(
    f: impl Fn(&[f64; D]) -> [f64; D],
    z0: [f64; D],
    t_end: f64,
    dt: f64,
    mut observe: impl FnMut(f64, &[f64; D]),
) -> Result<[f64; D]> {
    let steps = (t_end / dt).ceil().max(1.0) as usize;
    let h = t_end / steps as f64;
    let mut z = z0;
    for k in 0..steps {
        z = adaptive_step(&f, &z, h, 0)
            .ok_or_else(|| Error::Integrator(format!("implicit midpoint failed to converge at step {k}")))?;
        observe((k + 1) as f64 * h, &z);
    }
    Ok(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaTrajectory {
    pub steps: usize,
    /// Largest `π|z₂|²` seen along the flow.
    pub max_a2: f64,
    /// Largest `|Re z₁(t) − Re z₁(0)|` seen along the flow.
    pub max_drift_x1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaStage {
    pub i: u64,
    pub cutoff: StageCutoff,
    pub fiber: FiberMove,
    pub step: f64,
}

impl SigmaStage {
    pub fn new(i: u64, layout: &Layout, step: f64) -> Self {
        SigmaStage { i, cutoff: StageCutoff::new(i, layout.eps), fiber: FiberMove::new(i, layout), step }
    }

    /// The full six-dimensional Hamiltonian `χ_i(x₁)·G_i(z₂, z₃)`.
    pub fn hamiltonian(&self, p: &Point6) -> f64 {
        self.cutoff.value(p[0]) * self.fiber.hamiltonian_cartesian([p[2], p[3], p[4], p[5]])
    }

    /// Flow of `χ_i(x₁)·H(s₂)` in the chart `(x₁, y₁, A₂, s₂)`.
    fn conjugated_field(&self) -> impl Fn(&[f64; 4]) -> [f64; 4] + '_ {
        move |z| {
            let (chi, dchi, _) = self.cutoff.eval(z[0]);
            [0.0, dchi * self.fiber.base_hamiltonian(z[3]), chi * self.fiber.push_rate(), 0.0]
        }
    }

    fn integrate(&self, p: &Point6, observe: bool) -> Result<(Point6, Option<SigmaTrajectory>)> {
        let fib = FiberChart::from_cartesian([p[2], p[3], p[4], p[5]]);
        let q = self.fiber.conj_inv(fib);
        let z0 = [p[0], p[1], q.a2, q.s2];
        let mut traj = SigmaTrajectory { steps: 0, max_a2: q.a2, max_drift_x1: 0.0 };
        let end = implicit_midpoint(self.conjugated_field(), z0, 1.0, self.step, |_, z| {
            if observe {
                traj.steps += 1;
                traj.max_a2 = traj.max_a2.max(z[2]);
                traj.max_drift_x1 = traj.max_drift_x1.max((z[0] - z0[0]).abs());
            }
        })?;
        if end[2] < -1e-12 {
            return Err(Error::OutsideDomain(format!("stage {} drives π|z₂|² negative", self.i)));
        }
        let out = self.fiber.conj(FiberChart { a2: end[2].max(0.0), s2: end[3].rem_euclid(1.0), a3: q.a3, s3: q.s3 });
        let c = out.to_cartesian();
        Ok(([end[0], end[1], c[0], c[1], c[2], c[3]], observe.then_some(traj)))
    }

    /// `σ_i(p)`: identity for `x₁ ≤ 2i`, `id × φ_i` for `x₁ ≥ 2i + 1`, and the
    /// integrated flow in between.
    pub fn apply(&self, p: &Point6) -> Result<Point6> {
        Ok(self.apply_traced(p)?.0)
    }

    pub fn apply_traced(&self, p: &Point6) -> Result<(Point6, Option<SigmaTrajectory>)> {
        if p[0] <= self.cutoff.left() {
            Ok((*p, None))
        } else if p[0] >= self.cutoff.right() {
            let c = self.fiber.flow_cartesian([p[2], p[3], p[4], p[5]], 1.0);
            Ok(([p[0], p[1], c[0], c[1], c[2], c[3]], None))
        } else {
            self.integrate(p, true)
        }
    }

    /// Always integrates, whatever `x₁` is.
    pub fn flow_integrated(&self, p: &Point6) -> Result<(Point6, SigmaTrajectory)> {
        let (q, t) = self.integrate(p, true)?;
        Ok((q, t.expect("observed")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::folding::config::FoldingConfig;
    use crate::folding::fiber::from_action_angle;

    fn stage(i: u64) -> (SigmaStage, Layout) {
        let l = Layout::new(&FoldingConfig::default()).unwrap();
        (SigmaStage::new(i, &l, 1e-3), l)
    }

    fn sample(l: &Layout, i: u64, x1: f64, k: usize) -> Point6 {
        let a2 = if i % 2 == 1 { l.lambda_f } else { l.c2 } + l.lambda_f * (k as f64 * 0.618).fract() * 0.98;
        let (x2, y2) = from_action_angle(if i % 2 == 1 { a2 - l.lambda_f } else { a2 }, (k as f64 * 0.377).fract());
        let (x3, y3) = from_action_angle(l.b_inner(i) + l.t * (k as f64 * 0.211).fract(), (k as f64 * 0.733).fract());
        [x1, 0.001 * k as f64 % 0.01, x2, y2, x3, y3]
    }

    #[test]
    fn midpoint_is_exact_for_linear_growth() {
        let z = implicit_midpoint(|_: &[f64; 2]| [1.0, 2.0], [0.0, 1.0], 1.0, 1e-2, |_, _| {}).unwrap();
        assert!((z[0] - 1.0).abs() < 1e-12 && (z[1] - 3.0).abs() < 1e-12);
        // Harmonic oscillator: implicit midpoint conserves the quadratic energy.
        let z = implicit_midpoint(|z: &[f64; 2]| [-z[1], z[0]], [1.0, 0.0], 10.0, 1e-2, |_, _| {}).unwrap();
        assert!((z[0] * z[0] + z[1] * z[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_left_of_window() {
        let (s, l) = stage(3);
        let p = sample(&l, 3, 6.0 - 0.5, 4);
        assert_eq!(s.apply(&p).unwrap(), p);
        let (q, _) = s.flow_integrated(&p).unwrap();
        for j in 0..6 {
            assert!((q[j] - p[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn right_of_window_matches_fiber_move() {
        for i in 1..=4u64 {
            let (s, l) = stage(i);
            for k in 0..20 {
                let p = sample(&l, i, 2.0 * i as f64 + 1.5, k);
                let (q, _) = s.flow_integrated(&p).unwrap();
                let direct = s.apply(&p).unwrap();
                for j in 0..6 {
                    assert!((q[j] - direct[j]).abs() < 1e-9, "i = {i}, j = {j}");
                }
            }
        }
    }

    #[test]
    fn x1_is_conserved() {
        let (s, l) = stage(1);
        for k in 0..100 {
            let p = sample(&l, 1, 2.0 + k as f64 / 100.0, k);
            let (q, traj) = s.flow_integrated(&p).unwrap();
            assert!((q[0] - p[0]).abs() < 1e-9);
            assert!(traj.max_drift_x1 < 1e-9);
            assert_eq!(traj.steps, 1000);
        }
    }

    #[test]
    fn y1_moves_by_cutoff_slope_times_hamiltonian() {
        let (s, l) = stage(1);
        for k in 0..50 {
            let p = sample(&l, 1, 2.0 + (k as f64 + 0.5) / 50.0, k);
            let (q, _) = s.flow_integrated(&p).unwrap();
            let g = s.fiber.hamiltonian_cartesian([p[2], p[3], p[4], p[5]]);
            let want = p[1] + s.cutoff.derivative(p[0]) * g;
            assert!((q[1] - want).abs() < 1e-9);
            assert!(q[1] - p[1] >= -1e-12 && q[1] - p[1] <= (1.0 + l.eps) * l.c2 + 1e-12);
        }
    }
}
