//! Hamiltonian moves of the `(z₂, z₃)` fibers.
//!
//! Everything here is written in action-angle charts `A = π|z|²`,
//! `s = arg z / 2π ∈ [0, 1)`, in which `dA ∧ ds = dx ∧ dy`. A Hamiltonian
//! `H(A, s)` flows by `Ȧ = −∂H/∂s`, `ṡ = ∂H/∂A`, matching `ż = i∇H` in
//! Cartesian coordinates.

use std::f64::consts::PI;

use serde::Serialize;

use super::config::Layout;
use super::cutoff::Cutoff;

/// `(A, s)` of a point of the plane.
pub fn to_action_angle(x: f64, y: f64) -> (f64, f64) {
    let a = PI * (x * x + y * y);
    let s = (y.atan2(x) / (2.0 * PI)).rem_euclid(1.0);
    (a, if s >= 1.0 { 0.0 } else { s })
}

pub fn from_action_angle(a: f64, s: f64) -> (f64, f64) {
    let r = (a.max(0.0) / PI).sqrt();
    let (sin, cos) = (2.0 * PI * s).sin_cos();
    (r * cos, r * sin)
}

/// A fiber point `(A₂, s₂, A₃, s₃)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiberChart {
    pub a2: f64,
    pub s2: f64,
    pub a3: f64,
    pub s3: f64,
}

impl FiberChart {
    pub fn from_cartesian(p: [f64; 4]) -> Self {
        let (a2, s2) = to_action_angle(p[0], p[1]);
        let (a3, s3) = to_action_angle(p[2], p[3]);
        FiberChart { a2, s2, a3, s3 }
    }

    pub fn to_cartesian(self) -> [f64; 4] {
        let (x2, y2) = from_action_angle(self.a2, self.s2);
        let (x3, y3) = from_action_angle(self.a3, self.s3);
        [x2, y2, x3, y3]
    }
}

/// The fiber move `φ_i = C ∘ ρ_i ∘ C⁻¹` with `φ_i(P_i) = P_{i+1}`.
///
/// `ρ_i` is the flow of `c2·(1 − s₂)` (odd `i`, pushing `D₁` out to `D₂`) or
/// `c2·s₂` (even `i`, pulling back). `C` is the time-one map of
/// `±χ(A₂)·c3·(1 − s₃)`, which lifts `z₃` by `c3` in action exactly where
/// `χ(A₂) = 1`, that is over `D₂`. `G_i = H ∘ C⁻¹` takes values in `[0, c2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiberMove {
    pub i: u64,
    pub c2: f64,
    pub c3: f64,
    pub chi: Cutoff,
}

impl FiberMove {
    pub fn new(i: u64, layout: &Layout) -> Self {
        FiberMove { i, c2: layout.c2, c3: layout.c3, chi: Cutoff::new(layout.lambda_f, layout.eps) }
    }

    pub fn odd(&self) -> bool {
        self.i % 2 == 1
    }

    /// Action shift of `z₂` per unit of flow time.
    pub fn push_rate(&self) -> f64 {
        if self.odd() {
            self.c2
        } else {
            -self.c2
        }
    }

    /// The unconjugated fiber Hamiltonian as a function of `s₂`.
    pub fn base_hamiltonian(&self, s2: f64) -> f64 {
        if self.odd() {
            self.c2 * (1.0 - s2)
        } else {
            self.c2 * s2
        }
    }

    /// Time-one map of `k·χ(A₂)·c3·(1 − s₃)`.
    pub fn lift(&self, p: FiberChart, k: f64) -> FiberChart {
        let c = k * self.c3;
        FiberChart {
            a2: p.a2,
            s2: (p.s2 + c * self.chi.derivative(p.a2) * (1.0 - p.s3)).rem_euclid(1.0),
            a3: p.a3 + c * self.chi.value(p.a2),
            s3: p.s3,
        }
    }

    /// The conjugating map `C`.
    pub fn conj(&self, p: FiberChart) -> FiberChart {
        self.lift(p, if self.odd() { 1.0 } else { -1.0 })
    }

    pub fn conj_inv(&self, p: FiberChart) -> FiberChart {
        self.lift(p, if self.odd() { -1.0 } else { 1.0 })
    }

    /// `G_i(z₂, z₃)`.
    pub fn hamiltonian(&self, p: FiberChart) -> f64 {
        self.base_hamiltonian(self.conj_inv(p).s2)
    }

    pub fn hamiltonian_cartesian(&self, p: [f64; 4]) -> f64 {
        self.hamiltonian(FiberChart::from_cartesian(p))
    }

    /// `inf G_i` and `sup G_i`.
    pub fn bounds(&self) -> (f64, f64) {
        (0.0, self.c2)
    }

    /// `φ_i^t`.
    pub fn flow(&self, p: FiberChart, t: f64) -> FiberChart {
        let mut q = self.conj_inv(p);
        q.a2 += t * self.push_rate();
        self.conj(q)
    }

    pub fn flow_cartesian(&self, p: [f64; 4], t: f64) -> [f64; 4] {
        self.flow(FiberChart::from_cartesian(p), t).to_cartesian()
    }
}
