//! Cut-off functions.

use serde::Serialize;

/// `q(t) = 6t⁵ − 15t⁴ + 10t³` clamped to `[0, 1]`, with its first two derivatives.
fn smootherstep(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if t >= 1.0 {
        (1.0, 0.0, 0.0)
    } else {
        let t2 = t * t;
        let v = t2 * t * (10.0 + t * (6.0 * t - 15.0));
        let d = 30.0 * t2 * (t - 1.0) * (t - 1.0);
        let dd = 60.0 * t * (2.0 * t2 - 3.0 * t + 1.0);
        (v, d, dd)
    }
}

/// `∫₀ᵗ q`, for `t ∈ [0, 1]`.
fn smootherstep_integral(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    let t4 = t * t * t * t;
    t4 * (2.5 + t * (t - 3.0))
}

/// `χ(A)`: 0 for `A ≤ start`, 1 for `A ≥ start + width`, a quintic step in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cutoff {
    pub start: f64,
    pub width: f64,
}

impl Cutoff {
    pub fn new(start: f64, width: f64) -> Self {
        Cutoff { start, width }
    }

    pub fn value(&self, a: f64) -> f64 {
        smootherstep((a - self.start) / self.width).0
    }

    pub fn derivative(&self, a: f64) -> f64 {
        smootherstep((a - self.start) / self.width).1 / self.width
    }

    /// Points where the pieces meet; smoothness drops to `C²` there.
    pub fn joints(&self) -> [f64; 2] {
        [self.start, self.start + self.width]
    }
}

/// `χ_i(x)`: 0 for `x ≤ 2i`, 1 for `x ≥ 2i + 1`, with `0 ≤ χ_i' ≤ 1 + ε`.
///
/// The derivative is a plateau of height `1 + ε` joined to zero by quintic
/// steps of width `w = ε/(1 + ε)` at both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StageCutoff {
    pub i: u64,
    pub eps: f64,
    corner: f64,
    slope: f64,
}

impl StageCutoff {
    pub fn new(i: u64, eps: f64) -> Self {
        let corner = (eps / (1.0 + eps)).min(0.5);
        StageCutoff { i, eps, corner, slope: 1.0 / (1.0 - corner) }
    }

    pub fn left(&self) -> f64 {
        2.0 * self.i as f64
    }

    pub fn right(&self) -> f64 {
        self.left() + 1.0
    }

    pub fn max_slope(&self) -> f64 {
        self.slope
    }

    /// Points where the pieces meet; smoothness drops to `C³` there.
    pub fn joints(&self) -> [f64; 4] {
        let l = self.left();
        [l, l + self.corner, l + 1.0 - self.corner, l + 1.0]
    }

    /// `(χ_i, χ_i', χ_i'')` at `x`.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let u = x - self.left();
        let (w, s) = (self.corner, self.slope);
        if u <= 0.0 {
            (0.0, 0.0, 0.0)
        } else if u >= 1.0 {
            (1.0, 0.0, 0.0)
        } else if u < w {
            let (q, dq, _) = smootherstep(u / w);
            (s * w * smootherstep_integral(u / w), s * q, s * dq / w)
        } else if u > 1.0 - w {
            let v = 1.0 - u;
            let (q, dq, _) = smootherstep(v / w);
            (1.0 - s * w * smootherstep_integral(v / w), s * q, -s * dq / w)
        } else {
            (s * (w / 2.0 + (u - w)), s, 0.0)
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.eval(x).1
    }
}
