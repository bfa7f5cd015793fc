//! The planar maps `ψ` (disk to a neighborhood of `V`) and `τ` (folding).

use std::f64::consts::{FRAC_PI_4, PI};

use serde::Serialize;

use super::config::Layout;
use super::cutoff::StageCutoff;
use super::fiber::{from_action_angle, to_action_angle};
use crate::error::{Error, Result};
use crate::exact_numbers::Rational;

pub type Jac2 = [[f64; 2]; 2];

pub fn det2(j: &Jac2) -> f64 {
    j[0][0] * j[1][1] - j[0][1] * j[1][0]
}

fn mul2(a: &Jac2, b: &Jac2) -> Jac2 {
    std::array::from_fn(|r| std::array::from_fn(|c| a[r][0] * b[0][c] + a[r][1] * b[1][c]))
}

/// `∂(A, s)/∂(x, y)` of the action-angle chart.
fn action_angle_jac(x: f64, y: f64) -> Jac2 {
    let r2 = x * x + y * y;
    [[2.0 * PI * x, 2.0 * PI * y], [-y / (2.0 * PI * r2), x / (2.0 * PI * r2)]]
}

/// `∂(x, y)/∂(A, s)`.
fn cartesian_jac(a: f64, s: f64) -> Jac2 {
    let r = (a / PI).sqrt();
    let (sin, cos) = (2.0 * PI * s).sin_cos();
    [[cos / (2.0 * PI * r), -2.0 * PI * r * sin], [sin / (2.0 * PI * r), 2.0 * PI * r * cos]]
}

/// Regions of the construction, in the coordinates where they are defined.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PlanarRegion {
    /// `[0,1]×[0,λ] ∪ [1,2N+1]×{0}`.
    VRegion { lambda: f64, n: u64 },
    /// `W_0 = [0,1]×[0,λ]`.
    SquareW0 { lambda: f64 },
    /// `W_i = [2i, 2i+1] × [min G_i, max G_i]`.
    StripWi { i: u64, g_min: f64, g_max: f64 },
    /// `[2i−1, 2i] × {0}`.
    Interval { i: u64 },
    /// `π|z|² ≤ area`.
    Disk { area: f64 },
    /// `A_i = D(i(T+ε)) \ D((i−1)(T+ε))`.
    Annulus { i: u64, inner: f64, outer: f64 },
    /// `P_i` in action coordinates: `π|z₂|² ∈ [a2_lo, a2_hi]`, `π|z₃|² ∈ [a3_lo, a3_hi]`.
    Bidisk { i: u64, a2_lo: f64, a2_hi: f64, a3_lo: f64, a3_hi: f64 },
}

impl PlanarRegion {
    pub fn annulus(i: u64, layout: &Layout) -> Self {
        PlanarRegion::Annulus { i, inner: (i as f64 - 1.0) * layout.c3, outer: i as f64 * layout.c3 }
    }

    /// The realized `P_i = D₁ × B_i` (odd) or `D₂ × B_i` (even).
    pub fn bidisk(i: u64, layout: &Layout) -> Self {
        let (a2_lo, a2_hi) =
            if i % 2 == 1 { (0.0, layout.lambda_f) } else { (layout.c2, layout.c2 + layout.lambda_f) };
        let a3_lo = layout.b_inner(i);
        PlanarRegion::Bidisk { i, a2_lo, a2_hi, a3_lo, a3_hi: a3_lo + layout.t }
    }

    pub fn area(&self) -> f64 {
        match *self {
            PlanarRegion::VRegion { lambda, .. } | PlanarRegion::SquareW0 { lambda } => lambda,
            PlanarRegion::StripWi { g_min, g_max, .. } => g_max - g_min,
            PlanarRegion::Interval { .. } => 0.0,
            PlanarRegion::Disk { area } => area,
            PlanarRegion::Annulus { inner, outer, .. } => outer - inner,
            PlanarRegion::Bidisk { a2_lo, a2_hi, a3_lo, a3_hi, .. } => (a2_hi - a2_lo) * (a3_hi - a3_lo),
        }
    }

    /// Membership in the `tol`-neighborhood. Planar regions take `(x, y)`;
    /// disks and annuli take an action; bidisks take `(A₂, A₃)`.
    pub fn contains(&self, p: (f64, f64), tol: f64) -> bool {
        let (x, y) = p;
        let within = |v: f64, lo: f64, hi: f64| v >= lo - tol && v <= hi + tol;
        match *self {
            PlanarRegion::VRegion { lambda, n } => {
                (within(x, 0.0, 1.0) && within(y, 0.0, lambda)) || (within(x, 1.0, 2.0 * n as f64 + 1.0) && y.abs() <= tol)
            }
            PlanarRegion::SquareW0 { lambda } => within(x, 0.0, 1.0) && within(y, 0.0, lambda),
            PlanarRegion::StripWi { i, g_min, g_max } => within(x, 2.0 * i as f64, 2.0 * i as f64 + 1.0) && within(y, g_min, g_max),
            PlanarRegion::Interval { i } => within(x, 2.0 * i as f64 - 1.0, 2.0 * i as f64) && y.abs() <= tol,
            PlanarRegion::Disk { area } => x <= area + tol,
            PlanarRegion::Annulus { inner, outer, .. } => within(x, inner, outer),
            PlanarRegion::Bidisk { a2_lo, a2_hi, a3_lo, a3_hi, .. } => within(x, a2_lo, a2_hi) && within(y, a3_lo, a3_hi),
        }
    }

    /// Rational parameters, for exact reporting.
    pub fn rational_area(&self) -> Result<Rational> {
        crate::exact_numbers::from_f64(self.area())
    }
}

/// Inverse of the Shirley–Chiu concentric map: unit disk to `[−1,1]²`,
/// with its Jacobian.
fn concentric_inverse(u: f64, v: f64) -> ((f64, f64), Jac2) {
    let r = (u * u + v * v).sqrt();
    if r == 0.0 {
        let k = 4.0 / PI;
        return ((0.0, 0.0), [[1.0, 0.0], [0.0, k]]);
    }
    let mut phi = v.atan2(u);
    if phi < -FRAC_PI_4 {
        phi += 2.0 * PI;
    }
    let k = 4.0 / PI;
    // (a, b) and ∂(a, b)/∂(r, φ)
    let ((a, b), d) = if phi < FRAC_PI_4 {
        ((r, k * phi * r), [[1.0, 0.0], [k * phi, k * r]])
    } else if phi < 3.0 * FRAC_PI_4 {
        let c = -k * (phi - PI / 2.0);
        ((c * r, r), [[c, -k * r], [1.0, 0.0]])
    } else if phi < 5.0 * FRAC_PI_4 {
        let c = -k * (phi - PI);
        ((-r, c * r), [[-1.0, 0.0], [c, -k * r]])
    } else {
        let c = k * (phi - 3.0 * PI / 2.0);
        ((c * r, -r), [[c, k * r], [-1.0, 0.0]])
    };
    let polar = [[u / r, v / r], [-v / (r * r), u / (r * r)]];
    ((a, b), mul2(&d, &polar))
}

/// The concentric map `[−1,1]² → unit disk`.
fn concentric_forward(a: f64, b: f64) -> (f64, f64) {
    if a == 0.0 && b == 0.0 {
        return (0.0, 0.0);
    }
    let (r, phi) = if a.abs() > b.abs() {
        (a, FRAC_PI_4 * (b / a))
    } else {
        (b, PI / 2.0 - FRAC_PI_4 * (a / b))
    };
    (r * phi.cos(), r * phi.sin())
}

/// `ψ`: `D(λ)` onto the square `[0,1]×[0,λ]` by the concentric map, the
/// annulus `λ ≤ π|z|² ≤ S` onto the strip `[1, 2N+1] × [−h/2, h/2]` by
/// `(A, s) ↦ (1 + 2N·s, h/2 − (A − λ)/2N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Psi {
    pub lambda: f64,
    pub n: u64,
    pub h: f64,
    pub s: f64,
}

impl Psi {
    pub fn new(layout: &Layout) -> Self {
        Psi { lambda: layout.lambda, n: layout.n, h: layout.h, s: layout.s }
    }

    fn rho(&self) -> f64 {
        (self.lambda / PI).sqrt()
    }

    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        self.apply_jac(x, y).0
    }

    pub fn apply_jac(&self, x: f64, y: f64) -> ((f64, f64), Jac2) {
        let a1 = PI * (x * x + y * y);
        if a1 <= self.lambda {
            let rho = self.rho();
            let ((a, b), j) = concentric_inverse(x / rho, y / rho);
            let out = ((a + 1.0) / 2.0, (b + 1.0) * self.lambda / 2.0);
            let scale = [[0.5 / rho, 0.0], [0.0, self.lambda / (2.0 * rho)]];
            (out, mul2(&scale, &j))
        } else {
            let (a, s) = to_action_angle(x, y);
            let two_n = 2.0 * self.n as f64;
            let out = (1.0 + two_n * s, self.h / 2.0 - (a - self.lambda) / two_n);
            let lin = [[0.0, two_n], [-1.0 / two_n, 0.0]];
            (out, mul2(&lin, &action_angle_jac(x, y)))
        }
    }

    /// Inverse on the square and strip pieces.
    pub fn invert(&self, px: f64, py: f64) -> Option<(f64, f64)> {
        let two_n = 2.0 * self.n as f64;
        if (0.0..=1.0).contains(&px) && (0.0..=self.lambda).contains(&py) {
            let (u, v) = concentric_forward(2.0 * px - 1.0, 2.0 * py / self.lambda - 1.0);
            let rho = self.rho();
            Some((u * rho, v * rho))
        } else if (1.0..=1.0 + two_n).contains(&px) && py.abs() <= self.h / 2.0 {
            let s = (px - 1.0) / two_n;
            let a = self.lambda + (self.h / 2.0 - py) * two_n;
            Some(from_action_angle(a, s))
        } else {
            None
        }
    }

    /// Distance (in the input plane) to the seams: the origin, the circle
    /// `π|z|² = λ`, the diagonals of the concentric map and the slit `arg = 0`.
    pub fn seam_distance(&self, x: f64, y: f64) -> f64 {
        let r = (x * x + y * y).sqrt();
        let rho = self.rho();
        let circle = (r - rho).abs();
        let inner = if r <= rho { (x.abs() - y.abs()).abs() / std::f64::consts::SQRT_2 } else { f64::INFINITY };
        let slit = if r > rho && x > 0.0 { y.abs() } else { f64::INFINITY };
        r.min(circle).min(inner).min(slit)
    }
}

/// Which piece of the `z₁` plane a point belongs to, by `Re z₁`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "piece", content = "i", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Piece {
    Square,
    Interval(u64),
    Band(u64),
}

impl Piece {
    pub fn of(x: f64, n: u64) -> Piece {
        if x < 1.0 {
            return Piece::Square;
        }
        let k = (x.floor() as u64).clamp(1, 2 * n);
        if k % 2 == 1 {
            Piece::Interval(k.div_ceil(2))
        } else {
            Piece::Band(k / 2)
        }
    }
}

/// `τ`: the folding immersion of the `z₁` plane, piecewise.
///
/// * square: `(x, y) ↦ (A, s) = (a0 + λx, y/λ)`
/// * interval `i`: `(A, s) = (a_lo + y + h/2, 2i − x)`
/// * band `W_i`: straightened by `u = F(x)`, `v = (y + h/2)/F'(x)` with
///   `F(x) = (χ_i(x)·c2 + h(x − 2i))/(c2 + h)`, then laid out as
///   `(A, s) = (a0 + u·H, v/H)` for even `i` and
///   `(a_in + H − u·H, 1 − v/H)` for odd `i`, `H = c2 + h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tau {
    pub layout: Layout,
}

impl Tau {
    pub fn new(layout: &Layout) -> Self {
        Tau { layout: *layout }
    }

    /// `(F, F', F'')` for band `i`.
    fn straighten(&self, i: u64, x: f64) -> (f64, f64, f64) {
        let l = &self.layout;
        let (chi, d, dd) = StageCutoff::new(i, l.eps).eval(x);
        let x = x - 2.0 * i as f64;
        ((chi * l.c2 + l.h * x) / l.band, (d * l.c2 + l.h) / l.band, dd * l.c2 / l.band)
    }

    fn straighten_inverse(&self, i: u64, u: f64) -> f64 {
        let (mut lo, mut hi) = (2.0 * i as f64, 2.0 * i as f64 + 1.0);
        if u <= 0.0 {
            return lo + u * self.layout.band / self.layout.h;
        }
        if u >= 1.0 {
            return hi + (u - 1.0) * self.layout.band / self.layout.h;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.straighten(i, mid).0 < u {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// `(A, s)` image of `(x, y)` and `∂(A, s)/∂(x, y)`.
    pub fn action_angle(&self, x: f64, y: f64) -> (Piece, (f64, f64), Jac2) {
        let l = &self.layout;
        let piece = Piece::of(x, l.n);
        match piece {
            Piece::Square => (piece, (l.a0 + l.lambda * x, y / l.lambda), [[l.lambda, 0.0], [0.0, 1.0 / l.lambda]]),
            Piece::Interval(i) => (piece, (l.a_lo + y + l.h / 2.0, 2.0 * i as f64 - x), [[0.0, 1.0], [-1.0, 0.0]]),
            Piece::Band(i) => {
                let (f, df, ddf) = self.straighten(i, x);
                let yy = y + l.h / 2.0;
                let (u, v) = (f, yy / df);
                let juv = [[df, 0.0], [-yy * ddf / (df * df), 1.0 / df]];
                let hh = l.band;
                if i % 2 == 0 {
                    (piece, (l.a0 + u * hh, v / hh), mul2(&[[hh, 0.0], [0.0, 1.0 / hh]], &juv))
                } else {
                    (piece, (l.a_in + hh - u * hh, 1.0 - v / hh), mul2(&[[-hh, 0.0], [0.0, -1.0 / hh]], &juv))
                }
            }
        }
    }

    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let (_, (a, s), _) = self.action_angle(x, y);
        from_action_angle(a, s)
    }

    pub fn apply_jac(&self, x: f64, y: f64) -> ((f64, f64), Jac2) {
        let (_, (a, s), j) = self.action_angle(x, y);
        (from_action_angle(a, s), mul2(&cartesian_jac(a, s), &j))
    }

    /// Inverse of the restriction of `τ` to one piece.
    pub fn invert(&self, piece: Piece, px: f64, py: f64) -> Option<(f64, f64)> {
        let l = &self.layout;
        let (a, s) = to_action_angle(px, py);
        match piece {
            Piece::Square => Some(((a - l.a0) / l.lambda, s * l.lambda)),
            Piece::Interval(i) => Some((2.0 * i as f64 - s, a - l.a_lo - l.h / 2.0)),
            Piece::Band(i) => {
                let hh = l.band;
                let (u, v) = if i % 2 == 0 { ((a - l.a0) / hh, s * hh) } else { ((l.a_in + hh - a) / hh, (1.0 - s) * hh) };
                let x = self.straighten_inverse(i, u);
                let (_, df, _) = self.straighten(i, x);
                Some((x, v * df - l.h / 2.0))
            }
        }
        .filter(|p| p.0.is_finite() && p.1.is_finite())
    }

    /// Action ranges of the pieces' images: intervals, square with even
    /// bands, odd bands. The three are pairwise disjoint.
    pub fn image_ranges(&self) -> [(f64, f64); 3] {
        let l = &self.layout;
        [(l.a_lo, l.a_lo + l.h), (l.a0, l.a0 + l.lambda.max(l.band)), (l.a_in, l.a_in + l.band)]
    }

    /// Checks that the image classes of [`Tau::image_ranges`] do not overlap.
    pub fn check_disjoint(&self) -> Result<()> {
        let r = self.image_ranges();
        let names = ["intervals", "square and even bands", "odd bands"];
        for a in 0..3 {
            for b in a + 1..3 {
                if r[a].0 < r[b].1 - 1e-12 && r[b].0 < r[a].1 - 1e-12 {
                    return Err(Error::Construction(format!("images of {} and {} overlap", names[a], names[b])));
                }
            }
        }
        Ok(())
    }

    /// Distance to the piece boundaries `x ∈ {1, 2, …, 2N+1}`.
    pub fn seam_distance(&self, x: f64) -> f64 {
        let k = x.round().clamp(1.0, 2.0 * self.layout.n as f64 + 1.0);
        (x - k).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::folding::config::FoldingConfig;

    fn layout() -> Layout {
        Layout::new(&FoldingConfig::default()).unwrap()
    }

    fn fd_jac(f: impl Fn(f64, f64) -> (f64, f64), x: f64, y: f64, h: f64) -> Jac2 {
        let (a, b) = (f(x + h, y), f(x - h, y));
        let (c, d) = (f(x, y + h), f(x, y - h));
        [[(a.0 - b.0) / (2.0 * h), (c.0 - d.0) / (2.0 * h)], [(a.1 - b.1) / (2.0 * h), (c.1 - d.1) / (2.0 * h)]]
    }

    #[test]
    fn concentric_round_trip() {
        for k in 0..500 {
            let a = ((k as f64) * 0.6180339887).fract() * 2.0 - 1.0;
            let b = ((k as f64) * 0.7548776662).fract() * 2.0 - 1.0;
            let (u, v) = concentric_forward(a, b);
            assert!(u * u + v * v <= 1.0 + 1e-12);
            let ((a2, b2), _) = concentric_inverse(u, v);
            assert!((a - a2).abs() < 1e-12 && (b - b2).abs() < 1e-12, "{a} {b} -> {a2} {b2}");
        }
    }

    #[test]
    fn psi_examples() {
        let l = layout();
        let psi = Psi::new(&l);
        let (x, y) = psi.apply(0.0, 0.0);
        assert!(x > 0.0 && x < 1.0 && y > 0.0 && y < l.lambda);
        // A point with π|z|² between λ + ε and S·shrink² lands on the tail strip.
        let r = ((l.lambda + l.eps + 0.2) / PI).sqrt();
        for k in 0..12 {
            let th = k as f64 * 0.5;
            let (x, y) = psi.apply(r * th.cos(), r * th.sin());
            assert!((1.0..=2.0 * l.n as f64 + 1.0).contains(&x) && y.abs() <= l.eps);
        }
    }

    #[test]
    fn psi_jacobian_and_inverse() {
        let l = layout();
        let psi = Psi::new(&l);
        let rmax = (l.s * l.shrink * l.shrink / PI).sqrt();
        for k in 0..2000 {
            let r = rmax * ((k as f64 * 0.3819660113).fract()).sqrt();
            let th = 2.0 * PI * (k as f64 * 0.7071067812).fract();
            let (x, y) = (r * th.cos(), r * th.sin());
            let ((px, py), j) = psi.apply_jac(x, y);
            assert!((det2(&j) - 1.0).abs() < 1e-9);
            if psi.seam_distance(x, y) > 1e-3 {
                let fd = fd_jac(|a, b| psi.apply(a, b), x, y, 1e-6);
                for (ra, rb) in j.iter().zip(&fd) {
                    for (ea, eb) in ra.iter().zip(rb) {
                        assert!((ea - eb).abs() < 1e-5 * (1.0 + ea.abs()), "{j:?} vs {fd:?}");
                    }
                }
            }
            let (ix, iy) = psi.invert(px, py).unwrap();
            assert!((ix - x).abs() < 1e-9 && (iy - y).abs() < 1e-9);
        }
    }

    #[test]
    fn tau_examples() {
        let l = layout();
        let tau = Tau::new(&l);
        tau.check_disjoint().unwrap();
        let (x, y) = tau.apply(0.5, 0.3);
        assert!(PI * (x * x + y * y) <= 2.0 * l.lambda);
        // Depth rule: in an odd band, Re z₁ = 2i + 1 sits innermost.
        let (_, (a_end, _), _) = tau.action_angle(3.0 - 1e-12, 0.0);
        let (_, (a_start, _), _) = tau.action_angle(2.0, 0.0);
        assert!(a_end < a_start);
        assert!((a_end - l.a_in).abs() < 1e-9);
        assert!((a_end - l.lambda).abs() < 0.05 + l.eps);
    }

    #[test]
    fn tau_jacobian_and_inverse() {
        let l = layout();
        let tau = Tau::new(&l);
        for k in 0..4000 {
            let x = (2.0 * l.n as f64 + 1.0) * (k as f64 * 0.6180339887).fract();
            let v = (k as f64 * 0.7548776662).fract();
            let piece = Piece::of(x, l.n);
            let y = match piece {
                Piece::Square => v * l.lambda,
                Piece::Interval(_) => (v - 0.5) * l.h,
                Piece::Band(i) => -l.h / 2.0 + v * (l.h + StageCutoff::new(i, l.eps).derivative(x) * l.c2),
            };
            let ((px, py), j) = tau.apply_jac(x, y);
            assert!((det2(&j) - 1.0).abs() < 1e-9, "x = {x}");
            if tau.seam_distance(x) > 1e-3 {
                let fd = fd_jac(|a, b| tau.apply(a, b), x, y, 1e-6);
                for (ra, rb) in j.iter().zip(&fd) {
                    for (ea, eb) in ra.iter().zip(rb) {
                        assert!((ea - eb).abs() < 1e-5 * (1.0 + ea.abs()), "x = {x}: {j:?} vs {fd:?}");
                    }
                }
            }
            let (ix, iy) = tau.invert(piece, px, py).unwrap();
            assert!((ix - x).abs() < 1e-9 && (iy - y).abs() < 1e-9, "x = {x}, y = {y}: {ix} {iy}");
        }
    }

    #[test]
    fn piece_classification() {
        assert_eq!(Piece::of(0.5, 20), Piece::Square);
        assert_eq!(Piece::of(1.0, 20), Piece::Interval(1));
        assert_eq!(Piece::of(2.5, 20), Piece::Band(1));
        assert_eq!(Piece::of(40.5, 20), Piece::Band(20));
        assert_eq!(Piece::of(41.0, 20), Piece::Band(20));
        assert_eq!(Piece::of(39.2, 20), Piece::Interval(20));
    }
}
