//! Property checks of the composite embedding on sampled points.

use std::collections::HashMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::cutoff::StageCutoff;
use super::fiber::{from_action_angle, to_action_angle, FiberChart};
use super::pipeline::{Embedding, StageId, TraceRecord};
use super::planar::{det2, Piece, Psi, Tau};
use super::sampling::Halton;
use super::Point6;
use crate::error::{invalid, Error, Result};

/// Traces for all samples, in input order. Integrator failures are kept as
/// `Err` so reports can count them.
pub fn evaluate_all(emb: &Embedding, samples: &[Point6], slack: f64) -> Vec<Result<TraceRecord>> {
    samples.par_iter().map(|p| emb.evaluate_with_slack(p, slack)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageFailure {
    pub sample: usize,
    pub stage: StageId,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContainmentReport {
    pub samples: usize,
    pub slack: f64,
    pub integrator_failures: usize,
    pub final_violations: usize,
    pub stage_violations: usize,
    /// Largest `(π|z₁|² + π|z₂|²)/3λ` over final images.
    pub max_ball_ratio: f64,
    /// Largest `max(π|z₁|², π|z₂|²)/2λ` over final images.
    pub max_polydisk_ratio: f64,
    pub examples: Vec<StageFailure>,
    pub pass: bool,
}

/// Integrator failures are excluded from certification but must stay below 0.1%.
fn failure_budget_ok(failures: usize, samples: usize) -> bool {
    (failures as f64) < 1e-3 * samples as f64 || failures == 0
}

pub fn verify_containment(emb: &Embedding, samples: &[Point6], slack: f64) -> Result<ContainmentReport> {
    let traces = evaluate_all(emb, samples, slack);
    containment_from_traces(emb, &traces, slack)
}

pub fn containment_from_traces(emb: &Embedding, traces: &[Result<TraceRecord>], slack: f64) -> Result<ContainmentReport> {
    if !(slack > 0.0) {
        return invalid(format!("slack must be positive, got {slack}"));
    }
    let l = &emb.layout;
    let mut report = ContainmentReport {
        samples: traces.len(),
        slack,
        integrator_failures: 0,
        final_violations: 0,
        stage_violations: 0,
        max_ball_ratio: 0.0,
        max_polydisk_ratio: 0.0,
        examples: Vec::new(),
        pass: false,
    };
    for (idx, tr) in traces.iter().enumerate() {
        let tr = match tr {
            Ok(tr) => tr,
            Err(Error::Integrator(_)) => {
                report.integrator_failures += 1;
                continue;
            }
            Err(e) => return Err(e.clone()),
        };
        let q = tr.final_image;
        let a1 = PI * (q[0] * q[0] + q[1] * q[1]);
        let a2 = PI * (q[2] * q[2] + q[3] * q[3]);
        report.max_ball_ratio = report.max_ball_ratio.max((a1 + a2) / (3.0 * l.lambda));
        report.max_polydisk_ratio = report.max_polydisk_ratio.max(a1.max(a2) / (2.0 * l.lambda));
        for out in tr.stages.iter().filter(|o| !o.contained) {
            if out.stage == StageId::Tau {
                report.final_violations += 1;
            } else {
                report.stage_violations += 1;
            }
            if report.examples.len() < 10 {
                report.examples.push(StageFailure { sample: idx, stage: out.stage, note: out.note.clone().unwrap_or_default() });
            }
        }
    }
    report.pass = report.final_violations == 0
        && report.stage_violations == 0
        && failure_budget_ok(report.integrator_failures, report.samples);
    Ok(report)
}

/// Chart `(x₁, y₁, A₂, s₂, A₃, s₃)`: Cartesian in `z₁`, action-angle in the
/// fibers. It is a Darboux chart away from `z₂ = 0` and `z₃ = 0`.
pub fn to_chart(p: &Point6) -> Point6 {
    let f = FiberChart::from_cartesian([p[2], p[3], p[4], p[5]]);
    [p[0], p[1], f.a2, f.s2, f.a3, f.s3]
}

pub fn from_chart(c: &Point6) -> Point6 {
    let (x2, y2) = from_action_angle(c[2], c[3]);
    let (x3, y3) = from_action_angle(c[4], c[5]);
    [c[0], c[1], x2, y2, x3, y3]
}

/// Chart `(A₁, s₁, A₂, s₂, A₃, s₃)`, action-angle in every factor. The folded
/// image is described this way, and it is a Darboux chart away from the axes.
pub fn to_image_chart(p: &Point6) -> Point6 {
    let (a1, s1) = to_action_angle(p[0], p[1]);
    let f = FiberChart::from_cartesian([p[2], p[3], p[4], p[5]]);
    [a1, s1, f.a2, f.s2, f.a3, f.s3]
}

/// Fourth-order central-difference Jacobian of `f` in the chart of [`to_chart`] on both
/// sides, and the defect `‖DΦᵀ Ω DΦ − Ω‖_∞`.
pub fn chart_jacobian_defect(f: impl Fn(&Point6) -> Result<Point6>, p: &Point6, h: f64) -> Result<f64> {
    jacobian_defect_between(f, p, h, to_chart, &[3, 5])
}

/// As [`chart_jacobian_defect`], with [`to_image_chart`] on the image side.
pub fn composite_jacobian_defect(f: impl Fn(&Point6) -> Result<Point6>, p: &Point6, h: f64) -> Result<f64> {
    jacobian_defect_between(f, p, h, to_image_chart, &[1, 3, 5])
}

fn jacobian_defect_between(
    f: impl Fn(&Point6) -> Result<Point6>,
    p: &Point6,
    h: f64,
    image_chart: fn(&Point6) -> Point6,
    angles: &[usize],
) -> Result<f64> {
    let c = to_chart(p);
    let mut jac = [[0.0; 6]; 6];
    let at = |j: usize, k: f64| -> Result<Point6> {
        let mut q = c;
        q[j] += k * h;
        Ok(image_chart(&f(&from_chart(&q))?))
    };
    let centre = image_chart(&f(p)?);
    for j in 0..6 {
        // Angles are unwrapped along the stencil, one step of `h` at a time.
        let mut stencil = [at(j, -2.0)?, at(j, -1.0)?, centre, at(j, 1.0)?, at(j, 2.0)?];
        for &r in angles {
            for k in 1..5 {
                let step = stencil[k][r] - stencil[k - 1][r];
                stencil[k][r] = stencil[k - 1][r] + step - step.round();
            }
        }
        for r in 0..6 {
            jac[r][j] = (8.0 * (stencil[3][r] - stencil[1][r]) - (stencil[4][r] - stencil[0][r])) / (12.0 * h);
        }
    }
    Ok(symplectic_defect(&jac))
}

/// `‖Jᵀ Ω J − Ω‖_∞` for `Ω` the standard form on pairs `(0,1), (2,3), (4,5)`.
pub fn symplectic_defect(j: &[[f64; 6]; 6]) -> f64 {
    let omega = |a: usize, b: usize| -> f64 {
        if a / 2 != b / 2 {
            0.0
        } else if a % 2 == 0 && b == a + 1 {
            1.0
        } else if a % 2 == 1 && b + 1 == a {
            -1.0
        } else {
            0.0
        }
    };
    let mut worst: f64 = 0.0;
    for a in 0..6 {
        for b in 0..6 {
            let mut v = 0.0;
            for k in 0..3 {
                v += j[2 * k][a] * j[2 * k + 1][b] - j[2 * k + 1][a] * j[2 * k][b];
            }
            worst = worst.max((v - omega(a, b)).abs());
        }
    }
    worst
}

fn wrap_distance(s: f64) -> f64 {
    s.min(1.0 - s).abs()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Level {
    /// Seams at the integers.
    Integer,
    /// Seam at zero.
    Zero,
    /// An angle; seams where it wraps.
    Wrap,
    /// Seams at the listed values.
    At([f64; 4]),
}

impl Level {
    fn gap(&self, emb: &Embedding, v: f64) -> f64 {
        match self {
            Level::Integer => emb.tau().seam_distance(v),
            Level::Zero => v.abs(),
            Level::Wrap => wrap_distance(v),
            Level::At(at) => at.iter().map(|a| (v - a).abs()).fold(f64::INFINITY, f64::min),
        }
    }
}

/// Functions whose level sets are the seams met after `ψ`: the lines
/// `Re z₁ ∈ ℤ` seen by `τ`, the joints of the cut-offs `χ_i` and `χ`, the
/// angle wraps of `C⁻¹` at every active stage, and the axes of the image fibers.
fn seam_values(emb: &Embedding, tr: &TraceRecord, active: u64) -> Vec<(f64, Level)> {
    let x1 = tr.stages[0].point[0];
    let output = to_image_chart(&tr.final_image);
    let mut v = vec![(x1, Level::Integer), (output[2], Level::Zero), (output[4], Level::Zero)];
    for i in 1..=active {
        let stage = emb.sigma(i);
        if x1 < stage.cutoff.right() {
            v.push((x1, Level::At(stage.cutoff.joints())));
        }
        let [lo, hi] = stage.fiber.chi.joints();
        let fiber = |p: &Point6| FiberChart::from_cartesian([p[2], p[3], p[4], p[5]]);
        let before = fiber(&tr.stages[i as usize - 1].point);
        let after = fiber(&tr.stages[i as usize].point);
        v.push((before.a2, Level::At([lo, hi, lo, hi])));
        v.push((after.a2, Level::At([lo, hi, lo, hi])));
        v.push((stage.fiber.conj_inv(before).s2, Level::Wrap));
    }
    v
}

const SEAM_GRADIENT_STEP: f64 = 1e-8;

/// Distance, in the units of the chart of [`to_chart`] at the input, from the
/// declared seams of the composite. Seams met after `ψ` are located to first
/// order, `|g|/‖∇g‖`, with the gradient taken by forward differences.
pub fn seam_distance(emb: &Embedding, tr: &TraceRecord) -> f64 {
    let l = &emb.layout;
    let input = to_chart(&tr.input);
    let mut d = emb.psi().seam_distance(tr.input[0], tr.input[1]);
    d = d.min(input[2]).min(input[4]);
    d = d.min(wrap_distance(input[3])).min(wrap_distance(input[5]));
    let x1 = tr.stages[0].point[0];
    let active = (1..=l.n).take_while(|&i| x1 > 2.0 * i as f64).count() as u64;
    let centre = seam_values(emb, tr, active);
    let mut grad2 = vec![0.0; centre.len()];
    for j in 0..6 {
        let mut c = input;
        c[j] += SEAM_GRADIENT_STEP;
        let Ok(moved) = emb.evaluate(&from_chart(&c)) else { return 0.0 };
        for (k, (&(v0, level), (v1, _))) in centre.iter().zip(seam_values(emb, &moved, active)).enumerate() {
            let mut dv = v1 - v0;
            if level == Level::Wrap {
                dv -= dv.round();
            }
            grad2[k] += (dv / SEAM_GRADIENT_STEP).powi(2);
        }
    }
    for (&(v0, level), g2) in centre.iter().zip(grad2) {
        let g = g2.sqrt();
        if g > 0.0 {
            d = d.min(level.gap(emb, v0) / g);
        }
    }
    d
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymplecticReport {
    pub h_fd: f64,
    pub tolerance: f64,
    pub checked: usize,
    pub seam_adjacent: usize,
    pub max_defect_off_seam: f64,
    pub max_defect_seam_adjacent: f64,
    pub failures: usize,
    pub worst_sample: Option<usize>,
    pub pass: bool,
}

/// Symplectic defect of the composite at every sample. Samples closer than
/// `10·h_fd` to a seam are reported separately.
pub fn verify_symplectic(emb: &Embedding, traces: &[Result<TraceRecord>], h_fd: f64, tolerance: f64) -> Result<SymplecticReport> {
    if !(h_fd > 0.0) {
        return invalid(format!("h_fd must be positive, got {h_fd}"));
    }
    let rows: Vec<Option<(f64, bool)>> = traces
        .par_iter()
        .map(|tr| {
            let tr = tr.as_ref().ok()?;
            let near = seam_distance(emb, tr) < 10.0 * h_fd;
            let defect = composite_jacobian_defect(|q| emb.apply(q), &tr.input, h_fd).unwrap_or(f64::INFINITY);
            Some((defect, near))
        })
        .collect();
    let mut r = SymplecticReport {
        h_fd,
        tolerance,
        checked: 0,
        seam_adjacent: 0,
        max_defect_off_seam: 0.0,
        max_defect_seam_adjacent: 0.0,
        failures: 0,
        worst_sample: None,
        pass: false,
    };
    for (idx, row) in rows.iter().enumerate() {
        let Some((defect, near)) = *row else { continue };
        if near {
            r.seam_adjacent += 1;
            r.max_defect_seam_adjacent = r.max_defect_seam_adjacent.max(defect);
            continue;
        }
        r.checked += 1;
        if defect > r.max_defect_off_seam || r.worst_sample.is_none() {
            r.worst_sample = Some(idx);
        }
        r.max_defect_off_seam = r.max_defect_off_seam.max(defect);
        if !(defect <= tolerance) {
            r.failures += 1;
        }
    }
    r.pass = r.failures == 0 && r.checked > 0;
    Ok(r)
}

/// Attaches the chart Jacobian defect to each trace.
pub fn attach_defects(emb: &Embedding, traces: &mut [Result<TraceRecord>], h_fd: f64) {
    traces.par_iter_mut().for_each(|tr| {
        if let Ok(tr) = tr {
            tr.jacobian_defect = composite_jacobian_defect(|q| emb.apply(q), &tr.input, h_fd).ok();
        }
    });
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanarReport {
    pub checked: usize,
    pub seam_adjacent: usize,
    pub psi_max_det_error: f64,
    pub tau_max_det_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// `|det Dψ − 1|` and `|det Dτ − 1|` from the analytic Jacobians.
pub fn verify_planar(emb: &Embedding, traces: &[Result<TraceRecord>], h_fd: f64, tolerance: f64) -> PlanarReport {
    let (psi, tau) = (emb.psi(), emb.tau());
    let mut r = PlanarReport { checked: 0, seam_adjacent: 0, psi_max_det_error: 0.0, tau_max_det_error: 0.0, tolerance, pass: false };
    for tr in traces.iter().flatten() {
        let (x, y) = (tr.input[0], tr.input[1]);
        let z1 = tr.stages[emb.stages.len() - 2].point;
        if psi.seam_distance(x, y) < 10.0 * h_fd || tau.seam_distance(z1[0]) < 10.0 * h_fd {
            r.seam_adjacent += 1;
            continue;
        }
        r.checked += 1;
        r.psi_max_det_error = r.psi_max_det_error.max((det2(&psi.apply_jac(x, y).1) - 1.0).abs());
        r.tau_max_det_error = r.tau_max_det_error.max((det2(&tau.apply_jac(z1[0], z1[1]).1) - 1.0).abs());
    }
    r.pass = r.checked > 0 && r.psi_max_det_error <= tolerance && r.tau_max_det_error <= tolerance;
    r
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Collision {
    pub a: usize,
    pub b: usize,
    pub input_distance: f64,
    pub image_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InjectivityReport {
    pub min_sep: f64,
    pub img_sep: f64,
    pub samples: usize,
    pub collisions: usize,
    pub examples: Vec<Collision>,
    /// Final images whose `π|z₁|²` falls outside the annulus reserved for their piece class.
    pub piece_class_violations: usize,
    pub piece_classes_disjoint: bool,
    pub pass: bool,
}

fn dist(a: &Point6, b: &Point6) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn verify_injective(emb: &Embedding, traces: &[Result<TraceRecord>], min_sep: f64, img_sep: f64) -> Result<InjectivityReport> {
    if !(min_sep > 0.0 && img_sep > 0.0) {
        return invalid("min_sep and img_sep must be positive");
    }
    let ok: Vec<&TraceRecord> = traces.iter().flatten().collect();
    let cell = |p: &Point6| -> [i64; 6] { std::array::from_fn(|j| (p[j] / img_sep).floor() as i64) };
    let mut grid: HashMap<[i64; 6], Vec<usize>> = HashMap::new();
    for (k, tr) in ok.iter().enumerate() {
        grid.entry(cell(&tr.final_image)).or_default().push(k);
    }
    let mut collisions: Vec<Collision> = Vec::new();
    for (k, tr) in ok.iter().enumerate() {
        let base = cell(&tr.final_image);
        for code in 0..729u32 {
            let mut key = base;
            let mut c = code;
            for v in key.iter_mut() {
                *v += (c % 3) as i64 - 1;
                c /= 3;
            }
            let Some(bucket) = grid.get(&key) else { continue };
            for &m in bucket.iter().filter(|&&m| m > k) {
                let img = dist(&tr.final_image, &ok[m].final_image);
                let inp = dist(&tr.input, &ok[m].input);
                if img < img_sep && inp >= min_sep {
                    collisions.push(Collision { a: k, b: m, input_distance: inp, image_distance: img });
                }
            }
        }
    }
    let tau = emb.tau();
    let ranges = tau.image_ranges();
    let tol = 1e-9;
    let violations = ok
        .iter()
        .filter(|tr| {
            let a1 = PI * (tr.final_image[0].powi(2) + tr.final_image[1].powi(2));
            let class = match tr.piece {
                Piece::Interval(_) => 0,
                Piece::Square => 1,
                Piece::Band(i) if i % 2 == 0 => 1,
                Piece::Band(_) => 2,
            };
            let (lo, hi) = ranges[class];
            a1 < lo - tol || a1 > hi + tol
        })
        .count();
    let disjoint = tau.check_disjoint().is_ok();
    let n = collisions.len();
    collisions.truncate(10);
    Ok(InjectivityReport {
        min_sep,
        img_sep,
        samples: ok.len(),
        collisions: n,
        examples: collisions,
        piece_class_violations: violations,
        piece_classes_disjoint: disjoint,
        pass: n == 0 && violations == 0 && disjoint,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    pub bound: f64,
    /// `max G_i − min G_i` on the evaluation grid, per stage.
    pub norms: Vec<f64>,
    pub max_cutoff_slope: f64,
    pub pass: bool,
}

/// `G_i` on a `grid × grid` lattice of the `z₂` plane covering
/// `D(2(λ+ε))`, for `z₃` on circles through `B_i` and `B_{i+1}`.
pub fn verify_norms(emb: &Embedding, grid: usize) -> NormReport {
    let l = &emb.layout;
    let r2 = (2.0 * (l.lambda + l.eps) / PI).sqrt();
    let norms: Vec<f64> = (1..=l.n)
        .into_par_iter()
        .map(|i| {
            let fib = emb.sigma(i).fiber;
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for a3 in [l.b_inner(i) + 0.5 * l.t, l.b_inner(i + 1) + 0.5 * l.t] {
                for s3 in [0.0, 0.25, 0.5, 0.75] {
                    let (x3, y3) = from_action_angle(a3, s3);
                    for gx in 0..grid {
                        for gy in 0..grid {
                            let x2 = -r2 + 2.0 * r2 * gx as f64 / (grid - 1) as f64;
                            let y2 = -r2 + 2.0 * r2 * gy as f64 / (grid - 1) as f64;
                            let g = fib.hamiltonian_cartesian([x2, y2, x3, y3]);
                            lo = lo.min(g);
                            hi = hi.max(g);
                        }
                    }
                }
            }
            hi - lo
        })
        .collect();
    let max_cutoff_slope = (0..=100_000)
        .map(|k| StageCutoff::new(1, l.eps).derivative(2.0 + k as f64 / 100_000.0))
        .fold(0.0, f64::max);
    let bound = l.lambda + l.eps;
    let pass = norms.iter().all(|&v| v <= bound) && max_cutoff_slope <= 1.0 + l.eps + 1e-12;
    NormReport { bound, norms, max_cutoff_slope, pass }
}

/// Monte Carlo area of `{p ∈ boxes : inverse(p) ∈ domain}` with `n` Halton
/// points per box. Boxes are `([x0, y0], [x1, y1])`.
pub fn monte_carlo_image_area(
    inverse: impl Fn(f64, f64) -> Option<(f64, f64)>,
    domain: impl Fn(f64, f64) -> bool,
    boxes: &[([f64; 2], [f64; 2])],
    n: usize,
    seed: u64,
) -> f64 {
    boxes
        .iter()
        .enumerate()
        .map(|(k, (lo, hi))| {
            let hits = Halton::<2>::new(seed.wrapping_add(k as u64))
                .take(n)
                .filter(|u| {
                    let x = lo[0] + u[0] * (hi[0] - lo[0]);
                    let y = lo[1] + u[1] * (hi[1] - lo[1]);
                    inverse(x, y).is_some_and(|(a, b)| domain(a, b))
                })
                .count();
            (hi[0] - lo[0]) * (hi[1] - lo[1]) * hits as f64 / n as f64
        })
        .sum()
}

/// Monte Carlo area of `domain ∩ box`.
pub fn monte_carlo_area(domain: impl Fn(f64, f64) -> bool, bx: ([f64; 2], [f64; 2]), n: usize, seed: u64) -> f64 {
    monte_carlo_image_area(|x, y| Some((x, y)), domain, &[bx], n, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AreaCheck {
    pub label: String,
    pub domain_area: f64,
    pub image_area: f64,
    pub ratio: f64,
}

/// `ψ` on the cut disk `D(S·shrink²) ∩ {x ≥ −r/3}`.
pub fn psi_area_check(psi: &Psi, shrink: f64, n: usize, seed: u64) -> AreaCheck {
    let r = (psi.s * shrink * shrink / PI).sqrt();
    let domain = move |x: f64, y: f64| x * x + y * y <= r * r && x >= -r / 3.0;
    let domain_area = monte_carlo_area(domain, ([-r, -r], [r, r]), n, seed);
    let two_n = 2.0 * psi.n as f64;
    let boxes = [([0.0, 0.0], [1.0, psi.lambda]), ([1.0, -psi.h / 2.0], [1.0 + two_n, psi.h / 2.0])];
    let image_area = monte_carlo_image_area(|x, y| psi.invert(x, y), domain, &boxes, n, seed ^ 0x9e37);
    AreaCheck { label: "psi".into(), domain_area, image_area, ratio: image_area / domain_area }
}

/// `τ` restricted to one piece, on the lower half of that piece.
pub fn tau_area_check(tau: &Tau, piece: Piece, n: usize, seed: u64) -> AreaCheck {
    let l = tau.layout;
    let (domain_area, domain): (f64, Box<dyn Fn(f64, f64) -> bool>) = match piece {
        Piece::Square => (l.lambda / 2.0, Box::new(move |x, y| (0.0..=1.0).contains(&x) && (0.0..=l.lambda / 2.0).contains(&y))),
        Piece::Interval(i) => {
            let x0 = 2.0 * i as f64 - 1.0;
            (l.h / 2.0, Box::new(move |x, y| (x0..=x0 + 1.0).contains(&x) && (-l.h / 2.0..=0.0).contains(&y)))
        }
        Piece::Band(i) => {
            let chi = StageCutoff::new(i, l.eps);
            let x0 = 2.0 * i as f64;
            (
                (l.h + l.c2) / 2.0,
                Box::new(move |x, y| {
                    (x0..=x0 + 1.0).contains(&x) && y >= -l.h / 2.0 && y <= -l.h / 2.0 + 0.5 * (l.h + chi.derivative(x) * l.c2)
                }),
            )
        }
    };
    let outer = match piece {
        Piece::Interval(_) => l.a_lo + l.h,
        Piece::Square => l.a0 + l.lambda,
        Piece::Band(i) if i % 2 == 0 => l.a0 + l.band,
        Piece::Band(_) => l.a_in + l.band,
    };
    let r = (outer / PI).sqrt() * 1.001;
    let image_area = monte_carlo_image_area(|x, y| tau.invert(piece, x, y), domain, &[([-r, -r], [r, r])], n, seed);
    AreaCheck { label: format!("tau {piece:?}"), domain_area, image_area, ratio: image_area / domain_area }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::folding::config::FoldingConfig;
    use crate::folding::pipeline::StageKind;
    use crate::folding::sampling::sample_ellipsoid;

    fn emb() -> Embedding {
        Embedding::build(&FoldingConfig::default()).unwrap()
    }

    #[test]
    fn defect_of_linear_maps() {
        let mut j = [[0.0; 6]; 6];
        for (k, row) in j.iter_mut().enumerate() {
            row[k] = 1.0;
        }
        assert_eq!(symplectic_defect(&j), 0.0);
        j[0][0] = 2.0;
        j[1][1] = 0.5;
        assert!(symplectic_defect(&j) < 1e-15);
        j[1][1] = 1.0;
        assert!((symplectic_defect(&j) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identity_stage_has_tiny_defect() {
        let e = emb();
        let StageKind::Sigma(s) = &e.stages[3].kind else { panic!() };
        let l = e.layout;
        for p in sample_ellipsoid(l.s, l.t, l.shrink, 200, 1) {
            let mut q = p;
            q[0] = q[0].min(2.0 * 3.0 - 0.1);
            let c = to_chart(&q);
            if c[2] < 1e-3 || c[4] < 1e-3 || wrap_distance(c[3]) < 1e-3 || wrap_distance(c[5]) < 1e-3 {
                continue;
            }
            let d = chart_jacobian_defect(|z| s.apply(z), &q, 1e-5).unwrap();
            assert!(d < 1e-10, "{d}");
        }
    }

    #[test]
    fn chart_round_trip() {
        let p = [0.1, -0.2, 0.3, 0.05, -0.4, 0.2];
        let q = from_chart(&to_chart(&p));
        for j in 0..6 {
            assert!((p[j] - q[j]).abs() < 1e-15);
        }
    }

    #[test]
    fn area_oracles() {
        let e = emb();
        let a = psi_area_check(e.psi(), e.layout.shrink, 10_000, 3);
        assert!((a.ratio - 1.0).abs() < 0.02, "{a:?}");
        for piece in [Piece::Square, Piece::Interval(3), Piece::Band(1), Piece::Band(2), Piece::Band(20)] {
            let a = tau_area_check(e.tau(), piece, 10_000, 5);
            assert!((a.ratio - 1.0).abs() < 0.02, "{a:?}");
        }
    }

    #[test]
    fn norms_within_bound() {
        let r = verify_norms(&emb(), 200);
        assert!(r.pass, "{r:?}");
        assert_eq!(r.norms.len(), 20);
    }

    #[test]
    fn small_pipeline_run() {
        let e = emb();
        let l = e.layout;
        let pts = sample_ellipsoid(l.s, l.t, l.shrink, 1000, 2);
        let traces = evaluate_all(&e, &pts, 0.05);
        let c = containment_from_traces(&e, &traces, 0.05).unwrap();
        assert!(c.pass, "{c:?}");
        let s = verify_symplectic(&e, &traces, 1e-5, 1e-4).unwrap();
        assert!(s.pass, "{s:?}");
        let p = verify_planar(&e, &traces, 1e-5, 1e-6);
        assert!(p.pass, "{p:?}");
        let inj = verify_injective(&e, &traces, 1e-2, 1e-6).unwrap();
        assert!(inj.pass, "{inj:?}");
        assert!(containment_from_traces(&e, &traces, 0.0).is_err());
    }
}
