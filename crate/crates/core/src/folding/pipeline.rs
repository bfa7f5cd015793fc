//! Composition `φ = (τ × id) ∘ σ_N ∘ … ∘ σ_1 ∘ (ψ × id)` and per-stage verdicts.

use std::f64::consts::PI;
use std::fmt;

use serde::{Serialize, Serializer};

use super::config::{FoldingConfig, Layout};
use super::fiber::FiberMove;
use super::planar::{Piece, PlanarRegion, Psi, Tau};
use super::sampling::ellipsoid_gauge;
use super::sigma::{SigmaStage, SigmaTrajectory};
use super::Point6;
use crate::error::{Error, Result};

pub const DEFAULT_SLACK: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StageId {
    Psi0,
    Sigma(u64),
    Tau,
}

impl fmt::Display for StageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StageId::Psi0 => write!(f, "PSI_0"),
            StageId::Sigma(i) => write!(f, "SIGMA_{i}"),
            StageId::Tau => write!(f, "TAU"),
        }
    }
}

impl Serialize for StageId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum StageKind {
    Psi(Psi),
    Sigma(SigmaStage),
    Tau(Tau),
}

/// One stage of the composite, immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageMap {
    pub id: StageId,
    pub domain: &'static str,
    pub codomain: &'static str,
    pub kind: StageKind,
}

impl StageMap {
    pub fn apply(&self, p: &Point6) -> Result<Point6> {
        Ok(self.apply_traced(p)?.0)
    }

    fn apply_traced(&self, p: &Point6) -> Result<(Point6, Option<SigmaTrajectory>)> {
        match &self.kind {
            StageKind::Psi(psi) => {
                let (x, y) = psi.apply(p[0], p[1]);
                Ok(([x, y, p[2], p[3], p[4], p[5]], None))
            }
            StageKind::Sigma(s) => s.apply_traced(p),
            StageKind::Tau(tau) => {
                let (x, y) = tau.apply(p[0], p[1]);
                Ok(([x, y, p[2], p[3], p[4], p[5]], None))
            }
        }
    }

    /// The σ-stage descriptor: cut-off `χ_i` and fiber Hamiltonian `G_i`.
    pub fn hamiltonian(&self) -> Option<(&super::cutoff::StageCutoff, &FiberMove)> {
        match &self.kind {
            StageKind::Sigma(s) => Some((&s.cutoff, &s.fiber)),
            _ => None,
        }
    }
}

/// Which region of the inductive description a stage output is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "region", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StageRegion {
    /// Over `W_0`, fibers in `P(1, T)`.
    SquareW0,
    /// Over `[2i−1, 2i] × {0}`, fibers in `P_i`.
    Interval { i: u64 },
    /// Over `W_i` at `Re z₁ = 2i + t`.
    StripW { i: u64, t: f64 },
    /// Over `[2k+1, 2N+1] × {0}`, fibers in `P_{k+1}`.
    Tail { next: u64 },
    /// Final image in `B⁴(3λ) ∩ P(2λ, 2λ)`.
    Target,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageOutput {
    pub stage: StageId,
    pub point: Point6,
    pub region: StageRegion,
    pub contained: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub input: Point6,
    pub stages: Vec<StageOutput>,
    pub final_image: Point6,
    /// Piece of the `z₁` plane the point lies over after `ψ`.
    pub piece: Piece,
    /// Trajectory data of the one σ-stage that had to be integrated, if any.
    pub active_flow: Option<(u64, SigmaTrajectory)>,
    pub jacobian_defect: Option<f64>,
}

impl TraceRecord {
    pub fn all_contained(&self) -> bool {
        self.stages.iter().all(|s| s.contained)
    }
}

fn action(x: f64, y: f64) -> f64 {
    PI * (x * x + y * y)
}

/// The assembled embedding.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Embedding {
    pub config: FoldingConfig,
    pub layout: Layout,
    pub stages: Vec<StageMap>,
}

impl Embedding {
    pub fn build(config: &FoldingConfig) -> Result<Self> {
        let layout = Layout::new(config)?;
        let mut stages = Vec::with_capacity(config.n as usize + 2);
        stages.push(build_psi(&layout));
        for i in 1..=config.n {
            stages.push(build_sigma(i, &layout, config.integrator_step));
        }
        let tau = build_tau(&layout)?;
        stages.push(tau);
        Ok(Embedding { config: config.clone(), layout, stages })
    }

    pub fn psi(&self) -> &Psi {
        match &self.stages[0].kind {
            StageKind::Psi(p) => p,
            _ => unreachable!("stage order is fixed"),
        }
    }

    pub fn tau(&self) -> &Tau {
        match &self.stages.last().expect("nonempty").kind {
            StageKind::Tau(t) => t,
            _ => unreachable!("stage order is fixed"),
        }
    }

    pub fn sigma(&self, i: u64) -> &SigmaStage {
        match &self.stages[i as usize].kind {
            StageKind::Sigma(s) => s,
            _ => unreachable!("stage order is fixed"),
        }
    }

    pub fn in_domain(&self, p: &Point6) -> bool {
        let l = &self.layout;
        ellipsoid_gauge(p, l.s, l.t) <= l.shrink * l.shrink * (1.0 + 1e-12)
    }

    /// The composite map without domain checks or verdicts.
    pub fn apply(&self, p: &Point6) -> Result<Point6> {
        self.stages.iter().try_fold(*p, |q, st| st.apply(&q))
    }

    pub fn evaluate(&self, p: &Point6) -> Result<TraceRecord> {
        self.evaluate_with_slack(p, DEFAULT_SLACK)
    }

    pub fn evaluate_with_slack(&self, p: &Point6, slack: f64) -> Result<TraceRecord> {
        if !self.in_domain(p) {
            return Err(Error::OutsideDomain(format!(
                "point has gauge {:.6} > shrink² = {:.6}",
                ellipsoid_gauge(p, self.layout.s, self.layout.t),
                self.layout.shrink * self.layout.shrink
            )));
        }
        let mut q = *p;
        let mut outputs = Vec::with_capacity(self.stages.len());
        let mut active = None;
        for (k, st) in self.stages.iter().enumerate() {
            let (next, traj) = st.apply_traced(&q)?;
            if let (Some(t), StageId::Sigma(i)) = (traj, st.id) {
                active = Some((i, t));
            }
            q = next;
            let (region, contained, note) = match st.id {
                StageId::Tau => self.final_verdict(&q, slack),
                _ => self.stage_verdict(k as u64, &q, traj.filter(|_| k > 0), slack),
            };
            outputs.push(StageOutput { stage: st.id, point: q, region, contained, note });
        }
        let piece = Piece::of(outputs[0].point[0], self.layout.n);
        Ok(TraceRecord { input: *p, stages: outputs, final_image: q, piece, active_flow: active, jacobian_defect: None })
    }

    fn in_bidisk(&self, i: u64, a2: f64, a3: f64, slack: f64) -> bool {
        PlanarRegion::bidisk(i, &self.layout).contains((a2, a3), slack * self.layout.lambda.min(self.layout.t))
    }

    /// Verdict after `σ_k` (`k = 0` is after `ψ`).
    fn stage_verdict(
        &self,
        k: u64,
        q: &Point6,
        traj: Option<SigmaTrajectory>,
        slack: f64,
    ) -> (StageRegion, bool, Option<String>) {
        let l = &self.layout;
        let (x, y) = (q[0], q[1]);
        let a2 = action(q[2], q[3]);
        let a3 = action(q[4], q[5]);
        let nbhd = l.eps + l.h / 2.0;
        match Piece::of(x, l.n) {
            Piece::Square => {
                let ok = PlanarRegion::SquareW0 { lambda: l.lambda }.contains((x, y), nbhd)
                    && a2 <= 1.0 + slack
                    && a3 <= l.t * (1.0 + slack);
                (StageRegion::SquareW0, ok, (!ok).then(|| "fiber leaves P(1, T) over W_0".into()))
            }
            Piece::Band(i) if i <= k => {
                let t = (x - 2.0 * i as f64).clamp(0.0, 1.0);
                let cap = if i % 2 == 1 { 1.0 + t } else { 2.0 - t } * (l.lambda + l.eps) * (1.0 + slack);
                let (g_min, g_max) = self.sigma(i).fiber.bounds();
                let base = PlanarRegion::StripWi { i, g_min, g_max }.contains((x, y), nbhd);
                let tol3 = slack * l.t;
                let a3_ok = a3 >= l.b_inner(i) - tol3 && a3 <= l.b_inner(i + 2) + tol3;
                // Odd stages push z₂ outwards monotonically, so the cap at t
                // bounds the whole trajectory; even stages start from D₂.
                let flow_cap = if i % 2 == 1 { cap } else { 2.0 * (l.lambda + l.eps) * (1.0 + slack) };
                let flow_ok = match traj {
                    Some(tr) if i == k => tr.max_a2 <= flow_cap,
                    _ => true,
                };
                let ok = base && a2 <= cap && a3_ok && flow_ok;
                let note = (!ok).then(|| {
                    format!("over W_{i} at t = {t:.4}: π|z2|² = {a2:.6} (cap {cap:.6}), π|z3|² = {a3:.6}, z1 in band: {base}")
                });
                (StageRegion::StripW { i, t }, ok, note)
            }
            Piece::Interval(i) if i <= k => {
                let ok = PlanarRegion::Interval { i }.contains((x, y), nbhd) && self.in_bidisk(i, a2, a3, slack);
                (StageRegion::Interval { i }, ok, (!ok).then(|| format!("fiber over interval {i} leaves P_{i}")))
            }
            _ => {
                let next = k + 1;
                let on_v = x >= 1.0 - nbhd && x <= 2.0 * l.n as f64 + 1.0 + nbhd && y.abs() <= nbhd;
                let ok = on_v && self.in_bidisk(next, a2, a3, slack);
                (StageRegion::Tail { next }, ok, (!ok).then(|| format!("tail fiber leaves P_{next}")))
            }
        }
    }

    fn final_verdict(&self, q: &Point6, slack: f64) -> (StageRegion, bool, Option<String>) {
        let l = &self.layout;
        let a1 = action(q[0], q[1]);
        let a2 = action(q[2], q[3]);
        let ok = a1 + a2 <= 3.0 * l.lambda * (1.0 + slack)
            && a1 <= 2.0 * l.lambda * (1.0 + slack)
            && a2 <= 2.0 * l.lambda * (1.0 + slack);
        let note = (!ok).then(|| format!("π|z1|² = {a1:.6}, π|z2|² = {a2:.6}, 3λ = {:.6}", 3.0 * l.lambda));
        (StageRegion::Target, ok, note)
    }
}

pub fn build_psi(layout: &Layout) -> StageMap {
    StageMap { id: StageId::Psi0, domain: "D(S) x C^2", codomain: "N_eps(V) x C^2", kind: StageKind::Psi(Psi::new(layout)) }
}

pub fn build_sigma(i: u64, layout: &Layout, step: f64) -> StageMap {
    StageMap {
        id: StageId::Sigma(i),
        domain: "F_{i-1}",
        codomain: "F_i",
        kind: StageKind::Sigma(SigmaStage::new(i, layout, step)),
    }
}

pub fn build_tau(layout: &Layout) -> Result<StageMap> {
    let tau = Tau::new(layout);
    tau.check_disjoint()?;
    Ok(StageMap { id: StageId::Tau, domain: "pi_1(F_N) x C^2", codomain: "D(2 lambda) x C^2", kind: StageKind::Tau(tau) })
}

/// `(G_i, φ_i^t)` for stage `i`.
pub fn build_fiber_move(i: u64, config: &FoldingConfig) -> Result<FiberMove> {
    if i == 0 || i > config.n {
        return Err(Error::InvalidInput(format!("stage index {i} outside 1..={}", config.n)));
    }
    Ok(FiberMove::new(i, &Layout::new(config)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::folding::fiber::from_action_angle;
    use crate::folding::sampling::sample_ellipsoid;

    fn emb() -> Embedding {
        Embedding::build(&FoldingConfig::default()).unwrap()
    }

    #[test]
    fn stage_count_and_order() {
        let e = emb();
        assert_eq!(e.stages.len(), e.config.n as usize + 2);
        assert_eq!(e.stages[0].id, StageId::Psi0);
        assert_eq!(e.stages[5].id, StageId::Sigma(5));
        assert_eq!(e.stages.last().unwrap().id, StageId::Tau);
        assert!(e.stages[3].hamiltonian().is_some() && e.stages[0].hamiltonian().is_none());
    }

    #[test]
    fn origin_is_contained_everywhere() {
        let e = emb();
        let tr = e.evaluate(&[0.0; 6]).unwrap();
        assert!(tr.all_contained(), "{tr:?}");
        assert_eq!(tr.piece, Piece::Square);
        assert_eq!(tr.stages.len(), e.config.n as usize + 2);
    }

    #[test]
    fn rejects_points_outside_domain() {
        let e = emb();
        assert!(matches!(e.evaluate(&[0.0, 0.0, 1.0, 0.0, 0.0, 0.0]), Err(Error::OutsideDomain(_))));
    }

    #[test]
    fn outer_z1_forces_small_z2() {
        let e = emb();
        let l = e.layout;
        for p in sample_ellipsoid(l.s, l.t, l.shrink, 2000, 3) {
            if action(p[0], p[1]) > l.lambda {
                assert!(action(p[2], p[3]) < l.lambda);
                let tr = e.evaluate(&p).unwrap();
                assert_ne!(tr.piece, Piece::Square);
            }
        }
    }

    #[test]
    fn composite_equals_stagewise() {
        let e = emb();
        let l = e.layout;
        for p in sample_ellipsoid(l.s, l.t, l.shrink, 300, 11) {
            let tr = e.evaluate(&p).unwrap();
            let mut q = p;
            for (st, out) in e.stages.iter().zip(&tr.stages) {
                q = st.apply(&q).unwrap();
                assert_eq!(q, out.point);
            }
            assert_eq!(q, tr.final_image);
            assert_eq!(e.apply(&p).unwrap(), tr.final_image);
        }
    }

    #[test]
    fn deterministic_traces() {
        let e = emb();
        let l = e.layout;
        let pts = sample_ellipsoid(l.s, l.t, l.shrink, 200, 5);
        let a: Vec<_> = pts.iter().map(|p| e.evaluate(p).unwrap()).collect();
        let b: Vec<_> = pts.iter().map(|p| Embedding::build(&e.config).unwrap().evaluate(p).unwrap()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn w0_fibers_stay_in_double_lambda() {
        let e = emb();
        let l = e.layout;
        let (x2, y2) = from_action_angle(l.shrink * l.shrink * 0.999, 0.3);
        let tr = e.evaluate(&[0.0, 0.0, x2, y2, 0.0, 0.0]).unwrap();
        let q = tr.final_image;
        assert!(action(q[2], q[3]) <= 2.0 * l.lambda);
        assert!(tr.all_contained());
    }

    #[test]
    fn boundary_balance() {
        // A point over an odd band near its outer end has a small fiber.
        let e = emb();
        let l = e.layout;
        for p in sample_ellipsoid(l.s, l.t, l.shrink, 3000, 9) {
            let tr = e.evaluate(&p).unwrap();
            let q = tr.final_image;
            let a1 = action(q[0], q[1]);
            if a1 > l.lambda {
                let t = a1 / l.lambda - 1.0;
                assert!(action(q[2], q[3]) <= (2.0 - t) * l.lambda * (1.0 + DEFAULT_SLACK) + l.eps);
            }
        }
    }

    #[test]
    fn fiber_move_index_checked() {
        let cfg = FoldingConfig::default();
        assert!(build_fiber_move(0, &cfg).is_err());
        assert!(build_fiber_move(cfg.n + 1, &cfg).is_err());
        assert!(build_fiber_move(1, &cfg).is_ok());
    }
}
