use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use ellembed::capacities::{solve_c_b, solve_c_p, CapacitySolution, SolverOptions};
use ellembed::exact_numbers::{
    b_ratio, beta_ratio, half_companion_pell, odd_fibonacci, parse_rational, pell, render, Rational,
};
use ellembed::folding::pipeline::StageId;
use ellembed::folding::verify::{
    attach_defects, containment_from_traces, evaluate_all, seam_distance, verify_injective, verify_norms, verify_planar,
    verify_symplectic,
};
use ellembed::folding::{sample_ellipsoid, Embedding, FoldingConfig, TraceRecord};
use ellembed::stabilized_bounds::{classify, compare_with_product, Regime, TargetKind};

use crate::envelope::{exact, float, integer, tagged, Provenance};
use crate::{Capacity, Cli, Command, ConfigArgs, FoldAction, SeqKind, Target};

/// Outcome of one command: text for humans, a payload for the JSON envelope,
/// and the canonical configuration the hash is taken over.
pub struct Report {
    pub text: String,
    pub results: Value,
    pub pass: bool,
    pub canonical: String,
}

pub fn run(cli: &Cli) -> Result<Report> {
    match &cli.command {
        Command::Seq { kind, count } => seq(*kind, *count),
        Command::Bounds { target, a2 } => bounds(*target, a2),
        Command::Solve { which, a, tol, max_terms } => solve(*which, a, *tol, *max_terms),
        Command::Compare { target, a2, tol, max_terms, staircase_csv, staircase_count } => {
            compare(*target, a2, *tol, *max_terms, staircase_csv.as_deref(), *staircase_count)
        }
        Command::Fold { action: FoldAction::Verify { config, samples, slack, h_fd, symplectic_tol, planar_tol, min_sep, img_sep, norm_grid, out } } => {
            let checks = Checks {
                samples: *samples,
                slack: *slack,
                h_fd: *h_fd,
                symplectic_tol: *symplectic_tol,
                planar_tol: *planar_tol,
                min_sep: *min_sep,
                img_sep: *img_sep,
                norm_grid: *norm_grid,
            };
            fold_verify(config, &checks, out.as_deref())
        }
        Command::Fold { action: FoldAction::Trace { config, point, slack, h_fd, out } } => {
            fold_trace(config, point, *slack, *h_fd, out.as_deref())
        }
    }
}

/// Canonical form of the arguments, used when a command fails before it
/// could resolve its own configuration.
pub fn canonical(cli: &Cli) -> String {
    format!("{:?}", cli.command)
}

fn target_kind(t: Target) -> TargetKind {
    match t {
        Target::Ball => TargetKind::Ball,
        Target::Cube => TargetKind::Cube,
    }
}

fn name(x: impl Serialize) -> String {
    serde_json::to_value(x).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

fn rational_arg(flag: &str, s: &str) -> Result<Rational> {
    parse_rational(s).with_context(|| format!("--{flag} {s}"))
}

fn seq(kind: SeqKind, count: usize) -> Result<Report> {
    if count == 0 {
        bail!("--count must be at least 1");
    }
    let values: Vec<String> = (0..count)
        .map(|n| match kind {
            SeqKind::FibOdd => odd_fibonacci(n).to_string(),
            SeqKind::Pell => pell(n).to_string(),
            SeqKind::HalfPell => half_companion_pell(n).to_string(),
            SeqKind::B => render(&b_ratio(n)),
            SeqKind::Beta => render(&beta_ratio(n)),
        })
        .collect();
    let text = values.iter().enumerate().fold(String::new(), |mut s, (n, v)| {
        let _ = writeln!(s, "{n}\t{v}");
        s
    });
    let rows: Vec<Value> = values
        .iter()
        .enumerate()
        .map(|(n, v)| json!({ "n": integer(n, Provenance::PaperFormula), "value": { "value": v, "provenance": Provenance::PaperFormula } }))
        .collect();
    let kind = format!("{kind:?}");
    Ok(Report { text, results: json!({ "kind": kind, "values": rows }), pass: true, canonical: format!("seq\nkind = {kind}\ncount = {count}\n") })
}

fn bounds(target: Target, a2: &str) -> Result<Report> {
    let a = rational_arg("a2", a2)?;
    let r = classify(&a, target_kind(target))?;
    let mut text = format!("lower {} upper {}", render(&r.lower), render(&r.upper));
    if r.optimal {
        text += " OPTIMAL";
        if let Some(d) = r.witness_d {
            let _ = write!(text, " d={d}");
        }
    } else {
        let _ = write!(text, " gap {}", render(&r.gap));
    }
    let _ = write!(text, "\nmechanisms: lower {} upper {}\nhypothesis: {}\n", name(r.lower_mechanism), name(r.upper_mechanism), r.hypothesis);
    if let Some(note) = &r.conjecture_note {
        let _ = writeln!(text, "note: {note}");
    }
    let p = Provenance::PaperFormula;
    let results = json!({
        "a2": exact(&r.a2, p),
        "target": r.target,
        "lower": exact(&r.lower, p),
        "lower_mechanism": r.lower_mechanism,
        "upper": exact(&r.upper, p),
        "upper_mechanism": r.upper_mechanism,
        "optimal": r.optimal,
        "witness_d": r.witness_d.map(|d| integer(d, p)),
        "gap": exact(&r.gap, p),
        "hypothesis": r.hypothesis,
        "conjecture_note": r.conjecture_note,
    });
    Ok(Report { text, results, pass: true, canonical: format!("bounds\ntarget = {}\na2 = {}\n", name(r.target), render(&a)) })
}

fn solution_json(s: &CapacitySolution) -> Value {
    json!({
        "value": float(s.value, Provenance::Numerical),
        "exact": s.exact.as_ref().map(|r| exact(r, Provenance::Oracle)),
        "bracket": [float(s.bracket.0, Provenance::Numerical), float(s.bracket.1, Provenance::Numerical)],
        "iterations": integer(s.iterations, Provenance::Numerical),
        "terms": integer(s.terms, Provenance::Oracle),
        "tail": tagged(&s.tail, Provenance::Oracle),
    })
}

fn solution_text(s: &CapacitySolution, tol: f64) -> String {
    let digits = (-tol.log10()).ceil().clamp(1.0, 15.0) as usize;
    match &s.exact {
        Some(r) => format!("{:.*} = {} (exact re-check passed)", digits, s.value, render(r)),
        None => format!("{:.*} (bisection, tol {tol:e}, no exact value)", digits, s.value),
    }
}

fn solve(which: Capacity, a: &str, tol: f64, max_terms: usize) -> Result<Report> {
    let a = rational_arg("a", a)?;
    let opts = SolverOptions { max_terms, ..Default::default() };
    let s = match which {
        Capacity::Cb => solve_c_b(&a, tol, opts)?,
        Capacity::Cp => solve_c_p(&a, tol, opts)?,
    };
    let text = format!("{}\n", solution_text(&s, tol));
    let results = json!({
        "capacity": format!("{which:?}"),
        "a": exact(&a, Provenance::PaperFormula),
        "tol": float(tol, Provenance::Numerical),
        "solution": solution_json(&s),
    });
    let canonical = format!("solve\ncapacity = {which:?}\na = {}\ntol = {tol:?}\nmax_terms = {max_terms}\n", render(&a));
    Ok(Report { text, results, pass: true, canonical })
}

fn product_text(s: &CapacitySolution) -> String {
    s.exact.as_ref().map(render).unwrap_or_else(|| format!("{:.9}", s.value))
}

fn compare(target: Target, a2: &str, tol: f64, max_terms: usize, csv_path: Option<&Path>, staircase: usize) -> Result<Report> {
    let a = rational_arg("a2", a2)?;
    let kind = target_kind(target);
    let opts = SolverOptions { max_terms, ..Default::default() };
    let r = compare_with_product(&a, kind, tol, opts)?;
    let (fold, product) = (render(&r.fold), product_text(&r.product));
    let product_wins = r.regime == Regime::ProductBetter;
    let (first, second) = if product_wins { (&product, &fold) } else { (&fold, &product) };
    let text = format!("{} {first} vs {second}\nfold {fold}, product {product}\n", name(r.regime));
    if let Some(path) = csv_path {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
        w.write_record(["n", "a2", "fold", "product", "product_exact"])?;
        for n in 0..staircase {
            let point = match kind {
                TargetKind::Ball => b_ratio(n),
                TargetKind::Cube => beta_ratio(n),
            };
            let row = compare_with_product(&point, kind, tol, opts)?;
            let exact = row.product.exact.as_ref().map(render).unwrap_or_default();
            w.write_record([n.to_string(), render(&point), render(&row.fold), format!("{:?}", row.product.value), exact])?;
        }
        w.flush()?;
    }
    let results = json!({
        "a2": exact(&a, Provenance::PaperFormula),
        "target": r.target,
        "fold": exact(&r.fold, Provenance::PaperFormula),
        "product": solution_json(&r.product),
        "regime": r.regime,
        "staircase_index": r.staircase_index.map(|n| integer(n, Provenance::PaperFormula)),
        "above_accumulation": r.above_accumulation,
    });
    let canonical = format!(
        "compare\ntarget = {}\na2 = {}\ntol = {tol:?}\nmax_terms = {max_terms}\n",
        name(r.target),
        render(&a)
    );
    Ok(Report { text, results, pass: true, canonical })
}

/// Config file pairs first, then flags.
fn resolve_config(args: &ConfigArgs) -> Result<FoldingConfig> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        pairs.extend(FoldingConfig::parse_pairs(&text).with_context(|| format!("in {}", path.display()))?);
    }
    let flags = [
        ("S", &args.s),
        ("T", &args.t),
        ("eps", &args.eps),
        ("N", &args.n),
        ("integrator_step", &args.integrator_step),
        ("shrink", &args.shrink),
        ("seed", &args.seed),
        ("d2_gap", &args.d2_gap),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            pairs.push((k.to_string(), v.clone()));
        }
    }
    Ok(FoldingConfig::apply(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))?)
}

struct Checks {
    samples: usize,
    slack: f64,
    h_fd: f64,
    symplectic_tol: f64,
    planar_tol: f64,
    min_sep: f64,
    img_sep: f64,
    norm_grid: usize,
}

fn final_contained(tr: &TraceRecord) -> bool {
    tr.stages.iter().filter(|s| s.stage == StageId::Tau).all(|s| s.contained)
}

fn write_cloud(path: &Path, emb: &Embedding, traces: &[ellembed::Result<TraceRecord>], samples: &[[f64; 6]], h_fd: f64, tol: f64) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    let mut header: Vec<String> = Vec::new();
    for side in ["in", "out"] {
        for c in ["x1", "y1", "x2", "y2", "x3", "y3"] {
            header.push(format!("{side}_{c}"));
        }
    }
    header.extend(["evaluated", "final_contained", "stages_contained", "seam_adjacent", "symplectic_ok"].map(String::from));
    w.write_record(&header)?;
    for (p, tr) in samples.iter().zip(traces) {
        let mut row: Vec<String> = p.iter().map(|v| format!("{v:?}")).collect();
        match tr {
            Ok(tr) => {
                row.extend(tr.final_image.iter().map(|v| format!("{v:?}")));
                let near = seam_distance(emb, tr) < 10.0 * h_fd;
                let ok = tr.jacobian_defect.is_some_and(|d| d <= tol);
                let stages = tr.stages.iter().filter(|s| s.stage != StageId::Tau).all(|s| s.contained);
                row.extend([true, final_contained(tr), stages, near, ok].map(|b| b.to_string()));
            }
            Err(_) => {
                row.extend(std::iter::repeat(String::new()).take(6));
                row.extend(["false"; 5].map(String::from));
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn fold_canonical(cfg: &FoldingConfig, extra: &[(&str, String)]) -> String {
    let mut s = cfg.to_key_values();
    for (k, v) in extra {
        let _ = writeln!(s, "{k} = {v}");
    }
    s
}

fn fold_verify(args: &ConfigArgs, c: &Checks, out: Option<&Path>) -> Result<Report> {
    let cfg = resolve_config(args)?;
    let emb = Embedding::build(&cfg)?;
    let l = emb.layout;
    let samples = sample_ellipsoid(l.s, l.t, l.shrink, c.samples, cfg.seed);
    let mut traces = evaluate_all(&emb, &samples, c.slack);
    let containment = containment_from_traces(&emb, &traces, c.slack)?;
    let symplectic = verify_symplectic(&emb, &traces, c.h_fd, c.symplectic_tol)?;
    let planar = verify_planar(&emb, &traces, c.h_fd, c.planar_tol);
    let injective = verify_injective(&emb, &traces, c.min_sep, c.img_sep)?;
    let norms = verify_norms(&emb, c.norm_grid);
    if let Some(path) = out {
        attach_defects(&emb, &mut traces, c.h_fd);
        write_cloud(path, &emb, &traces, &samples, c.h_fd, c.symplectic_tol)?;
    }
    let pass = containment.pass && symplectic.pass && planar.pass && injective.pass && norms.pass;
    let verdict = |b: bool| if b { "PASS" } else { "FAIL" };
    let contained = containment.samples - containment.integrator_failures - containment.final_violations.min(containment.samples);
    let mut text = String::new();
    let _ = writeln!(text, "S = {} T = {} eps = {} N = {} samples = {} seed = {}", render(&cfg.s), render(&cfg.t), cfg.eps, cfg.n, samples.len(), cfg.seed);
    let _ = writeln!(
        text,
        "{} containment: {:.2}% final ({} violations), {} stage violations, {} integrator failures, slack {}",
        verdict(containment.pass),
        100.0 * contained as f64 / containment.samples.max(1) as f64,
        containment.final_violations,
        containment.stage_violations,
        containment.integrator_failures,
        containment.slack
    );
    let _ = writeln!(
        text,
        "{} symplectic: max defect {:.3e} off seams over {} samples ({} seam-adjacent, max {:.3e}), tol {:e}",
        verdict(symplectic.pass),
        symplectic.max_defect_off_seam,
        symplectic.checked,
        symplectic.seam_adjacent,
        symplectic.max_defect_seam_adjacent,
        symplectic.tolerance
    );
    let _ = writeln!(
        text,
        "{} planar: |det - 1| psi {:.3e} tau {:.3e}, tol {:e}",
        verdict(planar.pass),
        planar.psi_max_det_error,
        planar.tau_max_det_error,
        planar.tolerance
    );
    let _ = writeln!(
        text,
        "{} injectivity: {} collisions, {} piece-class violations",
        verdict(injective.pass),
        injective.collisions,
        injective.piece_class_violations
    );
    let max_norm = norms.norms.iter().cloned().fold(0.0, f64::max);
    let _ = writeln!(text, "{} norms: max osc G_i {:.4} <= lambda + eps = {:.4}", verdict(norms.pass), max_norm, norms.bound);
    let n = Provenance::Numerical;
    let results = json!({
        "config": {
            "S": exact(&cfg.s, Provenance::PaperFormula),
            "T": exact(&cfg.t, Provenance::PaperFormula),
            "lambda": exact(&cfg.lambda(), Provenance::PaperFormula),
        },
        "layout": tagged(&l, n),
        "containment": tagged(&containment, n),
        "symplectic": tagged(&symplectic, n),
        "planar": tagged(&planar, n),
        "injectivity": tagged(&injective, n),
        "norms": tagged(&norms, n),
    });
    let canonical = fold_canonical(
        &cfg,
        &[
            ("samples", c.samples.to_string()),
            ("slack", format!("{:?}", c.slack)),
            ("h_fd", format!("{:?}", c.h_fd)),
            ("symplectic_tol", format!("{:?}", c.symplectic_tol)),
            ("planar_tol", format!("{:?}", c.planar_tol)),
            ("min_sep", format!("{:?}", c.min_sep)),
            ("img_sep", format!("{:?}", c.img_sep)),
            ("norm_grid", c.norm_grid.to_string()),
        ],
    );
    Ok(Report { text, results, pass, canonical })
}

fn parse_point(s: &str) -> Result<[f64; 6]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 6 {
        bail!("--point needs 6 comma-separated coordinates, got {}", parts.len());
    }
    let mut p = [0.0; 6];
    for (slot, part) in p.iter_mut().zip(parts) {
        *slot = part.parse().with_context(|| format!("--point coordinate `{part}`"))?;
    }
    Ok(p)
}

fn fold_trace(args: &ConfigArgs, point: &str, slack: f64, h_fd: f64, out: Option<&Path>) -> Result<Report> {
    let cfg = resolve_config(args)?;
    let emb = Embedding::build(&cfg)?;
    let p = parse_point(point)?;
    let mut traces = vec![emb.evaluate_with_slack(&p, slack)];
    attach_defects(&emb, &mut traces, h_fd);
    if let Some(path) = out {
        write_cloud(path, &emb, &traces, &[p], h_fd, f64::INFINITY)?;
    }
    let tr = traces.pop().expect("one trace")?;
    let pass = tr.all_contained();
    let mut text = String::new();
    let _ = writeln!(text, "input {:?}", tr.input);
    for s in &tr.stages {
        let _ = writeln!(text, "{:<9} {} {:?}", s.stage.to_string(), if s.contained { "ok  " } else { "FAIL" }, s.point);
        if let Some(note) = &s.note {
            let _ = writeln!(text, "          {note}");
        }
    }
    let _ = writeln!(text, "piece {:?}", tr.piece);
    let dist = seam_distance(&emb, &tr);
    let near = dist < 10.0 * h_fd;
    if let Some(d) = tr.jacobian_defect {
        let _ = writeln!(text, "jacobian defect {d:.3e}{}", if near { " (seam-adjacent, not meaningful)" } else { "" });
    }
    let _ = writeln!(text, "seam distance {dist:.3e}");
    let canonical = fold_canonical(&cfg, &[("point", format!("{p:?}")), ("slack", format!("{slack:?}")), ("h_fd", format!("{h_fd:?}"))]);
    Ok(Report { text, results: json!({
            "trace": tagged(&tr, Provenance::Numerical),
            "seam_distance": float(dist, Provenance::Numerical),
            "seam_adjacent": near,
        }), pass, canonical })
}
