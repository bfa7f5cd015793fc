//! `ellembed`: staircase sequences, capacity bounds and solvers, and the
//! folding construction with its verification, from the command line.

mod commands;
mod envelope;

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use envelope::ReportEnvelope;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "ELLEMBED_THREADS";

#[derive(Debug, Parser)]
#[command(name = "ellembed", version, about = "Stabilized ellipsoid embedding capacities and multiple folding")]
pub struct Cli {
    /// Emit a JSON report envelope instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print a staircase sequence.
    Seq {
        kind: SeqKind,
        #[arg(long, default_value_t = 5)]
        count: usize,
    },
    /// Lower and upper bounds for the stabilized problem.
    Bounds {
        #[arg(long, value_enum)]
        target: Target,
        #[arg(long)]
        a2: String,
    },
    /// Four-dimensional capacity function c_B or c_P by bisection on the ECH oracle.
    Solve {
        which: Capacity,
        #[arg(long)]
        a: String,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = ellembed::capacities::DEFAULT_MAX_TERMS)]
        max_terms: usize,
    },
    /// Folding bound against the product embedding.
    Compare {
        #[arg(long, value_enum)]
        target: Target,
        #[arg(long)]
        a2: String,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = ellembed::capacities::DEFAULT_MAX_TERMS)]
        max_terms: usize,
        /// Write the staircase (index, a2, fold, product) as CSV.
        #[arg(long)]
        staircase_csv: Option<std::path::PathBuf>,
        #[arg(long, default_value_t = 5)]
        staircase_count: usize,
    },
    /// The multiple-folding construction.
    Fold {
        #[command(subcommand)]
        action: FoldAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum FoldAction {
    /// Sample the ellipsoid and run every verification.
    Verify {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = ellembed::folding::pipeline::DEFAULT_SLACK)]
        slack: f64,
        #[arg(long, default_value_t = 1e-5)]
        h_fd: f64,
        #[arg(long, default_value_t = 1e-4)]
        symplectic_tol: f64,
        #[arg(long, default_value_t = 1e-6)]
        planar_tol: f64,
        #[arg(long, default_value_t = 1e-2)]
        min_sep: f64,
        #[arg(long, default_value_t = 1e-6)]
        img_sep: f64,
        #[arg(long, default_value_t = 200)]
        norm_grid: usize,
        /// Write the sample cloud as CSV.
        #[arg(long)]
        out: Option<std::path::PathBuf>,
    },
    /// Trace one point through every stage.
    Trace {
        #[command(flatten)]
        config: ConfigArgs,
        /// `x1,y1,x2,y2,x3,y3`.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long, default_value_t = ellembed::folding::pipeline::DEFAULT_SLACK)]
        slack: f64,
        #[arg(long, default_value_t = 1e-5)]
        h_fd: f64,
        #[arg(long)]
        out: Option<std::path::PathBuf>,
    },
}

/// Folding parameters. Flags override the `key = value` file.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    #[arg(long = "S")]
    pub s: Option<String>,
    #[arg(long = "T")]
    pub t: Option<String>,
    #[arg(long)]
    pub eps: Option<String>,
    #[arg(long = "N")]
    pub n: Option<String>,
    #[arg(long)]
    pub integrator_step: Option<String>,
    #[arg(long)]
    pub shrink: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub d2_gap: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeqKind {
    FibOdd,
    Pell,
    HalfPell,
    B,
    Beta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Ball,
    Cube,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Capacity {
    Cb,
    Cp,
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().map_err(|e| anyhow::anyhow!("{THREADS_ENV}: {e}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

/// A closed pipe downstream is not an error of the command.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let argv: Vec<String> = std::iter::once("ellembed".to_string()).chain(std::env::args().skip(1)).collect();
    let run = configure_threads().and_then(|_| commands::run(&cli));
    match run {
        Ok(report) => {
            if cli.json {
                emit(&format!("{}\n", ReportEnvelope::new(argv, &report.canonical, report.pass, report.results).to_json()));
            } else {
                emit(&report.text);
            }
            if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            if cli.json {
                emit(&format!("{}\n", ReportEnvelope::failure(argv, &commands::canonical(&cli), format!("{e:#}")).to_json()));
            }
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
