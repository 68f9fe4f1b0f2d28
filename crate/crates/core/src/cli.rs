//! Command-line front end.
//!
//! Exit codes: 0 success, 1 data or math failure, 2 usage error,
//! 3 verification failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::io::{load_matrix, MatrixFormat};
use crate::matrix::{generate, Ensemble, EnsembleSpec, MeasurementMatrix};
use crate::report::{
    audit, fmt_g12, tail_csv, to_canonical_json, verify, BoundsEntry, MatrixMeta, SCHEMA_VERSION, TOOL_VERSION,
};
use crate::separation::{separation_experiment, spikes_fourier, SeparationSummary};
use crate::solvers::{phase_csv, phase_curve, MatrixSource, PhasePoint, SolverSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "coherence-audit", version, about = "Coherence statistics and sparse-recovery checks for measurement matrices")]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coherence profile, normality check and sparsity thresholds.
    Audit(AuditArgs),
    /// Monte Carlo check of the isometry band and tail bounds.
    Verify(VerifyArgs),
    /// Recovery success rate against sparsity.
    Phase(PhaseArgs),
    /// Two-dictionary separation trials.
    Separate(SeparateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct MatrixArgs {
    /// Matrix file (.csv or binary).
    #[arg(long, conflicts_with = "ensemble", required_unless_present = "ensemble")]
    pub matrix: Option<PathBuf>,
    /// gaussian, bernoulli or partial_fourier.
    #[arg(long, requires_all = ["rows", "cols"])]
    pub ensemble: Option<Ensemble>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Histogram bins (default: square-root rule).
    #[arg(long)]
    pub bins: Option<usize>,
    /// json writes the report, csv writes the histogram.
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    /// Tail thresholds as multiples of the band width.
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
    pub t_grid: Vec<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Tail table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub bins: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PhaseArgs {
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub k_list: Vec<usize>,
    /// omp, iht, cosamp or bpdn.
    #[arg(long, default_value = "omp")]
    pub solver: SolverSpec,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Draw a new matrix for every trial (needs --ensemble).
    #[arg(long)]
    pub fresh_matrix: bool,
    /// CSV with one row per k (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON summary with the sparsity thresholds.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    SpikesFourier,
}

#[derive(Debug, Args)]
pub struct SeparateArgs {
    #[arg(long, conflicts_with_all = ["matrix_d", "matrix_b"], required_unless_present_all = ["matrix_d", "matrix_b"])]
    pub preset: Option<Preset>,
    /// Signal length for the preset.
    #[arg(long, default_value_t = 128)]
    pub n: usize,
    #[arg(long, requires = "matrix_b")]
    pub matrix_d: Option<PathBuf>,
    #[arg(long, requires = "matrix_d")]
    pub matrix_b: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub nx: usize,
    #[arg(long, default_value_t = 4)]
    pub ne: usize,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Residual level (default: 1.1 * noise * sqrt(n)).
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-trial errors as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command)),
            Err(e) => Err(Outcome::Usage(format!("cannot start {n} threads: {e}"))),
        },
        None => dispatch(&cli.command),
    };
    match result {
        Ok(code) => code,
        Err(Outcome::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Outcome::Failed(e)) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

/// Why a command stopped early.
#[derive(Debug)]
pub enum Outcome {
    Usage(String),
    Failed(Error),
}

impl From<Error> for Outcome {
    fn from(e: Error) -> Self {
        Outcome::Failed(e)
    }
}

/// Exit code on completion.
pub type CmdResult = std::result::Result<i32, Outcome>;

fn dispatch(cmd: &Command) -> CmdResult {
    match cmd {
        Command::Audit(a) => run_audit(a),
        Command::Verify(a) => run_verify(a),
        Command::Phase(a) => run_phase(a),
        Command::Separate(a) => run_separate(a),
    }
}

fn ensemble_spec(args: &MatrixArgs) -> Option<EnsembleSpec> {
    let e = args.ensemble?;
    Some(EnsembleSpec::new(e, args.rows?, args.cols?, args.seed))
}

/// The column-normalized matrix and its source label.
fn load(args: &MatrixArgs) -> Result<(MeasurementMatrix, Option<String>)> {
    match (&args.matrix, ensemble_spec(args)) {
        (Some(path), _) => {
            let m = load_matrix(path, MatrixFormat::from_path(path))?.normalize_columns()?;
            Ok((m, Some(path.display().to_string())))
        }
        (None, Some(spec)) => Ok((generate(&spec)?, None)),
        (None, None) => Err(Error::Domain("no matrix source".into())),
    }
}

fn matrix_echo(args: &MatrixArgs) -> serde_json::Value {
    json!({
        "matrix": args.matrix.as_ref().map(|p| p.display().to_string()),
        "ensemble": args.ensemble,
        "rows": args.rows,
        "cols": args.cols,
        "seed": args.seed,
    })
}

fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => Ok(fs::write(p, content)?),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

pub fn run_audit(args: &AuditArgs) -> CmdResult {
    let (m, source) = load(&args.matrix)?;
    let config = json!({
        "command": "audit",
        "source": matrix_echo(&args.matrix),
        "bins": args.bins,
    });
    let report = audit(&m, source, args.bins, config)?;
    let content = match args.format {
        OutputFormat::Json => to_canonical_json(&report)?,
        OutputFormat::Csv => crate::coherence::histogram_csv(&report.profile),
    };
    write_output(args.out.as_deref(), &content)?;
    if args.out.is_some() {
        println!(
            "{}x{}: mu = {}, sigma = {}",
            m.rows(),
            m.cols(),
            fmt_g12(report.profile.mutual_coherence),
            fmt_g12(report.profile.std)
        );
        print_bounds(&report.bounds);
    }
    Ok(EXIT_OK)
}

fn print_bounds(b: &BoundsEntry) {
    match b.report() {
        Some(r) => println!(
            "floors: worst-case {}, heuristic {}, thm1 {}, thm2 {}, thm3 {}",
            r.worst_case.floor, r.heuristic.floor, r.thm1.floor, r.thm2.floor, r.thm3.floor
        ),
        None => println!("bounds: degenerate (no coherence spread)"),
    }
}

pub fn run_verify(args: &VerifyArgs) -> CmdResult {
    let (m, source) = load(&args.matrix)?;
    if args.k == 0 || args.k > m.cols() {
        return Err(Outcome::Usage(format!("--k must be in 1..={}", m.cols())));
    }
    let config = json!({
        "command": "verify",
        "source": matrix_echo(&args.matrix),
        "bins": args.bins,
        "k": args.k,
        "trials": args.trials,
        "t_grid": args.t_grid,
    });
    let mut report = audit(&m, source, args.bins, config)?;
    let summary = verify(
        &m,
        report.profile.std,
        args.k,
        args.trials as usize,
        args.matrix.seed,
        &args.t_grid,
    )?;
    if let Some(p) = &args.csv {
        fs::write(p, tail_csv(&summary)).map_err(Error::from)?;
    }
    let pass = summary.pass;
    for b in &summary.bands {
        println!("band {:?}: g = {}, frequency = {}", b.variant, fmt_g12(b.g), fmt_g12(b.frequency));
    }
    for (name, points) in [("ratio", &summary.ratio_tail), ("spectral", &summary.spectral_tail)] {
        for p in points {
            println!(
                "{name} tail t = {}: empirical {} vs bound {} -> {}",
                fmt_g12(p.t),
                fmt_g12(p.empirical),
                fmt_g12(p.bound),
                if p.ok { "ok" } else { "VIOLATED" }
            );
        }
    }
    report.verification = Some(summary);
    let json = to_canonical_json(&report)?;
    match &args.out {
        Some(p) => fs::write(p, json).map_err(Error::from)?,
        None => print!("{json}"),
    }
    Ok(if pass { EXIT_OK } else { EXIT_VERIFY })
}

#[derive(Debug, Serialize)]
struct PhaseSummary<'a> {
    schema_version: u32,
    tool_version: &'static str,
    matrix: MatrixMeta,
    solver: &'static str,
    k_list: &'a [usize],
    trials: u64,
    noise_sigma: f64,
    seed: u64,
    fresh_matrix: bool,
    points: &'a [PhasePoint],
    bounds: BoundsEntry,
    config: serde_json::Value,
}

pub fn run_phase(args: &PhaseArgs) -> CmdResult {
    if args.k_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Outcome::Usage("--k-list must be strictly ascending".into()));
    }
    if !(args.noise >= 0.0 && args.noise.is_finite()) {
        return Err(Outcome::Usage("--noise must be >= 0".into()));
    }
    let spec = ensemble_spec(&args.matrix);
    if args.fresh_matrix && spec.is_none() {
        return Err(Outcome::Usage("--fresh-matrix needs --ensemble".into()));
    }
    let (m, source) = load(&args.matrix)?;
    let matrix_source = match spec {
        Some(s) if args.fresh_matrix => MatrixSource::Fresh(s),
        _ => MatrixSource::Fixed(&m),
    };
    let points = phase_curve(
        matrix_source,
        &args.k_list,
        &args.solver,
        args.trials as usize,
        args.noise,
        args.matrix.seed,
    )?;
    write_output(args.out.as_deref(), &phase_csv(&points))?;
    if let Some(p) = &args.json {
        let profile = crate::coherence::profile_matrix(&m, None)?;
        let summary = PhaseSummary {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION,
            matrix: MatrixMeta::of(&m, source),
            solver: args.solver.name(),
            k_list: &args.k_list,
            trials: args.trials,
            noise_sigma: args.noise,
            seed: args.matrix.seed,
            fresh_matrix: args.fresh_matrix,
            points: &points,
            bounds: BoundsEntry::from_profile(&profile)?,
            config: json!({
                "command": "phase",
                "source": matrix_echo(&args.matrix),
                "solver": args.solver.name(),
            }),
        };
        fs::write(p, to_canonical_json(&summary)?).map_err(Error::from)?;
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct SeparateReport {
    schema_version: u32,
    tool_version: &'static str,
    preset: Option<&'static str>,
    d: MatrixMeta,
    b: MatrixMeta,
    summary: SeparationSummary,
    config: serde_json::Value,
}

pub fn run_separate(args: &SeparateArgs) -> CmdResult {
    if !(args.noise >= 0.0 && args.noise.is_finite()) {
        return Err(Outcome::Usage("--noise must be >= 0".into()));
    }
    let (d, b, preset, d_src, b_src) = match (&args.matrix_d, &args.matrix_b) {
        (Some(pd), Some(pb)) => {
            let d = load_matrix(pd, MatrixFormat::from_path(pd))?.normalize_columns()?;
            let b = load_matrix(pb, MatrixFormat::from_path(pb))?.normalize_columns()?;
            (d, b, None, Some(pd.display().to_string()), Some(pb.display().to_string()))
        }
        _ => {
            let (d, b) = spikes_fourier(args.n)?;
            (d, b, Some("spikes-fourier"), None, None)
        }
    };
    let summary = separation_experiment(
        &d,
        &b,
        args.nx,
        args.ne,
        args.trials as usize,
        args.noise,
        args.epsilon,
        args.seed,
    )?;
    println!(
        "{} trials: mean relative error x {} e {}, {} successes, margin {} ({})",
        summary.trials,
        fmt_g12(summary.mean_x_rel_error),
        fmt_g12(summary.mean_e_rel_error),
        summary.successes,
        fmt_g12(summary.condition.margin),
        if summary.condition.ok { "ok" } else { "condition fails" }
    );
    if let Some(p) = &args.csv {
        let mut s = String::from("trial,x_rel_error,e_rel_error,iterations\n");
        for (i, t) in summary.per_trial.iter().enumerate() {
            s.push_str(&format!(
                "{i},{},{},{}\n",
                fmt_g12(t.x_rel_error),
                fmt_g12(t.e_rel_error),
                t.iterations
            ));
        }
        fs::write(p, s).map_err(Error::from)?;
    }
    let report = SeparateReport {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION,
        preset,
        d: MatrixMeta::of(&d, d_src),
        b: MatrixMeta::of(&b, b_src),
        summary,
        config: json!({
            "command": "separate",
            "n": args.n,
            "nx": args.nx,
            "ne": args.ne,
            "trials": args.trials,
            "noise": args.noise,
            "epsilon": args.epsilon,
            "seed": args.seed,
        }),
    };
    let json = to_canonical_json(&report)?;
    if let Some(p) = &args.out {
        fs::write(p, json).map_err(Error::from)?;
    }
    Ok(EXIT_OK)
}
