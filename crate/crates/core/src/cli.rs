//! The `hamalg` command line: `verify`, `brackets`, `simulate`, `uniqueness`.
//!
//! Every subcommand accepts `--config <file.json>` holding the same option
//! names as the flags; flags win over the file. The seed falls back to the
//! `HAMALG_SEED` environment variable, then to 0.
//!
//! Exit status: 0 when the run confirms what it checks, 1 when it finds a
//! failure, 2 on invalid usage.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::algebra::{HamiltonAlgebra, OperatorAlgebra, PhaseSpaceAlgebra, QuantumConstant};
use crate::brackets::{self, HybridSetting, MixedBracketKind};
use crate::compose::{Composable, ComposedAlgebra, CompositionFault};
use crate::dynamics::{self, MeasurementConfig, Regime};
use crate::error::AlgebraError;
use crate::identities::{self, CheckReport, IdentityId, ScaledAlpha, SuiteConfig, VerificationReport};
use crate::par::Execution;
use crate::uniqueness::{self, UniquenessOptions};

pub const SEED_ENV: &str = "HAMALG_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FINDING: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Finding(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Finding(m) => f.write_str(m),
        }
    }
}

impl From<AlgebraError> for CliError {
    fn from(e: AlgebraError) -> Self {
        match e {
            AlgebraError::InternalConsistency(_) => CliError::Finding(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "hamalg",
    version,
    about = "Quantum and classical Hamilton algebras: identity checks, hybrid brackets, measurement dynamics, composed-constant uniqueness"
)]
pub struct Cli {
    /// Run every trial loop on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the defining identities on random elements of one realization.
    Verify(VerifyArgs),
    /// Measure antisymmetry, Jacobi and derivation defects of mixed brackets.
    Brackets(BracketsArgs),
    /// Evolve the coupled measurement model and write the trajectory as CSV.
    Simulate(SimulateArgs),
    /// Measure restriction factors of the composed bracket.
    Uniqueness(UniquenessArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Realization {
    Operator,
    PhaseSpace,
    Composed,
    Hybrid,
}

/// Fills every `None` field of `$a` from `$b`.
macro_rules! merge_fields {
    ($a:ident, $b:ident; $($f:ident),* $(,)?) => {
        $( if $a.$f.is_none() { $a.$f = $b.$f; } )*
    };
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub realization: Option<Realization>,
    /// Shorthand for `--realization composed`.
    #[arg(long)]
    #[serde(skip)]
    pub composed: bool,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub hbar: Option<f64>,
    #[arg(long)]
    pub num_pairs: Option<usize>,
    #[arg(long)]
    pub degree: Option<u32>,
    #[arg(long)]
    pub a1: Option<f64>,
    #[arg(long)]
    pub a2: Option<f64>,
    #[arg(long)]
    pub a12: Option<f64>,
    #[arg(long)]
    pub left_dim: Option<usize>,
    #[arg(long)]
    pub right_dim: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Multiply α by this factor before checking (mutation run).
    #[arg(long)]
    pub alpha_scale: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BracketsArgs {
    /// Only this bracket; all four when absent.
    #[arg(long, value_enum)]
    pub kind: Option<MixedBracketKind>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Triples searched for a first violation of each property.
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub num_pairs: Option<usize>,
    #[arg(long)]
    pub degree: Option<u32>,
    #[arg(long)]
    pub hbar: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub regime: Option<Regime>,
    #[arg(long)]
    pub m1: Option<f64>,
    #[arg(long)]
    pub m2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub g0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t0: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub hbar: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Trajectory CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Summary JSON; printed to standard output (or standard error when the CSV is there) when absent.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UniquenessArgs {
    #[arg(long)]
    pub a1: Option<f64>,
    #[arg(long)]
    pub a2: Option<f64>,
    #[arg(long)]
    pub a12: Option<f64>,
    #[arg(long)]
    pub left_dim: Option<usize>,
    #[arg(long)]
    pub right_dim: Option<usize>,
    /// Random pairs in each least-squares fit.
    #[arg(long)]
    pub pairs: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    #[serde(skip)]
    pub scan: Option<ScanCommand>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum ScanCommand {
    /// Verdicts over every triple of a grid axis.
    Scan(ScanArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    /// `lo:hi:n` (log-spaced) or a comma-separated list.
    #[arg(long)]
    pub grid: String,
    /// Verdict table CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Verdict table JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

fn load_config<T: DeserializeOwned + Default>(path: &Option<PathBuf>) -> CliResult<T> {
    let Some(path) = path else { return Ok(T::default()) };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
}

/// Flag, then config file, then `HAMALG_SEED`, then 0.
pub fn resolve_seed(flag: Option<u64>) -> CliResult<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => {
            v.trim().parse().map_err(|_| CliError::Usage(format!("{SEED_ENV} must be an unsigned integer, got `{v}`")))
        }
        Err(_) => Ok(0),
    }
}

/// Opens the output before any work so an unwritable path fails fast.
fn open_out(path: &Option<PathBuf>) -> CliResult<Option<BufWriter<File>>> {
    path.as_ref().map(|p| create(p)).transpose()
}

fn create(p: &Path) -> CliResult<BufWriter<File>> {
    File::create(p).map(BufWriter::new).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display())))
}

fn write_json<T: Serialize>(value: &T, sink: Option<BufWriter<File>>, fallback: &mut dyn Write) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Usage(e.to_string()))?;
    let res = match sink {
        Some(mut f) => writeln!(f, "{text}").and_then(|_| f.flush()),
        None => writeln!(fallback, "{text}"),
    };
    res.map_err(|e| CliError::Usage(format!("write failed: {e}")))
}

fn positive(name: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("--{name} must be positive and finite, got {v}")))
    }
}

fn nonzero(name: &str, v: usize) -> CliResult<usize> {
    if v == 0 {
        Err(CliError::Usage(format!("--{name} must be >= 1")))
    } else {
        Ok(v)
    }
}

fn summarize(report: &VerificationReport, err: &mut dyn Write) {
    for c in &report.checks {
        let _ = writeln!(
            err,
            "{} {:<20} max defect {:.3e} (tolerance {:.1e}, {} trials)",
            if c.passed { "PASS" } else { "FAIL" },
            c.identity.name(),
            c.max_relative_defect,
            c.tolerance,
            c.trials
        );
    }
}

fn run_suite<A: HamiltonAlgebra + Clone>(
    alg: &A,
    scale: Option<f64>,
    cfg: &SuiteConfig,
) -> CliResult<VerificationReport> {
    Ok(match scale {
        Some(k) => identities::run_axiom_suite(&ScaledAlpha::new(alg.clone(), k), cfg)?,
        None => identities::run_axiom_suite(alg, cfg)?,
    })
}

fn run_defining<L, R>(c: ComposedAlgebra<L, R>, scale: Option<f64>, cfg: &SuiteConfig) -> CliResult<VerificationReport>
where
    L: Composable<R> + Clone,
    R: HamiltonAlgebra + Clone,
{
    let c = match scale {
        Some(k) => c.with_fault(CompositionFault::AlphaScale(k)),
        None => c,
    };
    let checks = IdentityId::DEFINING
        .iter()
        .map(|&id| identities::check_composed(&c, id, cfg))
        .collect::<Result<Vec<CheckReport>, _>>()?;
    Ok(VerificationReport::new(c.descriptor(), checks))
}

fn cmd_verify(mut a: VerifyArgs, exec: Execution, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<i32> {
    let file: VerifyArgs = load_config(&a.config)?;
    merge_fields!(a, file; realization, dim, hbar, num_pairs, degree, a1, a2, a12, left_dim, right_dim,
        trials, tolerance, alpha_scale, seed, out);
    let realization = if a.composed { Realization::Composed } else { a.realization.unwrap_or(Realization::Operator) };
    let cfg = SuiteConfig {
        trials: nonzero("trials", a.trials.unwrap_or(identities::DEFAULT_TRIALS))?,
        tolerance: positive("tolerance", a.tolerance.unwrap_or(identities::DEFAULT_TOLERANCE))?,
        seed: resolve_seed(a.seed)?,
        execution: exec,
    };
    let scale = a.alpha_scale.map(|k| positive("alpha-scale", k)).transpose()?;
    let sink = open_out(&a.out)?;
    let report = match realization {
        Realization::Operator => {
            let alg =
                OperatorAlgebra::new(nonzero("dim", a.dim.unwrap_or(2))?, positive("hbar", a.hbar.unwrap_or(1.0))?)?;
            run_suite(&alg, scale, &cfg)?
        }
        Realization::PhaseSpace => {
            let alg = PhaseSpaceAlgebra::new(
                nonzero("num-pairs", a.num_pairs.unwrap_or(1))?,
                a.degree.unwrap_or(PhaseSpaceAlgebra::DEFAULT_DEGREE),
            )?;
            run_suite(&alg, scale, &cfg)?
        }
        Realization::Composed => {
            let (a1, a2) = (positive("a1", a.a1.unwrap_or(1.0))?, positive("a2", a.a2.unwrap_or(1.0))?);
            let a12 = positive("a12", a.a12.unwrap_or(1.0))?;
            let left = OperatorAlgebra::with_constant(
                nonzero("left-dim", a.left_dim.unwrap_or(2))?,
                QuantumConstant::new(a1)?,
            )?;
            let right = OperatorAlgebra::with_constant(
                nonzero("right-dim", a.right_dim.unwrap_or(2))?,
                QuantumConstant::new(a2)?,
            )?;
            run_defining(ComposedAlgebra::new(left, right, a12)?, scale, &cfg)?
        }
        Realization::Hybrid => {
            let a1 = positive("a1", a.a1.unwrap_or(1.0))?;
            let q = OperatorAlgebra::with_constant(nonzero("dim", a.dim.unwrap_or(2))?, QuantumConstant::new(a1)?)?;
            let c = PhaseSpaceAlgebra::new(nonzero("num-pairs", a.num_pairs.unwrap_or(1))?, a.degree.unwrap_or(2))?;
            let a12 = positive("a12", a.a12.unwrap_or(a1))?;
            run_defining(ComposedAlgebra::new(q, c, a12)?, scale, &cfg)?
        }
    };
    summarize(&report, err);
    write_json(&report, sink, out)?;
    Ok(if report.passed { EXIT_OK } else { EXIT_FINDING })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BracketsReport {
    pub setting: HybridSetting,
    pub trials: usize,
    pub budget: usize,
    pub seed: u64,
    pub surveys: Vec<brackets::BracketSurvey>,
    pub passed: bool,
}

fn cmd_brackets(mut a: BracketsArgs, exec: Execution, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<i32> {
    let file: BracketsArgs = load_config(&a.config)?;
    merge_fields!(a, file; kind, trials, budget, dim, num_pairs, degree, hbar, seed, out);
    let d = HybridSetting::default();
    let setting = HybridSetting {
        dim: nonzero("dim", a.dim.unwrap_or(d.dim))?,
        num_pairs: nonzero("num-pairs", a.num_pairs.unwrap_or(d.num_pairs))?,
        max_degree: a.degree.unwrap_or(d.max_degree),
        hbar: positive("hbar", a.hbar.unwrap_or(d.hbar))?,
    };
    let trials = nonzero("trials", a.trials.unwrap_or(200))?;
    let budget = nonzero("budget", a.budget.unwrap_or(1000))?;
    let seed = resolve_seed(a.seed)?;
    let sink = open_out(&a.out)?;
    let kinds = a.kind.map(|k| vec![k]).unwrap_or_else(|| MixedBracketKind::ALL.to_vec());
    let surveys = kinds
        .iter()
        .map(|&k| brackets::survey(k, &setting, trials, budget, seed, exec))
        .collect::<Result<Vec<_>, _>>()?;
    for s in &surveys {
        let d = &s.defects;
        let _ = writeln!(
            err,
            "{} {:<17} antisymmetry {:.3e}  jacobi {:.3e}  derivation {:.3e}",
            if s.expected_pattern_confirmed { "PASS" } else { "FAIL" },
            d.kind.name(),
            d.antisymmetry_defect,
            d.jacobi_defect,
            d.derivation_defect
        );
    }
    let passed = surveys.iter().all(|s| s.expected_pattern_confirmed);
    write_json(&BracketsReport { setting, trials, budget, seed, surveys, passed }, sink, out)?;
    Ok(if passed { EXIT_OK } else { EXIT_FINDING })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub config: MeasurementConfig,
    pub t_end: f64,
    pub samples: usize,
    pub back_reaction_gap: f64,
    /// Coefficient of `p1` in `p2(t_end) - p2(0)`.
    pub momentum_transfer: f64,
    pub final_observables: Vec<ObservableRow>,
}

/// An observable at `t_end` over the basis `(p1, x1, p2, x2, 1)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObservableRow {
    pub observable: String,
    pub coefficients: [f64; 5],
}

fn cmd_simulate(mut a: SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<i32> {
    let file: SimulateArgs = load_config(&a.config)?;
    merge_fields!(a, file; regime, m1, m2, g0, t0, dt, hbar, t_end, samples, out, summary);
    let d = MeasurementConfig::default();
    let cfg = MeasurementConfig {
        m1: a.m1.unwrap_or(d.m1),
        m2: a.m2.unwrap_or(d.m2),
        g0: a.g0.unwrap_or(d.g0),
        t0: a.t0.unwrap_or(d.t0),
        dt: a.dt.unwrap_or(d.dt),
        hbar: a.hbar.unwrap_or(d.hbar),
        regime: a.regime.unwrap_or(d.regime),
    };
    let t_end = positive("t-end", a.t_end.unwrap_or(2.0))?;
    let samples = a.samples.unwrap_or(21);
    let csv_sink = open_out(&a.out)?;
    let summary_sink = open_out(&a.summary)?;
    let traj = dynamics::evolve(&cfg, t_end, samples)?;
    let gap = dynamics::back_reaction_gap_at(&cfg, t_end)?;
    let csv_on_stdout = csv_sink.is_none();
    match csv_sink {
        Some(mut f) => {
            traj.write_csv(&mut f)?;
            f.flush().map_err(|e| CliError::Usage(format!("write failed: {e}")))?;
        }
        None => traj.write_csv(&mut *out)?,
    }
    let summary = SimulationSummary {
        config: cfg,
        t_end,
        samples,
        back_reaction_gap: gap,
        momentum_transfer: traj.final_row(2)[0] - traj.values[0][2][0],
        final_observables: dynamics::TRACKED
            .iter()
            .enumerate()
            .map(|(i, n)| ObservableRow { observable: n.to_string(), coefficients: traj.final_row(i) })
            .collect(),
    };
    let fallback: &mut dyn Write = if csv_on_stdout { err } else { out };
    write_json(&summary, summary_sink, fallback)?;
    Ok(EXIT_OK)
}

fn cmd_uniqueness(mut a: UniquenessArgs, exec: Execution, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<i32> {
    let file: UniquenessArgs = load_config(&a.config)?;
    merge_fields!(a, file; a1, a2, a12, left_dim, right_dim, pairs, tolerance, seed, out);
    let d = UniquenessOptions::default();
    let opts = UniquenessOptions {
        left_dim: nonzero("left-dim", a.left_dim.unwrap_or(d.left_dim))?,
        right_dim: nonzero("right-dim", a.right_dim.unwrap_or(d.right_dim))?,
        pairs: nonzero("pairs", a.pairs.unwrap_or(d.pairs))?,
        seed: resolve_seed(a.seed)?,
        tolerance: positive("tolerance", a.tolerance.unwrap_or(d.tolerance))?,
    };
    if let Some(ScanCommand::Scan(scan)) = a.scan {
        let axis = uniqueness::parse_axis(&scan.grid)?;
        let csv_sink = open_out(&scan.out)?;
        let json_sink = open_out(&scan.json)?;
        let table = uniqueness::scan_constants(&uniqueness::cube(&axis), &opts, exec)?;
        match csv_sink {
            Some(mut f) => {
                table.write_csv(&mut f)?;
                f.flush().map_err(|e| CliError::Usage(format!("write failed: {e}")))?;
            }
            None => table.write_csv(&mut *out)?,
        }
        if json_sink.is_some() {
            write_json(&table, json_sink, err)?;
        }
        let pass = table.pass_set();
        let diagonal_only = pass.len() == axis.len() && pass.iter().all(|&(x, y, z)| x == z && y == z);
        let _ = writeln!(
            err,
            "{} {} of {} triples pass; pass set {} the diagonal",
            if diagonal_only { "PASS" } else { "FAIL" },
            pass.len(),
            table.verdicts.len(),
            if diagonal_only { "equals" } else { "differs from" }
        );
        return Ok(if diagonal_only { EXIT_OK } else { EXIT_FINDING });
    }
    let sink = open_out(&a.out)?;
    let v = uniqueness::uniqueness_check(
        positive("a1", a.a1.unwrap_or(1.0))?,
        positive("a2", a.a2.unwrap_or(1.0))?,
        positive("a12", a.a12.unwrap_or(1.0))?,
        &opts,
    )?;
    let _ = writeln!(
        err,
        "{} left factor {:.12} (expected {:.12}), right factor {:.12} (expected {:.12})",
        if v.passed { "PASS" } else { "FAIL" },
        v.left.measured_factor,
        v.left.expected_factor,
        v.right.measured_factor,
        v.right.expected_factor
    );
    write_json(&v, sink, out)?;
    Ok(if v.passed { EXIT_OK } else { EXIT_FINDING })
}

/// Parses `args` and runs the subcommand, returning the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{}", e.render()) } else { write!(out, "{}", e.render()) };
            return code;
        }
    };
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    let res = match cli.command {
        Command::Verify(a) => cmd_verify(a, exec, out, err),
        Command::Brackets(a) => cmd_brackets(a, exec, out, err),
        Command::Simulate(a) => cmd_simulate(a, out, err),
        Command::Uniqueness(a) => cmd_uniqueness(a, exec, out, err),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "hamalg: {e}");
            match e {
                CliError::Usage(_) => EXIT_USAGE,
                CliError::Finding(_) => EXIT_FINDING,
            }
        }
    }
}

/// Entry point used by the binary.
pub fn main_with_std() -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    let code = run(std::env::args_os(), &mut out, &mut err);
    let _ = out.flush();
    code
}
