//! Subcommands. Each returns the process exit code.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use sharecap_core::oracle::{bruteforce_2x2, interior_point, projected_gradient};
use sharecap_core::random::{random_instance, seeded_rng, InstanceSpec};
use sharecap_core::{
    classify, compare, solve_with, OracleSettings, ProblemInstance, SolveMethod, SolverError, SolverSettings,
};

use crate::format::{instance_to_json, read_instance, FormatError, RegimeJson, SolutionFile};
use crate::sweep::{self, Grid, Param};

pub const EXIT_OK: u8 = 0;
pub const EXIT_PARSE: u8 = 1;
pub const EXIT_DEGENERATE: u8 = 2;
pub const EXIT_PARTIAL: u8 = 3;
pub const EXIT_GAP: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "sharecap", version, about = "Capacity of MIMO links under power and interference caps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal covariance, capacity, multipliers and KKT audit
    Solve(SolveArgs),
    /// Regime report: growth, zero capacity, rank condition, bounds
    Classify(ClassifyArgs),
    /// Capacity over a grid of P_T or one P_I, as CSV
    Sweep(SweepArgs),
    /// Compare the closed-form solution with a numerical oracle
    Validate(ValidateArgs),
    /// Write a seeded random instance
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Auto,
    General,
    Oracle,
}

impl From<MethodArg> for SolveMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Auto => SolveMethod::Auto,
            MethodArg::General => SolveMethod::General,
            MethodArg::Oracle => SolveMethod::Oracle,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleArg {
    /// Projected gradient
    Pg,
    /// 2x2 grid search
    Grid,
    /// Interior point
    Ip,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    pub method: MethodArg,
    /// KKT audit tolerance, relative to max(1, largest eigenvalue of W1)
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    pub instance: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub instance: PathBuf,
    /// `pt` or `pi:k` (k counts users from 1)
    #[arg(long)]
    pub param: Param,
    /// start:stop:points
    #[arg(long)]
    pub grid: Grid,
    /// Geometric spacing between start and stop
    #[arg(long)]
    pub log: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, value_enum, default_value = "auto")]
    pub method: MethodArg,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value = "pg")]
    pub oracle: OracleArg,
    /// Largest accepted capacity gap in nats
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub seed: u64,
    /// Fix the dimension instead of drawing it
    #[arg(long)]
    pub dim: Option<usize>,
    /// Fix the number of users instead of drawing it
    #[arg(long)]
    pub users: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure with its exit code, reported on stderr as JSON.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
    pub detail: serde_json::Value,
}

impl Failure {
    fn new(code: u8, kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            kind,
            message: message.into(),
            detail: serde_json::Value::Null,
        }
    }

    pub fn to_json(&self) -> String {
        let mut v = json!({ "error": self.kind, "message": self.message });
        if !self.detail.is_null() {
            v["detail"] = self.detail.clone();
        }
        crate::json::to_string(&v)
    }
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        let mut f = match &e {
            FormatError::Problem(_) => Failure::new(EXIT_DEGENERATE, "degenerate", e.to_string()),
            FormatError::Io { .. } => Failure::new(EXIT_PARSE, "io", e.to_string()),
            _ => Failure::new(EXIT_PARSE, "parse", e.to_string()),
        };
        match e {
            FormatError::Json { line, column, .. } => f.detail = json!({ "line": line, "column": column }),
            FormatError::Field { path, .. } => f.detail = json!({ "field": path }),
            _ => {}
        }
        f
    }
}

impl From<SolverError> for Failure {
    fn from(e: SolverError) -> Self {
        let mut f = Failure::new(EXIT_DEGENERATE, "solver", e.to_string());
        if let SolverError::NoConvergence { iterations, worst_slack, duals } = &e {
            f.detail = json!({
                "iterations": iterations,
                "worst_slack": worst_slack,
                "mu1": duals.power,
                "mu2": duals.interference,
            });
        }
        f
    }
}

pub fn run(cli: Cli) -> u8 {
    let result = match cli.command {
        Command::Solve(a) => solve_cmd(&a),
        Command::Classify(a) => classify_cmd(&a),
        Command::Sweep(a) => sweep_cmd(&a),
        Command::Validate(a) => validate_cmd(&a),
        Command::Generate(a) => generate_cmd(&a),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            log::debug!("{} failure: {}", f.kind, f.message);
            eprint!("{}", f.to_json());
            f.code
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::new(EXIT_PARSE, "io", format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::new(EXIT_PARSE, "io", e.to_string()))
        }
    }
}

fn settings_for(method: MethodArg) -> SolverSettings {
    SolverSettings {
        method: method.into(),
        ..SolverSettings::default()
    }
}

fn kkt_scale(instance: &ProblemInstance) -> Result<f64, Failure> {
    Ok(instance
        .signal_gram()
        .max_eigenvalue()
        .map_err(|e| Failure::new(EXIT_DEGENERATE, "solver", e.to_string()))?
        .max(1.0))
}

/// Solves an instance and builds its solution file.
pub fn solve_instance(instance: &ProblemInstance, method: MethodArg) -> Result<SolutionFile, Failure> {
    let solution = solve_with(instance, &settings_for(method))?;
    let regime = classify(instance)?;
    Ok(SolutionFile::new(&solution, &regime))
}

fn solve_cmd(args: &SolveArgs) -> Result<u8, Failure> {
    let file = read_instance(&args.instance)?;
    log::info!(
        "solving m = {}, K = {}, method {:?}",
        file.instance.dim(),
        file.instance.num_users(),
        args.method
    );
    let out = solve_instance(&file.instance, args.method)?;
    log::info!("method {}, capacity {} nats", out.method, out.capacity_nats);
    if args.method != MethodArg::Oracle {
        let worst = out.kkt().worst();
        let bound = args.tol * kkt_scale(&file.instance)?;
        if worst > bound {
            let mut f = Failure::new(
                EXIT_DEGENERATE,
                "kkt",
                format!("KKT residual {worst:e} exceeds {bound:e}"),
            );
            f.detail = serde_json::to_value(&out.kkt_residuals).unwrap_or_default();
            return Err(f);
        }
    }
    emit(&out.to_json(), args.out.as_deref())?;
    Ok(EXIT_OK)
}

fn classify_cmd(args: &ClassifyArgs) -> Result<u8, Failure> {
    let file = read_instance(&args.instance)?;
    let report = classify(&file.instance)?;
    emit(&crate::json::to_string(&RegimeJson::from(&report)), None)?;
    Ok(EXIT_OK)
}

fn sweep_cmd(args: &SweepArgs) -> Result<u8, Failure> {
    let file = read_instance(&args.instance)?;
    let instance = &file.instance;
    if let Param::Cap(k) = args.param {
        if k >= instance.num_users() {
            return Err(Failure::new(
                EXIT_PARSE,
                "parse",
                format!("--param pi:{} but the instance has {} users", k + 1, instance.num_users()),
            ));
        }
    }
    let values = args
        .grid
        .values(args.log)
        .map_err(|e| Failure::new(EXIT_PARSE, "parse", e))?;
    log::info!("sweeping {} points on {} threads", values.len(), args.jobs);
    let rows = sweep::run(instance, args.param, &values, &settings_for(args.method), args.jobs)
        .map_err(|e| Failure::new(EXIT_PARSE, "parse", e))?;
    emit(&sweep::to_csv(instance, &rows), args.out.as_deref())?;
    let failed = rows.iter().filter(|r| r.result.is_err()).count();
    if failed > 0 {
        log::error!("{failed} of {} grid points failed", rows.len());
        return Ok(EXIT_PARTIAL);
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
pub struct ValidationReport {
    pub oracle: &'static str,
    pub method: String,
    pub capacity_nats: f64,
    pub oracle_capacity_nats: f64,
    /// Closed form minus oracle, in nats.
    pub capacity_gap: f64,
    pub max_covariance_diff: f64,
    pub feasible: bool,
    pub oracle_feasible: bool,
    pub oracle_iterations: usize,
    pub oracle_converged: bool,
    pub tol: f64,
    pub pass: bool,
}

pub fn validate_instance(
    instance: &ProblemInstance,
    oracle: OracleArg,
    tol: f64,
) -> Result<ValidationReport, Failure> {
    let closed = solve_with(instance, &SolverSettings::default())?;
    let settings = OracleSettings::default();
    let (name, run) = match oracle {
        OracleArg::Pg => ("pg", projected_gradient(instance, &settings)?),
        OracleArg::Grid => ("grid", bruteforce_2x2(instance, &settings)?),
        OracleArg::Ip => ("ip", interior_point(instance, &settings)?),
    };
    let report = compare(instance, &closed, &run.solution, tol)?;
    Ok(ValidationReport {
        oracle: name,
        method: closed.method.as_str().to_string(),
        capacity_nats: closed.capacity_nats,
        oracle_capacity_nats: run.solution.capacity_nats,
        capacity_gap: report.capacity_gap,
        max_covariance_diff: report.max_covariance_diff,
        feasible: report.feasible_a,
        oracle_feasible: report.feasible_b,
        oracle_iterations: run.iterations,
        oracle_converged: run.converged,
        tol,
        pass: report.pass,
    })
}

fn validate_cmd(args: &ValidateArgs) -> Result<u8, Failure> {
    let file = read_instance(&args.instance)?;
    if let Some(seed) = file.meta.as_ref().and_then(|m| m.get("seed")) {
        log::info!("instance seed {seed}");
    }
    let report = validate_instance(&file.instance, args.oracle, args.tol)?;
    emit(&crate::json::to_string(&report), None)?;
    Ok(if report.pass { EXIT_OK } else { EXIT_GAP })
}

fn generate_cmd(args: &GenerateArgs) -> Result<u8, Failure> {
    let mut spec = InstanceSpec::default();
    if let Some(m) = args.dim {
        if m == 0 {
            return Err(Failure::new(EXIT_PARSE, "parse", "--dim must be positive"));
        }
        spec.dims = vec![m];
    }
    if let Some(k) = args.users {
        spec.users = (k, k);
    }
    let mut rng = seeded_rng(args.seed);
    let instance = random_instance(&mut rng, &spec);
    let meta = json!({ "seed": args.seed, "generator": "sharecap generate" });
    emit(&crate::json::to_string(&instance_to_json(&instance, Some(&meta))), args.out.as_deref())?;
    Ok(EXIT_OK)
}
