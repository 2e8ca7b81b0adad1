//! Command-line front end: solve single instances, sweep horizons or
//! bounds into CSV, classify instances, validate predictions against the
//! solvers, and estimate null-control costs. All numeric output uses 9
//! significant digits and runs are deterministic for a fixed seed.

use crate::classify::{
    classify_report, cross_validate, ClassifyReport, Query, SolutionRef, ValidateThresholds,
};
use crate::error::{Error, Result};
use crate::fmt::sig9;
use crate::matrix;
use crate::models::{double_integrator, model_from_json, scalar_system};
use crate::norm::{
    check_bangbang, minimal_norm, null_control_cost, LimitOptions, NormProblem, NormStatus,
    NormSolution, NormSweepRow, SolveOptions, write_norm_sweep_csv,
};
use crate::system::{system_from_json, LtiSystem};
use crate::time::{
    minimal_time, write_time_sweep_csv, TimeProblem, TimeSolution, TimeStatus, TimeSweepRow,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fs;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NO_CONTROL: i32 = 3;
pub const EXIT_NOT_CONVERGED: i32 = 4;
pub const EXIT_VALIDATION_FAILED: i32 = 5;

#[derive(Parser, Debug)]
#[command(
    name = "lticontrol",
    version,
    about = "Minimal-norm and minimal-time L∞ controls for linear systems"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute the minimal control norm N(T, y0) at a fixed horizon
    Norm(NormCmd),
    /// Compute the minimal time T(M, y0) under a control bound
    Time(TimeCmd),
    /// Sweep N(T, y0) over a horizon range into CSV
    SweepNorm(SweepNormCmd),
    /// Sweep T(M, y0) over a bound range into CSV
    SweepTime(SweepTimeCmd),
    /// Classify an instance into its decomposition cell
    Classify(ClassifyCmd),
    /// Classify, solve, and check the prediction against the solver
    Validate(ValidateCmd),
    /// Estimate the null-control cost over unit initial states
    Cost(CostCmd),
}

#[derive(Args, Debug)]
struct SystemOpt {
    /// System: `scalar:a=<a>,b=<b>`, `dint`, or a JSON definition file
    #[arg(long)]
    system: String,
}

#[derive(Args, Debug)]
struct Y0Opt {
    /// Initial state: comma-separated floats, or preset `e<k>` for the k-th
    /// standard basis vector
    #[arg(long)]
    y0: String,
}

#[derive(Args, Debug)]
struct SolverOpt {
    /// Panel count for synthesized controls and quadrature seeding
    #[arg(long, default_value_t = 512)]
    panels: usize,
    /// Relative tolerance of the minimal-time bisection
    #[arg(long, default_value_t = 1e-5)]
    rtol: f64,
    /// Ascent iteration cap per start
    #[arg(long = "max-iter", default_value_t = 4000)]
    max_iter: usize,
    /// Seed for randomized restarts and sampling
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolverOpt {
    fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            quad_panels: self.panels,
            control_panels: self.panels,
            max_iters: self.max_iter,
            seed: self.seed,
            ..SolveOptions::default()
        }
    }

    fn time_options(&self) -> crate::time::TimeOptions {
        let mut limit = LimitOptions::default();
        limit.solve = self.solve_options();
        crate::time::TimeOptions {
            rtol: self.rtol,
            limit,
            solve: self.solve_options(),
            ..crate::time::TimeOptions::default()
        }
    }

    fn limit_options(&self) -> LimitOptions {
        let mut limit = LimitOptions::default();
        limit.solve = self.solve_options();
        limit
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Spacing {
    Linear,
    Log,
}

#[derive(Args, Debug)]
struct SweepOpt {
    #[arg(long)]
    start: f64,
    #[arg(long)]
    stop: f64,
    #[arg(long)]
    points: usize,
    #[arg(long, value_enum, default_value_t = Spacing::Linear)]
    spacing: Spacing,
}

#[derive(Args, Debug)]
struct NormCmd {
    #[command(flatten)]
    system: SystemOpt,
    #[command(flatten)]
    y0: Y0Opt,
    /// Horizon T > 0
    #[arg(long = "T")]
    t: f64,
    #[command(flatten)]
    solver: SolverOpt,
    /// Write a one-row CSV (T,N,status,dual_ratio,residual,bb_fraction)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TimeCmd {
    #[command(flatten)]
    system: SystemOpt,
    #[command(flatten)]
    y0: Y0Opt,
    /// Control bound M > 0
    #[arg(long = "M")]
    m: f64,
    #[command(flatten)]
    solver: SolverOpt,
    /// Write a one-row CSV (M,T,status,bb_fraction)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepNormCmd {
    #[command(flatten)]
    system: SystemOpt,
    #[command(flatten)]
    y0: Y0Opt,
    #[command(flatten)]
    sweep: SweepOpt,
    #[command(flatten)]
    solver: SolverOpt,
    /// CSV output path; standard output when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepTimeCmd {
    #[command(flatten)]
    system: SystemOpt,
    #[command(flatten)]
    y0: Y0Opt,
    #[command(flatten)]
    sweep: SweepOpt,
    #[command(flatten)]
    solver: SolverOpt,
    /// CSV output path; standard output when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("query").required(true).args(["t", "m"])))]
struct ClassifyCmd {
    #[command(flatten)]
    system: SystemOpt,
    #[command(flatten)]
    y0: Y0Opt,
    /// Horizon T for a W-cell query
    #[arg(long = "T")]
    t: Option<f64>,
    /// Bound M for a V-cell query
    #[arg(long = "M")]
    m: Option<f64>,
    #[command(flatten)]
    solver: SolverOpt,
    /// Write the JSON report here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("query").required(true).args(["t", "m"])))]
struct ValidateCmd {
    #[command(flatten)]
    system: SystemOpt,
    #[command(flatten)]
    y0: Y0Opt,
    /// Horizon T: classify the W-cell and check the norm solver against it
    #[arg(long = "T")]
    t: Option<f64>,
    /// Bound M: classify the V-cell and check the time solver against it
    #[arg(long = "M")]
    m: Option<f64>,
    #[command(flatten)]
    solver: SolverOpt,
    /// Write the JSON validation report here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CostCmd {
    #[command(flatten)]
    system: SystemOpt,
    /// Horizon T > 0
    #[arg(long = "T")]
    t: f64,
    #[command(flatten)]
    solver: SolverOpt,
    /// Write a one-row CSV (T,cost_lower_bound,directions)
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses the --system argument; the flag reports whether the system is a
/// spectral truncation (so reports can carry the truncated-model note).
fn parse_system(spec: &str) -> Result<(LtiSystem, bool)> {
    if spec == "dint" {
        return Ok((double_integrator(), false));
    }
    if let Some(rest) = spec.strip_prefix("scalar:") {
        let mut a = None;
        let mut b = None;
        for part in rest.split(',') {
            let (key, value) = part.split_once('=').ok_or_else(|| {
                Error::Parse(format!("expected key=value in scalar spec, got \"{part}\""))
            })?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad number \"{value}\" in scalar spec")))?;
            match key.trim() {
                "a" => a = Some(v),
                "b" => b = Some(v),
                other => {
                    return Err(Error::Parse(format!(
                        "unknown scalar parameter \"{other}\"; expected a or b"
                    )))
                }
            }
        }
        let a = a.ok_or_else(|| Error::Parse("scalar spec is missing a=".into()))?;
        let b = b.ok_or_else(|| Error::Parse("scalar spec is missing b=".into()))?;
        return Ok((scalar_system(a, b)?, false));
    }
    let text = fs::read_to_string(spec)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    if value.get("kind").is_some() {
        let model = model_from_json(&text)?;
        let truncated = model.is_truncated();
        Ok((model.to_system()?, truncated))
    } else {
        Ok((system_from_json(&text)?, false))
    }
}

/// Parses the --y0 argument against the system dimension.
fn parse_y0(spec: &str, n: usize) -> Result<Vec<f64>> {
    let trimmed = spec.trim();
    if let Some(rest) = trimmed.strip_prefix('e') {
        if let Ok(k) = rest.parse::<usize>() {
            if k == 0 || k > n {
                return Err(Error::Invalid(format!(
                    "preset e{k} is out of range for dimension {n}"
                )));
            }
            let mut v = vec![0.0; n];
            v[k - 1] = 1.0;
            return Ok(v);
        }
    }
    let v: Vec<f64> = trimmed
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number \"{s}\" in y0")))
        })
        .collect::<Result<_>>()?;
    if v.len() != n {
        return Err(Error::Dimension(format!(
            "y0 has {} entries but the system dimension is {n}",
            v.len()
        )));
    }
    Ok(v)
}

fn sweep_values(opt: &SweepOpt) -> Result<Vec<f64>> {
    if !(opt.start.is_finite() && opt.start > 0.0) {
        return Err(Error::Invalid("sweep start must be positive".into()));
    }
    if !(opt.stop.is_finite() && opt.stop >= opt.start) {
        return Err(Error::Invalid("sweep stop must be at least start".into()));
    }
    if opt.points == 0 {
        return Err(Error::Invalid("sweep needs at least one point".into()));
    }
    if opt.points == 1 {
        return Ok(vec![opt.start]);
    }
    let k = (opt.points - 1) as f64;
    Ok((0..opt.points)
        .map(|i| match opt.spacing {
            Spacing::Linear => opt.start + (opt.stop - opt.start) * i as f64 / k,
            Spacing::Log => {
                (opt.start.ln() + (opt.stop.ln() - opt.start.ln()) * i as f64 / k).exp()
            }
        })
        .collect())
}

fn print_norm_solution(t: f64, sol: &NormSolution, bb_tol: f64) {
    match sol.status {
        NormStatus::Infeasible => {
            println!("N({}) = inf", sig9(t));
        }
        _ => println!("N({}) = {}", sig9(t), sig9(sol.value)),
    }
    println!("status = {}", sol.status.as_str());
    if let Some(cert) = &sol.certificate {
        println!("dual_ratio = {}", sig9(cert.ratio));
    }
    if sol.status != NormStatus::Infeasible {
        println!("residual = {}", sig9(sol.residual));
    }
    if let (Some(control), NormStatus::Solved) = (&sol.control, sol.status) {
        let bb = check_bangbang(control, sol.value, bb_tol);
        println!("bb_fraction = {}", sig9(bb.fraction_on_boundary));
    }
}

fn print_time_solution(sol: &TimeSolution, bb_tol: f64) {
    match sol.status {
        TimeStatus::NoAdmissibleControl => println!("T({}) = inf", sig9(sol.bound)),
        TimeStatus::Solved => println!("T({}) = {}", sig9(sol.bound), sig9(sol.value)),
    }
    println!("status = {}", sol.status.as_str());
    if let Some(n) = sol.norm_at_value {
        println!("norm_at_T = {}", sig9(n));
    }
    if let (Some(control), TimeStatus::Solved) = (&sol.control, sol.status) {
        let bb = check_bangbang(control, sol.bound, bb_tol);
        println!("bb_fraction = {}", sig9(bb.fraction_on_boundary));
        println!("residual = {}", sig9(sol.residual));
    }
}

fn write_out(path: &Option<PathBuf>, contents: &[u8]) -> Result<()> {
    if let Some(p) = path {
        fs::write(p, contents)?;
    }
    Ok(())
}

fn run_norm(cmd: &NormCmd) -> Result<i32> {
    let (sys, _) = parse_system(&cmd.system.system)?;
    let y0 = parse_y0(&cmd.y0.y0, sys.n())?;
    let opts = cmd.solver.solve_options();
    let prob = NormProblem::new(sys, y0, cmd.t)?;
    let sol = minimal_norm(&prob, &opts)?;
    print_norm_solution(cmd.t, &sol, opts.bb_tol);
    if cmd.out.is_some() {
        let rows = vec![NormSweepRow::from_solution(cmd.t, &sol, opts.bb_tol)];
        let mut buf = Vec::new();
        write_norm_sweep_csv(&mut buf, &rows)?;
        write_out(&cmd.out, &buf)?;
    }
    Ok(match sol.status {
        NormStatus::Infeasible => EXIT_NO_CONTROL,
        _ => EXIT_OK,
    })
}

fn run_time(cmd: &TimeCmd) -> Result<i32> {
    let (sys, _) = parse_system(&cmd.system.system)?;
    let y0 = parse_y0(&cmd.y0.y0, sys.n())?;
    let opts = cmd.solver.time_options();
    let prob = TimeProblem::new(sys, y0, cmd.m)?;
    let sol = minimal_time(&prob, &opts)?;
    print_time_solution(&sol, opts.solve.bb_tol);
    if cmd.out.is_some() {
        let rows = vec![TimeSweepRow::from_solution(cmd.m, &sol, opts.solve.bb_tol)];
        let mut buf = Vec::new();
        write_time_sweep_csv(&mut buf, &rows)?;
        write_out(&cmd.out, &buf)?;
    }
    Ok(match sol.status {
        TimeStatus::NoAdmissibleControl => EXIT_NO_CONTROL,
        TimeStatus::Solved => EXIT_OK,
    })
}

fn run_sweep_norm(cmd: &SweepNormCmd) -> Result<i32> {
    let (sys, _) = parse_system(&cmd.system.system)?;
    let y0 = parse_y0(&cmd.y0.y0, sys.n())?;
    let opts = cmd.solver.solve_options();
    let mut rows = Vec::new();
    for t in sweep_values(&cmd.sweep)? {
        let prob = NormProblem::new(sys.clone(), y0.clone(), t)?;
        let sol = minimal_norm(&prob, &opts)?;
        rows.push(NormSweepRow::from_solution(t, &sol, opts.bb_tol));
    }
    let mut buf = Vec::new();
    write_norm_sweep_csv(&mut buf, &rows)?;
    match &cmd.out {
        Some(_) => {
            write_out(&cmd.out, &buf)?;
            println!("wrote {} rows", rows.len());
        }
        None => print!("{}", String::from_utf8_lossy(&buf)),
    }
    Ok(EXIT_OK)
}

fn run_sweep_time(cmd: &SweepTimeCmd) -> Result<i32> {
    let (sys, _) = parse_system(&cmd.system.system)?;
    let y0 = parse_y0(&cmd.y0.y0, sys.n())?;
    let opts = cmd.solver.time_options();
    let mut rows = Vec::new();
    for m in sweep_values(&cmd.sweep)? {
        let prob = TimeProblem::new(sys.clone(), y0.clone(), m)?;
        let sol = minimal_time(&prob, &opts)?;
        rows.push(TimeSweepRow::from_solution(m, &sol, opts.solve.bb_tol));
    }
    let mut buf = Vec::new();
    write_time_sweep_csv(&mut buf, &rows)?;
    match &cmd.out {
        Some(_) => {
            write_out(&cmd.out, &buf)?;
            println!("wrote {} rows", rows.len());
        }
        None => print!("{}", String::from_utf8_lossy(&buf)),
    }
    Ok(EXIT_OK)
}

fn query_from(t: Option<f64>, m: Option<f64>) -> Result<Query> {
    match (t, m) {
        (Some(t), None) => Ok(Query::Horizon(t)),
        (None, Some(m)) => Ok(Query::Bound(m)),
        _ => Err(Error::Invalid("exactly one of --T and --M is required".into())),
    }
}

fn classify_to_report(cmd: &ClassifyCmd) -> Result<ClassifyReport> {
    let (sys, truncated) = parse_system(&cmd.system.system)?;
    let y0 = parse_y0(&cmd.y0.y0, sys.n())?;
    let query = query_from(cmd.t, cmd.m)?;
    let note = truncated.then(|| "truncated-model".to_string());
    classify_report(&sys, &y0, query, &cmd.solver.limit_options(), note)
}

fn run_classify(cmd: &ClassifyCmd) -> Result<i32> {
    let report = classify_to_report(cmd)?;
    let json = serde_json::to_string_pretty(&report)?;
    println!("{json}");
    write_out(&cmd.out, json.as_bytes())?;
    Ok(EXIT_OK)
}

fn run_validate(cmd: &ValidateCmd) -> Result<i32> {
    let (sys, truncated) = parse_system(&cmd.system.system)?;
    let y0 = parse_y0(&cmd.y0.y0, sys.n())?;
    let query = query_from(cmd.t, cmd.m)?;
    let note = truncated.then(|| "truncated-model".to_string());
    let limit = cmd.solver.limit_options();
    let classification =
        crate::classify::classify_finite_dim(&sys, &y0, query, &limit)?;
    let label = match classification.label {
        Some(l) => l,
        None => {
            println!(
                "classification is Boundary-Uncertain (bound within the \
                 unconverged n_at_t1 band); nothing to validate"
            );
            return Ok(EXIT_NOT_CONVERGED);
        }
    };
    println!("cell = {}", label.cell);
    println!("prediction = {:?}", label.prediction);
    let thresholds = ValidateThresholds {
        y0_norm: Some(matrix::norm2(&y0)),
        ..ValidateThresholds::default()
    };
    let report = match query {
        Query::Horizon(t) => {
            let prob = NormProblem::new(sys.clone(), y0.clone(), t)?;
            let sol = minimal_norm(&prob, &cmd.solver.solve_options())?;
            cross_validate(&label, &SolutionRef::Norm(&sol), &thresholds)?
        }
        Query::Bound(m) => {
            let prob = TimeProblem::new(sys.clone(), y0.clone(), m)?;
            let sol = minimal_time(&prob, &cmd.solver.time_options())?;
            cross_validate(&label, &SolutionRef::Time(&sol), &thresholds)?
        }
    };
    for line in &report.passed {
        println!("pass: {line}");
    }
    for line in &report.violations {
        println!("VIOLATION: {line}");
    }
    let classify_json = classify_report(&sys, &y0, query, &limit, note)?;
    let combined = serde_json::json!({
        "classification": classify_json,
        "passed": report.passed,
        "violations": report.violations,
    });
    write_out(&cmd.out, serde_json::to_string_pretty(&combined)?.as_bytes())?;
    if report.ok() {
        println!("validation passed");
        Ok(EXIT_OK)
    } else {
        println!("validation FAILED");
        Ok(EXIT_VALIDATION_FAILED)
    }
}

fn run_cost(cmd: &CostCmd) -> Result<i32> {
    let (sys, _) = parse_system(&cmd.system.system)?;
    let opts = cmd.solver.solve_options();
    let est = null_control_cost(&sys, cmd.t, &opts)?;
    println!("cost_lower_bound = {}", sig9(est.lower_bound));
    println!("directions = {}", est.directions_evaluated);
    println!(
        "argmax_y0 = [{}]",
        est.argmax_y0
            .iter()
            .map(|v| sig9(*v))
            .collect::<Vec<_>>()
            .join(", ")
    );
    if cmd.out.is_some() {
        let mut buf = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(["T", "cost_lower_bound", "directions"])?;
            w.write_record([
                sig9(cmd.t),
                sig9(est.lower_bound),
                est.directions_evaluated.to_string(),
            ])?;
            w.flush()?;
        }
        write_out(&cmd.out, &buf)?;
    }
    Ok(EXIT_OK)
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::NotConverged { .. } | Error::BracketNotFound(_) => EXIT_NOT_CONVERGED,
        Error::InfeasibilityEvidence(_) => EXIT_NO_CONTROL,
        _ => EXIT_ERROR,
    }
}

/// Executes a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Norm(cmd) => run_norm(cmd),
        Command::Time(cmd) => run_time(cmd),
        Command::SweepNorm(cmd) => run_sweep_norm(cmd),
        Command::SweepTime(cmd) => run_sweep_time(cmd),
        Command::Classify(cmd) => run_classify(cmd),
        Command::Validate(cmd) => run_validate(cmd),
        Command::Cost(cmd) => run_cost(cmd),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}
