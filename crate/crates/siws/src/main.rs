//! Command-line front end for the layered-contagion toolkit.
//!
//! Exit codes: 0 on success, 1 when validation or analysis rejects the
//! input, 2 on usage errors, 3 on file problems.

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use siws::analysis::{
    classify, classify_time_varying, endemic_fixed_point, two_virus_analysis, EquilibriumKind,
    Regime, TwoVirusVerdict,
};
use siws::dynamics::{simulate_multi, ParameterSchedule, StopReason, CONVERGENCE_TOL};
use siws::generate::{random_scenario, random_switching_schedule, RegimeTarget};
use siws::model::{validate_time_varying, SpreadingParams};
use siws::scenario::{
    load_scenario, save_scenario, write_trajectory_csv, PieceBlock, ScenarioError, ScenarioFile,
    ScheduleBlock, ScheduleMode, VirusBlock,
};
use siws::spectral::{reproduction_number, step_perron, step_radius};
use siws::sweep::{run_sweep, write_sweep_csv, Metric, SweepSpec};
use siws::{assemble_full, validate};
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "siws",
    version,
    about = "Simulate and analyze contagion on coupled person/resource networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file against the modeling assumptions.
    Validate(ValidateArgs),
    /// Report the spectral thresholds per virus.
    Spectrum(ScenarioOnlyArgs),
    /// Run the dynamics and write the trajectory as CSV.
    Simulate(SimulateArgs),
    /// Solve for the positive equilibrium per virus.
    Equilibrium(EquilibriumArgs),
    /// Decide the long-run regime.
    Classify(ClassifyArgs),
    /// Vary one parameter and tabulate metrics as CSV.
    Sweep(SweepArgs),
    /// Draw a random scenario in a requested regime.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct ValidateArgs {
    /// Scenario file to check.
    #[arg(long)]
    scenario: PathBuf,
}

#[derive(Args)]
struct ScenarioOnlyArgs {
    /// Scenario file to analyze.
    #[arg(long)]
    scenario: PathBuf,
    /// Abort instead of warning when validation fails.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario file to run.
    #[arg(long)]
    scenario: PathBuf,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Step budget.
    #[arg(long, default_value_t = 1_000_000)]
    steps: u64,
    /// Convergence tolerance on the max-norm step difference.
    #[arg(long, default_value_t = CONVERGENCE_TOL)]
    tol: f64,
    /// Sampling stride in steps; 0 picks one automatically.
    #[arg(long, default_value_t = 0)]
    stride: u64,
    /// Abort instead of warning when validation fails.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct EquilibriumArgs {
    /// Scenario file to analyze.
    #[arg(long)]
    scenario: PathBuf,
    /// Residual tolerance for the solver.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Iteration budget for the solver.
    #[arg(long, default_value_t = 1_000_000)]
    max_iter: u64,
    /// Abort instead of warning when validation fails.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Scenario file to classify.
    #[arg(long)]
    scenario: PathBuf,
    /// Abort instead of warning when validation fails.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Base scenario file.
    #[arg(long)]
    scenario: PathBuf,
    /// Axis path, e.g. `h`, `viruses.0.scale`, `viruses.0.infection.1.2`,
    /// `viruses.0.healing.0`.
    #[arg(long)]
    axis: String,
    /// Comma-separated values to try.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Comma-separated metrics: r0, step-radius, steps, limit.
    #[arg(long, value_delimiter = ',', default_value = "r0,step-radius")]
    metrics: Vec<String>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Step budget for the trajectory-based metrics.
    #[arg(long, default_value_t = 1_000_000)]
    steps: u64,
    /// Convergence tolerance for the trajectory-based metrics.
    #[arg(long, default_value_t = CONVERGENCE_TOL)]
    tol: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    /// Every virus below threshold.
    Subcritical,
    /// Every virus above threshold with the endemic step budget intact.
    Supercritical,
    /// First virus above threshold, the rest below.
    Mixed,
}

impl From<RegimeArg> for RegimeTarget {
    fn from(value: RegimeArg) -> Self {
        match value {
            RegimeArg::Subcritical => RegimeTarget::Subcritical,
            RegimeArg::Supercritical => RegimeTarget::Supercritical,
            RegimeArg::Mixed => RegimeTarget::Mixed,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Population size.
    #[arg(long)]
    nodes: usize,
    /// Number of shared resources.
    #[arg(long, default_value_t = 1)]
    resources: usize,
    /// Number of viruses.
    #[arg(long, default_value_t = 1)]
    viruses: usize,
    /// Step size.
    #[arg(long, default_value_t = 0.01)]
    h: f64,
    /// RNG seed; identical seeds reproduce the file byte for byte.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Target regime.
    #[arg(long, value_enum, default_value_t = RegimeArg::Subcritical)]
    regime: RegimeArg,
    /// Also draw a switching schedule with this many pieces (single-virus
    /// scenarios only).
    #[arg(long, default_value_t = 0)]
    schedule_pieces: usize,
    /// Dwell-time range for the schedule as `LO:HI` steps.
    #[arg(long)]
    dwell: Option<String>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn analysis(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        let code = match &e {
            ScenarioError::Io(_) => 3,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: 3,
            message: e.to_string(),
        }
    }
}

macro_rules! analysis_errors {
    ($($ty:ty),*) => {
        $(impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::analysis(e.to_string())
            }
        })*
    };
}

analysis_errors!(
    siws::model::ModelError,
    siws::spectral::SpectralError,
    siws::dynamics::DynamicsError,
    siws::analysis::AnalysisError,
    siws::generate::GenerateError
);

impl From<siws::sweep::SweepError> for CliError {
    fn from(e: siws::sweep::SweepError) -> Self {
        let code = match &e {
            siws::sweep::SweepError::Io(_) => 3,
            siws::sweep::SweepError::Scenario(ScenarioError::Io(_)) => 3,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    // Die quietly when a downstream pipe closes instead of panicking on the
    // next print; the runtime ignores the signal by default.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(command: Command) -> Result<ExitCode, CliError> {
    match command {
        Command::Validate(args) => cmd_validate(args),
        Command::Spectrum(args) => cmd_spectrum(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Equilibrium(args) => cmd_equilibrium(args),
        Command::Classify(args) => cmd_classify(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Generate(args) => cmd_generate(args),
    }
}

fn validation_report(file: &ScenarioFile) -> Result<siws::ValidationReport, CliError> {
    let scenario = file.to_scenario()?;
    Ok(match file.schedules()? {
        Some(schedules) => {
            let pieces: Vec<Vec<&SpreadingParams>> =
                schedules.iter().map(|s| s.pieces()).collect();
            validate_time_varying(&pieces, scenario.initial(), scenario.h)
        }
        None => validate(&scenario),
    })
}

/// Runs validation up front. With `strict` a failed report aborts; otherwise
/// it becomes a warning on stderr and the command proceeds.
fn gate_validation(file: &ScenarioFile, strict: bool) -> Result<(), CliError> {
    let report = validation_report(file)?;
    if report.passed {
        return Ok(());
    }
    if strict {
        return Err(CliError::analysis(format!(
            "validation failed:\n{}",
            report
        )));
    }
    for v in &report.violations {
        eprintln!("warning: {}", v);
    }
    Ok(())
}

fn reject_schedule(file: &ScenarioFile, what: &str) -> Result<(), CliError> {
    if file.schedule.is_some() {
        return Err(CliError::analysis(format!(
            "{} needs constant parameters; this scenario carries a schedule",
            what
        )));
    }
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> Result<ExitCode, CliError> {
    let file = load_scenario(&args.scenario)?;
    let report = validation_report(&file)?;
    print!("{}", report);
    Ok(if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_spectrum(args: ScenarioOnlyArgs) -> Result<ExitCode, CliError> {
    let file = load_scenario(&args.scenario)?;
    reject_schedule(&file, "spectral analysis")?;
    gate_validation(&file, args.strict)?;
    let scenario = file.to_scenario()?;
    for (k, params) in scenario.viruses().iter().enumerate() {
        let full = assemble_full(params, scenario.h)?;
        let r0 = reproduction_number(&full)?;
        let perron = step_perron(&full)?;
        let side = if perron.rho <= 1.0 {
            "subcritical"
        } else {
            "supercritical"
        };
        println!(
            "virus {}: r0 {}, step radius {}, {}",
            k + 1,
            r0,
            perron.rho,
            side
        );
        println!("  dominant mode: {}", join(perron.right.iter()));
        println!("  node weights: {}", join(perron.left.iter()));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode, CliError> {
    let file = load_scenario(&args.scenario)?;
    gate_validation(&file, args.strict)?;
    let scenario = file.to_scenario()?;
    let schedules = file.schedules()?;
    let trajectory = simulate_multi(
        &scenario,
        schedules.as_deref(),
        args.steps,
        args.tol,
        args.stride,
    )?;
    match &args.out {
        Some(path) => {
            let out = std::fs::File::create(path)?;
            write_trajectory_csv(std::io::BufWriter::new(out), &trajectory, scenario.h)?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_trajectory_csv(&mut lock, &trajectory, scenario.h)?;
            lock.flush()?;
        }
    }
    let stop = match trajectory.stop {
        StopReason::Tolerance => "reached tolerance",
        StopReason::MaxSteps => "exhausted the step budget",
    };
    eprintln!(
        "simulated {} steps ({}), converged: {}",
        trajectory.steps, stop, trajectory.converged
    );
    Ok(ExitCode::SUCCESS)
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

fn cmd_equilibrium(args: EquilibriumArgs) -> Result<ExitCode, CliError> {
    let file = load_scenario(&args.scenario)?;
    reject_schedule(&file, "equilibrium analysis")?;
    gate_validation(&file, args.strict)?;
    let scenario = file.to_scenario()?;
    for (k, params) in scenario.viruses().iter().enumerate() {
        let full = assemble_full(params, scenario.h)?;
        let result = endemic_fixed_point(&full, args.tol, args.max_iter)?;
        match result.kind {
            EquilibriumKind::HealthyOnly => {
                println!("virus {}: healthy state only", k + 1);
            }
            EquilibriumKind::Endemic => {
                let z = result.z_star.as_ref().expect("endemic result has a state");
                println!(
                    "virus {}: endemic equilibrium, residual {}, {} iterations",
                    k + 1,
                    result.residual,
                    result.iterations
                );
                println!("  x: {}", join(z.x.iter()));
                println!("  w: {}", join(z.w.iter()));
                println!(
                    "  mean infection {}, mean contamination {}",
                    mean(z.x.as_slice()),
                    mean(z.w.as_slice())
                );
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn join<'a>(values: impl Iterator<Item = &'a f64>) -> String {
    values
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn regime_line(regime: Regime) -> &'static str {
    match regime {
        Regime::HealthyGas => "healthy: every admissible start dies out",
        Regime::EndemicGas => {
            "endemic: every nonzero admissible start converges to the positive equilibrium"
        }
        Regime::Indeterminate => "indeterminate: the checked assumptions decide nothing",
    }
}

fn print_classification(c: &siws::analysis::Classification) {
    println!("regime: {}", regime_line(c.regime));
    println!("r0: {}", c.r0);
    println!("step radius: {}", c.step_radius);
    println!("rate: {}", c.rate);
    println!(
        "assumptions: well posed {}, strongly connected {}, endemic margin {}",
        c.flags.well_posed, c.flags.strongly_connected, c.flags.endemic_margin
    );
    if c.piece_r0.len() > 1 {
        println!("piece r0: {}", join(c.piece_r0.iter()));
    }
}

/// Elementwise envelope of a schedule: largest coupling and smallest removal
/// over its pieces.
fn schedule_envelope(
    pieces: &[&SpreadingParams],
    h: f64,
) -> Result<(DMatrix<f64>, DVector<f64>), CliError> {
    let first = assemble_full(pieces[0], h)?;
    let mut coupling = first.coupling;
    let mut removal = first.removal;
    for piece in &pieces[1..] {
        let full = assemble_full(piece, h)?;
        coupling.zip_apply(&full.coupling, |a, b| *a = a.max(b));
        removal.zip_apply(&full.removal, |a, b| *a = a.min(b));
    }
    Ok((coupling, removal))
}

fn cmd_classify(args: ClassifyArgs) -> Result<ExitCode, CliError> {
    let file = load_scenario(&args.scenario)?;
    gate_validation(&file, args.strict)?;
    let scenario = file.to_scenario()?;
    let schedules = file.schedules()?;

    if let Some(schedules) = &schedules {
        if scenario.l() != 1 {
            return Err(CliError::analysis(
                "time-varying classification covers single-virus scenarios only",
            ));
        }
        let schedule: &ParameterSchedule = &schedules[0];
        let (coupling_max, removal_min) = schedule_envelope(&schedule.pieces(), scenario.h)?;
        let c = classify_time_varying(schedule, scenario.h, &coupling_max, &removal_min)?;
        println!("mode: switched parameters, envelope threshold");
        print_classification(&c);
        return Ok(ExitCode::SUCCESS);
    }

    if scenario.l() == 1 {
        let c = classify(&assemble_full(&scenario.viruses()[0], scenario.h)?)?;
        print_classification(&c);
        return Ok(ExitCode::SUCCESS);
    }

    if scenario.l() == 2 && scenario.m() == 1 {
        let report = two_virus_analysis(&scenario)?;
        for (k, summary) in report.per_virus.iter().enumerate() {
            let kind = match summary.equilibrium.kind {
                EquilibriumKind::HealthyOnly => "healthy state only".to_string(),
                EquilibriumKind::Endemic => {
                    let z = summary.equilibrium.z_star.as_ref().unwrap();
                    format!(
                        "endemic alone, mean infection {}",
                        mean(z.x.as_slice())
                    )
                }
            };
            println!(
                "virus {}: r0 {}, step radius {}, {}",
                k + 1,
                summary.reproduction_number,
                summary.step_radius,
                kind
            );
        }
        if let Some([g1, g2]) = report.crossed_growth {
            println!("crossed growth rates: {} {}", g1, g2);
        }
        if let Some(k) = report.dominant {
            println!("virus {} dominates after removal scaling", k);
        }
        if let Some(bound) = report.step_bound {
            println!("step sizes below {} keep the winning equilibrium stable", bound);
        }
        let verdict = match report.verdict {
            TwoVirusVerdict::Healthy => "both viruses die out".to_string(),
            TwoVirusVerdict::Winner(k) => {
                format!("virus {} excludes the other", k)
            }
            TwoVirusVerdict::CoexistencePossible => {
                "each virus can invade the other's equilibrium; coexistence cannot be ruled out"
                    .to_string()
            }
            TwoVirusVerdict::Indeterminate => {
                "the checked conditions do not decide the outcome".to_string()
            }
        };
        println!("verdict: {}", verdict);
        return Ok(ExitCode::SUCCESS);
    }

    // Remaining shapes: summarize each virus on its own.
    let mut supercritical = Vec::new();
    for (k, params) in scenario.viruses().iter().enumerate() {
        let full = assemble_full(params, scenario.h)?;
        let r0 = reproduction_number(&full)?;
        let s1 = step_radius(&full)?;
        if s1 > 1.0 {
            supercritical.push(k + 1);
        }
        println!("virus {}: r0 {}, step radius {}", k + 1, r0, s1);
    }
    match supercritical.as_slice() {
        [] => println!("verdict: every virus dies out"),
        [k] => println!(
            "verdict: only virus {} is above threshold and can persist",
            k
        ),
        many => println!(
            "verdict: viruses {} are above threshold; the joint outcome is not decided here",
            many.iter()
                .map(|k| k.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode, CliError> {
    let file = load_scenario(&args.scenario)?;
    let metrics = args
        .metrics
        .iter()
        .map(|s| s.parse::<Metric>())
        .collect::<Result<Vec<_>, _>>()?;
    let mut spec = SweepSpec::new(file, args.axis, args.values, metrics);
    spec.max_steps = args.steps;
    spec.tol = args.tol;
    let result = run_sweep(&spec)?;
    match &args.out {
        Some(path) => {
            let out = std::fs::File::create(path)?;
            write_sweep_csv(std::io::BufWriter::new(out), &result)?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_sweep_csv(&mut lock, &result)?;
            lock.flush()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_dwell(raw: &str) -> Result<(u64, u64), CliError> {
    let mut parts = raw.split(':');
    let parse = |p: Option<&str>| -> Result<u64, CliError> {
        p.and_then(|s| s.parse().ok())
            .ok_or_else(|| CliError::analysis(format!("dwell must look like LO:HI, got {:?}", raw)))
    };
    let lo = parse(parts.next())?;
    let hi = parse(parts.next())?;
    if parts.next().is_some() {
        return Err(CliError::analysis(format!(
            "dwell must look like LO:HI, got {:?}",
            raw
        )));
    }
    Ok((lo, hi))
}

fn cmd_generate(args: GenerateArgs) -> Result<ExitCode, CliError> {
    let mut file = random_scenario(
        args.nodes,
        args.resources,
        args.viruses,
        args.h,
        args.seed,
        args.regime.into(),
    )?;
    if args.schedule_pieces > 0 {
        if args.viruses != 1 {
            return Err(CliError::analysis(
                "schedule generation covers single-virus scenarios only",
            ));
        }
        let dwell = args.dwell.as_deref().map(parse_dwell).transpose()?;
        let params = file.viruses[0].to_params(args.nodes, args.resources)?;
        let schedule = random_switching_schedule(
            &params,
            args.seed.wrapping_add(1),
            args.schedule_pieces,
            dwell,
        )?;
        let ParameterSchedule::Piecewise(pieces) = schedule else {
            unreachable!("switching schedules are piecewise");
        };
        file.schedule = Some(ScheduleBlock {
            mode: ScheduleMode::Piecewise,
            period: None,
            pieces: pieces
                .iter()
                .map(|(start, p)| PieceBlock {
                    start: *start,
                    viruses: vec![VirusBlock::from_params(p)],
                })
                .collect(),
        });
    } else if args.dwell.is_some() {
        return Err(CliError::analysis(
            "--dwell only makes sense together with --schedule-pieces",
        ));
    }
    match &args.out {
        Some(path) => save_scenario(path, &file)?,
        None => {
            let mut text = serde_json::to_string_pretty(&file)
                .map_err(|e| CliError::analysis(e.to_string()))?;
            text.push('\n');
            print!("{}", text);
        }
    }
    Ok(ExitCode::SUCCESS)
}
