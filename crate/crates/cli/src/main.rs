use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use torus_control::experiments::{run_batch, verify, write_run, ExperimentError, RunOutput, Scenario, Suite};

/// Caps the worker pool used for batches and suite criteria.
const THREADS_VAR: &str = "TORCTL_THREADS";

#[derive(Parser)]
#[command(name = "torctl", version, about = "Simulate, analyse and steer semilinear heat equations on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ScenarioArgs {
    /// Scenario file; repeat to run several concurrently.
    #[arg(long, required = true, num_args = 1..)]
    scenario: Vec<PathBuf>,
    /// Directory receiving one subdirectory per run.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run `simulate` or `stability` scenarios.
    Simulate(ScenarioArgs),
    /// Run `limit_study` scenarios.
    LimitStudy(ScenarioArgs),
    /// Run `saturate` scenarios.
    Saturate(ScenarioArgs),
    /// Run `plan` scenarios.
    Plan(ScenarioArgs),
    /// Run the acceptance suite.
    Verify {
        #[arg(long, value_parser = ["fast", "full"], default_value = "fast")]
        suite: String,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
}

impl Command {
    fn accepts(&self, kind: &str) -> bool {
        match self {
            Command::Simulate(_) => kind == "simulate" || kind == "stability",
            Command::LimitStudy(_) => kind == "limit_study",
            Command::Saturate(_) => kind == "saturate",
            Command::Plan(_) => kind == "plan",
            Command::Verify { .. } => false,
        }
    }
}

enum Outcome {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match execute(&cli.command) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("{THREADS_VAR} must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn execute(command: &Command) -> Result<Outcome, ExperimentError> {
    let outputs = match command {
        Command::Verify { suite, out } => {
            let suite: Suite = suite.parse()?;
            vec![(out.clone(), verify(suite)?)]
        }
        Command::Simulate(args) | Command::LimitStudy(args) | Command::Saturate(args) | Command::Plan(args) => {
            for path in &args.scenario {
                let kind = Scenario::load(path)?.experiment.kind();
                if !command.accepts(kind) {
                    return Err(ExperimentError::Invalid(format!(
                        "{}: kind `{kind}` does not belong to this subcommand",
                        path.display()
                    )));
                }
            }
            let mut outputs = Vec::new();
            for result in run_batch(&args.scenario) {
                outputs.push((args.out.clone(), result?));
            }
            outputs
        }
    };
    let mut passed = true;
    for (out, output) in &outputs {
        passed &= emit(out, output)?;
    }
    Ok(if passed { Outcome::Pass } else { Outcome::Fail })
}

fn emit(out: &Path, output: &RunOutput) -> Result<bool, ExperimentError> {
    let dir = write_run(out, output)?;
    let report = &output.report;
    println!("{} ({}, {:.2} s)", report.scenario, report.kind, report.runtime_seconds);
    for v in &report.verdicts {
        println!("  {} {}: {}", if v.passed { "PASS" } else { "FAIL" }, v.criterion, v.detail);
    }
    println!("  output: {}", dir.display());
    Ok(report.passed())
}
