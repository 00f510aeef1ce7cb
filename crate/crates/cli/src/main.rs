use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fracorlicz_cli::run::write_text;
use fracorlicz_cli::{execute, parse_config, CliError, Command, ConfigMap, RunPlan};

/// Nonlocal Orlicz modulars, rearrangements and first eigenvalues on grids.
///
/// Exit status: 0 when every checked property holds, 1 when one fails,
/// 2 on usage, validation or I/O errors.
#[derive(Debug, Parser)]
#[command(name = "fracorlicz", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// `key = value` configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file: a field CSV for rearrange, polarize and eigen, the JSON
    /// report otherwise
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the JSON report instead of a summary line
    #[arg(long)]
    json: bool,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Grid as `n,h,K`
    #[arg(long)]
    grid: Option<String>,
}

fn writes_field(plan: &RunPlan) -> bool {
    match plan.command {
        Command::Rearrange | Command::Polarize => true,
        Command::Eigen => plan.mu.is_some() && plan.mu_grid.is_none(),
        _ => false,
    }
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            parse_config(&text).map_err(CliError::Usage)?
        }
        None => ConfigMap::default(),
    };
    if let Some(v) = cli.seed {
        cfg.set("seed", v.to_string());
    }
    if let Some(v) = cli.mu {
        cfg.set("mu", v.to_string());
    }
    if let Some(v) = cli.tol {
        cfg.set("tol", v.to_string());
    }
    if let Some(v) = cli.max_iter {
        cfg.set("max_iter", v.to_string());
    }
    if let Some(v) = &cli.grid {
        cfg.set("grid", v.clone());
    }
    if let Some(v) = &cli.input {
        cfg.set("input", v.display().to_string());
    }
    if let Some(p) = &cli.out {
        if matches!(cli.command, Command::Rearrange | Command::Polarize) {
            cfg.set("output", p.display().to_string());
        }
    }
    let mut plan = RunPlan::build(cli.command, &cfg).map_err(CliError::Usage)?;
    let mut report_path = None;
    if let Some(p) = &cli.out {
        if writes_field(&plan) {
            plan.output = Some(p.clone());
        } else {
            report_path = Some(p.clone());
        }
    }
    let outcome = execute(&plan)?;
    let text = serde_json::to_string_pretty(&outcome.report).expect("report serializes");
    if let Some(path) = report_path {
        write_text(&path, &(text.clone() + "\n"))?;
    }
    let shown = if cli.json { &text } else { &outcome.summary };
    // A closed pipe downstream is not an error of ours.
    let _ = writeln!(std::io::stdout(), "{shown}");
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
