//! `cone-geo`: solve geodesic and brachistochrone scenarios from a JSON
//! config. See [`config`] for the schema.

mod config;
mod output;
mod solve;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver error: {0}")]
    Solve(conegeo::Error),
    #[error("{0}")]
    Io(String),
}

#[derive(Parser)]
#[command(name = "cone-geo", version, about = "Geodesics on conical manifolds")]
struct Cli {
    /// Print nothing but errors.
    #[arg(long, global = true)]
    quiet: bool,
    /// Only solve this winding class (must appear in `seeds`).
    #[arg(long, global = true, value_name = "K", allow_negative_numbers = true)]
    seed_filter: Option<i64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve and write results.json, trace.csv and paths.svg.
    Run {
        config: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Check the config and run the scenario preflight without solving.
    Validate { config: PathBuf },
}

const EXIT_OK: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_PARTIAL: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { EXIT_OK });
        }
    };
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Run { config, out } => run(config, out, &cli),
        Command::Validate { config } => validate(config, &cli),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("cone-geo: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

/// `CONE_GEO_THREADS` caps the number of seeds solved at once.
fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("CONE_GEO_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("CONE_GEO_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn validate(path: &Path, cli: &Cli) -> Result<u8, CliError> {
    let cfg = config::load(path)?;
    let prep = solve::prepare(&cfg, cli.seed_filter)?;
    if !cli.quiet {
        for w in &prep.warnings {
            eprintln!("warning: {w}");
        }
        println!(
            "{}: ok ({}, N = {}, seeds {:?})",
            path.display(),
            prep.chart_metric.kind(),
            prep.n,
            prep.seeds
        );
    }
    Ok(EXIT_OK)
}

fn run(path: &Path, out: &Path, cli: &Cli) -> Result<u8, CliError> {
    let cfg = config::load(path)?;
    let prep = solve::prepare(&cfg, cli.seed_filter)?;
    if !cli.quiet {
        for w in &prep.warnings {
            eprintln!("warning: {w}");
        }
    }
    let sols = solve::solve(&prep)?;

    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("cannot create {}: {e}", out.display())))?;
    output::write(&out.join("results.json"), &output::results_json(&prep, &sols)?)?;
    output::write(&out.join("trace.csv"), &output::trace_csv(&sols)?)?;
    if cfg.output.svg {
        output::write(&out.join("paths.svg"), output::paths_svg(&prep, &sols).as_bytes())?;
    }

    if !cli.quiet {
        for s in &sols {
            let winding = s.winding.map_or("-".to_string(), |k| k.to_string());
            println!(
                "seed {:>3}  winding {:>3}  E = {:.10}  L = {:.10}  {}",
                s.seed,
                winding,
                s.energy,
                s.length,
                if s.converged { "converged" } else { "NOT converged" }
            );
        }
        println!("wrote {}", out.display());
    }
    Ok(if sols.iter().all(|s| s.converged) { EXIT_OK } else { EXIT_PARTIAL })
}
