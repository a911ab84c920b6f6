use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use ncfield::DeformationParams;
use ncfield_cli::{cmd_brackets, cmd_evolve, cmd_spectrum, cmd_verify, RouteChoice, RunConfig};

/// Deformed symplectic structures, spectra and dynamics of two-component
/// scalar fields on a circle.
#[derive(Parser)]
#[command(name = "ncfield", version)]
struct Cli {
    /// JSON run configuration; built-in defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for random initial states and parameter samples.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output directory, overriding `output_dir` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the spectrum table, its JSON form and the degeneracy report.
    Spectrum,
    /// Evolve the initial state and write trajectory and field CSVs.
    Evolve {
        #[arg(long, value_enum, default_value = "deformed")]
        route: RouteChoice,
    },
    /// Run the invariant suite and print a pass/fail table.
    Verify {
        /// Flip a sign in the inverse dressing to check that the suite notices.
        #[arg(long)]
        inject_fault: bool,
    },
    /// Print the nine mode brackets at (n, -n).
    Brackets {
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        theta_bar: Option<f64>,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        n: i64,
    },
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default_run(),
    };
    let out = cli.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    let print = |lines: Vec<String>| lines.iter().for_each(|l| println!("{l}"));
    match cli.command {
        Command::Spectrum => print(cmd_spectrum(&cfg, &out)?),
        Command::Evolve { route } => print(cmd_evolve(&cfg, route, cli.seed, &out)?),
        Command::Verify { inject_fault } => {
            let report = cmd_verify(&cfg, cli.seed, inject_fault);
            print(report.table());
            if !report.all_passed() {
                eprintln!("failing checks: {}", report.failing().join(", "));
                return Ok(false);
            }
        }
        Command::Brackets { theta, theta_bar, n } => {
            let params = DeformationParams::new(theta.unwrap_or(cfg.theta), theta_bar.unwrap_or(cfg.theta_bar));
            print(cmd_brackets(&params, n)?);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
