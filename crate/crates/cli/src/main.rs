mod commands;
mod config;
mod lattice;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Failure;
use crate::config::{CommandName, Overrides, RunConfig};

/// Support-function geometry and the isotropic Lp dual Minkowski problem on S².
///
/// Exit status: 0 when every check passes, 1 when a check fails, 2 on usage
/// or configuration errors.
#[derive(Parser)]
#[command(name = "lpdual", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the identity and inequality suite; writes a JSON report.
    Verify(RunArgs),
    /// Solve one (p, q) problem from a body or a seeded perturbed sphere.
    Solve(RunArgs),
    /// Linearized spectrum at the unit sphere for each (p, q) pair.
    Spectrum(RunArgs),
    /// Solve every cell of a (p, q, seed) lattice; writes CSV.
    Scan(RunArgs),
    /// Polar body of `--body`, optionally with the mapped (p, q) problem.
    Polar(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON run configuration; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Grid band limit (for `spectrum`: highest degree).
    #[arg(long)]
    lmax: Option<usize>,
    /// Values of p: `a,b,c` or `start:step:end`.
    #[arg(long, allow_hyphen_values = true)]
    p: Option<String>,
    /// Values of q: `a,b,c` or `start:step:end`.
    #[arg(long, allow_hyphen_values = true)]
    q: Option<String>,
    /// Seeds: `a,b,c` or `start:step:end`.
    #[arg(long)]
    seeds: Option<String>,
    /// Output file (stdout when absent); metadata goes to `<out>.meta.json`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Body JSON input.
    #[arg(long)]
    body: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match cli.command {
        Command::Verify(a) => (CommandName::Verify, a),
        Command::Solve(a) => (CommandName::Solve, a),
        Command::Spectrum(a) => (CommandName::Spectrum, a),
        Command::Scan(a) => (CommandName::Scan, a),
        Command::Polar(a) => (CommandName::Polar, a),
    };
    match run(name, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("failed: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(name: CommandName, args: RunArgs) -> Result<bool, Failure> {
    let base = match &args.config {
        Some(path) => RunConfig::load(path).map_err(Failure::Config)?,
        None => RunConfig::default(),
    };
    let overrides = Overrides {
        lmax: args.lmax,
        p: args.p,
        q: args.q,
        seeds: args.seeds,
        out: args.out,
        input: args.body,
    };
    let config = base.resolve(name, overrides).map_err(Failure::Config)?;
    commands::dispatch(&config)
}
