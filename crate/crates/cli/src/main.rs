use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod error;
mod output;

use config::{Overrides, RunConfig};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "orthowall", version, about = "Domain-wall profiles of a real amplitude system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Minimize the discrete energy and write profile.csv
    Solve(RunArgs),
    /// Sample the closed-form eps = 0 orbit into reduced.csv
    Reduced(RunArgs),
    /// Linearization at both equilibria, written to spectrum.json
    Spectrum(RunArgs),
    /// Warm-started solves along a decreasing list of g
    Sweep(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    g: Option<f64>,
    /// Half-length of the domain [-L, L]
    #[arg(long = "L", value_name = "L")]
    half_length: Option<f64>,
    /// Number of grid intervals
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    grad_tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// testfn, reduced or file:PATH
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// File of `key = value` lines; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated, strictly decreasing values of g
    #[arg(long)]
    g_list: Option<String>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let flags = Overrides {
            eps: self.eps,
            g: self.g,
            half_length: self.half_length,
            n: self.n,
            grad_tol: self.grad_tol,
            max_iters: self.max_iters,
            init: self.init.clone(),
            out_dir: self.out_dir.clone(),
            g_list: self.g_list.clone(),
        };
        RunConfig::resolve(self.config.as_deref(), &flags)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(a) => commands::solve(&a.resolve()?),
        Command::Reduced(a) => commands::reduced(&a.resolve()?),
        Command::Spectrum(a) => commands::spectrum(&a.resolve()?),
        Command::Sweep(a) => commands::sweep(&a.resolve()?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
