use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use robin_core::report::{load_config, run, Mode, Overrides, EXIT_CONFIG};

/// Radial solutions, thresholds and bifurcation sweeps for -Δu = λ f(u)
/// with Robin, Neumann or Dirichlet boundary conditions.
#[derive(Debug, Parser)]
#[command(name = "robin-bifurcate", version)]
struct Cli {
    #[arg(value_enum)]
    mode: Mode,
    /// JSON run configuration (schema v1).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    lambda: Option<f64>,
    /// Switches the boundary condition to Robin with this coefficient.
    #[arg(long)]
    gamma: Option<f64>,
    /// Grid resolution.
    #[arg(long)]
    n: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match load_config(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    cfg.apply(&Overrides {
        lambda: cli.lambda,
        gamma: cli.gamma,
        n: cli.n,
        out: cli.out,
    });
    ExitCode::from(run(&cfg, cli.mode) as u8)
}
