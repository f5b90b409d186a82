use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hitchin_lab::cli::{run, EXIT_USAGE};
use hitchin_lab::runconfig::Command;

/// Identity suites, gradient flows and spectral probes for the Hitchin
/// self-duality equations on a lattice torus.
#[derive(Parser)]
#[command(name = "hitchin-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Run the registered identity suite and write JSON-lines reports.
    Verify(Common),
    /// Run the gradient flow and write the trace, status and final configuration.
    Solve(Common),
    /// Compare Laplacian spectra before and after a gauge transformation.
    Spectrum(Common),
}

#[derive(Args)]
struct Common {
    /// Plain-text run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing; default: current directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    let (command, args) = match cli.command {
        Sub::Verify(a) => (Command::Verify, a),
        Sub::Solve(a) => (Command::Solve, a),
        Sub::Spectrum(a) => (Command::Spectrum, a),
    };
    ExitCode::from(run(command, &args.config, args.seed, args.out.as_deref()) as u8)
}
