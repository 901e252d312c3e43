mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "annealbench", version, about = "Quantum annealing sweeps with boundary-flat schedules")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand. Explicit flags override the config.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Experiment file (INI, see docs/formats.md)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Model, e.g. lz:h=2,alpha=0.2 or grover:N=64
    #[arg(long, global = true)]
    model: Option<String>,
    /// Schedule name, or a comma separated list for `sweep`
    #[arg(long, global = true)]
    schedule: Option<String>,
    /// Annealing time; `MIN:MAX[:PPD]` for `sweep`
    #[arg(long, global = true)]
    tau: Option<String>,
    /// Worker threads for `sweep`
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output file (stdout when omitted, except for `sweep`)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenvalues, first gap and A coefficients along s
    Spectrum(commands::SpectrumArgs),
    /// Endpoint coefficients of the tau^-2m excitation bound
    Bound(commands::BoundArgs),
    /// One annealing run, printed as a CSV row
    Evolve(commands::EvolveArgs),
    /// Annealing-time sweep to a resumable CSV table
    Sweep(commands::SweepArgs),
    /// Log-log slope fits on a sweep table
    Fit(commands::FitArgs),
    /// gnuplot script for a sweep table
    Figure(commands::FigureArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let common = cli.common;
    let result = match cli.command {
        Command::Spectrum(a) => commands::spectrum(&common, &a),
        Command::Bound(a) => commands::bound(&common, &a),
        Command::Evolve(a) => commands::evolve(&common, &a),
        Command::Sweep(a) => commands::sweep(&common, &a),
        Command::Fit(a) => commands::fit(&common, &a),
        Command::Figure(a) => commands::figure(&common, &a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("annealbench: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
