//! `pifa`: factorize, compress, reconstruct, evaluate, benchmark and inspect
//! low-rank layers from the command line.
//!
//! Exit codes: 0 success, 2 validation, 3 numerical, 4 IO or format.

mod commands;
mod config;
mod run;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pifa_core::threads::set_num_threads;
use pifa_core::ErrorClass;

#[derive(Parser)]
#[command(name = "pifa", version, about = "Pivoting factorization toolkit for low-rank layers")]
struct Cli {
    /// Matmul threads (defaults to PIFA_THREADS, else 1).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create seeded toy networks, inputs and test matrices.
    Generate(commands::generate::GenerateArgs),
    /// Build a PIFA layer from a low-rank matrix.
    Factorize(commands::factorize::FactorizeArgs),
    /// Compress a dense network layer by layer.
    Compress(commands::compress::CompressArgs),
    /// Reconstruct one layer's low-rank factors from calibration inputs.
    Reconstruct(commands::reconstruct::ReconstructArgs),
    /// Compare two networks on probe inputs.
    Eval(commands::eval::EvalArgs),
    /// Time dense, low-rank and PIFA layers.
    Bench(commands::bench::BenchArgs),
    /// Describe a PFT, PIFL or manifest file.
    Inspect(commands::inspect::InspectArgs),
    /// Run a parameter sweep and write a CSV.
    Sweep(commands::sweep::SweepArgs),
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Validation => 2,
        ErrorClass::Numerical => 3,
        ErrorClass::Io => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        set_num_threads(n);
    }
    let result = match cli.command {
        Command::Generate(a) => commands::generate::run(a),
        Command::Factorize(a) => commands::factorize::run(a),
        Command::Compress(a) => commands::compress::run(a),
        Command::Reconstruct(a) => commands::reconstruct::run(a),
        Command::Eval(a) => commands::eval::run(a),
        Command::Bench(a) => commands::bench::run(a),
        Command::Inspect(a) => commands::inspect::run(a),
        Command::Sweep(a) => commands::sweep::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.class()))
        }
    }
}
