use std::path::{Path, PathBuf};

use clap::Args;
use pifa_core::pipeline::{evaluate, load_network, EvalReport, NetworkManifest};
use pifa_core::report::write_json;
use pifa_core::tensor::read_pft;
use pifa_core::{Error, Result, Scalar};
use serde::Serialize;

use super::dispatch;
use crate::run::{beside, print_json, RunManifest};

#[derive(Args, Debug, Serialize)]
pub struct EvalArgs {
    /// Reference network manifest.
    #[arg(long)]
    a: PathBuf,
    /// Network under test.
    #[arg(long)]
    b: PathBuf,
    /// Probe inputs (PFT).
    #[arg(long)]
    probes: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn eval_typed<T: Scalar>(a: &Path, b: &Path, probes: &Path) -> Result<EvalReport> {
    let probes = read_pft::<T>(probes)?;
    evaluate(&load_network::<T>(a)?, &load_network::<T>(b)?, &probes)
}

pub fn run(args: EvalArgs) -> Result<()> {
    let dtype = NetworkManifest::read(&args.a)?.dtype;
    let other = NetworkManifest::read(&args.b)?.dtype;
    if dtype != other {
        return Err(Error::Invalid(format!(
            "networks differ in dtype: {} vs {}",
            dtype.name(),
            other.name()
        )));
    }
    let report = dispatch!(dtype, eval_typed(&args.a, &args.b, &args.probes))?;
    write_json(&args.out, &report)?;
    RunManifest::new("eval", None, &args, vec![args.out.clone()]).write(beside(&args.out))?;
    print_json(&report)
}
