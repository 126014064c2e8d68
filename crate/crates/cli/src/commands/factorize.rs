use std::fs;
use std::path::PathBuf;

use clap::Args;
use pifa_core::decomp::DEFAULT_RANK_TOL;
use pifa_core::pifa::{lowrank_param_count, pifa_build_with_tol, write_pifa};
use pifa_core::tensor::{read_pft_any, AnyMatrix};
use pifa_core::{DenseMatrix, Result, Scalar};
use serde::Serialize;

use crate::run::{beside, print_json, RunManifest};

#[derive(Args, Debug, Serialize)]
pub struct FactorizeArgs {
    /// Input matrix (PFT).
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    rank: usize,
    /// Output layer (PIFL).
    #[arg(long)]
    out: PathBuf,
    /// Pivot rank tolerance relative to the first pivot.
    #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
    tol: f64,
}

#[derive(Serialize)]
struct Summary {
    m: usize,
    n: usize,
    rank: usize,
    dtype: pifa_core::DType,
    /// `r(m + n) - r^2 + r`.
    param_count: u64,
    lowrank_param_count: u64,
    dense_param_count: u64,
    bytes_measured: u64,
    pivots: Vec<usize>,
    rel_reconstruction_error: f64,
    out: PathBuf,
}

fn factorize<T: Scalar>(w: &DenseMatrix<T>, args: &FactorizeArgs) -> Result<Summary> {
    let layer = pifa_build_with_tol(w, args.rank, T::of(args.tol))?;
    write_pifa(&args.out, &layer)?;
    let (m, n) = w.shape();
    let norm = w.frobenius_norm().as_f64();
    let err = layer.to_dense().sub(w)?.frobenius_norm().as_f64();
    Ok(Summary {
        m,
        n,
        rank: layer.rank(),
        dtype: T::DTYPE,
        param_count: layer.param_count(),
        lowrank_param_count: lowrank_param_count(m, n, layer.rank()),
        dense_param_count: (m * n) as u64,
        bytes_measured: fs::metadata(&args.out)?.len(),
        pivots: layer.pivots().to_vec(),
        rel_reconstruction_error: if norm > 0.0 { err / norm } else { err },
        out: args.out.clone(),
    })
}

pub fn run(args: FactorizeArgs) -> Result<()> {
    let summary = match read_pft_any(&args.input)? {
        AnyMatrix::F32(w) => factorize(&w, &args)?,
        AnyMatrix::F64(w) => factorize(&w, &args)?,
    };
    RunManifest::new("factorize", None, &args, vec![args.out.clone()]).write(beside(&args.out))?;
    print_json(&summary)
}
