use std::path::PathBuf;

use clap::{Args, Subcommand};
use pifa_core::pipeline::{
    random_network, save_network, Activation, CompressedNetwork, InputDistribution, NetworkSpec,
};
use pifa_core::tensor::write_pft;
use pifa_core::{DType, Error, Matrix, Result, Scalar, SeededRng};
use serde::Serialize;

use super::dispatch;
use crate::run::{beside, print_json, RunManifest};

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[command(subcommand)]
    what: Target,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "target", rename_all = "lowercase")]
enum Target {
    /// Dense toy network with decaying singular spectra.
    Network {
        /// Layer widths, input first.
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long, default_value = "relu")]
        activation: String,
        #[arg(long, default_value_t = 0.5)]
        decay: f64,
        #[arg(long, default_value = "f64")]
        dtype: DType,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory for the manifest and layer files.
        #[arg(long)]
        out: PathBuf,
    },
    /// Gaussian input columns with an anisotropic covariance.
    Inputs {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        cols: usize,
        /// Variance falloff along the covariance basis (0 is isotropic).
        #[arg(long, default_value_t = 1.0)]
        aniso: f64,
        /// Seed of the covariance; share it between calibration and probes.
        #[arg(long, default_value_t = 0)]
        dist_seed: u64,
        /// Re-rotate the covariance with this seed for a shifted distribution.
        #[arg(long)]
        shift_seed: Option<u64>,
        #[arg(long, default_value = "f64")]
        dtype: DType,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Random matrix of exact rank.
    Matrix {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long)]
        rank: usize,
        #[arg(long, default_value = "f64")]
        dtype: DType,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Two-layer 64-wide toy network with calibration and probe sets.
    Bundle {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 128)]
        calib_cols: usize,
        #[arg(long, default_value_t = 256)]
        probe_cols: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn write_network<T: Scalar>(spec: &NetworkSpec, seed: u64, out: &PathBuf) -> Result<PathBuf> {
    let net = random_network::<T>(spec, &mut SeededRng::new(seed))?;
    save_network(out, &CompressedNetwork::from(net))
}

fn write_inputs<T: Scalar>(dist: &InputDistribution, seed: u64, cols: usize, out: &PathBuf) -> Result<()> {
    write_pft(out, &dist.sample::<T>(&mut SeededRng::new(seed), cols))
}

fn write_matrix<T: Scalar>(m: &Matrix, out: &PathBuf) -> Result<()> {
    write_pft(out, &m.cast::<T>())
}

fn distribution(dim: usize, aniso: f64, dist_seed: u64, shift_seed: Option<u64>) -> Result<InputDistribution> {
    let base = InputDistribution::anisotropic(&mut SeededRng::new(dist_seed), dim, aniso)?;
    match shift_seed {
        Some(s) => base.shifted(&mut SeededRng::new(s)),
        None => Ok(base),
    }
}

pub fn run(args: GenerateArgs) -> Result<()> {
    let outputs = match &args.what {
        Target::Network {
            dims,
            activation,
            decay,
            dtype,
            seed,
            out,
        } => {
            let spec = NetworkSpec {
                dims: dims.clone(),
                activation: activation.parse::<Activation>()?,
                spectral_decay: *decay,
            };
            vec![dispatch!(*dtype, write_network(&spec, *seed, out))?]
        }
        Target::Inputs {
            dim,
            cols,
            aniso,
            dist_seed,
            shift_seed,
            dtype,
            seed,
            out,
        } => {
            let dist = distribution(*dim, *aniso, *dist_seed, *shift_seed)?;
            dispatch!(*dtype, write_inputs(&dist, *seed, *cols, out))?;
            vec![out.clone()]
        }
        Target::Matrix {
            rows,
            cols,
            rank,
            dtype,
            seed,
            out,
        } => {
            if *rank > (*rows).min(*cols) {
                return Err(Error::Invalid(format!("rank {rank} exceeds min({rows}, {cols})")));
            }
            let mut rng = SeededRng::new(*seed);
            let m = rng.gaussian::<f64>(*rows, *rank).matmul(&rng.gaussian(*rank, *cols))?;
            dispatch!(*dtype, write_matrix(&m, out))?;
            vec![out.clone()]
        }
        Target::Bundle {
            seed,
            calib_cols,
            probe_cols,
            out,
        } => {
            let spec = NetworkSpec::new(vec![64, 64, 64], Activation::Relu);
            let mut rng = SeededRng::new(*seed);
            let net = random_network::<f64>(&spec, &mut rng.fork(0))?;
            let dist = InputDistribution::anisotropic(&mut rng.fork(1), 64, 1.0)?;
            let manifest = save_network(out, &CompressedNetwork::from(net))?;
            let calib = out.join("calib.pft");
            let probes = out.join("probes.pft");
            write_pft(&calib, &dist.sample::<f64>(&mut rng.fork(2), *calib_cols))?;
            write_pft(&probes, &dist.sample::<f64>(&mut rng.fork(3), *probe_cols))?;
            vec![manifest, calib, probes]
        }
    };
    let seed = match &args.what {
        Target::Network { seed, .. }
        | Target::Inputs { seed, .. }
        | Target::Matrix { seed, .. }
        | Target::Bundle { seed, .. } => *seed,
    };
    let run_path = match &args.what {
        Target::Network { out, .. } | Target::Bundle { out, .. } => out.join("run.json"),
        Target::Inputs { out, .. } | Target::Matrix { out, .. } => beside(out),
    };
    RunManifest::new("generate", Some(seed), &args.what, outputs.clone()).write(&run_path)?;
    print_json(&outputs)
}
