use std::path::PathBuf;

use clap::Args;
use pifa_core::bench::{memory_model, LayerKind};
use pifa_core::pifa::{decode_pifa, lowrank_param_count, PifaLayer, PIFL_MAGIC};
use pifa_core::pipeline::{LayerEntry, NetworkManifest};
use pifa_core::tensor::pft::{decode_pft_any, PFT_MAGIC};
use pifa_core::tensor::AnyMatrix;
use pifa_core::{DType, Error, Result, Scalar};
use serde::Serialize;

use crate::run::print_json;

#[derive(Args, Debug, Serialize)]
pub struct InspectArgs {
    /// A PFT tensor, PIFL layer or network manifest.
    path: PathBuf,
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Description {
    Tensor {
        dtype: DType,
        rows: usize,
        cols: usize,
        frobenius_norm: f64,
        bytes: u64,
    },
    Pifa {
        dtype: DType,
        m: usize,
        n: usize,
        rank: usize,
        pivots: Vec<usize>,
        param_count: u64,
        lowrank_param_count: u64,
        dense_param_count: u64,
        bytes_model: u64,
        bytes: u64,
    },
    Manifest {
        dtype: DType,
        activation: pifa_core::pipeline::Activation,
        layers: Vec<LayerEntry>,
    },
}

fn describe_pifa<T: Scalar>(p: &PifaLayer<T>, bytes: u64) -> Description {
    let (m, n, r) = (p.m(), p.n(), p.rank());
    Description::Pifa {
        dtype: T::DTYPE,
        m,
        n,
        rank: r,
        pivots: p.pivots().to_vec(),
        param_count: p.param_count(),
        lowrank_param_count: lowrank_param_count(m, n, r),
        dense_param_count: (m * n) as u64,
        bytes_model: memory_model(LayerKind::Pifa, m, n, r, T::DTYPE.size()),
        bytes,
    }
}

pub fn run(args: InspectArgs) -> Result<()> {
    let bytes = pifa_core::fsio::read(&args.path)?;
    let size = bytes.len() as u64;
    let description = if bytes.starts_with(PFT_MAGIC) {
        let m = decode_pft_any(&bytes)?;
        let (rows, cols) = m.shape();
        Description::Tensor {
            dtype: m.dtype(),
            rows,
            cols,
            frobenius_norm: match &m {
                AnyMatrix::F32(x) => x.frobenius_norm() as f64,
                AnyMatrix::F64(x) => x.frobenius_norm(),
            },
            bytes: size,
        }
    } else if bytes.starts_with(PIFL_MAGIC) {
        match bytes.get(4).copied().and_then(DType::from_code) {
            Some(DType::F32) => describe_pifa(&decode_pifa::<f32>(&bytes)?, size),
            Some(DType::F64) => describe_pifa(&decode_pifa::<f64>(&bytes)?, size),
            None => {
                return Err(Error::Format {
                    offset: 4,
                    detail: "unknown dtype code".into(),
                })
            }
        }
    } else if bytes.first() == Some(&b'{') {
        let manifest = NetworkManifest::read(&args.path)?;
        Description::Manifest {
            dtype: manifest.dtype,
            activation: manifest.activation,
            layers: manifest.layers,
        }
    } else {
        return Err(Error::Format {
            offset: 0,
            detail: format!("{}: not a PFT, PIFL or manifest file", args.path.display()),
        });
    };
    print_json(&description)
}
