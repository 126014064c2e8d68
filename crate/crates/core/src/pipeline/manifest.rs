//! Network container: a JSON manifest next to one tensor file per factor.
//!
//! ```json
//! {
//!   "format": "pifa-network/1",
//!   "dtype": "f64",
//!   "activation": "relu",
//!   "layers": [
//!     { "kind": "dense", "m": 64, "n": 64, "rank": 64, "files": ["layer0.pft"] },
//!     { "kind": "lowrank", "m": 64, "n": 64, "rank": 20, "files": ["layer1.u.pft", "layer1.vt.pft"] },
//!     { "kind": "pifa", "m": 64, "n": 64, "rank": 26, "files": ["layer2.pifl"], "provenance": { ... } }
//!   ]
//! }
//! ```
//!
//! File names are relative to the manifest's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::compress::LayerProvenance;
use super::network::{Activation, CompressedLayer, CompressedNetwork, Network};
use crate::error::{Error, Result};
use crate::lowrank::LowRankFactors;
use crate::pifa::{read_pifa, write_pifa};
use crate::scalar::{DType, Scalar};
use crate::tensor::{read_pft, write_pft};

pub const MANIFEST_FORMAT: &str = "pifa-network/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Dense,
    Lowrank,
    Pifa,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerEntry {
    pub kind: LayerKind,
    pub m: usize,
    pub n: usize,
    pub rank: usize,
    pub files: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<LayerProvenance>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkManifest {
    pub format: String,
    pub dtype: DType,
    pub activation: Activation,
    pub layers: Vec<LayerEntry>,
}

impl NetworkManifest {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let manifest: NetworkManifest = serde_json::from_slice(&crate::fsio::read(path)?)?;
        if manifest.format != MANIFEST_FORMAT {
            return Err(Error::Format {
                offset: 0,
                detail: format!("manifest format '{}', expected '{MANIFEST_FORMAT}'", manifest.format),
            });
        }
        Ok(manifest)
    }
}

/// Writes `manifest.json` and the layer files into `dir` (created if
/// missing) and returns the manifest path.
pub fn save_network<T: Scalar>(dir: impl AsRef<Path>, net: &CompressedNetwork<T>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    crate::fsio::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(net.layers().len());
    for (i, (layer, provenance)) in net.layers().iter().zip(net.provenance()).enumerate() {
        let (m, n) = layer.shape();
        let (kind, files) = match layer {
            CompressedLayer::Dense(w) => {
                let f = format!("layer{i}.pft");
                write_pft(dir.join(&f), w)?;
                (LayerKind::Dense, vec![f])
            }
            CompressedLayer::LowRank(factors) => {
                let fu = format!("layer{i}.u.pft");
                let fv = format!("layer{i}.vt.pft");
                write_pft(dir.join(&fu), factors.u())?;
                write_pft(dir.join(&fv), factors.vt())?;
                (LayerKind::Lowrank, vec![fu, fv])
            }
            CompressedLayer::Pifa(p) => {
                let f = format!("layer{i}.pifl");
                write_pifa(dir.join(&f), p)?;
                (LayerKind::Pifa, vec![f])
            }
        };
        entries.push(LayerEntry {
            kind,
            m,
            n,
            rank: layer.rank(),
            files,
            provenance: provenance.clone(),
        });
    }
    let manifest = NetworkManifest {
        format: MANIFEST_FORMAT.to_string(),
        dtype: T::DTYPE,
        activation: net.activation(),
        layers: entries,
    };
    let path = dir.join("manifest.json");
    crate::fsio::write(&path, serde_json::to_vec_pretty(&manifest)?)?;
    Ok(path)
}

fn expect_files(i: usize, entry: &LayerEntry, count: usize) -> Result<()> {
    if entry.files.len() != count {
        return Err(Error::Format {
            offset: 0,
            detail: format!(
                "layer {i}: {:?} layer lists {} files, expected {count}",
                entry.kind,
                entry.files.len()
            ),
        });
    }
    Ok(())
}

pub fn load_network<T: Scalar>(manifest_path: impl AsRef<Path>) -> Result<CompressedNetwork<T>> {
    let manifest_path = manifest_path.as_ref();
    let manifest = NetworkManifest::read(manifest_path)?;
    if manifest.dtype != T::DTYPE {
        return Err(Error::Format {
            offset: 0,
            detail: format!(
                "manifest holds {} tensors, requested {}",
                manifest.dtype.name(),
                T::DTYPE.name()
            ),
        });
    }
    let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mut layers = Vec::with_capacity(manifest.layers.len());
    let mut provenance = Vec::with_capacity(manifest.layers.len());
    for (i, entry) in manifest.layers.iter().enumerate() {
        let layer = match entry.kind {
            LayerKind::Dense => {
                expect_files(i, entry, 1)?;
                CompressedLayer::Dense(read_pft(dir.join(&entry.files[0])).map_err(|e| e.at_layer(i))?)
            }
            LayerKind::Lowrank => {
                expect_files(i, entry, 2)?;
                let u = read_pft(dir.join(&entry.files[0])).map_err(|e| e.at_layer(i))?;
                let vt = read_pft(dir.join(&entry.files[1])).map_err(|e| e.at_layer(i))?;
                CompressedLayer::LowRank(LowRankFactors::new(u, vt).map_err(|e| e.at_layer(i))?)
            }
            LayerKind::Pifa => {
                expect_files(i, entry, 1)?;
                CompressedLayer::Pifa(read_pifa(dir.join(&entry.files[0])).map_err(|e| e.at_layer(i))?)
            }
        };
        if layer.shape() != (entry.m, entry.n) || layer.rank() != entry.rank {
            return Err(Error::Format {
                offset: 0,
                detail: format!(
                    "layer {i}: manifest says {}x{} rank {}, files hold {:?} rank {}",
                    entry.m,
                    entry.n,
                    entry.rank,
                    layer.shape(),
                    layer.rank()
                ),
            });
        }
        layers.push(layer);
        provenance.push(entry.provenance.clone());
    }
    CompressedNetwork::new(layers, manifest.activation, provenance)
}
