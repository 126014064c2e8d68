use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use pifa_core::pipeline::{
    allocate_densities, compress, load_network, save_network, Arm, CompressionPlan, DensityAllocation, FlowMode,
    LayerProvenance, NetworkManifest, ToyNetwork,
};
use pifa_core::reconstruct::ReconstructionConfig;
use pifa_core::report::write_json;
use pifa_core::tensor::read_pft;
use pifa_core::{DenseMatrix, Error, Result, Scalar};
use serde::{Deserialize, Serialize};

use super::dispatch;
use crate::config::{required_path, resolve};
use crate::run::{print_json, RunManifest};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateTarget {
    #[default]
    Both,
    U,
    V,
}

impl UpdateTarget {
    pub fn apply(self, cfg: &mut ReconstructionConfig) {
        cfg.update_u = self != UpdateTarget::V;
        cfg.update_v = self != UpdateTarget::U;
    }
}

#[derive(Args, Debug, Serialize)]
pub struct CompressArgs {
    /// Dense network manifest.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<PathBuf>,
    /// Calibration inputs (PFT, one column per sample).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    calib: Option<PathBuf>,
    /// Remaining-parameter fraction.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    density: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    /// svd, whitened-svd, w+m or mpifa.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<String>,
    /// compressed or dense-weight.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    flow: Option<String>,
    /// both, u or v.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    update: Option<String>,
    /// Calibration columns per accumulation step.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    chunk: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    jitter: Option<f64>,
    /// Per-layer fractions, combined with the global density and renormalized.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    layer_fractions: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
    /// JSON file with any of the above; flags win.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompressConfig {
    pub model: Option<PathBuf>,
    pub calib: Option<PathBuf>,
    pub density: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub mode: Arm,
    pub flow: FlowMode,
    pub update: UpdateTarget,
    pub chunk: usize,
    pub jitter: Option<f64>,
    pub layer_fractions: Option<Vec<f64>>,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for CompressConfig {
    fn default() -> Self {
        let rc = ReconstructionConfig::default();
        Self {
            model: None,
            calib: None,
            density: 0.5,
            lambda: rc.lambda,
            alpha: rc.alpha,
            mode: Arm::Mpifa,
            flow: FlowMode::CompressedFlow,
            update: UpdateTarget::Both,
            chunk: 16,
            jitter: None,
            layer_fractions: None,
            seed: 0,
            out: None,
        }
    }
}

impl CompressConfig {
    pub fn plan(&self) -> Result<CompressionPlan> {
        let mut reconstruction = ReconstructionConfig {
            lambda: self.lambda,
            alpha: self.alpha,
            ..Default::default()
        };
        self.update.apply(&mut reconstruction);
        let plan = CompressionPlan {
            arm: self.mode,
            reconstruction,
            flow: self.flow,
            chunk: self.chunk,
            jitter: self.jitter,
        };
        plan.validate()?;
        Ok(plan)
    }
}

/// Dense network plus calibration columns, loaded at the manifest's dtype.
pub fn load_dense<T: Scalar>(model: &Path) -> Result<ToyNetwork<T>> {
    load_network::<T>(model)?
        .to_toy()
        .ok_or_else(|| Error::Invalid(format!("{}: expected a dense network", model.display())))
}

pub fn load_calibration<T: Scalar>(path: Option<&Path>, net: &ToyNetwork<T>, arm: Arm) -> Result<DenseMatrix<T>> {
    use pifa_core::pipeline::Network;
    match path {
        Some(p) => read_pft::<T>(p),
        None if arm == Arm::Svd => Ok(DenseMatrix::zeros(net.input_dim(), 0)),
        None => Err(Error::Invalid(format!("--calib is required for mode {}", arm.name()))),
    }
}

pub fn allocation(cfg_density: f64, fractions: Option<&[f64]>, shapes: &[(usize, usize)]) -> Result<DensityAllocation> {
    match fractions {
        None => DensityAllocation::uniform(cfg_density, shapes),
        Some(f) => {
            let tags = vec!["linear".to_string(); shapes.len()];
            let types = BTreeMap::from([("linear".to_string(), cfg_density)]);
            allocate_densities(cfg_density, &types, &tags, f, shapes)
        }
    }
}

#[derive(Serialize)]
struct Budget {
    global_density: f64,
    layer_densities: Vec<f64>,
    params: u64,
    dense_params: u64,
    achieved_density: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    manifest: PathBuf,
    budget: Budget,
    layers: Vec<&'a LayerProvenance>,
}

fn compress_typed<T: Scalar>(cfg: &CompressConfig, model: &Path, out: &Path) -> Result<()> {
    let net = load_dense::<T>(model)?;
    let calib = load_calibration(cfg.calib.as_deref(), &net, cfg.mode)?;
    let alloc = allocation(cfg.density, cfg.layer_fractions.as_deref(), &net.layer_shapes())?;
    let compressed = compress(&net, &calib, &alloc, &cfg.plan()?)?;
    let manifest = save_network(out, &compressed)?;
    let records: Vec<&LayerProvenance> = compressed.provenance().iter().flatten().collect();
    let conditions: Vec<_> = records.iter().map(|p| (p.layer, p.conditions)).collect();
    write_json(out.join("conditions.json"), &conditions)?;
    let params = compressed.param_count();
    let dense_params = net.param_count();
    let summary = Summary {
        manifest: manifest.clone(),
        budget: Budget {
            global_density: cfg.density,
            layer_densities: alloc.layer_densities.clone(),
            params,
            dense_params,
            achieved_density: params as f64 / dense_params as f64,
        },
        layers: records,
    };
    RunManifest::new(
        "compress",
        Some(cfg.seed),
        cfg,
        vec![manifest, out.join("conditions.json")],
    )
    .write(out.join("run.json"))?;
    print_json(&summary)
}

pub fn run(args: CompressArgs) -> Result<()> {
    let cfg: CompressConfig = resolve(&args, args.config.as_deref())?;
    cfg.plan()?;
    let model = required_path(&cfg.model, "model")?;
    let out = required_path(&cfg.out, "out")?;
    let dtype = NetworkManifest::read(&model)?.dtype;
    dispatch!(dtype, compress_typed(&cfg, &model, &out))
}
