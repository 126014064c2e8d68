use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use pifa_core::pipeline::{Arm, CompressionPlan, FlowMode, NetworkManifest};
use pifa_core::report::{arm_sweep, condition_sweep, lambda_sweep, write_csv};
use pifa_core::tensor::read_pft;
use pifa_core::{Result, Scalar};
use serde::{Deserialize, Serialize};

use super::compress::{allocation, load_calibration, load_dense, UpdateTarget};
use super::dispatch;
use crate::config::{required_path, resolve};
use crate::run::{beside, print_json, RunManifest};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    /// Mix ratio.
    Lambda,
    /// Calibration sample count (prefixes of --calib).
    Conditions,
    /// Every mode and flow at every density.
    Arms,
}

#[derive(Args, Debug, Serialize)]
pub struct SweepArgs {
    #[arg(value_enum)]
    kind: SweepKind,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    calib: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    probes: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    density: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    densities: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    lambdas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    sizes: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    modes: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    flows: Option<Vec<String>>,
    /// Mode for the lambda and conditions sweeps.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    update: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    /// CSV output.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SweepConfig {
    kind: SweepKind,
    model: Option<PathBuf>,
    calib: Option<PathBuf>,
    probes: Option<PathBuf>,
    density: f64,
    densities: Vec<f64>,
    lambdas: Vec<f64>,
    sizes: Vec<usize>,
    modes: Vec<Arm>,
    flows: Vec<FlowMode>,
    mode: Arm,
    lambda: f64,
    alpha: f64,
    update: UpdateTarget,
    seed: u64,
    out: Option<PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            kind: SweepKind::Lambda,
            model: None,
            calib: None,
            probes: None,
            density: 0.5,
            densities: vec![0.9, 0.7, 0.5, 0.3],
            lambdas: vec![0.0, 0.1, 0.25, 0.5, 0.75, 1.0],
            sizes: vec![16, 32, 64, 128, 256, 512],
            modes: Arm::ALL.to_vec(),
            flows: vec![FlowMode::CompressedFlow, FlowMode::DenseWeightFlow],
            mode: Arm::Mpifa,
            lambda: 0.25,
            alpha: 0.001,
            update: UpdateTarget::Both,
            seed: 0,
            out: None,
        }
    }
}

impl SweepConfig {
    fn plan(&self) -> Result<CompressionPlan> {
        let mut plan = CompressionPlan::new(self.mode);
        plan.reconstruction.lambda = self.lambda;
        plan.reconstruction.alpha = self.alpha;
        self.update.apply(&mut plan.reconstruction);
        plan.validate()?;
        Ok(plan)
    }
}

fn sweep_typed<T: Scalar>(cfg: &SweepConfig, model: &Path, out: &Path) -> Result<usize> {
    let net = load_dense::<T>(model)?;
    let calib = load_calibration(cfg.calib.as_deref(), &net, cfg.mode)?;
    let plan = cfg.plan()?;
    let probes = || -> Result<_> { read_pft::<T>(required_path(&cfg.probes, "probes")?) };
    match cfg.kind {
        SweepKind::Lambda => {
            let alloc = allocation(cfg.density, None, &net.layer_shapes())?;
            let points = lambda_sweep(&net, &calib, &probes()?, &alloc, &plan, &cfg.lambdas)?;
            write_csv(out, &points)?;
            Ok(points.len())
        }
        SweepKind::Conditions => {
            let alloc = allocation(cfg.density, None, &net.layer_shapes())?;
            let points = condition_sweep(&net, &calib, &alloc, &plan, &cfg.sizes)?;
            write_csv(out, &points)?;
            Ok(points.len())
        }
        SweepKind::Arms => {
            let points = arm_sweep(&net, &calib, &probes()?, &plan, &cfg.modes, &cfg.flows, &cfg.densities)?;
            write_csv(out, &points)?;
            Ok(points.len())
        }
    }
}

pub fn run(args: SweepArgs) -> Result<()> {
    let cfg: SweepConfig = resolve(&args, args.config.as_deref())?;
    cfg.plan()?;
    let model = required_path(&cfg.model, "model")?;
    let out = required_path(&cfg.out, "out")?;
    let dtype = NetworkManifest::read(&model)?.dtype;
    let rows = dispatch!(dtype, sweep_typed(&cfg, &model, &out))?;
    RunManifest::new("sweep", Some(cfg.seed), &cfg, vec![out.clone()]).write(beside(&out))?;
    print_json(&serde_json::json!({ "kind": cfg.kind, "rows": rows, "out": out }))
}
