use std::path::{Path, PathBuf};

use clap::Args;
use pifa_core::lowrank::{density_to_rank, truncated_svd_prune, whitened_svd_prune, CountingMode, DensitySpec};
use pifa_core::reconstruct::{
    reconstruct_pair, reconstruction_objective, CalibrationAccumulator, ConditionReport, ReconstructionConfig,
};
use pifa_core::report::write_json;
use pifa_core::tensor::{read_pft, read_pft_any, write_pft};
use pifa_core::{Result, Scalar};
use serde::{Deserialize, Serialize};

use super::compress::UpdateTarget;
use super::dispatch;
use crate::config::{required_path, resolve};
use crate::run::{print_json, RunManifest};

#[derive(Args, Debug, Serialize)]
pub struct ReconstructArgs {
    /// Dense weight (PFT).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    weight: Option<PathBuf>,
    /// Compressed-flow calibration inputs (PFT).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    calib: Option<PathBuf>,
    /// Dense-flow calibration inputs; defaults to --calib.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    dense_calib: Option<PathBuf>,
    /// Target rank; overrides --density.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    rank: Option<usize>,
    /// Remaining-parameter fraction under factor-pair counting.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    density: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    /// both, u or v.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    update: Option<String>,
    /// Initial factors: whitened (default) or svd.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    init: Option<String>,
    /// Output directory for u.pft, vt.pft and report.json.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Init {
    #[default]
    Whitened,
    Svd,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ReconstructConfig {
    weight: Option<PathBuf>,
    calib: Option<PathBuf>,
    dense_calib: Option<PathBuf>,
    rank: Option<usize>,
    density: f64,
    lambda: f64,
    alpha: f64,
    update: UpdateTarget,
    init: Init,
    out: Option<PathBuf>,
}

impl Default for ReconstructConfig {
    fn default() -> Self {
        let rc = ReconstructionConfig::default();
        Self {
            weight: None,
            calib: None,
            dense_calib: None,
            rank: None,
            density: 0.5,
            lambda: rc.lambda,
            alpha: rc.alpha,
            update: UpdateTarget::Both,
            init: Init::Whitened,
            out: None,
        }
    }
}

#[derive(Serialize)]
struct Report {
    m: usize,
    n: usize,
    rank: usize,
    samples: usize,
    objective_before: f64,
    objective_after: f64,
    conditions: ConditionReport,
}

fn reconstruct_typed<T: Scalar>(
    cfg: &ReconstructConfig,
    rc: &ReconstructionConfig,
    weight: &Path,
    calib: &Path,
    out: &Path,
) -> Result<Report> {
    let w = read_pft::<T>(weight)?;
    let x_u = read_pft::<T>(calib)?;
    let x_o = match &cfg.dense_calib {
        Some(p) => read_pft::<T>(p)?,
        None => x_u.clone(),
    };
    let (m, n) = w.shape();
    let rank = match cfg.rank {
        Some(r) => r,
        None => density_to_rank(m, n, DensitySpec::new(cfg.density, CountingMode::SvdLowrank)?)?,
    };
    let mut acc = CalibrationAccumulator::<T>::new(m, n, rc.lambda)?;
    acc.accumulate(&w, &x_o, &x_u)?;
    let init = match cfg.init {
        Init::Whitened => whitened_svd_prune(&w, acc.xxt(), rank, None)?,
        Init::Svd => truncated_svd_prune(&w, rank)?,
    };
    let rec = reconstruct_pair(&acc, &init, &w, rc)?;
    pifa_core::fsio::create_dir_all(out)?;
    write_pft(out.join("u.pft"), rec.factors.u())?;
    write_pft(out.join("vt.pft"), rec.factors.vt())?;
    Ok(Report {
        m,
        n,
        rank,
        samples: acc.samples(),
        objective_before: reconstruction_objective(&w, &init, &x_o, &x_u, rc.lambda)?.as_f64(),
        objective_after: reconstruction_objective(&w, &rec.factors, &x_o, &x_u, rc.lambda)?.as_f64(),
        conditions: rec.conditions,
    })
}

pub fn run(args: ReconstructArgs) -> Result<()> {
    let cfg: ReconstructConfig = resolve(&args, args.config.as_deref())?;
    let mut rc = ReconstructionConfig {
        lambda: cfg.lambda,
        alpha: cfg.alpha,
        ..Default::default()
    };
    cfg.update.apply(&mut rc);
    rc.validate()?;
    let weight = required_path(&cfg.weight, "weight")?;
    let calib = required_path(&cfg.calib, "calib")?;
    let out = required_path(&cfg.out, "out")?;
    let dtype = read_pft_any(&weight)?.dtype();
    let report = dispatch!(dtype, reconstruct_typed(&cfg, &rc, &weight, &calib, &out))?;
    write_json(out.join("report.json"), &report)?;
    RunManifest::new(
        "reconstruct",
        None,
        &cfg,
        vec![out.join("u.pft"), out.join("vt.pft"), out.join("report.json")],
    )
    .write(out.join("run.json"))?;
    print_json(&report)
}
