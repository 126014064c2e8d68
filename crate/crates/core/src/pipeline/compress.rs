use serde::{Deserialize, Serialize};

use super::density::DensityAllocation;
use super::network::{CompressedLayer, CompressedNetwork, Network, ToyNetwork};
use crate::error::{Error, Result};
use crate::lowrank::{density_to_rank, truncated_svd_prune, whitened_svd_prune, CountingMode, DensitySpec};
use crate::pifa::pifa_build_factors;
use crate::reconstruct::{reconstruct_pair, CalibrationAccumulator, ConditionReport, ReconstructionConfig};
use crate::scalar::Scalar;
use crate::tensor::DenseMatrix;

/// Which stages run on every layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Arm {
    /// Plain truncated SVD; ignores calibration data.
    #[serde(rename = "svd")]
    Svd,
    /// Activation-whitened truncated SVD.
    #[serde(rename = "whitened-svd")]
    WhitenedSvd,
    /// Whitened SVD followed by online reconstruction.
    #[serde(rename = "w+m")]
    WhitenedReconstruct,
    /// Whitened SVD, reconstruction, then PIFA at the PIFA-counted rank.
    #[serde(rename = "mpifa")]
    Mpifa,
}

impl Arm {
    pub const ALL: [Arm; 4] = [Arm::Svd, Arm::WhitenedSvd, Arm::WhitenedReconstruct, Arm::Mpifa];

    pub fn name(self) -> &'static str {
        match self {
            Arm::Svd => "svd",
            Arm::WhitenedSvd => "whitened-svd",
            Arm::WhitenedReconstruct => "w+m",
            Arm::Mpifa => "mpifa",
        }
    }

    pub fn counting_mode(self) -> CountingMode {
        match self {
            Arm::Mpifa => CountingMode::Pifa,
            _ => CountingMode::SvdLowrank,
        }
    }

    fn whitens(self) -> bool {
        self != Arm::Svd
    }

    fn reconstructs(self) -> bool {
        matches!(self, Arm::WhitenedReconstruct | Arm::Mpifa)
    }
}

impl std::str::FromStr for Arm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Arm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown mode '{s}' (svd, whitened-svd, w+m, mpifa)")))
    }
}

/// Where the next layer's compressed-flow input comes from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowMode {
    /// The compressed layer's own output.
    #[default]
    #[serde(alias = "compressed")]
    CompressedFlow,
    /// The dense weight applied to the compressed-flow input.
    #[serde(alias = "dense-weight")]
    DenseWeightFlow,
}

impl std::str::FromStr for FlowMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "compressed" | "compressed_flow" => Ok(FlowMode::CompressedFlow),
            "dense-weight" | "dense_weight_flow" => Ok(FlowMode::DenseWeightFlow),
            other => Err(Error::Invalid(format!(
                "unknown flow '{other}' (compressed, dense-weight)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompressionPlan {
    pub arm: Arm,
    pub reconstruction: ReconstructionConfig,
    pub flow: FlowMode,
    /// Calibration columns folded into the accumulator per step.
    pub chunk: usize,
    /// Cholesky jitter for whitening; `None` picks a trace-scaled default.
    pub jitter: Option<f64>,
}

impl CompressionPlan {
    pub fn new(arm: Arm) -> Self {
        Self {
            arm,
            reconstruction: ReconstructionConfig::default(),
            flow: FlowMode::default(),
            chunk: 16,
            jitter: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.reconstruction.validate()?;
        if self.chunk == 0 {
            return Err(Error::Invalid("calibration chunk size must be positive".into()));
        }
        if let Some(j) = self.jitter {
            if !(j >= 0.0 && j.is_finite()) {
                return Err(Error::Invalid(format!("jitter must be finite and >= 0, got {j}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerProvenance {
    pub layer: usize,
    pub method: Arm,
    pub flow: FlowMode,
    pub density: f64,
    pub counting_mode: CountingMode,
    pub rank: usize,
    pub param_count: u64,
    pub dense_param_count: u64,
    pub calibration_samples: usize,
    pub conditions: Option<ConditionReport>,
}

fn accumulate_chunked<T: Scalar>(
    w: &DenseMatrix<T>,
    x_o: &DenseMatrix<T>,
    x_u: &DenseMatrix<T>,
    plan: &CompressionPlan,
) -> Result<CalibrationAccumulator<T>> {
    let mut acc = CalibrationAccumulator::new(w.rows(), w.cols(), plan.reconstruction.lambda)?;
    let total = x_u.cols();
    let mut start = 0;
    while start < total {
        let end = (start + plan.chunk).min(total);
        acc.accumulate(w, &x_o.col_range(start, end), &x_u.col_range(start, end))?;
        start = end;
    }
    Ok(acc)
}

fn compress_layer<T: Scalar>(
    layer: usize,
    w: &DenseMatrix<T>,
    density: f64,
    x_o: &DenseMatrix<T>,
    x_u: &DenseMatrix<T>,
    plan: &CompressionPlan,
) -> Result<(CompressedLayer<T>, LayerProvenance)> {
    let (m, n) = w.shape();
    let mode = plan.arm.counting_mode();
    let rank = density_to_rank(m, n, DensitySpec::new(density, mode)?)?;
    let mut conditions = None;
    let factors = if plan.arm.whitens() {
        let acc = accumulate_chunked(w, x_o, x_u, plan)?;
        let jitter = plan.jitter.map(T::of);
        let pruned = whitened_svd_prune(w, acc.xxt(), rank, jitter)?;
        if plan.arm.reconstructs() {
            let rec = reconstruct_pair(&acc, &pruned, w, &plan.reconstruction)?;
            conditions = Some(rec.conditions);
            rec.factors
        } else {
            pruned
        }
    } else {
        truncated_svd_prune(w, rank)?
    };
    let compressed = if plan.arm == Arm::Mpifa {
        CompressedLayer::Pifa(pifa_build_factors(&factors)?)
    } else {
        CompressedLayer::LowRank(factors)
    };
    let provenance = LayerProvenance {
        layer,
        method: plan.arm,
        flow: plan.flow,
        density,
        counting_mode: mode,
        rank,
        param_count: compressed.param_count(),
        dense_param_count: (m * n) as u64,
        calibration_samples: x_u.cols(),
        conditions,
    };
    Ok((compressed, provenance))
}

/// Compresses every layer in order while propagating the dense flow `X_o`
/// and the compressed flow `X_u` from the same calibration columns.
pub fn compress<T: Scalar>(
    net: &ToyNetwork<T>,
    calibration: &DenseMatrix<T>,
    allocation: &DensityAllocation,
    plan: &CompressionPlan,
) -> Result<CompressedNetwork<T>> {
    plan.validate()?;
    if calibration.rows() != net.input_dim() {
        return Err(Error::shape(
            "compress",
            format!(
                "calibration has {} rows, network input is {}",
                calibration.rows(),
                net.input_dim()
            ),
        ));
    }
    if plan.arm.whitens() && calibration.cols() == 0 {
        return Err(Error::Invalid(format!(
            "mode {} needs calibration columns",
            plan.arm.name()
        )));
    }
    if allocation.layer_densities.len() != net.depth() {
        return Err(Error::Invalid(format!(
            "{} layer densities for {} layers",
            allocation.layer_densities.len(),
            net.depth()
        )));
    }
    let act = net.activation();
    let mut x_o = calibration.clone();
    let mut x_u = calibration.clone();
    let mut layers = Vec::with_capacity(net.depth());
    let mut provenance = Vec::with_capacity(net.depth());
    for (i, (w, &density)) in net.layers().iter().zip(&allocation.layer_densities).enumerate() {
        let (layer, record) = compress_layer(i, w, density, &x_o, &x_u, plan).map_err(|e| e.at_layer(i))?;
        if i + 1 < net.depth() {
            let next_u = match plan.flow {
                FlowMode::CompressedFlow => layer.forward(&x_u),
                FlowMode::DenseWeightFlow => w.matmul(&x_u),
            }
            .map_err(|e| e.at_layer(i))?;
            x_o = act.apply(w.matmul(&x_o)?);
            x_u = act.apply(next_u);
        }
        layers.push(layer);
        provenance.push(Some(record));
    }
    CompressedNetwork::new(layers, act, provenance)
}
