//! Sweeps over the compression pipeline and their CSV/JSON emitters.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bench::BenchRecord;
use crate::error::{Error, Result};
use crate::pipeline::{compress, evaluate, Arm, CompressionPlan, DensityAllocation, FlowMode, ToyNetwork};
use crate::scalar::Scalar;
use crate::tensor::DenseMatrix;

/// Header plus one row per item, columns in field order.
pub fn write_csv<R: Serialize>(path: impl AsRef<Path>, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    crate::fsio::write(path, bytes)
}

pub fn write_json<V: Serialize + ?Sized>(path: impl AsRef<Path>, value: &V) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    crate::fsio::write(path, text)?;
    Ok(())
}

pub fn write_bench_csv(path: impl AsRef<Path>, records: &[BenchRecord]) -> Result<()> {
    write_csv(path, records)
}

pub fn read_bench_csv(path: impl AsRef<Path>) -> Result<Vec<BenchRecord>> {
    let bytes = crate::fsio::read(path)?;
    let mut rd = csv::Reader::from_reader(bytes.as_slice());
    Ok(rd.deserialize().collect::<std::result::Result<Vec<_>, _>>()?)
}

/// Fraction of consecutive steps where the value does not go up.
pub fn non_increasing_fraction(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 1.0;
    }
    let steps = values.windows(2).filter(|w| w[1] <= w[0]).count();
    steps as f64 / (values.len() - 1) as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaPoint {
    pub lambda: f64,
    pub mse: f64,
    pub rel_frobenius: f64,
    /// Relative Frobenius distance of the compressed weights from those of
    /// the first lambda in the sweep, summed over layers.
    pub weight_shift: f64,
}

fn dense_weights<T: Scalar>(net: &crate::pipeline::CompressedNetwork<T>) -> Vec<DenseMatrix<T>> {
    net.layers().iter().map(|l| l.to_dense()).collect()
}

fn relative_shift<T: Scalar>(a: &[DenseMatrix<T>], b: &[DenseMatrix<T>]) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in a.iter().zip(b) {
        num += x.sub(y)?.frobenius_norm().as_f64().powi(2);
        den += y.frobenius_norm().as_f64().powi(2);
    }
    Ok(if den > 0.0 { (num / den).sqrt() } else { num.sqrt() })
}

/// Compresses once per mix ratio, everything else fixed.
pub fn lambda_sweep<T: Scalar>(
    net: &ToyNetwork<T>,
    calibration: &DenseMatrix<T>,
    probes: &DenseMatrix<T>,
    allocation: &DensityAllocation,
    plan: &CompressionPlan,
    lambdas: &[f64],
) -> Result<Vec<LambdaPoint>> {
    let mut reference: Option<Vec<DenseMatrix<T>>> = None;
    let mut points = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let mut p = plan.clone();
        p.reconstruction.lambda = lambda;
        let compressed = compress(net, calibration, allocation, &p)?;
        let eval = evaluate(net, &compressed, probes)?;
        let weights = dense_weights(&compressed);
        let weight_shift = match &reference {
            Some(r) => relative_shift(&weights, r)?,
            None => 0.0,
        };
        reference.get_or_insert(weights);
        points.push(LambdaPoint {
            lambda,
            mse: eval.mse,
            rel_frobenius: eval.rel_frobenius,
            weight_shift,
        });
    }
    Ok(points)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionPoint {
    pub samples: usize,
    pub layer: usize,
    pub inner_u: f64,
    pub gram: f64,
    pub gram_regularized: f64,
}

/// Compresses on the first `s` columns of `pool` for each `s` in `sizes`
/// and collects the per-layer condition diagnostics.
pub fn condition_sweep<T: Scalar>(
    net: &ToyNetwork<T>,
    pool: &DenseMatrix<T>,
    allocation: &DensityAllocation,
    plan: &CompressionPlan,
    sizes: &[usize],
) -> Result<Vec<ConditionPoint>> {
    if !matches!(plan.arm, Arm::WhitenedReconstruct | Arm::Mpifa) {
        return Err(Error::Invalid(format!(
            "condition sweep needs a reconstructing mode, got {}",
            plan.arm.name()
        )));
    }
    let mut points = Vec::new();
    for &samples in sizes {
        if samples == 0 || samples > pool.cols() {
            return Err(Error::Invalid(format!(
                "sample size {samples} outside 1..={}",
                pool.cols()
            )));
        }
        let compressed = compress(net, &pool.col_range(0, samples), allocation, plan)?;
        for record in compressed.provenance().iter().flatten() {
            if let Some(c) = record.conditions {
                points.push(ConditionPoint {
                    samples,
                    layer: record.layer,
                    inner_u: c.inner_u,
                    gram: c.gram,
                    gram_regularized: c.gram_regularized,
                });
            }
        }
    }
    Ok(points)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmPoint {
    pub arm: Arm,
    pub flow: FlowMode,
    pub density: f64,
    pub rank_total: usize,
    pub params: u64,
    pub mse: f64,
    pub rel_frobenius: f64,
}

/// Every `(arm, flow, density)` combination against the dense network,
/// with uniform per-layer density.
pub fn arm_sweep<T: Scalar>(
    net: &ToyNetwork<T>,
    calibration: &DenseMatrix<T>,
    probes: &DenseMatrix<T>,
    base: &CompressionPlan,
    arms: &[Arm],
    flows: &[FlowMode],
    densities: &[f64],
) -> Result<Vec<ArmPoint>> {
    let mut points = Vec::new();
    for &density in densities {
        let allocation = DensityAllocation::uniform(density, &net.layer_shapes())?;
        for &arm in arms {
            for &flow in flows {
                let plan = CompressionPlan {
                    arm,
                    flow,
                    ..base.clone()
                };
                let compressed = compress(net, calibration, &allocation, &plan)?;
                let eval = evaluate(net, &compressed, probes)?;
                points.push(ArmPoint {
                    arm,
                    flow,
                    density,
                    rank_total: compressed.layers().iter().map(|l| l.rank()).sum(),
                    params: compressed.param_count(),
                    mse: eval.mse,
                    rel_frobenius: eval.rel_frobenius,
                });
            }
        }
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use std::fs;

    use super::*;
    use crate::bench::{run_bench, BenchSuite, LayerKind, BENCH_CSV_COLUMNS};
    use crate::pipeline::{random_network, Activation, InputDistribution, NetworkSpec};
    use crate::tensor::SeededRng;

    #[test]
    fn fraction_counts_steps() {
        assert_eq!(non_increasing_fraction(&[3.0, 2.0, 2.0, 5.0, 1.0]), 0.75);
        assert_eq!(non_increasing_fraction(&[f64::INFINITY, f64::INFINITY, 4.0]), 1.0);
        assert_eq!(non_increasing_fraction(&[1.0]), 1.0);
    }

    #[test]
    fn bench_csv_header_is_fixed() {
        let suite = BenchSuite {
            shapes: vec![(16, 12)],
            batch: 4,
            trials: 1,
            kinds: vec![LayerKind::Dense, LayerKind::Pifa],
            ..Default::default()
        };
        let out = run_bench(&suite).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bench.csv");
        write_bench_csv(&path, &out.records).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), BENCH_CSV_COLUMNS.join(","));
        assert!(text.lines().nth(1).unwrap().starts_with("dense,16,12,12,4,f32,"));
        assert_eq!(read_bench_csv(&path).unwrap(), out.records);
    }

    #[test]
    fn lambda_sweep_moves_weights() {
        let mut rng = SeededRng::new(41);
        let net = random_network::<f64>(&NetworkSpec::new(vec![12, 12, 12], Activation::Relu), &mut rng).unwrap();
        let dist = InputDistribution::anisotropic(&mut rng, 12, 1.0).unwrap();
        let calib = dist.sample::<f64>(&mut rng, 96);
        let probes = dist.sample::<f64>(&mut rng, 32);
        let alloc = DensityAllocation::uniform(0.5, &net.layer_shapes()).unwrap();
        let plan = CompressionPlan::new(Arm::Mpifa);
        let pts = lambda_sweep(&net, &calib, &probes, &alloc, &plan, &[0.0, 0.25, 0.5]).unwrap();
        assert_eq!(pts[0].weight_shift, 0.0);
        assert!(pts[1].weight_shift > 1e-6);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lambda.csv");
        write_csv(&path, &pts).unwrap();
        let text = fs::read_to_string(path).unwrap();
        assert!(text.starts_with("lambda,mse,rel_frobenius,weight_shift\n"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn condition_sweep_rejects_non_reconstructing_arm() {
        let net = ToyNetwork::new(vec![DenseMatrix::<f64>::identity(3)], Activation::Identity).unwrap();
        let alloc = DensityAllocation::uniform(0.5, &net.layer_shapes()).unwrap();
        let pool = DenseMatrix::identity(3);
        assert!(condition_sweep(&net, &pool, &alloc, &CompressionPlan::new(Arm::WhitenedSvd), &[3]).is_err());
        assert!(condition_sweep(&net, &pool, &alloc, &CompressionPlan::new(Arm::Mpifa), &[4]).is_err());
    }
}
