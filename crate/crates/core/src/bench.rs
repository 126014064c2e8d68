//! Analytical cost model and the timing/memory harness built on it.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lowrank::{density_to_rank, CountingMode, DensitySpec, LowRankFactors};
use crate::pifa::{encode_pifa, pifa_param_count, pifl_file_bytes, PifaLayer};
use crate::pipeline::CompressedLayer;
use crate::scalar::{DType, Scalar};
use crate::tensor::pft::encode_pft;
use crate::tensor::pft::PFT_HEADER_BYTES;
use crate::tensor::{DenseMatrix, SeededRng};
use crate::threads::num_threads;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Dense,
    Lowrank,
    Pifa,
}

impl LayerKind {
    pub fn name(self) -> &'static str {
        match self {
            LayerKind::Dense => "dense",
            LayerKind::Lowrank => "lowrank",
            LayerKind::Pifa => "pifa",
        }
    }
}

/// `m x n` layer of rank `r` applied to `b` input columns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModel {
    pub kind: LayerKind,
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub b: usize,
}

impl CostModel {
    /// Multiplies plus adds: `2mnb`, `2br(m + n)`, `2br(m + n - r)`.
    pub fn flops(&self) -> u64 {
        let (m, n, r, b) = (self.m as u64, self.n as u64, self.r as u64, self.b as u64);
        match self.kind {
            LayerKind::Dense => 2 * m * n * b,
            LayerKind::Lowrank => 2 * b * r * (m + n),
            LayerKind::Pifa => 2 * b * r * (m + n - r),
        }
    }

    /// Stored parameters, counting PIFA's index list as `r` parameters.
    pub fn params(&self) -> u64 {
        memory_params(self.kind, self.m, self.n, self.r)
    }
}

fn memory_params(kind: LayerKind, m: usize, n: usize, r: usize) -> u64 {
    match kind {
        LayerKind::Dense => (m * n) as u64,
        LayerKind::Lowrank => (r * (m + n)) as u64,
        LayerKind::Pifa => pifa_param_count(m, n, r),
    }
}

/// Formula bytes: parameter count times scalar width.
pub fn memory_model(kind: LayerKind, m: usize, n: usize, r: usize, bytes_per_scalar: usize) -> u64 {
    memory_params(kind, m, n, r) * bytes_per_scalar as u64
}

/// Serialized size of a layer in its container format(s), computed without
/// encoding. PIFA indices are stored as u64.
pub fn serialized_bytes(kind: LayerKind, m: usize, n: usize, r: usize, dtype: DType) -> u64 {
    let pft = |rows: usize, cols: usize| (PFT_HEADER_BYTES + rows * cols * dtype.size()) as u64;
    match kind {
        LayerKind::Dense => pft(m, n),
        LayerKind::Lowrank => pft(m, r) + pft(r, n),
        LayerKind::Pifa => pifl_file_bytes(m, n, r, dtype),
    }
}

/// Actual encoded size of a concrete layer.
pub fn measured_bytes<T: Scalar>(layer: &CompressedLayer<T>) -> Result<u64> {
    let bytes = match layer {
        CompressedLayer::Dense(w) => encode_pft(w)?.len(),
        CompressedLayer::LowRank(f) => encode_pft(f.u())?.len() + encode_pft(f.vt())?.len(),
        CompressedLayer::Pifa(p) => encode_pifa(p)?.len(),
    };
    Ok(bytes as u64)
}

/// One timed configuration. Field names double as the CSV header.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub kind: LayerKind,
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub b: usize,
    pub dtype: DType,
    pub threads: usize,
    pub trials: usize,
    pub median_ns: u64,
    pub p10_ns: u64,
    pub p90_ns: u64,
    pub flops_model: u64,
    pub bytes_model: u64,
    pub bytes_measured: u64,
    pub speedup_vs_dense: f64,
}

pub const BENCH_CSV_COLUMNS: [&str; 15] = [
    "kind",
    "m",
    "n",
    "r",
    "b",
    "dtype",
    "threads",
    "trials",
    "median_ns",
    "p10_ns",
    "p90_ns",
    "flops_model",
    "bytes_model",
    "bytes_measured",
    "speedup_vs_dense",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedCase {
    pub kind: LayerKind,
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchSuite {
    /// `(m, n)` layer shapes.
    pub shapes: Vec<(usize, usize)>,
    /// Remaining-parameter fractions; low-rank layers use the factor-pair
    /// count and PIFA layers the PIFA count at each density.
    pub densities: Vec<f64>,
    pub kinds: Vec<LayerKind>,
    pub dtype: DType,
    pub batch: usize,
    pub trials: usize,
    pub warmups: usize,
    pub seed: u64,
    /// Cases whose working set exceeds this are skipped.
    pub max_bytes: u64,
}

impl Default for BenchSuite {
    fn default() -> Self {
        Self {
            shapes: vec![(1024, 1024)],
            densities: vec![0.5],
            kinds: vec![LayerKind::Dense, LayerKind::Lowrank, LayerKind::Pifa],
            dtype: DType::F32,
            batch: 256,
            trials: 9,
            warmups: 3,
            seed: 0,
            max_bytes: 4 << 30,
        }
    }
}

impl BenchSuite {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Invalid("bench needs at least one trial".into()));
        }
        if self.warmups < 3 {
            return Err(Error::Invalid(format!(
                "bench needs at least 3 warmups, got {}",
                self.warmups
            )));
        }
        if self.batch == 0 || self.shapes.iter().any(|&(m, n)| m == 0 || n == 0) {
            return Err(Error::Invalid("bench dimensions must be positive".into()));
        }
        if self.shapes.is_empty() || self.kinds.is_empty() {
            return Err(Error::Invalid("bench suite is empty".into()));
        }
        for &d in &self.densities {
            DensitySpec::new(d, CountingMode::Pifa)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchOutcome {
    pub records: Vec<BenchRecord>,
    pub skipped: Vec<SkippedCase>,
}

/// A layer plus its input, generated deterministically from a seed.
#[derive(Clone, Debug)]
pub struct BenchCase<T> {
    pub layer: CompressedLayer<T>,
    pub input: DenseMatrix<T>,
}

impl<T: Scalar> BenchCase<T> {
    /// PIFA cases are assembled from random parts rather than factorized:
    /// timing only depends on the shapes.
    pub fn generate(kind: LayerKind, m: usize, n: usize, r: usize, b: usize, seed: u64) -> Result<Self> {
        let mut rng = SeededRng::new(seed);
        let input = rng.gaussian::<T>(n, b);
        let mut rng = rng.fork(kind as u64);
        let layer = match kind {
            LayerKind::Dense => CompressedLayer::Dense(rng.gaussian(m, n)),
            LayerKind::Lowrank => {
                CompressedLayer::LowRank(LowRankFactors::new(rng.gaussian(m, r), rng.gaussian(r, n))?)
            }
            LayerKind::Pifa => {
                let mut rows: Vec<usize> = (0..m).collect();
                for i in 0..r {
                    let j = rng.range(i, m - 1);
                    rows.swap(i, j);
                }
                rows.truncate(r);
                CompressedLayer::Pifa(PifaLayer::from_parts(
                    m,
                    n,
                    rows,
                    rng.gaussian(r, n),
                    rng.gaussian(m - r, r),
                )?)
            }
        };
        Ok(Self { layer, input })
    }

    pub fn run(&self) -> Result<DenseMatrix<T>> {
        self.layer.forward(&self.input)
    }

    fn working_bytes(kind: LayerKind, m: usize, n: usize, r: usize, b: usize) -> u64 {
        let values = memory_params(kind, m, n, r) + (n * b + m * b + r * b) as u64;
        values * std::mem::size_of::<T>() as u64
    }
}

fn percentile(sorted: &[u64], p: f64) -> u64 {
    let idx = (p * (sorted.len() - 1) as f64).round() as usize;
    sorted[idx]
}

/// Median, p10 and p90 of `trials` timed calls after `warmups` untimed ones.
pub fn time_case<T: Scalar>(case: &BenchCase<T>, warmups: usize, trials: usize) -> Result<(u64, u64, u64)> {
    for _ in 0..warmups {
        std::hint::black_box(case.run()?);
    }
    let mut samples = Vec::with_capacity(trials);
    for _ in 0..trials {
        let start = Instant::now();
        let out = case.run()?;
        samples.push(start.elapsed().as_nanos() as u64);
        std::hint::black_box(out);
    }
    samples.sort_unstable();
    Ok((
        percentile(&samples, 0.5),
        percentile(&samples, 0.1),
        percentile(&samples, 0.9),
    ))
}

fn case_rank(kind: LayerKind, m: usize, n: usize, density: f64) -> Result<usize> {
    match kind {
        LayerKind::Dense => Ok(m.min(n)),
        LayerKind::Lowrank => density_to_rank(m, n, DensitySpec::new(density, CountingMode::SvdLowrank)?),
        LayerKind::Pifa => density_to_rank(m, n, DensitySpec::new(density, CountingMode::Pifa)?),
    }
}

fn run_typed<T: Scalar>(suite: &BenchSuite) -> Result<BenchOutcome> {
    let mut outcome = BenchOutcome::default();
    let threads = num_threads();
    for (shape_idx, &(m, n)) in suite.shapes.iter().enumerate() {
        let b = suite.batch;
        let mut plan = vec![(LayerKind::Dense, m.min(n))];
        for &density in &suite.densities {
            for &kind in &suite.kinds {
                if kind == LayerKind::Dense {
                    continue;
                }
                match case_rank(kind, m, n, density) {
                    Ok(r) if !plan.contains(&(kind, r)) => plan.push((kind, r)),
                    Ok(_) => {}
                    Err(e) => outcome.skipped.push(SkippedCase {
                        kind,
                        m,
                        n,
                        r: 0,
                        reason: e.to_string(),
                    }),
                }
            }
        }
        let mut dense_median = None;
        for (kind, r) in plan {
            let needed = BenchCase::<T>::working_bytes(kind, m, n, r, b);
            let mut probe: Vec<u8> = Vec::new();
            if needed > suite.max_bytes || probe.try_reserve_exact(needed as usize).is_err() {
                outcome.skipped.push(SkippedCase {
                    kind,
                    m,
                    n,
                    r,
                    reason: format!("needs {needed} bytes, limit {}", suite.max_bytes),
                });
                continue;
            }
            drop(probe);
            let seed = suite.seed ^ ((shape_idx as u64) << 32);
            let case = BenchCase::<T>::generate(kind, m, n, r, b, seed)?;
            let (median_ns, p10_ns, p90_ns) = time_case(&case, suite.warmups, suite.trials)?;
            if kind == LayerKind::Dense {
                dense_median = Some(median_ns);
            }
            let record = BenchRecord {
                kind,
                m,
                n,
                r,
                b,
                dtype: T::DTYPE,
                threads,
                trials: suite.trials,
                median_ns,
                p10_ns,
                p90_ns,
                flops_model: CostModel { kind, m, n, r, b }.flops(),
                bytes_model: memory_model(kind, m, n, r, T::DTYPE.size()),
                bytes_measured: measured_bytes(&case.layer)?,
                speedup_vs_dense: dense_median.map_or(f64::NAN, |d| d as f64 / median_ns.max(1) as f64),
            };
            if suite.kinds.contains(&kind) {
                outcome.records.push(record);
            }
        }
    }
    Ok(outcome)
}

/// Times every (shape, density, kind) combination. A dense baseline is
/// always timed first per shape so every record carries a speedup.
pub fn run_bench(suite: &BenchSuite) -> Result<BenchOutcome> {
    suite.validate()?;
    match suite.dtype {
        DType::F32 => run_typed::<f32>(suite),
        DType::F64 => run_typed::<f64>(suite),
    }
}
