use std::path::PathBuf;

use clap::Args;
use pifa_core::bench::{run_bench, BenchSuite, LayerKind};
use pifa_core::report::{write_bench_csv, write_json};
use pifa_core::{DType, Error, Result};
use serde::{Deserialize, Serialize};

use crate::config::{required_path, resolve};
use crate::run::{beside, print_json, RunManifest};

#[derive(Args, Debug, Serialize)]
pub struct BenchArgs {
    /// Layer shapes: `d` for square or `MxN`.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    dims: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    densities: Option<Vec<f64>>,
    /// dense, lowrank, pifa.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    kinds: Option<Vec<String>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    dtype: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    batch: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    trials: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    warmups: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    /// Skip cases whose working set exceeds this many bytes.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    max_bytes: Option<u64>,
    /// CSV output.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
    /// JSON mirror; defaults to the CSV path with a `.json` extension.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    json: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct BenchConfig {
    dims: Vec<String>,
    densities: Vec<f64>,
    kinds: Vec<LayerKind>,
    dtype: DType,
    batch: usize,
    trials: usize,
    warmups: usize,
    seed: u64,
    max_bytes: u64,
    out: Option<PathBuf>,
    json: Option<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        let suite = BenchSuite::default();
        Self {
            dims: vec!["1024".into()],
            densities: suite.densities,
            kinds: suite.kinds,
            dtype: suite.dtype,
            batch: suite.batch,
            trials: suite.trials,
            warmups: suite.warmups,
            seed: suite.seed,
            max_bytes: suite.max_bytes,
            out: None,
            json: None,
        }
    }
}

fn parse_shape(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Invalid(format!("bad shape '{s}', expected D or MxN"));
    match s.split_once('x') {
        Some((m, n)) => Ok((
            m.trim().parse().map_err(|_| bad())?,
            n.trim().parse().map_err(|_| bad())?,
        )),
        None => {
            let d = s.trim().parse().map_err(|_| bad())?;
            Ok((d, d))
        }
    }
}

pub fn run(args: BenchArgs) -> Result<()> {
    let cfg: BenchConfig = resolve(&args, args.config.as_deref())?;
    let out = required_path(&cfg.out, "out")?;
    let suite = BenchSuite {
        shapes: cfg.dims.iter().map(|s| parse_shape(s)).collect::<Result<_>>()?,
        densities: cfg.densities.clone(),
        kinds: cfg.kinds.clone(),
        dtype: cfg.dtype,
        batch: cfg.batch,
        trials: cfg.trials,
        warmups: cfg.warmups,
        seed: cfg.seed,
        max_bytes: cfg.max_bytes,
    };
    let outcome = run_bench(&suite)?;
    write_bench_csv(&out, &outcome.records)?;
    let json = cfg.json.clone().unwrap_or_else(|| out.with_extension("json"));
    write_json(&json, &outcome)?;
    RunManifest::new("bench", Some(cfg.seed), &cfg, vec![out.clone(), json]).write(beside(&out))?;
    print_json(&outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        assert_eq!(parse_shape("64").unwrap(), (64, 64));
        assert_eq!(parse_shape("64x48").unwrap(), (64, 48));
        assert!(parse_shape("64y").is_err());
    }
}
