use std::path::{Path, PathBuf};

use pifa_core::report::write_json;
use pifa_core::threads::num_threads;
use pifa_core::Result;
use serde::Serialize;

/// Written next to every command's output so the run can be replayed.
#[derive(Serialize)]
pub struct RunManifest<'a, C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub seed: Option<u64>,
    pub threads: usize,
    pub config: &'a C,
    pub outputs: Vec<PathBuf>,
}

impl<'a, C: Serialize> RunManifest<'a, C> {
    pub fn new(command: &'a str, seed: Option<u64>, config: &'a C, outputs: Vec<PathBuf>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            threads: num_threads(),
            config,
            outputs,
        }
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path, self)
    }
}

/// `<file>.run.json` beside a single output file.
pub fn beside(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".run.json");
    out.with_file_name(name)
}

pub fn print_json<V: Serialize>(value: &V) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}
