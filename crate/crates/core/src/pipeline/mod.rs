//! Batch commands behind the `seasynth` CLI: library building, dataset
//! synthesis, restoration, evaluation and verification.
//!
//! Every command is deterministic for a fixed config and seed. Work is spread
//! over a rayon pool, results are gathered in input order by a single
//! collector, and per-sample randomness is derived from the global seed and a
//! stable sample id, so the worker count never changes an output byte.

pub mod config;
pub mod evaluate;
pub mod library;
pub mod restore;
pub mod synthesize;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use config::{LibraryBuildConfig, SourceConfig, SynthesisConfig};
pub use evaluate::{cmd_evaluate, EvalMode, EvaluateOptions, EvaluationSummary, SummaryRow};
pub use library::{cmd_build_library, LibrarySummary};
pub use restore::{cmd_restore, RestoreOptions, RestoreSummary};
pub use synthesize::{
    cmd_synthesize, cmd_verify, DatasetManifest, ManifestEntry, SampleSidecar, SynthesisSummary, VerifySummary,
};

/// Version of the manifest, sidecar and report JSON layouts.
pub const SCHEMA_VERSION: u32 = 1;

/// Process exit status shared by all commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitStatus {
    Success,
    HardError,
    /// Some entries were skipped or failed.
    Partial,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::HardError => 1,
            ExitStatus::Partial => 2,
        }
    }

    fn from_failures(n: usize) -> Self {
        if n == 0 {
            ExitStatus::Success
        } else {
            ExitStatus::Partial
        }
    }
}

/// An input that was left out of a run, and why.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skipped {
    pub path: String,
    pub reason: String,
}

pub const IMAGE_EXTENSIONS: &[&str] = &["png", "jpg", "jpeg", "exr"];
pub const DEPTH_EXTENSIONS: &[&str] = &["pfm", "exr", "png"];

fn has_extension(path: &Path, exts: &[&str]) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| exts.contains(&e.to_ascii_lowercase().as_str()))
}

/// Regular files in `dir` with one of `exts`, sorted by name.
pub fn list_files(dir: &Path, exts: &[&str]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && has_extension(&path, exts) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

pub(crate) fn file_stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Per-sample RNG seed: SHA-256 over the global seed, the stable sample key
/// and the sample index.
pub fn derive_seed(global_seed: u64, key: &str, index: usize) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(global_seed.to_le_bytes());
    h.update((key.len() as u64).to_le_bytes());
    h.update(key.as_bytes());
    h.update((index as u64).to_le_bytes());
    h.finalize().into()
}

pub(crate) fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Creates `dir`, refusing to reuse a non-empty one unless `force` is set.
pub fn prepare_output_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        let non_empty = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .next()
            .is_some();
        if non_empty && !force {
            return Err(Error::Config(format!(
                "output directory {} is not empty; pass --force to overwrite",
                dir.display()
            )));
        }
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub(crate) fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    crate::imagecore::io::write_atomic(path, to_json_pretty(value)?.as_bytes())
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// `path` relative to `base` when it lies below it, as a forward-slash string.
pub(crate) fn display_relative(path: &Path, base: &Path) -> String {
    let p = path.strip_prefix(base).unwrap_or(path);
    p.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}
