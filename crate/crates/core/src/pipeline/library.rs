//! `build-library`: background lights from a corpus of real underwater photos.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::SynthesisConfig;
use super::{list_files, sha256_hex, thread_pool, ExitStatus, Skipped, IMAGE_EXTENSIONS};
use crate::error::{Error, Result};
use crate::imagecore::io::read_linear;
use crate::imagecore::LinearImage;
use crate::waterops::{build_light_library, UlapCoefficients};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibrarySummary {
    pub path: PathBuf,
    pub entries: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub k_reduced: bool,
    pub inertia: f64,
    pub skipped: Vec<Skipped>,
}

impl LibrarySummary {
    pub fn status(&self) -> ExitStatus {
        ExitStatus::from_failures(self.skipped.len())
    }
}

fn load(path: &std::path::Path, linear: bool) -> Result<(LinearImage, String)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let hash = sha256_hex(&bytes);
    Ok((read_linear(path, linear)?, hash))
}

/// Extracts one background light per readable image, clusters them and
/// writes the library to `cfg.library`. Unreadable images are skipped.
pub fn cmd_build_library(cfg: &SynthesisConfig) -> Result<LibrarySummary> {
    let lb = cfg.validate_for_library()?;
    let lib_cfg = cfg.library_config().expect("validated above");
    let files = list_files(&lb.images, IMAGE_EXTENSIONS)?;
    let pool = thread_pool(cfg.workers)?;
    let loaded: Vec<Result<(LinearImage, String)>> =
        pool.install(|| files.par_iter().map(|p| load(p, cfg.linear_input)).collect());

    let mut images = Vec::new();
    let mut hashes = Vec::new();
    let mut skipped = Vec::new();
    for (path, r) in files.iter().zip(loaded) {
        match r {
            Ok((img, hash)) => {
                images.push(img);
                hashes.push(hash);
            }
            Err(e) => {
                log::warn!("skipping {}: {e}", path.display());
                skipped.push(Skipped {
                    path: path.display().to_string(),
                    reason: e.to_string(),
                });
            }
        }
    }
    if images.is_empty() {
        return Err(Error::Validation(format!(
            "no usable images in {} ({} unreadable)",
            lb.images.display(),
            skipped.len()
        )));
    }
    if !skipped.is_empty() {
        log::warn!("{} of {} images skipped", skipped.len(), files.len());
    }

    let library = pool.install(|| build_light_library(&images, hashes, &UlapCoefficients::embedded(), &lib_cfg))?;
    if let Some(dir) = cfg.library.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    library.save(&cfg.library)?;
    Ok(LibrarySummary {
        path: cfg.library.clone(),
        entries: library.entries.len(),
        k: library.k,
        k_reduced: library.k_reduced,
        inertia: library.inertia,
        skipped,
    })
}
