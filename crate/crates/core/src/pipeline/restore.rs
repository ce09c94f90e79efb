//! `restore`: inverts the formation model with known or predicted medium maps.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::synthesize::SampleSidecar;
use super::{file_stem, list_files, prepare_output_dir, thread_pool, write_json, ExitStatus, Skipped, IMAGE_EXTENSIONS, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::formation::{restore, MediumMaps, DEFAULT_RESTORE_FLOOR};
use crate::imagecore::color::BitDepth;
use crate::imagecore::io::{read_exr_rgb, read_linear, write_exr_rgb, write_mask_png, write_png};

pub const RESTORE_LOG: &str = "restore_log.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestoreOptions {
    /// Underwater images, `<id>_underwater.<ext>` or `<id>.<ext>`.
    pub input: PathBuf,
    /// `<id>_T.exr` and `<id>_B.exr`, or `<id>.json` synthesis sidecars.
    pub maps: PathBuf,
    pub output: PathBuf,
    pub t_floor: f64,
    pub linear_input: bool,
    pub workers: usize,
    pub force: bool,
}

impl RestoreOptions {
    pub fn new(input: impl Into<PathBuf>, maps: impl Into<PathBuf>, output: impl Into<PathBuf>) -> Self {
        Self {
            input: input.into(),
            maps: maps.into(),
            output: output.into(),
            t_floor: DEFAULT_RESTORE_FLOOR,
            linear_input: false,
            workers: 0,
            force: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestoredEntry {
    pub id: String,
    pub input: String,
    pub output: String,
    pub floored_pixels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestoreSummary {
    pub schema_version: u32,
    pub version: String,
    pub t_floor: f64,
    pub restored: Vec<RestoredEntry>,
    pub failures: Vec<Skipped>,
}

impl RestoreSummary {
    pub fn status(&self) -> ExitStatus {
        ExitStatus::from_failures(self.failures.len())
    }
}

/// Strips a trailing `_underwater` from a file stem.
fn input_key(path: &Path) -> String {
    let stem = file_stem(path);
    stem.strip_suffix("_underwater").map(str::to_string).unwrap_or(stem)
}

fn is_exr(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("exr"))
}

/// One input per id, preferring lossless EXR over other encodings.
fn collect_inputs(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut inputs: BTreeMap<String, PathBuf> = BTreeMap::new();
    for path in list_files(dir, IMAGE_EXTENSIONS)? {
        let stem = file_stem(&path);
        // Skip maps and clean references that share the directory.
        if ["_T", "_B", "_clean", "_restored", "_floored"].iter().any(|s| stem.ends_with(s)) {
            continue;
        }
        let key = input_key(&path);
        match inputs.get(&key) {
            Some(existing) if is_exr(existing) || !is_exr(&path) => {}
            _ => {
                inputs.insert(key, path);
            }
        }
    }
    Ok(inputs)
}

fn load_maps(dir: &Path, id: &str) -> Result<MediumMaps> {
    let t = dir.join(format!("{id}_T.exr"));
    let b = dir.join(format!("{id}_B.exr"));
    if t.is_file() && b.is_file() {
        return MediumMaps::new(read_exr_rgb(&t)?, read_exr_rgb(&b)?);
    }
    let sidecar = dir.join(format!("{id}.json"));
    if sidecar.is_file() {
        return SampleSidecar::load(&sidecar)?.recompute_maps(dir);
    }
    Err(Error::Validation(format!("no medium maps for {id:?} in {}", dir.display())))
}

fn restore_one(id: &str, input: &Path, opts: &RestoreOptions) -> Result<RestoredEntry> {
    let underwater = read_linear(input, opts.linear_input)?;
    let maps = load_maps(&opts.maps, id)?;
    let r = restore(&underwater, &maps, opts.t_floor)?;
    let exr = format!("{id}_restored.exr");
    write_exr_rgb(&opts.output.join(&exr), &r.image)?;
    write_png(&opts.output.join(format!("{id}_restored.png")), &r.image, BitDepth::Sixteen)?;
    let (w, h) = r.image.dims();
    write_mask_png(&opts.output.join(format!("{id}_floored.png")), w, h, &r.floored)?;
    Ok(RestoredEntry {
        id: id.to_string(),
        input: input.display().to_string(),
        output: exr,
        floored_pixels: r.floored_count(),
    })
}

/// Restores every image in `opts.input`. Per-image problems (missing or
/// corrupt maps, size mismatches) are recorded in the run log and make the
/// run partial; they never abort it.
pub fn cmd_restore(opts: &RestoreOptions) -> Result<RestoreSummary> {
    if !(opts.t_floor > 0.0 && opts.t_floor <= 1.0) {
        return Err(Error::Config(format!("t_floor must be in (0, 1], got {}", opts.t_floor)));
    }
    let inputs: Vec<(String, PathBuf)> = collect_inputs(&opts.input)?.into_iter().collect();
    if inputs.is_empty() {
        return Err(Error::Validation(format!("no input images in {}", opts.input.display())));
    }
    prepare_output_dir(&opts.output, opts.force)?;
    let results: Vec<Result<RestoredEntry>> = thread_pool(opts.workers)?
        .install(|| inputs.par_iter().map(|(id, p)| restore_one(id, p, opts)).collect());

    let mut summary = RestoreSummary {
        schema_version: SCHEMA_VERSION,
        version: crate::VERSION.to_string(),
        t_floor: opts.t_floor,
        restored: Vec::new(),
        failures: Vec::new(),
    };
    for ((id, _), r) in inputs.iter().zip(results) {
        match r {
            Ok(e) => summary.restored.push(e),
            Err(e) => {
                log::error!("restore {id}: {e}");
                summary.failures.push(Skipped {
                    path: id.clone(),
                    reason: e.to_string(),
                });
            }
        }
    }
    write_json(&opts.output.join(RESTORE_LOG), &summary)?;
    Ok(summary)
}
