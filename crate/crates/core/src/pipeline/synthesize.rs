//! `synthesize` and `verify`: paired dataset generation from clean images and
//! depth maps, and reload-and-recompose checking of the result.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::SynthesisConfig;
use super::{
    derive_seed, display_relative, file_stem, list_files, prepare_output_dir, read_json, thread_pool, write_json,
    ExitStatus, Skipped, DEPTH_EXTENSIONS, IMAGE_EXTENSIONS, SCHEMA_VERSION,
};
use crate::error::{Error, Result};
use crate::formation::{compose, synthesize_with_resampling, MediumMaps, ResampleOptions, SynthesisRecord, ValidityReport};
use crate::imagecore::color::BitDepth;
use crate::imagecore::io::{read_depth_paired, read_exr_rgb, read_linear, write_depth, write_exr_rgb, write_png};
use crate::imagecore::{center_crop_window, DepthMap, LinearImage};
use crate::waterops::{BackgroundLightLibrary, JerlovTable};

/// Largest accepted `|I - (J * T + B)|` after reloading the float copies.
pub const VERIFY_TOLERANCE: f64 = 1e-6;

pub const SAMPLES_DIR: &str = "samples";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaterTypeRef {
    pub index: usize,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourcePaths {
    pub image: String,
    pub depth: String,
}

/// Output files of one sample, relative to the sidecar's directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleFiles {
    pub underwater_png: String,
    pub underwater_exr: String,
    pub clean_png: String,
    pub clean_exr: String,
    pub transmission: String,
    pub backscatter: String,
    pub depth: String,
}

impl SampleFiles {
    fn for_id(id: &str) -> Self {
        Self {
            underwater_png: format!("{id}_underwater.png"),
            underwater_exr: format!("{id}_underwater.exr"),
            clean_png: format!("{id}_clean.png"),
            clean_exr: format!("{id}_clean.exr"),
            transmission: format!("{id}_T.exr"),
            backscatter: format!("{id}_B.exr"),
            depth: format!("{id}_depth.pfm"),
        }
    }

    fn all(&self) -> [&str; 7] {
        [
            &self.underwater_png,
            &self.underwater_exr,
            &self.clean_png,
            &self.clean_exr,
            &self.transmission,
            &self.backscatter,
            &self.depth,
        ]
    }
}

/// Per-sample JSON written next to the images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSidecar {
    pub schema_version: u32,
    pub version: String,
    pub id: String,
    pub source: String,
    pub sample_index: usize,
    pub global_seed: u64,
    /// Hex of the 32-byte ChaCha8 seed used for this sample.
    pub seed: String,
    #[serde(rename = "beta_D")]
    pub beta_d: [f64; 3],
    #[serde(rename = "beta_B")]
    pub beta_b: [f64; 3],
    pub b_inf: [f64; 3],
    pub water_type: Option<WaterTypeRef>,
    pub validity: ValidityReport,
    pub source_paths: SourcePaths,
    /// `[x0, y0, width, height]` of the centre crop applied to the inputs.
    pub crop: [usize; 4],
    pub files: SampleFiles,
}

impl SampleSidecar {
    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    /// Medium maps recomputed from the stored parameters and depth file.
    pub fn recompute_maps(&self, dir: &Path) -> Result<MediumMaps> {
        let depth = crate::imagecore::io::read_depth(&dir.join(&self.files.depth), Default::default())?;
        let params = crate::waterops::MediumParams {
            beta_d: self.beta_d,
            beta_b: self.beta_b,
            b_inf: self.b_inf,
        };
        Ok(crate::formation::medium_maps(&depth, &params))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub source_image: String,
    pub depth_file: String,
    /// Sidecar path relative to the output root.
    pub sidecar: String,
    pub accepted: bool,
    pub resample_count: usize,
    pub validity: ValidityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub version: String,
    pub config: SynthesisConfig,
    pub entries: Vec<ManifestEntry>,
    pub skipped: Vec<Skipped>,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub checked: usize,
    pub max_residual: f64,
    pub failures: Vec<Skipped>,
}

impl VerifySummary {
    pub fn status(&self) -> ExitStatus {
        if self.failures.is_empty() {
            ExitStatus::Success
        } else {
            ExitStatus::HardError
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisSummary {
    pub manifest: PathBuf,
    pub entries: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub skipped: Vec<Skipped>,
    pub verify: Option<VerifySummary>,
}

impl SynthesisSummary {
    pub fn status(&self) -> ExitStatus {
        match &self.verify {
            Some(v) if v.status() != ExitStatus::Success => v.status(),
            _ => ExitStatus::from_failures(self.skipped.len()),
        }
    }
}

struct ImageJob {
    source: String,
    stem: String,
    image: PathBuf,
    depth: PathBuf,
    samples: usize,
}

fn find_depth(dir: &Path, stem: &str) -> Option<PathBuf> {
    DEPTH_EXTENSIONS
        .iter()
        .map(|ext| dir.join(format!("{stem}.{ext}")))
        .find(|p| p.is_file())
}

fn sample_id(source: &str, stem: &str, index: usize) -> String {
    format!("{source}_{stem}_s{index:02}")
}

fn plan(cfg: &SynthesisConfig) -> Result<(Vec<ImageJob>, Vec<Skipped>)> {
    let mut jobs = Vec::new();
    let mut skipped = Vec::new();
    let mut ids = BTreeSet::new();
    for source in &cfg.sources {
        let samples = cfg.samples_for(source);
        let mut stems = BTreeSet::new();
        for image in list_files(&source.images, IMAGE_EXTENSIONS)? {
            let stem = file_stem(&image);
            if !stems.insert(stem.clone()) {
                log::warn!("{}: another file with stem {stem:?} already used", image.display());
                skipped.push(Skipped {
                    path: image.display().to_string(),
                    reason: format!("duplicate stem {stem:?}"),
                });
                continue;
            }
            let Some(depth) = find_depth(&source.depths, &stem) else {
                log::warn!("{}: no depth map named {stem}.{{pfm,exr,png}}", image.display());
                skipped.push(Skipped {
                    path: image.display().to_string(),
                    reason: "missing depth map".into(),
                });
                continue;
            };
            let first = sample_id(&source.name, &stem, 0);
            if !ids.insert(first.clone()) {
                return Err(Error::Config(format!(
                    "sample id {first:?} is produced by two sources; rename a source or file"
                )));
            }
            jobs.push(ImageJob {
                source: source.name.clone(),
                stem,
                image,
                depth,
                samples,
            });
        }
    }
    Ok((jobs, skipped))
}

fn load_pair(job: &ImageJob, cfg: &SynthesisConfig) -> Result<(LinearImage, DepthMap, [usize; 4])> {
    let image = read_linear(&job.image, cfg.linear_input)?;
    let depth = read_depth_paired(&job.depth, cfg.depth_policy, image.dims())?;
    let (w, h) = image.dims();
    let (x0, y0, cw, ch) = center_crop_window(w, h, cfg.crop_multiple).ok_or_else(|| {
        Error::Validation(format!("{w}x{h} is smaller than the crop multiple {}", cfg.crop_multiple))
    })?;
    Ok((image.crop(x0, y0, cw, ch)?, depth.crop(x0, y0, cw, ch)?, [x0, y0, cw, ch]))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

struct Shared<'a> {
    cfg: &'a SynthesisConfig,
    table: &'a JerlovTable,
    library: &'a BackgroundLightLibrary,
    opts: ResampleOptions,
    samples_dir: PathBuf,
}

fn write_record(dir: &Path, files: &SampleFiles, record: &SynthesisRecord) -> Result<()> {
    write_png(&dir.join(&files.underwater_png), &record.underwater, BitDepth::Sixteen)?;
    write_exr_rgb(&dir.join(&files.underwater_exr), &record.underwater)?;
    write_png(&dir.join(&files.clean_png), &record.clean, BitDepth::Sixteen)?;
    write_exr_rgb(&dir.join(&files.clean_exr), &record.clean)?;
    write_exr_rgb(&dir.join(&files.transmission), &record.maps.transmission)?;
    write_exr_rgb(&dir.join(&files.backscatter), &record.maps.backscatter)?;
    write_depth(&record.depth, &dir.join(&files.depth))
}

enum ImageOutcome {
    Done(Vec<ManifestEntry>),
    Skip(Skipped),
}

fn run_image(job: &ImageJob, sh: &Shared<'_>) -> Result<ImageOutcome> {
    let (clean, depth, crop) = match load_pair(job, sh.cfg) {
        Ok(v) => v,
        Err(e) => {
            log::warn!("skipping {}: {e}", job.image.display());
            return Ok(ImageOutcome::Skip(Skipped {
                path: job.image.display().to_string(),
                reason: e.to_string(),
            }));
        }
    };
    let key = format!("{}/{}", job.source, job.stem);
    let mut entries = Vec::with_capacity(job.samples);
    for index in 0..job.samples {
        let seed = derive_seed(sh.cfg.seed, &key, index);
        let mut rng = ChaCha8Rng::from_seed(seed);
        let record = synthesize_with_resampling(&clean, &depth, sh.table, sh.library, &mut rng, &sh.opts)?;
        let id = sample_id(&job.source, &job.stem, index);
        let files = SampleFiles::for_id(&id);
        write_record(&sh.samples_dir, &files, &record)?;
        let source_paths = SourcePaths {
            image: job.image.display().to_string(),
            depth: job.depth.display().to_string(),
        };
        let sidecar = SampleSidecar {
            schema_version: SCHEMA_VERSION,
            version: crate::VERSION.to_string(),
            id: id.clone(),
            source: job.source.clone(),
            sample_index: index,
            global_seed: sh.cfg.seed,
            seed: hex(&seed),
            beta_d: record.params.beta_d,
            beta_b: record.params.beta_b,
            b_inf: record.params.b_inf,
            water_type: record.water_type.map(|i| WaterTypeRef {
                index: i,
                name: sh.table.types()[i].name.clone(),
            }),
            validity: record.validity,
            source_paths: source_paths.clone(),
            crop,
            files,
        };
        let sidecar_name = format!("{id}.json");
        write_json(&sh.samples_dir.join(&sidecar_name), &sidecar)?;
        entries.push(ManifestEntry {
            id,
            source_image: source_paths.image,
            depth_file: source_paths.depth,
            sidecar: format!("{SAMPLES_DIR}/{sidecar_name}"),
            accepted: record.validity.accepted,
            resample_count: record.validity.resample_count,
            validity: record.validity,
        });
    }
    Ok(ImageOutcome::Done(entries))
}

/// Generates the dataset described by `cfg` and writes `manifest.json` last,
/// atomically, so it never points at files that were not written.
pub fn cmd_synthesize(cfg: &SynthesisConfig, force: bool, verify: bool) -> Result<SynthesisSummary> {
    cfg.validate_for_synthesis()?;
    let table = cfg.jerlov()?;
    let library = BackgroundLightLibrary::load(&cfg.library)?;
    let (jobs, mut skipped) = plan(cfg)?;

    prepare_output_dir(&cfg.output, force)?;
    let samples_dir = cfg.output.join(SAMPLES_DIR);
    std::fs::create_dir_all(&samples_dir).map_err(|e| Error::io(&samples_dir, e))?;

    let shared = Shared {
        cfg,
        table: &table,
        library: &library,
        opts: cfg.resample_options(),
        samples_dir,
    };
    let pool = thread_pool(cfg.workers)?;
    let outcomes: Vec<ImageOutcome> =
        pool.install(|| jobs.par_iter().map(|job| run_image(job, &shared)).collect::<Result<_>>())?;

    let mut entries = Vec::new();
    for o in outcomes {
        match o {
            ImageOutcome::Done(e) => entries.extend(e),
            ImageOutcome::Skip(s) => skipped.push(s),
        }
    }
    let accepted = entries.iter().filter(|e| e.accepted).count();
    if accepted < entries.len() {
        log::warn!(
            "{} of {} samples never passed the validity gate; kept as best effort",
            entries.len() - accepted,
            entries.len()
        );
    }
    let manifest = DatasetManifest {
        schema_version: SCHEMA_VERSION,
        version: crate::VERSION.to_string(),
        config: cfg.clone(),
        entries,
        skipped: skipped.clone(),
    };
    let manifest_path = cfg.output.join(MANIFEST_FILE);
    write_json(&manifest_path, &manifest)?;
    log::info!("wrote {} samples to {}", manifest.entries.len(), cfg.output.display());

    let verify = if verify {
        Some(pool.install(|| verify_manifest(&manifest, &cfg.output)))
    } else {
        None
    };
    Ok(SynthesisSummary {
        manifest: manifest_path,
        entries: manifest.entries.len(),
        accepted,
        rejected: manifest.entries.len() - accepted,
        skipped,
        verify,
    })
}

fn verify_entry(entry: &ManifestEntry, root: &Path) -> Result<f64> {
    let sidecar_path = root.join(&entry.sidecar);
    let sidecar = SampleSidecar::load(&sidecar_path)?;
    let dir = sidecar_path.parent().unwrap_or(root);
    for f in sidecar.files.all() {
        let p = dir.join(f);
        if !p.is_file() {
            return Err(Error::Validation(format!("missing {}", display_relative(&p, root))));
        }
    }
    let underwater = read_exr_rgb(&dir.join(&sidecar.files.underwater_exr))?;
    let clean = read_exr_rgb(&dir.join(&sidecar.files.clean_exr))?;
    let maps = MediumMaps::new(
        read_exr_rgb(&dir.join(&sidecar.files.transmission))?,
        read_exr_rgb(&dir.join(&sidecar.files.backscatter))?,
    )?;
    let recomposed = compose(&clean, &maps)?;
    underwater.ensure_same_dims(recomposed.dims())?;
    Ok(recomposed
        .data()
        .iter()
        .zip(underwater.data())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

fn verify_manifest(manifest: &DatasetManifest, root: &Path) -> VerifySummary {
    let results: Vec<(String, Result<f64>)> = manifest
        .entries
        .par_iter()
        .map(|e| (e.id.clone(), verify_entry(e, root)))
        .collect();
    let mut max_residual: f64 = 0.0;
    let mut failures = Vec::new();
    for (id, r) in results {
        match r {
            Ok(res) if res <= VERIFY_TOLERANCE => max_residual = max_residual.max(res),
            Ok(res) => {
                max_residual = max_residual.max(res);
                failures.push(Skipped {
                    path: id,
                    reason: format!("compose residual {res:e} exceeds {VERIFY_TOLERANCE:e}"),
                });
            }
            Err(e) => failures.push(Skipped {
                path: id,
                reason: e.to_string(),
            }),
        }
    }
    for f in &failures {
        log::error!("verify {}: {}", f.path, f.reason);
    }
    VerifySummary {
        checked: manifest.entries.len(),
        max_residual,
        failures,
    }
}

/// Reloads every sample in a manifest and checks `I = J * T + B`.
pub fn cmd_verify(manifest_path: &Path, workers: usize) -> Result<VerifySummary> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let root = manifest_path.parent().unwrap_or(Path::new("."));
    Ok(thread_pool(workers)?.install(|| verify_manifest(&manifest, root)))
}
