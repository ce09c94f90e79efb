//! Declarative TOML run configuration.
//!
//! Relative paths are resolved against the directory holding the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formation::{ResampleOptions, ValidityThresholds, DEFAULT_MAX_ATTEMPTS};
use crate::imagecore::io::DepthPolicy;
use crate::waterops::library::{DEFAULT_CLUSTERS, DEFAULT_FAR_FRACTION};
use crate::waterops::{AttenuationConfig, JerlovTable, LibraryConfig};

fn one() -> usize {
    1
}

fn default_max_attempts() -> usize {
    DEFAULT_MAX_ATTEMPTS
}

fn default_crop_multiple() -> usize {
    8
}

fn default_clusters() -> usize {
    DEFAULT_CLUSTERS
}

fn default_far_fraction() -> f64 {
    DEFAULT_FAR_FRACTION
}

/// A terrestrial corpus: clean images plus depth maps matched by file stem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub name: String,
    pub images: PathBuf,
    pub depths: PathBuf,
    /// Overrides the global per-image sample count. Acts as the mixing
    /// weight between sources.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_per_image: Option<usize>,
}

/// Inputs for `build-library`. The library is written to the top-level
/// `library` path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LibraryBuildConfig {
    /// Directory of real underwater photographs.
    pub images: PathBuf,
    #[serde(default = "default_clusters", rename = "K", alias = "k")]
    pub k: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_far_fraction")]
    pub far_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisConfig {
    pub output: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; 0 uses all cores. Not part of the provenance snapshot
    /// since it never affects outputs.
    #[serde(default, skip_serializing)]
    pub workers: usize,
    #[serde(default = "one")]
    pub samples_per_image: usize,
    /// Background-light library JSON.
    pub library: PathBuf,
    /// Alternative Jerlov coefficient CSV; the bundled table is used if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jerlov_table: Option<PathBuf>,
    /// Treat 8/16-bit inputs as already linear instead of sRGB-encoded.
    #[serde(default)]
    pub linear_input: bool,
    #[serde(default)]
    pub depth_policy: DepthPolicy,
    #[serde(default = "default_max_attempts")]
    pub max_attempts: usize,
    /// Inputs are centre-cropped so both sides are multiples of this.
    #[serde(default = "default_crop_multiple")]
    pub crop_multiple: usize,
    #[serde(default)]
    pub attenuation: AttenuationConfig,
    #[serde(default)]
    pub validity: ValidityThresholds,
    #[serde(default)]
    pub sources: Vec<SourceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub library_build: Option<LibraryBuildConfig>,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

fn require_dir(what: &str, p: &Path) -> Result<()> {
    if !p.is_dir() {
        return Err(Error::Config(format!("{what} {} is not a directory", p.display())));
    }
    Ok(())
}

fn require_file(what: &str, p: &Path) -> Result<()> {
    if !p.is_file() {
        return Err(Error::Config(format!("{what} {} does not exist", p.display())));
    }
    Ok(())
}

impl SynthesisConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads the file and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
        cfg.resolve_paths(&base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        resolve(base, &mut self.output);
        resolve(base, &mut self.library);
        if let Some(j) = &mut self.jerlov_table {
            resolve(base, j);
        }
        for s in &mut self.sources {
            resolve(base, &mut s.images);
            resolve(base, &mut s.depths);
        }
        if let Some(lb) = &mut self.library_build {
            resolve(base, &mut lb.images);
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    fn validate_common(&self) -> Result<()> {
        self.attenuation.validate()?;
        let v = &self.validity;
        if !(v.t_floor > 0.0 && v.t_floor < 1.0) {
            return Err(Error::Config(format!("validity.t_floor must be in (0, 1), got {}", v.t_floor)));
        }
        if !(0.0..=1.0).contains(&v.dark_max) || !(0.0..=1.0).contains(&v.t_mean_min) {
            return Err(Error::Config("validity.dark_max and t_mean_min must be in [0, 1]".into()));
        }
        if self.max_attempts == 0 {
            return Err(Error::Config("max_attempts must be at least 1".into()));
        }
        if self.crop_multiple == 0 {
            return Err(Error::Config("crop_multiple must be at least 1".into()));
        }
        Ok(())
    }

    /// Checks everything `synthesize` needs, including that paths exist.
    pub fn validate_for_synthesis(&self) -> Result<()> {
        self.validate_common()?;
        if self.sources.is_empty() {
            return Err(Error::Config("no [[sources]] configured".into()));
        }
        if self.samples_per_image == 0 {
            return Err(Error::Config("samples_per_image must be at least 1".into()));
        }
        let mut names = std::collections::BTreeSet::new();
        for s in &self.sources {
            let safe = !s.name.is_empty()
                && s.name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
                && !s.name.starts_with('.');
            if !safe {
                return Err(Error::Config(format!(
                    "source name {:?} must be non-empty ASCII letters, digits, '-', '_' or '.'",
                    s.name
                )));
            }
            if !names.insert(s.name.as_str()) {
                return Err(Error::Config(format!("duplicate source name {:?}", s.name)));
            }
            if s.samples_per_image == Some(0) {
                return Err(Error::Config(format!("source {:?}: samples_per_image must be at least 1", s.name)));
            }
            require_dir(&format!("source {:?} images", s.name), &s.images)?;
            require_dir(&format!("source {:?} depths", s.name), &s.depths)?;
        }
        require_file("library", &self.library)?;
        if let Some(j) = &self.jerlov_table {
            require_file("jerlov_table", j)?;
        }
        Ok(())
    }

    pub fn validate_for_library(&self) -> Result<&LibraryBuildConfig> {
        let lb = self
            .library_build
            .as_ref()
            .ok_or_else(|| Error::Config("missing [library_build] section".into()))?;
        if lb.k == 0 {
            return Err(Error::Config("library_build.K must be at least 1".into()));
        }
        if !(lb.far_fraction > 0.0 && lb.far_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "library_build.far_fraction must be in (0, 1], got {}",
                lb.far_fraction
            )));
        }
        require_dir("library_build images", &lb.images)?;
        Ok(lb)
    }

    pub fn samples_for(&self, source: &SourceConfig) -> usize {
        source.samples_per_image.unwrap_or(self.samples_per_image)
    }

    pub fn resample_options(&self) -> ResampleOptions {
        ResampleOptions {
            attenuation: self.attenuation,
            thresholds: self.validity,
            max_attempts: self.max_attempts,
        }
    }

    pub fn jerlov(&self) -> Result<JerlovTable> {
        match &self.jerlov_table {
            Some(p) => JerlovTable::from_path(p),
            None => Ok(JerlovTable::embedded()),
        }
    }

    pub fn library_config(&self) -> Option<LibraryConfig> {
        self.library_build.as_ref().map(|lb| LibraryConfig {
            k: lb.k,
            seed: lb.seed,
            far_fraction: lb.far_fraction,
        })
    }
}
