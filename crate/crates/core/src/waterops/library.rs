//! Background-light library: lights extracted from real underwater images,
//! clustered on their Lab chroma, sampled cluster-first.

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans, KMeansConfig};
use super::ulap::{extract_background_light, ulap_depth, UlapCoefficients};
use crate::error::{Error, Result};
use crate::imagecore::color::linear_rgb_to_lab;
use crate::imagecore::LinearImage;

pub const DEFAULT_CLUSTERS: usize = 10;
pub const DEFAULT_FAR_FRACTION: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LibraryConfig {
    #[serde(rename = "K")]
    pub k: usize,
    pub seed: u64,
    pub far_fraction: f64,
}

impl Default for LibraryConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_CLUSTERS,
            seed: 0,
            far_fraction: DEFAULT_FAR_FRACTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundLightLibrary {
    /// Extracted background lights, linear RGB.
    pub entries: Vec<[f64; 3]>,
    /// Cluster of each entry.
    pub assignments: Vec<usize>,
    /// Cluster centres in Lab `(a, b)`.
    pub centroids: Vec<[f64; 2]>,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "requested_K")]
    pub requested_k: usize,
    /// Set when there were fewer entries than requested clusters.
    pub k_reduced: bool,
    pub seed: u64,
    pub inertia: f64,
    /// SHA-256 of each source image file, aligned with `entries`.
    pub source_hashes: Vec<String>,
}

impl BackgroundLightLibrary {
    /// Clusters already-extracted lights.
    pub fn from_lights(lights: Vec<[f64; 3]>, source_hashes: Vec<String>, k: usize, seed: u64) -> Result<Self> {
        if lights.is_empty() {
            return Err(Error::Validation("no background lights to cluster".into()));
        }
        if !source_hashes.is_empty() && source_hashes.len() != lights.len() {
            return Err(Error::Validation(format!(
                "{} source hashes for {} lights",
                source_hashes.len(),
                lights.len()
            )));
        }
        let ab: Vec<[f64; 2]> = lights
            .iter()
            .map(|&rgb| {
                let lab = linear_rgb_to_lab(rgb);
                [lab[1], lab[2]]
            })
            .collect();
        let result = kmeans(&ab, &KMeansConfig::new(k, seed));
        if result.k_reduced {
            log::warn!(
                "only {} background lights; reducing cluster count from {k} to {}",
                lights.len(),
                result.k()
            );
        }
        Ok(Self {
            entries: lights,
            assignments: result.assignments.clone(),
            k: result.k(),
            centroids: result.centroids.clone(),
            requested_k: k,
            k_reduced: result.k_reduced,
            seed,
            inertia: result.inertia(),
            source_hashes,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(format!("light library: {m}")));
        if self.entries.is_empty() {
            return bad("no entries".into());
        }
        if self.assignments.len() != self.entries.len() {
            return bad("assignment count differs from entry count".into());
        }
        if self.centroids.len() != self.k {
            return bad(format!("{} centroids for K = {}", self.centroids.len(), self.k));
        }
        if self.assignments.iter().any(|&a| a >= self.k) {
            return bad("assignment out of range".into());
        }
        if self.centroids.iter().flatten().any(|v| !v.is_finite()) {
            return bad("non-finite centroid".into());
        }
        if self.entries.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
            return bad("entry outside [0, 1]".into());
        }
        Ok(())
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }

    /// Picks a non-empty cluster uniformly, then a member uniformly.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 3] {
        let occupied: Vec<usize> = self
            .cluster_sizes()
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(j, _)| j)
            .collect();
        let cluster = occupied[rng.random_range(0..occupied.len())];
        let members: Vec<usize> = self
            .assignments
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == cluster)
            .map(|(i, _)| i)
            .collect();
        self.entries[members[rng.random_range(0..members.len())]]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let lib: Self = serde_json::from_str(text)?;
        lib.validate()?;
        Ok(lib)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::imagecore::io::write_atomic(path, self.to_json()?.as_bytes())
    }
}

/// Draws a background light: uniform over non-empty clusters, then uniform
/// within the chosen cluster.
pub fn sample_background_light<R: Rng + ?Sized>(lib: &BackgroundLightLibrary, rng: &mut R) -> [f64; 3] {
    lib.sample(rng)
}

/// Extracts one background light per image (in parallel) and clusters them.
pub fn build_light_library(
    images: &[LinearImage],
    source_hashes: Vec<String>,
    ulap: &UlapCoefficients,
    cfg: &LibraryConfig,
) -> Result<BackgroundLightLibrary> {
    let lights: Vec<[f64; 3]> = images
        .par_iter()
        .map(|img| extract_background_light(img, &ulap_depth(img, ulap), cfg.far_fraction))
        .collect();
    BackgroundLightLibrary::from_lights(lights, source_hashes, cfg.k, cfg.seed)
}
