//! Underwater light attenuation prior (ULAP) relative depth and background
//! light extraction.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::color::srgb_oetf;
use crate::imagecore::{luminance, LinearImage};

const EMBEDDED_COEFFS: &str = include_str!("../../data/ulap.json");

/// Coefficients of `d = mu0 + mu1 * max(G, B) + mu2 * R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UlapCoefficients {
    pub mu0: f64,
    pub mu1: f64,
    pub mu2: f64,
}

#[derive(Deserialize)]
struct UlapFile {
    mu0: f64,
    mu1: f64,
    mu2: f64,
}

impl UlapCoefficients {
    pub fn embedded() -> Self {
        Self::parse(EMBEDDED_COEFFS).expect("embedded ULAP coefficients are valid")
    }

    pub fn parse(json: &str) -> Result<Self> {
        let f: UlapFile = serde_json::from_str(json)?;
        Ok(Self {
            mu0: f.mu0,
            mu1: f.mu1,
            mu2: f.mu2,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Relative depth of one pixel given sRGB-normalized `[R, G, B]`.
    pub fn depth_of(&self, srgb: [f64; 3]) -> f64 {
        self.mu0 + self.mu1 * srgb[1].max(srgb[2]) + self.mu2 * srgb[0]
    }
}

impl Default for UlapCoefficients {
    fn default() -> Self {
        Self::embedded()
    }
}

/// Per-pixel relative depth, row-major. Only the ordering is meaningful.
pub fn ulap_depth(img: &LinearImage, coeffs: &UlapCoefficients) -> Vec<f64> {
    img.pixels()
        .map(|p| coeffs.depth_of(p.map(|v| srgb_oetf(v.clamp(0.0, 1.0)))))
        .collect()
}

/// Background light: among the `ceil(far_fraction * N)` deepest pixels
/// (every pixel tied with the cut-off depth included), the colour of the one
/// with the highest luminance. Ties go to the earliest pixel in raster order.
pub fn extract_background_light(img: &LinearImage, depth: &[f64], far_fraction: f64) -> [f64; 3] {
    assert_eq!(depth.len(), img.pixel_count(), "depth does not match image");
    let n = img.pixel_count();
    let take = if (n as f64) < 1.0 / far_fraction {
        1
    } else {
        ((far_fraction * n as f64).ceil() as usize).clamp(1, n)
    };

    let mut sorted: Vec<f64> = depth.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let cutoff = sorted[take - 1];

    let mut best: Option<(f64, [f64; 3])> = None;
    for (px, &d) in img.pixels().zip(depth) {
        if d < cutoff {
            continue;
        }
        let lum = luminance(px);
        if best.is_none_or(|(l, _)| lum > l) {
            best = Some((lum, px));
        }
    }
    best.expect("at least one candidate").1.map(|v| v.clamp(0.0, 1.0))
}
