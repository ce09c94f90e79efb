//! Structural similarity on Rec.709 luminance with a Gaussian window.
//!
//! Local statistics come from separable Gaussian filtering over the valid
//! region (no padding), so an `11x11` window on a `W x H` image yields
//! `(W - 10) x (H - 10)` local scores which are then averaged.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::LinearImage;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimConfig {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub peak: f64,
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            peak: 1.0,
        }
    }
}

fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let raw: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - c;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| v / total).collect()
}

/// Valid-region separable filtering of a `w x h` plane.
fn filter_valid(plane: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let n = kernel.len();
    let (ow, oh) = (w - n + 1, h - n + 1);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        let src = &plane[y * w..(y + 1) * w];
        for x in 0..ow {
            rows[y * ow + x] = kernel.iter().zip(&src[x..x + n]).map(|(k, v)| k * v).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = kernel
                .iter()
                .enumerate()
                .map(|(i, k)| k * rows[(y + i) * ow + x])
                .sum();
        }
    }
    out
}

pub fn ssim(a: &LinearImage, b: &LinearImage) -> Result<f64> {
    ssim_with(a, b, &SsimConfig::default())
}

/// Mean SSIM, clamped to at most 1. Identical inputs give exactly 1 and the
/// result is symmetric in its arguments.
pub fn ssim_with(a: &LinearImage, b: &LinearImage, cfg: &SsimConfig) -> Result<f64> {
    a.ensure_same_dims(b.dims())?;
    let (w, h) = a.dims();
    if cfg.window == 0 || w < cfg.window || h < cfg.window {
        return Err(Error::Validation(format!(
            "SSIM needs images of at least {0}x{0}, got {w}x{h}",
            cfg.window
        )));
    }
    let kernel = gaussian_kernel(cfg.window, cfg.sigma);
    let x = a.luminance();
    let y = b.luminance();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();

    let mu_x = filter_valid(&x, w, h, &kernel);
    let mu_y = filter_valid(&y, w, h, &kernel);
    let e_xx = filter_valid(&xx, w, h, &kernel);
    let e_yy = filter_valid(&yy, w, h, &kernel);
    let e_xy = filter_valid(&xy, w, h, &kernel);

    let c1 = (cfg.k1 * cfg.peak).powi(2);
    let c2 = (cfg.k2 * cfg.peak).powi(2);
    let mut total = 0.0;
    for i in 0..mu_x.len() {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let var_x = e_xx[i] - mx * mx;
        let var_y = e_yy[i] - my * my;
        let cov = e_xy[i] - mx * my;
        let num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
        let den = (mx * mx + my * my + c1) * (var_x + var_y + c2);
        total += num / den;
    }
    Ok((total / mu_x.len() as f64).min(1.0))
}
