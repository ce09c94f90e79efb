//! Underwater Image Quality Measure: a weighted sum of colourfulness (UICM),
//! sharpness (UISM) and contrast (UIConM).
//!
//! Computed on display-referred 8-bit sRGB code values. Conventions:
//!
//! - UICM uses alpha-trimmed means (`alpha = 0.1` on both tails) of the RG
//!   and YB opponent channels and their plain variances about those means.
//! - UISM is the Rec.601-weighted EME of each channel's Sobel edge map
//!   (magnitude rescaled to 255, multiplied by the channel) over 8x8 blocks.
//! - UIConM is the logAMEE of block Michelson ratios over 8x8 blocks taken
//!   across all three channels, with the PLIP operators replaced by ordinary
//!   arithmetic as in the common reference script.
//!
//! Blocks with a zero extreme (EME) or zero contrast (logAMEE) contribute 0.
//! Partial blocks at the right and bottom edges are ignored.

use serde::{Deserialize, Serialize};

use crate::imagecore::color::{encode_code, BitDepth, SrgbImage};
use crate::imagecore::LinearImage;

pub const UIQM_BLOCK: usize = 8;

/// `(c1, c2, c3)` weights for UICM, UISM and UIConM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UiqmWeights {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Default for UiqmWeights {
    /// Panetta, Gao & Agaian (2016), IEEE J. Oceanic Eng. 41(3).
    fn default() -> Self {
        Self {
            c1: 0.0282,
            c2: 0.2953,
            c3: 3.5753,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UiqmComponents {
    pub uicm: f64,
    pub uism: f64,
    pub uiconm: f64,
    pub uiqm: f64,
}

/// Planar `f64` code values, row-major.
struct Planes {
    width: usize,
    height: usize,
    rgb: [Vec<f64>; 3],
}

impl Planes {
    fn from_codes(width: usize, height: usize, codes: impl Iterator<Item = f64>) -> Self {
        let mut rgb = [
            Vec::with_capacity(width * height),
            Vec::with_capacity(width * height),
            Vec::with_capacity(width * height),
        ];
        for (i, v) in codes.enumerate() {
            rgb[i % 3].push(v);
        }
        Self { width, height, rgb }
    }
}

pub fn uiqm(img: &LinearImage, weights: &UiqmWeights) -> UiqmComponents {
    let codes = img
        .data()
        .iter()
        .map(|&v| encode_code(v, BitDepth::Eight) as f64);
    uiqm_planes(&Planes::from_codes(img.width(), img.height(), codes), weights)
}

/// UIQM of an already encoded image; 16-bit input is rescaled to 8-bit range.
pub fn uiqm_srgb(img: &SrgbImage, weights: &UiqmWeights) -> UiqmComponents {
    let scale = 255.0 / img.depth.max_code() as f64;
    let codes = img.codes.iter().map(|&c| c as f64 * scale);
    uiqm_planes(&Planes::from_codes(img.width, img.height, codes), weights)
}

fn uiqm_planes(p: &Planes, w: &UiqmWeights) -> UiqmComponents {
    let uicm = uicm(p);
    let uism = uism(p);
    let uiconm = uiconm(p);
    UiqmComponents {
        uicm,
        uism,
        uiconm,
        uiqm: w.c1 * uicm + w.c2 * uism + w.c3 * uiconm,
    }
}

fn alpha_trimmed_mean(values: &mut [f64], alpha_low: f64, alpha_high: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let k = values.len();
    let low = (alpha_low * k as f64).ceil() as usize;
    let high = (alpha_high * k as f64).floor() as usize;
    let kept = &values[low..k - high];
    kept.iter().sum::<f64>() / kept.len() as f64
}

fn variance_about(values: &[f64], mu: f64) -> f64 {
    values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / values.len() as f64
}

fn uicm(p: &Planes) -> f64 {
    let [r, g, b] = &p.rgb;
    let rg: Vec<f64> = r.iter().zip(g).map(|(r, g)| r - g).collect();
    let yb: Vec<f64> = r
        .iter()
        .zip(g)
        .zip(b)
        .map(|((r, g), b)| (r + g) / 2.0 - b)
        .collect();
    let mu_rg = alpha_trimmed_mean(&mut rg.clone(), 0.1, 0.1);
    let mu_yb = alpha_trimmed_mean(&mut yb.clone(), 0.1, 0.1);
    let var_rg = variance_about(&rg, mu_rg);
    let var_yb = variance_about(&yb, mu_yb);
    -0.0268 * (mu_rg * mu_rg + mu_yb * mu_yb).sqrt() + 0.1586 * (var_rg + var_yb).sqrt()
}

/// Half-sample symmetric index reflection (`d c b a | a b c d`).
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let mut i = i;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - i - 1;
        } else {
            return i as usize;
        }
    }
}

/// Sobel gradient magnitude, rescaled so the maximum is 255.
fn sobel_magnitude(plane: &[f64], width: usize, height: usize) -> Vec<f64> {
    let at = |x: isize, y: isize| plane[reflect(y, height) * width + reflect(x, width)];
    let mut mag = Vec::with_capacity(width * height);
    for y in 0..height as isize {
        for x in 0..width as isize {
            // Derivative across rows, smoothing across columns, and vice versa.
            let d_rows = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            let d_cols = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            mag.push(d_rows.hypot(d_cols));
        }
    }
    let max = mag.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        let s = 255.0 / max;
        for m in &mut mag {
            *m *= s;
        }
    }
    mag
}

/// Visits the `(max, min)` of every full 8x8 block, column-major over blocks.
fn for_each_block(
    width: usize,
    height: usize,
    planes: &[&[f64]],
    mut f: impl FnMut(f64, f64),
) -> usize {
    let (k1, k2) = (width / UIQM_BLOCK, height / UIQM_BLOCK);
    for bx in 0..k1 {
        for by in 0..k2 {
            let mut max = f64::NEG_INFINITY;
            let mut min = f64::INFINITY;
            for y in by * UIQM_BLOCK..(by + 1) * UIQM_BLOCK {
                for x in bx * UIQM_BLOCK..(bx + 1) * UIQM_BLOCK {
                    for plane in planes {
                        let v = plane[y * width + x];
                        max = max.max(v);
                        min = min.min(v);
                    }
                }
            }
            f(max, min);
        }
    }
    k1 * k2
}

fn eme(plane: &[f64], width: usize, height: usize) -> f64 {
    let mut sum = 0.0;
    let blocks = for_each_block(width, height, &[plane], |max, min| {
        if max != 0.0 && min != 0.0 {
            sum += (max / min).ln();
        }
    });
    if blocks == 0 {
        return 0.0;
    }
    2.0 / blocks as f64 * sum
}

fn uism(p: &Planes) -> f64 {
    const LAMBDA: [f64; 3] = [0.299, 0.587, 0.114];
    (0..3)
        .map(|c| {
            let ch = &p.rgb[c];
            let edges: Vec<f64> = sobel_magnitude(ch, p.width, p.height)
                .iter()
                .zip(ch)
                .map(|(m, v)| m * v)
                .collect();
            LAMBDA[c] * eme(&edges, p.width, p.height)
        })
        .sum()
}

fn uiconm(p: &Planes) -> f64 {
    let planes: Vec<&[f64]> = p.rgb.iter().map(Vec::as_slice).collect();
    let mut sum = 0.0;
    let blocks = for_each_block(p.width, p.height, &planes, |max, min| {
        let top = max - min;
        let bot = max + min;
        if top != 0.0 && bot != 0.0 {
            let ratio = top / bot;
            sum += ratio * ratio.ln();
        }
    });
    if blocks == 0 {
        return 0.0;
    }
    -sum / blocks as f64
}
