//! sRGB transfer functions and CIE L*a*b* (D65) conversion.

use super::LinearImage;
use crate::error::{Error, Result};

/// Storage depth of an encoded sRGB image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn max_code(self) -> u16 {
        match self {
            BitDepth::Eight => u8::MAX as u16,
            BitDepth::Sixteen => u16::MAX,
        }
    }
}

/// Gamma-encoded integer RGB image as it sits in an 8- or 16-bit file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SrgbImage {
    pub width: usize,
    pub height: usize,
    pub depth: BitDepth,
    /// Interleaved RGB codes, each `<= depth.max_code()`.
    pub codes: Vec<u16>,
}

impl SrgbImage {
    pub fn new(width: usize, height: usize, depth: BitDepth, codes: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 || codes.len() != width * height * 3 {
            return Err(Error::Validation(format!(
                "sRGB buffer of {} codes does not describe a {width}x{height} RGB image",
                codes.len()
            )));
        }
        let max = depth.max_code();
        if let Some(c) = codes.iter().find(|&&c| c > max) {
            return Err(Error::Validation(format!(
                "code {c} exceeds {max} for {depth:?}-bit image"
            )));
        }
        Ok(Self {
            width,
            height,
            depth,
            codes,
        })
    }
}

/// IEC 61966-2-1 decoding: normalized sRGB value to linear light.
pub fn srgb_eotf(v: f64) -> f64 {
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

/// IEC 61966-2-1 encoding: linear light to normalized sRGB value.
pub fn srgb_oetf(v: f64) -> f64 {
    if v <= 0.003_130_8 {
        v * 12.92
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

/// Quantizes a linear value to an sRGB code, clamping to `[0, 1]` first.
pub fn encode_code(linear: f64, depth: BitDepth) -> u16 {
    let max = depth.max_code() as f64;
    (srgb_oetf(linear.clamp(0.0, 1.0)) * max).round() as u16
}

pub fn decode_code(code: u16, depth: BitDepth) -> f64 {
    srgb_eotf(code as f64 / depth.max_code() as f64)
}

pub fn srgb_to_linear(img: &SrgbImage) -> LinearImage {
    let data = match img.depth {
        BitDepth::Eight => {
            let lut: Vec<f64> = (0..=255u16).map(|c| decode_code(c, BitDepth::Eight)).collect();
            img.codes.iter().map(|&c| lut[c as usize]).collect()
        }
        BitDepth::Sixteen => img
            .codes
            .iter()
            .map(|&c| decode_code(c, BitDepth::Sixteen))
            .collect(),
    };
    LinearImage::new(img.width, img.height, data).expect("decoded sRGB is always finite")
}

pub fn linear_to_srgb(img: &LinearImage, depth: BitDepth) -> SrgbImage {
    SrgbImage {
        width: img.width(),
        height: img.height(),
        depth,
        codes: img.data().iter().map(|&v| encode_code(v, depth)).collect(),
    }
}

// sRGB primaries, D65 white.
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];

const XYZ_TO_RGB: [[f64; 3]; 3] = [
    [3.240_454_2, -1.537_138_5, -0.498_531_4],
    [-0.969_266_0, 1.876_010_8, 0.041_556_0],
    [0.055_643_4, -0.204_025_9, 1.057_225_2],
];

// Reference white is the image of linear (1,1,1) so the gray axis lands on a = b = 0.
fn white() -> [f64; 3] {
    RGB_TO_XYZ.map(|row| row[0] + row[1] + row[2])
}

const LAB_EPSILON: f64 = 216.0 / 24389.0;
const LAB_KAPPA: f64 = 24389.0 / 27.0;

fn lab_f(t: f64) -> f64 {
    if t > LAB_EPSILON {
        t.cbrt()
    } else {
        (LAB_KAPPA * t + 16.0) / 116.0
    }
}

fn lab_f_inv(f: f64) -> f64 {
    let t = f * f * f;
    if t > LAB_EPSILON {
        t
    } else {
        (116.0 * f - 16.0) / LAB_KAPPA
    }
}

fn mat_mul(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    m.map(|row| row[0] * v[0] + row[1] * v[1] + row[2] * v[2])
}

/// Converts one linear-RGB pixel to `[L, a, b]`.
pub fn linear_rgb_to_lab(rgb: [f64; 3]) -> [f64; 3] {
    let xyz = mat_mul(&RGB_TO_XYZ, rgb);
    let w = white();
    let fx = lab_f(xyz[0] / w[0]);
    let fy = lab_f(xyz[1] / w[1]);
    let fz = lab_f(xyz[2] / w[2]);
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

pub fn lab_to_linear_rgb(lab: [f64; 3]) -> [f64; 3] {
    let fy = (lab[0] + 16.0) / 116.0;
    let fx = fy + lab[1] / 500.0;
    let fz = fy - lab[2] / 200.0;
    let w = white();
    let xyz = [lab_f_inv(fx) * w[0], lab_f_inv(fy) * w[1], lab_f_inv(fz) * w[2]];
    mat_mul(&XYZ_TO_RGB, xyz)
}

/// Per-pixel CIE L*a*b* values, `L` in `[0, 100]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<[f64; 3]>,
}

impl LabImage {
    /// The `(a, b)` chroma coordinates of every pixel.
    pub fn ab(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.data.iter().map(|p| [p[1], p[2]])
    }
}

pub fn linear_to_lab(img: &LinearImage) -> LabImage {
    LabImage {
        width: img.width(),
        height: img.height(),
        data: img.pixels().map(linear_rgb_to_lab).collect(),
    }
}

pub fn lab_to_linear(lab: &LabImage) -> Result<LinearImage> {
    let data = lab
        .data
        .iter()
        .flat_map(|&p| lab_to_linear_rgb(p))
        .collect();
    LinearImage::new(lab.width, lab.height, data)
}
