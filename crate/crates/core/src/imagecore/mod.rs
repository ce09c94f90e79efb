//! Image containers, colour conversions and file I/O shared by the rest of
//! the crate.
//!
//! Everything downstream works in linear light with `f64` samples. Gamma
//! encoding only happens at the file boundary (see [`color`] and [`io`]).

pub mod color;
pub mod io;

use crate::error::{Error, Result};

pub use color::{
    lab_to_linear, linear_to_lab, linear_to_srgb, srgb_to_linear, BitDepth, LabImage, SrgbImage,
};
pub use io::DepthPolicy;

/// Rec.709 luminance weights for linear RGB.
pub const REC709_LUMA: [f64; 3] = [0.2126, 0.7152, 0.0722];

pub(crate) fn luminance(px: [f64; 3]) -> f64 {
    REC709_LUMA[0] * px[0] + REC709_LUMA[1] * px[1] + REC709_LUMA[2] * px[2]
}

/// An `H x W x 3` linear-light RGB image, stored row-major and interleaved.
///
/// Values are nominally in `[0, 1]` but are not clamped; restoration output
/// may briefly leave that range before encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl LinearImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height * 3 {
            return Err(Error::Validation(format!(
                "expected {} samples for {width}x{height} RGB, got {}",
                width * height * 3,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    ///
    /// Panics if `f` returns a non-finite value or a dimension is zero.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [f64; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, data).expect("from_fn produced an invalid image")
    }

    pub fn filled(width: usize, height: usize, value: [f64; 3]) -> Self {
        Self::from_fn(width, height, |_, _| value)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn pixels(&self) -> impl ExactSizeIterator<Item = [f64; 3]> + '_ {
        self.data.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }

    /// Single channel `c` as a contiguous plane.
    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.data.iter().skip(c).step_by(3).copied().collect()
    }

    /// Rec.709 luminance plane.
    pub fn luminance(&self) -> Vec<f64> {
        self.pixels().map(luminance).collect()
    }

    pub fn map_pixels(&self, mut f: impl FnMut([f64; 3]) -> [f64; 3]) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for px in self.pixels() {
            data.extend_from_slice(&f(px));
        }
        Self::new(self.width, self.height, data).expect("map_pixels produced an invalid image")
    }

    /// Elementwise combination of two images of identical size.
    pub fn zip_map(&self, other: &Self, mut f: impl FnMut(f64, f64) -> f64) -> Result<Self> {
        self.ensure_same_dims(other.dims())?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::new(self.width, self.height, data)
    }

    pub fn clamped(&self) -> Self {
        self.map_pixels(|p| p.map(|v| v.clamp(0.0, 1.0)))
    }

    pub fn ensure_same_dims(&self, other: (usize, usize)) -> Result<()> {
        if self.dims() != other {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: other,
            });
        }
        Ok(())
    }

    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Self> {
        check_dims(width, height)?;
        if x0 + width > self.width || y0 + height > self.height {
            return Err(Error::Validation(format!(
                "crop {width}x{height}+{x0}+{y0} outside {}x{}",
                self.width, self.height
            )));
        }
        Ok(Self::from_fn(width, height, |x, y| self.pixel(x0 + x, y0 + y)))
    }

    pub fn flip_horizontal(&self) -> Self {
        Self::from_fn(self.width, self.height, |x, y| {
            self.pixel(self.width - 1 - x, y)
        })
    }

    pub fn flip_vertical(&self) -> Self {
        Self::from_fn(self.width, self.height, |x, y| {
            self.pixel(x, self.height - 1 - y)
        })
    }
}

/// Metric depth in meters, one sample per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl DepthMap {
    /// Rejects any sample that is not strictly positive and finite.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height {
            return Err(Error::Validation(format!(
                "expected {} depth samples for {width}x{height}, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|&z| !(z.is_finite() && z > 0.0)) {
            return Err(Error::Validation(format!(
                "depth sample {i} is {} (must be positive and finite)",
                data[i]
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data).expect("from_fn produced an invalid depth map")
    }

    pub fn constant(width: usize, height: usize, meters: f64) -> Self {
        Self::from_fn(width, height, |_, _| meters)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Self> {
        check_dims(width, height)?;
        if x0 + width > self.width || y0 + height > self.height {
            return Err(Error::Validation(format!(
                "crop {width}x{height}+{x0}+{y0} outside {}x{}",
                self.width, self.height
            )));
        }
        Ok(Self::from_fn(width, height, |x, y| self.at(x0 + x, y0 + y)))
    }

    /// Errors unless the map pairs exactly with an image of size `dims`.
    pub fn ensure_pairs_with(&self, dims: (usize, usize)) -> Result<()> {
        if self.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                found: self.dims(),
            });
        }
        Ok(())
    }
}

/// Largest centred window whose sides are multiples of `multiple`.
///
/// Returns `(x0, y0, width, height)`, or `None` when a side is shorter than
/// `multiple`.
pub fn center_crop_window(
    width: usize,
    height: usize,
    multiple: usize,
) -> Option<(usize, usize, usize, usize)> {
    let w = width / multiple * multiple;
    let h = height / multiple * multiple;
    if w == 0 || h == 0 {
        return None;
    }
    Some(((width - w) / 2, (height - h) / 2, w, h))
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Validation(format!(
            "image dimensions must be at least 1x1, got {width}x{height}"
        )));
    }
    Ok(())
}
