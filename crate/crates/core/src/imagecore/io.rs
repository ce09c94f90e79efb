//! File formats: PNG/JPEG (sRGB), OpenEXR (linear float), PFM, and 16-bit
//! PNG depth with a JSON `{scale, offset}` sidecar.

use std::fs;
use std::io::{Cursor, Write};
use std::path::{Path, PathBuf};

use exr::prelude::{self as exrp, ReadChannels, ReadLayers, WritableImage};
use image::{DynamicImage, ImageEncoder};
use serde::{Deserialize, Serialize};

use super::color::{self, BitDepth, SrgbImage};
use super::{DepthMap, LinearImage};
use crate::error::{Error, Result};

/// What to do with nonpositive or nonfinite depth samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepthPolicy {
    /// Reject the whole map.
    #[default]
    Strict,
    /// Replace invalid samples with the smallest valid depth in the map.
    Repair,
}

/// Scale and offset mapping 16-bit PNG depth codes to meters:
/// `z = code / 65535 * scale + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthSidecar {
    pub scale: f64,
    #[serde(default)]
    pub offset: f64,
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn decode_err(what: &str, reason: impl ToString) -> Error {
    Error::Decode {
        what: what.to_string(),
        reason: reason.to_string(),
    }
}

fn encode_err(what: &str, reason: impl ToString) -> Error {
    Error::Encode {
        what: what.to_string(),
        reason: reason.to_string(),
    }
}

// ---------------------------------------------------------------------------
// sRGB raster formats

/// Decodes a PNG or JPEG buffer, keeping 16-bit precision when present.
pub fn decode_srgb(bytes: &[u8]) -> Result<SrgbImage> {
    let img = image::load_from_memory(bytes).map_err(|e| decode_err("image", e))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let sixteen = matches!(
        img,
        DynamicImage::ImageLuma16(_)
            | DynamicImage::ImageLumaA16(_)
            | DynamicImage::ImageRgb16(_)
            | DynamicImage::ImageRgba16(_)
    );
    if sixteen {
        let codes = img.to_rgb16().into_raw();
        SrgbImage::new(w, h, BitDepth::Sixteen, codes)
    } else {
        let codes = img.to_rgb8().into_raw().into_iter().map(u16::from).collect();
        SrgbImage::new(w, h, BitDepth::Eight, codes)
    }
}

pub fn encode_png(img: &SrgbImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let encoder = image::codecs::png::PngEncoder::new(&mut out);
    let (w, h) = (img.width as u32, img.height as u32);
    match img.depth {
        BitDepth::Eight => {
            let raw: Vec<u8> = img.codes.iter().map(|&c| c as u8).collect();
            encoder.write_image(&raw, w, h, image::ExtendedColorType::Rgb8)
        }
        BitDepth::Sixteen => {
            // PNG stores 16-bit samples big-endian; the encoder expects native order.
            let raw: Vec<u8> = img.codes.iter().flat_map(|c| c.to_ne_bytes()).collect();
            encoder.write_image(&raw, w, h, image::ExtendedColorType::Rgb16)
        }
    }
    .map_err(|e| encode_err("png", e))?;
    Ok(out)
}

fn encode_gray_png(width: usize, height: usize, codes: &[u16], depth: BitDepth) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let encoder = image::codecs::png::PngEncoder::new(&mut out);
    let (w, h) = (width as u32, height as u32);
    match depth {
        BitDepth::Eight => {
            let raw: Vec<u8> = codes.iter().map(|&c| c as u8).collect();
            encoder.write_image(&raw, w, h, image::ExtendedColorType::L8)
        }
        BitDepth::Sixteen => {
            let raw: Vec<u8> = codes.iter().flat_map(|c| c.to_ne_bytes()).collect();
            encoder.write_image(&raw, w, h, image::ExtendedColorType::L16)
        }
    }
    .map_err(|e| encode_err("png", e))?;
    Ok(out)
}

/// Writes a binary mask as an 8-bit grayscale PNG (255 = set).
pub fn write_mask_png(path: &Path, width: usize, height: usize, mask: &[bool]) -> Result<()> {
    let codes: Vec<u16> = mask.iter().map(|&m| if m { 255 } else { 0 }).collect();
    write_atomic(path, &encode_gray_png(width, height, &codes, BitDepth::Eight)?)
}

pub fn write_png(path: &Path, img: &LinearImage, depth: BitDepth) -> Result<()> {
    write_atomic(path, &encode_png(&color::linear_to_srgb(img, depth))?)
}

/// Reads an RGB image into linear light.
///
/// EXR files are taken as already linear. PNG/JPEG codes go through the
/// sRGB decoding curve unless `assume_linear` is set, in which case they are
/// only normalized.
pub fn read_linear(path: &Path, assume_linear: bool) -> Result<LinearImage> {
    let bytes = read_bytes(path)?;
    if extension(path) == "exr" {
        return decode_exr_rgb(&bytes);
    }
    let img = decode_srgb(&bytes)?;
    if assume_linear {
        let max = img.depth.max_code() as f64;
        let data = img.codes.iter().map(|&c| c as f64 / max).collect();
        LinearImage::new(img.width, img.height, data)
    } else {
        Ok(color::srgb_to_linear(&img))
    }
}

// ---------------------------------------------------------------------------
// OpenEXR

fn exr_layer_from_channels(
    width: usize,
    height: usize,
    channels: Vec<(&str, Vec<f32>)>,
) -> exrp::Layer<exrp::AnyChannels<exrp::FlatSamples>> {
    let list: exrp::SmallVec<[exrp::AnyChannel<exrp::FlatSamples>; 4]> = channels
        .into_iter()
        .map(|(name, samples)| exrp::AnyChannel::new(name, exrp::FlatSamples::F32(samples)))
        .collect();
    exrp::Layer::new(
        (width, height),
        exrp::LayerAttributes::default(),
        exrp::Encoding::FAST_LOSSLESS,
        exrp::AnyChannels::sort(list),
    )
}

fn encode_exr_layer(layer: exrp::Layer<exrp::AnyChannels<exrp::FlatSamples>>) -> Result<Vec<u8>> {
    let image = exrp::Image::from_layer(layer);
    let mut cursor = Cursor::new(Vec::new());
    image
        .write()
        .non_parallel()
        .to_buffered(&mut cursor)
        .map_err(|e| encode_err("exr", e))?;
    Ok(cursor.into_inner())
}

/// Encodes a linear image as 32-bit float RGB OpenEXR.
pub fn encode_exr_rgb(img: &LinearImage) -> Result<Vec<u8>> {
    let chan = |c: usize| -> Vec<f32> { img.channel(c).into_iter().map(|v| v as f32).collect() };
    encode_exr_layer(exr_layer_from_channels(
        img.width(),
        img.height(),
        vec![("R", chan(0)), ("G", chan(1)), ("B", chan(2))],
    ))
}

pub fn write_exr_rgb(path: &Path, img: &LinearImage) -> Result<()> {
    write_atomic(path, &encode_exr_rgb(img)?)
}

struct ExrPlanes {
    width: usize,
    height: usize,
    channels: Vec<(String, Vec<f32>)>,
}

fn decode_exr_planes(bytes: &[u8]) -> Result<ExrPlanes> {
    let image = exrp::read()
        .no_deep_data()
        .largest_resolution_level()
        .all_channels()
        .first_valid_layer()
        .all_attributes()
        .non_parallel()
        .from_buffered(Cursor::new(bytes))
        .map_err(|e| decode_err("exr", e))?;
    let layer = image.layer_data;
    let (width, height) = (layer.size.width(), layer.size.height());
    let channels = layer
        .channel_data
        .list
        .iter()
        .map(|ch| {
            (
                ch.name.to_string(),
                ch.sample_data.values_as_f32().collect::<Vec<f32>>(),
            )
        })
        .collect();
    Ok(ExrPlanes {
        width,
        height,
        channels,
    })
}

pub fn decode_exr_rgb(bytes: &[u8]) -> Result<LinearImage> {
    let planes = decode_exr_planes(bytes)?;
    let find = |name: &str| {
        planes
            .channels
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s)
            .ok_or_else(|| decode_err("exr", format!("missing channel {name}")))
    };
    let (r, g, b) = (find("R")?, find("G")?, find("B")?);
    let mut data = Vec::with_capacity(planes.width * planes.height * 3);
    for i in 0..planes.width * planes.height {
        data.extend_from_slice(&[r[i] as f64, g[i] as f64, b[i] as f64]);
    }
    LinearImage::new(planes.width, planes.height, data)
}

pub fn read_exr_rgb(path: &Path) -> Result<LinearImage> {
    decode_exr_rgb(&read_bytes(path)?)
}

pub fn encode_exr_gray(width: usize, height: usize, values: &[f64]) -> Result<Vec<u8>> {
    let samples = values.iter().map(|&v| v as f32).collect();
    encode_exr_layer(exr_layer_from_channels(width, height, vec![("Y", samples)]))
}

fn decode_exr_gray(bytes: &[u8]) -> Result<(usize, usize, Vec<f64>)> {
    let planes = decode_exr_planes(bytes)?;
    let samples = if planes.channels.len() == 1 {
        &planes.channels[0].1
    } else {
        ["Z", "Y", "depth", "R"]
            .iter()
            .find_map(|want| planes.channels.iter().find(|(n, _)| n == want))
            .map(|(_, s)| s)
            .ok_or_else(|| decode_err("exr", "no single depth channel"))?
    };
    Ok((
        planes.width,
        planes.height,
        samples.iter().map(|&v| v as f64).collect(),
    ))
}

// ---------------------------------------------------------------------------
// PFM

/// A decoded Portable Float Map, rows top-to-bottom.
#[derive(Debug, Clone, PartialEq)]
pub struct Pfm {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

/// Encodes a PFM in little-endian order (negative scale header).
pub fn encode_pfm(width: usize, height: usize, channels: usize, data: &[f32]) -> Vec<u8> {
    assert!(channels == 1 || channels == 3);
    assert_eq!(data.len(), width * height * channels);
    let magic = if channels == 1 { "Pf" } else { "PF" };
    let mut out = format!("{magic}\n{width} {height}\n-1.0\n").into_bytes();
    let row_len = width * channels;
    // PFM stores scanlines bottom to top.
    for row in data.chunks_exact(row_len).rev() {
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_pfm(bytes: &[u8]) -> Result<Pfm> {
    let mut pos = 0;
    let mut token = || -> Result<String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(decode_err("pfm", "truncated header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let channels = match token()?.as_str() {
        "Pf" => 1,
        "PF" => 3,
        other => return Err(decode_err("pfm", format!("bad magic {other:?}"))),
    };
    let parse_dim = |s: String| {
        s.parse::<usize>()
            .map_err(|_| decode_err("pfm", format!("bad dimension {s:?}")))
    };
    let width = parse_dim(token()?)?;
    let height = parse_dim(token()?)?;
    let scale_tok = token()?;
    let scale: f64 = scale_tok
        .parse()
        .map_err(|_| decode_err("pfm", format!("bad scale {scale_tok:?}")))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(decode_err("pfm", "scale must be nonzero"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let n = width * height * channels;
    let raster = bytes
        .get(pos..pos + n * 4)
        .ok_or_else(|| decode_err("pfm", "truncated raster"))?;
    let little = scale < 0.0;
    let values: Vec<f32> = raster
        .chunks_exact(4)
        .map(|b| {
            let b = [b[0], b[1], b[2], b[3]];
            if little {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            }
        })
        .collect();
    let row_len = width * channels;
    let data = if row_len == 0 {
        Vec::new()
    } else {
        values.chunks_exact(row_len).rev().flatten().copied().collect()
    };
    Ok(Pfm {
        width,
        height,
        channels,
        data,
    })
}

// ---------------------------------------------------------------------------
// Depth

fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn apply_policy(width: usize, height: usize, mut data: Vec<f64>, policy: DepthPolicy) -> Result<DepthMap> {
    if policy == DepthPolicy::Repair {
        let valid = |z: f64| z.is_finite() && z > 0.0;
        let floor = data
            .iter()
            .copied()
            .filter(|&z| valid(z))
            .fold(f64::INFINITY, f64::min);
        if !floor.is_finite() {
            return Err(Error::Validation(
                "depth map has no positive finite sample to repair from".into(),
            ));
        }
        for z in data.iter_mut().filter(|z| !valid(**z)) {
            *z = floor;
        }
    }
    DepthMap::new(width, height, data)
}

/// Decodes depth from an in-memory buffer. `sidecar` is required for PNG.
pub fn decode_depth(
    bytes: &[u8],
    format: &str,
    sidecar: Option<DepthSidecar>,
    policy: DepthPolicy,
) -> Result<DepthMap> {
    match format {
        "pfm" => {
            let pfm = decode_pfm(bytes)?;
            if pfm.channels != 1 {
                return Err(decode_err("pfm depth", "expected single-channel Pf"));
            }
            let data = pfm.data.iter().map(|&v| v as f64).collect();
            apply_policy(pfm.width, pfm.height, data, policy)
        }
        "exr" => {
            let (w, h, data) = decode_exr_gray(bytes)?;
            apply_policy(w, h, data, policy)
        }
        "png" => {
            let sidecar = sidecar.ok_or_else(|| {
                Error::Validation("16-bit PNG depth requires a {scale, offset} sidecar".into())
            })?;
            let img = image::load_from_memory(bytes).map_err(|e| decode_err("png depth", e))?;
            if !matches!(img, DynamicImage::ImageLuma16(_)) {
                return Err(decode_err("png depth", "expected 16-bit single-channel PNG"));
            }
            let (w, h) = (img.width() as usize, img.height() as usize);
            let data = img
                .to_luma16()
                .into_raw()
                .into_iter()
                .map(|c| c as f64 / u16::MAX as f64 * sidecar.scale + sidecar.offset)
                .collect();
            apply_policy(w, h, data, policy)
        }
        other => Err(decode_err("depth", format!("unsupported format {other:?}"))),
    }
}

/// Reads a depth map in meters from PFM, single-channel EXR, or 16-bit PNG
/// (with `<name>.json` sidecar next to it).
pub fn read_depth(path: &Path, policy: DepthPolicy) -> Result<DepthMap> {
    let format = extension(path);
    let bytes = read_bytes(path)?;
    let sidecar = if format == "png" {
        let sc = sidecar_path(path);
        let text = fs::read_to_string(&sc).map_err(|e| Error::io(&sc, e))?;
        Some(serde_json::from_str(&text)?)
    } else {
        None
    };
    decode_depth(&bytes, &format, sidecar, policy)
}

/// Reads depth and checks it pairs with an image of size `dims`.
pub fn read_depth_paired(path: &Path, policy: DepthPolicy, dims: (usize, usize)) -> Result<DepthMap> {
    let depth = read_depth(path, policy)?;
    depth.ensure_pairs_with(dims)?;
    Ok(depth)
}

pub fn encode_depth_pfm(map: &DepthMap) -> Vec<u8> {
    let data: Vec<f32> = map.data().iter().map(|&z| z as f32).collect();
    encode_pfm(map.width(), map.height(), 1, &data)
}

/// Writes depth in the format implied by the extension. PNG output uses the
/// map maximum as `scale` and zero offset.
pub fn write_depth(map: &DepthMap, path: &Path) -> Result<()> {
    match extension(path).as_str() {
        "pfm" => write_atomic(path, &encode_depth_pfm(map)),
        "exr" => write_atomic(path, &encode_exr_gray(map.width(), map.height(), map.data())?),
        "png" => {
            let scale = map.data().iter().copied().fold(0.0, f64::max);
            let codes: Vec<u16> = map
                .data()
                .iter()
                .map(|&z| (z / scale * u16::MAX as f64).round() as u16)
                .collect();
            write_atomic(
                path,
                &encode_gray_png(map.width(), map.height(), &codes, BitDepth::Sixteen)?,
            )?;
            let sidecar = DepthSidecar { scale, offset: 0.0 };
            write_atomic(&sidecar_path(path), serde_json::to_string_pretty(&sidecar)?.as_bytes())
        }
        other => Err(encode_err("depth", format!("unsupported extension {other:?}"))),
    }
}
