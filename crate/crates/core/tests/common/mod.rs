//! Fixtures shared by integration tests.
#![allow(dead_code)]

use seasynth::imagecore::color::{BitDepth, SrgbImage};

/// 64x64 two-colour checkerboard with 4-pixel squares and a small ramp.
pub fn checkerboard() -> SrgbImage {
    let size = 64;
    let mut codes = Vec::with_capacity(size * size * 3);
    for y in 0..size {
        for x in 0..size {
            let ramp = ((x + 2 * y) % 7) as u16;
            let base = if ((x / 4) + (y / 4)) % 2 == 0 { [200, 60, 40] } else { [30, 120, 210] };
            codes.extend(base.map(|b| b + ramp));
        }
    }
    SrgbImage::new(size, size, BitDepth::Eight, codes).unwrap()
}

/// 48x40 texture from a 31-bit linear congruential generator.
pub fn lcg_texture() -> SrgbImage {
    let (w, h) = (48, 40);
    let mut s: u64 = 12345;
    let mut codes = Vec::with_capacity(w * h * 3);
    for _ in 0..w * h * 3 {
        s = (s * 1103515245 + 12345) % (1 << 31);
        codes.push((20 + (s >> 16) % 200) as u16);
    }
    SrgbImage::new(w, h, BitDepth::Eight, codes).unwrap()
}

use std::path::{Path, PathBuf};

use seasynth::imagecore::io::{write_depth, write_png};
use seasynth::{BackgroundLightLibrary, DepthMap, LinearImage};

/// Deterministic textured scene; `i` varies the layout.
pub fn scene(i: usize, w: usize, h: usize) -> LinearImage {
    let f = 1.0 + (i % 5) as f64;
    LinearImage::from_fn(w, h, |x, y| {
        let u = x as f64 / w as f64;
        let v = y as f64 / h as f64;
        let s = ((u * 6.3 * f).sin() * (v * 4.1 + i as f64).cos() + 1.0) / 2.0;
        [
            0.05 + 0.85 * s,
            0.05 + 0.8 * (1.0 - u) * (0.5 + 0.5 * s),
            0.1 + 0.7 * v * (1.0 - 0.4 * s),
        ]
    })
}

/// Depth ramp from 0.5 m at the bottom to a few meters at the top.
pub fn depth_ramp(i: usize, w: usize, h: usize) -> DepthMap {
    let far = 2.0 + (i % 4) as f64;
    DepthMap::from_fn(w, h, |x, y| {
        0.5 + far * (1.0 - y as f64 / h as f64) + 0.2 * (x as f64 / w as f64)
    })
}

/// Writes `n` image/depth pairs as `images/img_XX.png` and `depth/img_XX.pfm`.
pub fn write_corpus(root: &Path, n: usize, w: usize, h: usize) -> (PathBuf, PathBuf) {
    let images = root.join("images");
    let depths = root.join("depth");
    std::fs::create_dir_all(&images).unwrap();
    std::fs::create_dir_all(&depths).unwrap();
    for i in 0..n {
        write_png(&images.join(format!("img_{i:02}.png")), &scene(i, w, h), seasynth::imagecore::BitDepth::Eight).unwrap();
        write_depth(&depth_ramp(i, w, h), &depths.join(format!("img_{i:02}.pfm"))).unwrap();
    }
    (images, depths)
}

/// Blue-green "underwater photos" with a varying water colour.
pub fn write_underwater_photos(dir: &Path, n: usize) {
    std::fs::create_dir_all(dir).unwrap();
    for i in 0..n {
        let t = i as f64 / n.max(1) as f64;
        let water = [0.02 + 0.2 * t, 0.25 + 0.3 * (1.0 - t), 0.3 + 0.4 * t];
        let img = LinearImage::from_fn(32, 24, |x, y| {
            let v = y as f64 / 24.0;
            let s = ((x * 7 + y * 3) % 11) as f64 / 11.0;
            water.map(|c| c * (1.0 - v) + (0.1 + 0.3 * s) * v * c)
        });
        write_png(&dir.join(format!("uw_{i:02}.png")), &img, seasynth::imagecore::BitDepth::Eight).unwrap();
    }
}

/// A small two-cluster library written to `path`.
pub fn write_library(path: &Path) {
    let mut lights = Vec::new();
    for i in 0..6 {
        let t = i as f64 * 0.02;
        lights.push([0.05 + t, 0.35 + t, 0.45 + t]);
        lights.push([0.2 + t, 0.45 + t, 0.25 + t]);
    }
    BackgroundLightLibrary::from_lights(lights, vec![], 2, 1).unwrap().save(path).unwrap();
}

/// Minimal synthesis config TOML for a single source.
pub fn config_toml(output: &Path, library: &Path, images: &Path, depths: &Path, samples: usize, seed: u64) -> String {
    format!(
        "output = {:?}\nlibrary = {:?}\nseed = {seed}\nsamples_per_image = {samples}\n\n[[sources]]\nname = \"fx\"\nimages = {:?}\ndepths = {:?}\n",
        output, library, images, depths
    )
}
