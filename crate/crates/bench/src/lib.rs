//! Fixtures shared by the benchmarks.

use std::path::Path;

use seasynth::imagecore::io::{write_depth, write_png};
use seasynth::imagecore::BitDepth;
use seasynth::{BackgroundLightLibrary, DepthMap, LinearImage};

pub fn scene(w: usize, h: usize, seed: usize) -> LinearImage {
    LinearImage::from_fn(w, h, |x, y| {
        let u = x as f64 / w as f64;
        let v = y as f64 / h as f64;
        let s = ((u * 17.0 + seed as f64).sin() * (v * 11.0).cos() + 1.0) / 2.0;
        [0.1 + 0.8 * s, 0.2 + 0.6 * u, 0.15 + 0.7 * v * s]
    })
}

pub fn depth(w: usize, h: usize) -> DepthMap {
    DepthMap::from_fn(w, h, |x, y| 0.5 + 3.0 * (1.0 - y as f64 / h as f64) + 0.3 * x as f64 / w as f64)
}

pub fn library() -> BackgroundLightLibrary {
    let lights = (0..20)
        .map(|i| {
            let t = i as f64 / 20.0;
            [0.05 + 0.2 * t, 0.3 + 0.2 * (1.0 - t), 0.35 + 0.3 * t]
        })
        .collect();
    BackgroundLightLibrary::from_lights(lights, vec![], 10, 0).expect("fixture lights are valid")
}

/// Writes `n` clean/depth pairs plus a library and returns the config TOML.
pub fn write_corpus(root: &Path, n: usize, size: usize) -> String {
    let images = root.join("images");
    let depths = root.join("depth");
    std::fs::create_dir_all(&images).unwrap();
    std::fs::create_dir_all(&depths).unwrap();
    for i in 0..n {
        write_png(&images.join(format!("{i:03}.png")), &scene(size, size, i), BitDepth::Eight).unwrap();
        write_depth(&depth(size, size), &depths.join(format!("{i:03}.pfm"))).unwrap();
    }
    library().save(&root.join("lights.json")).unwrap();
    format!(
        "output = {:?}\nlibrary = {:?}\n\n[[sources]]\nname = \"bench\"\nimages = {:?}\ndepths = {:?}\n",
        root.join("out"),
        root.join("lights.json"),
        images,
        depths
    )
}
