//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use seasynth::formation::{
    compose, medium_maps, restore, synthesize, synthesize_with_resampling, MediumMaps, ResampleOptions,
};
use seasynth::metrics::{
    composite_loss, image_loss, psnr, ssim, uiqm, uiqm_srgb, Decomposition, LossWeights, UiqmWeights,
};
use seasynth::pipeline::{cmd_synthesize, SynthesisConfig};
use seasynth::waterops::{kmeans, sample_attenuation, AttenuationConfig, KMeansConfig};
use seasynth::{BackgroundLightLibrary, DepthMap, JerlovTable, LinearImage, MediumParams, ValidityThresholds};

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> std::result::Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || {
        format!("took {:.1} s, limit {limit_s} s", elapsed.as_secs_f64())
    })
}

fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> LinearImage {
    LinearImage::from_fn(w, h, |_, _| [rng.random(), rng.random(), rng.random()])
}

/// Piecewise-smooth scene: a few coloured rectangles over a gradient, plus
/// mild texture, so it looks more like a photo than white noise.
fn structured_scene(rng: &mut ChaCha8Rng, w: usize, h: usize) -> LinearImage {
    let base: [f64; 3] = [rng.random_range(0.05..0.6), rng.random_range(0.05..0.6), rng.random_range(0.05..0.6)];
    let rects: Vec<([usize; 4], [f64; 3])> = (0..6)
        .map(|_| {
            let x0 = rng.random_range(0..w - 8);
            let y0 = rng.random_range(0..h - 8);
            let x1 = rng.random_range(x0 + 4..w);
            let y1 = rng.random_range(y0 + 4..h);
            let c = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
            ([x0, y0, x1, y1], c)
        })
        .collect();
    let noise: Vec<f64> = (0..w * h).map(|_| rng.random_range(-0.03..0.03)).collect();
    LinearImage::from_fn(w, h, |x, y| {
        let mut p = base.map(|b| b * (0.6 + 0.4 * y as f64 / h as f64));
        for ([x0, y0, x1, y1], c) in &rects {
            if (*x0..*x1).contains(&x) && (*y0..*y1).contains(&y) {
                p = *c;
            }
        }
        p.map(|v| (v + noise[y * w + x]).clamp(0.0, 1.0))
    })
}

/// Water-coloured lights, clustered like a real library.
fn fixture_library(seed: u64) -> BackgroundLightLibrary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lights = (0..40)
        .map(|_| {
            [
                rng.random_range(0.01..0.25),
                rng.random_range(0.15..0.6),
                rng.random_range(0.2..0.7),
            ]
        })
        .collect();
    BackgroundLightLibrary::from_lights(lights, vec![], 10, seed).unwrap()
}

fn random_params(rng: &mut ChaCha8Rng, table: &JerlovTable, lib: &BackgroundLightLibrary) -> MediumParams {
    let d = sample_attenuation(table, rng, &AttenuationConfig::default());
    MediumParams {
        beta_d: d.beta_d,
        beta_b: d.beta_b,
        b_inf: lib.sample(rng),
    }
}

/// 1. `I = J * T + B` on 1000 random 64x64 records, with T and B recomputed
/// independently from the closed forms.
fn formation_identity() -> Check {
    let start = Instant::now();
    let table = JerlovTable::embedded();
    let lib = fixture_library(1);
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let clean = random_image(&mut rng, 64, 64);
        let (z0, z1) = (rng.random_range(0.1..2.0), rng.random_range(2.0..15.0));
        let depth = DepthMap::from_fn(64, 64, |x, y| z0 + (z1 - z0) * (x + y) as f64 / 126.0);
        let p = random_params(&mut rng, &table, &lib);
        let rec = synthesize(&clean, &depth, &p, &ValidityThresholds::default()).map_err(|e| e.to_string())?;
        worst = worst.max(rec.compose_residual());
        for y in 0..64 {
            for x in 0..64 {
                let (z, j, i) = (depth.at(x, y), clean.pixel(x, y), rec.underwater.pixel(x, y));
                for c in 0..3 {
                    let t = (-p.beta_d[c] * z).exp();
                    let b = p.b_inf[c] * (1.0 - (-p.beta_b[c] * z).exp());
                    worst = worst.max((i[c] - (j[c] * t + b)).abs());
                }
            }
        }
    }
    ensure(worst <= 1e-6, || format!("max residual {worst:e}"))?;
    within(start.elapsed(), 10.0)?;
    Ok(format!("max residual {worst:.2e} over 1000 records"))
}

/// 2. restore(synthesize(J)) on 200 random 128x128 fixtures with T >= 0.05.
fn inversion_round_trip() -> Check {
    let start = Instant::now();
    let table = JerlovTable::embedded();
    let lib = fixture_library(2);
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = f64::INFINITY;
    for _ in 0..200 {
        let clean = random_image(&mut rng, 128, 128);
        let p = random_params(&mut rng, &table, &lib);
        // Deepest point keeps every channel at T >= 0.05.
        let beta_max = p.beta_d.iter().copied().fold(0.0, f64::max);
        let z_max = (20.0f64).ln() / beta_max;
        let depth = DepthMap::from_fn(128, 128, |x, y| {
            z_max * (0.01 + 0.99 * ((x * 31 + y * 17) % 128) as f64 / 127.0)
        });
        let rec = synthesize(&clean, &depth, &p, &ValidityThresholds::default()).map_err(|e| e.to_string())?;
        let t_min = rec.maps.transmission.data().iter().copied().fold(1.0, f64::min);
        ensure(t_min >= 0.05 - 1e-12, || format!("fixture has T = {t_min}"))?;
        let r = restore(&rec.underwater, &rec.maps, 0.05).map_err(|e| e.to_string())?;
        let db = psnr(&r.image, &clean, 1.0).map_err(|e| e.to_string())?;
        worst = worst.min(db);
    }
    ensure(worst >= 60.0, || format!("worst PSNR {worst:.2} dB"))?;
    within(start.elapsed(), 30.0)?;
    Ok(format!("worst PSNR {worst:.1} dB over 200 fixtures"))
}

/// 3. Farther plane: weaker transmission, stronger backscatter, per channel.
fn depth_monotonicity() -> Check {
    let table = JerlovTable::embedded();
    let lib = fixture_library(3);
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for draw in 0..100 {
        let p = random_params(&mut rng, &table, &lib);
        let near = rng.random_range(0.2..3.0);
        let far = near + rng.random_range(0.5..10.0);
        let depth = DepthMap::from_fn(32, 16, |x, _| if x < 16 { near } else { far });
        let maps = medium_maps(&depth, &p);
        let mean = |img: &LinearImage, left: bool, c: usize| {
            let xs = if left { 0..16 } else { 16..32 };
            let mut s = 0.0;
            for y in 0..16 {
                for x in xs.clone() {
                    s += img.pixel(x, y)[c];
                }
            }
            s / 256.0
        };
        for c in 0..3 {
            let (tn, tf) = (mean(&maps.transmission, true, c), mean(&maps.transmission, false, c));
            let (bn, bf) = (mean(&maps.backscatter, true, c), mean(&maps.backscatter, false, c));
            ensure(tf < tn && bf > bn, || {
                format!("draw {draw} channel {c}: T {tn}->{tf}, B {bn}->{bf}")
            })?;
        }
    }
    Ok("100 draws, all channels monotone".into())
}

/// 4. Rails, water-type frequencies, and the saturation fallback.
fn jerlov_and_gate() -> Check {
    let table = JerlovTable::embedded();
    let cfg = AttenuationConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut counts = [0usize; 10];
    for _ in 0..10_000 {
        let d = sample_attenuation(&table, &mut rng, &cfg);
        counts[d.water_type] += 1;
        for b in d.beta_d.iter().chain(&d.beta_b) {
            ensure(*b > cfg.beta_min && *b <= cfg.beta_max, || format!("beta {b} outside rails"))?;
        }
    }
    let freqs: Vec<f64> = counts.iter().map(|&n| n as f64 / 10_000.0).collect();
    ensure(freqs.iter().all(|f| (f - 0.1).abs() <= 0.02), || format!("frequencies {freqs:?}"))?;

    let lib = fixture_library(4);
    let opts = ResampleOptions::default();
    let clean = LinearImage::filled(16, 16, [0.5; 3]);
    let abyss = DepthMap::constant(16, 16, 500.0);
    for _ in 0..100 {
        let rec = synthesize_with_resampling(&clean, &abyss, &table, &lib, &mut rng, &opts).map_err(|e| e.to_string())?;
        ensure(!rec.validity.accepted && rec.validity.resample_count == opts.max_attempts, || {
            format!("saturated record {:?}", rec.validity)
        })?;
    }
    let (lo, hi) = freqs.iter().fold((1.0f64, 0.0f64), |(l, h), &f| (l.min(f), h.max(f)));
    Ok(format!(
        "10000 draws in rails, type frequencies {lo:.4}..{hi:.4}; 100/100 saturated records rejected after {} attempts",
        opts.max_attempts
    ))
}

fn exhaustive_two_means(points: &[[f64; 2]]) -> (f64, Vec<[f64; 2]>) {
    let n = points.len();
    let mut best = (f64::INFINITY, Vec::new());
    for mask in 1u32..(1 << (n - 1)) {
        let m = mask << 1;
        let mut sums = [[0.0; 2]; 2];
        let mut cnt = [0.0; 2];
        for (i, p) in points.iter().enumerate() {
            let g = ((m >> i) & 1) as usize;
            sums[g][0] += p[0];
            sums[g][1] += p[1];
            cnt[g] += 1.0;
        }
        let c = [0, 1].map(|g| [sums[g][0] / cnt[g], sums[g][1] / cnt[g]]);
        let cost: f64 = points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let q = c[((m >> i) & 1) as usize];
                (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)
            })
            .sum();
        if cost < best.0 {
            best = (cost, c.to_vec());
        }
    }
    best
}

/// 5. Two-blob k-means vs exhaustive partition search.
fn kmeans_oracle() -> Check {
    let mut worst: f64 = 0.0;
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let pts: Vec<[f64; 2]> = (0..20)
            .map(|i| {
                let c = if i < 10 { [-15.0, 10.0] } else { [12.0, -6.0] };
                [c[0] + rng.random_range(-4.0..4.0), c[1] + rng.random_range(-4.0..4.0)]
            })
            .collect();
        let (_, mut want) = exhaustive_two_means(&pts);
        let cfg = KMeansConfig::new(2, seed);
        let r = kmeans(&pts, &cfg);
        let again = kmeans(&pts, &cfg);
        let bytes = |x: &seasynth::waterops::KMeansResult| serde_json::to_vec(x).unwrap();
        ensure(bytes(&r) == bytes(&again), || format!("seed {seed}: reruns differ"))?;
        ensure(
            r.objective_history.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].max(1.0)),
            || format!("seed {seed}: objective increased {:?}", r.objective_history),
        )?;
        let mut got = r.centroids.clone();
        got.sort_by(|a, b| a[0].total_cmp(&b[0]));
        want.sort_by(|a, b| a[0].total_cmp(&b[0]));
        for (g, w) in got.iter().zip(&want) {
            worst = worst.max((g[0] - w[0]).abs()).max((g[1] - w[1]).abs());
        }
    }
    ensure(worst <= 1e-6, || format!("centroid error {worst:e}"))?;
    Ok(format!("5 fixtures, centroid error {worst:.1e}, monotone, byte-identical reruns"))
}

/// 6. PSNR, SSIM and UIQM closed forms and reference values.
fn metric_oracles() -> Check {
    let a = LinearImage::filled(32, 32, [0.6; 3]);
    let b = a.map_pixels(|p| p.map(|v| v - 0.1));
    let db = psnr(&a, &b, 1.0).map_err(|e| e.to_string())?;
    ensure((db - 20.0).abs() <= 1e-9, || format!("uniform 0.1 error gives {db} dB"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(606);
    for _ in 0..20 {
        let img = random_image(&mut rng, 40, 33);
        let s = ssim(&img, &img).map_err(|e| e.to_string())?;
        ensure(s == 1.0, || format!("ssim(a, a) = {s}"))?;
    }
    let (mx, my) = (0.25, 0.8);
    let s = ssim(&LinearImage::filled(20, 20, [mx; 3]), &LinearImage::filled(20, 20, [my; 3])).map_err(|e| e.to_string())?;
    let c1 = 0.01f64.powi(2);
    let expected = (2.0 * mx * my + c1) / (mx * mx + my * my + c1);
    ensure((s - expected).abs() <= 1e-9, || format!("constant-field ssim {s} vs {expected}"))?;

    let gray = uiqm(&LinearImage::filled(64, 64, [0.3; 3]), &UiqmWeights::default());
    ensure(gray.uiqm == 0.0, || format!("constant image uiqm {}", gray.uiqm))?;
    let board = uiqm_srgb(&common::checkerboard(), &UiqmWeights::default()).uiqm;
    let reference = 4.755268633142;
    ensure((board - reference).abs() <= 1e-3, || format!("checkerboard uiqm {board} vs {reference}"))?;
    Ok(format!("psnr {db:.12} dB, ssim exact, checkerboard uiqm {board:.6} (ref {reference})"))
}

/// 7. Weighted decomposition loss: zero, linearity, reconstruction isolation.
fn composite_loss_checks() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let j = random_image(&mut rng, 24, 24);
    let maps = MediumMaps::new(random_image(&mut rng, 24, 24), random_image(&mut rng, 24, 24).map_pixels(|p| p.map(|v| v * 0.5)))
        .map_err(|e| e.to_string())?;
    let input = compose(&j, &maps).map_err(|e| e.to_string())?;
    let gt = Decomposition { clean: &j, maps: &maps };
    let w = LossWeights::default();
    let perfect = composite_loss(gt, gt, &input, &w).map_err(|e| e.to_string())?;
    ensure(perfect.composite == Some(0.0), || format!("perfect prediction scores {:?}", perfect.composite))?;

    let pj = random_image(&mut rng, 24, 24);
    let pmaps = MediumMaps::new(random_image(&mut rng, 24, 24), random_image(&mut rng, 24, 24)).map_err(|e| e.to_string())?;
    let pred = Decomposition { clean: &pj, maps: &pmaps };
    let base = composite_loss(pred, gt, &input, &w).map_err(|e| e.to_string())?;
    let doubled = composite_loss(pred, gt, &input, &LossWeights { lambda_t: 2.0 * w.lambda_t, ..w }).map_err(|e| e.to_string())?;
    let t_contrib = w.lambda_t * base.loss_t.unwrap();
    let gap = (doubled.composite.unwrap() - base.composite.unwrap() - t_contrib).abs();
    ensure(gap <= 1e-12, || format!("lambda_T linearity gap {gap:e}"))?;

    let real = random_image(&mut rng, 24, 24);
    let recon_only = composite_loss(gt, gt, &real, &w).map_err(|e| e.to_string())?;
    let l_uifm = image_loss(&input, &real).map_err(|e| e.to_string())?;
    ensure(recon_only.composite == Some(w.lambda_l * l_uifm), || {
        format!("reconstruction-only {:?} vs {}", recon_only.composite, w.lambda_l * l_uifm)
    })?;
    Ok(format!("perfect = 0, linearity gap {gap:.1e}, reconstruction-only = lambda_L * {l_uifm:.6}"))
}

fn sidecar_bytes(out: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(out.join("samples")).unwrap() {
        let p = entry.unwrap().path();
        files.insert(p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap());
    }
    files
}

/// 8. Same seed, 1 vs 8 workers: byte-identical outputs.
fn pipeline_determinism() -> Check {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (images, depths) = common::write_corpus(&tmp.path().join("corpus"), 16, 256, 192);
    let lib = tmp.path().join("lights.json");
    fixture_library(8).save(&lib).map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for workers in [1, 8] {
        let out = tmp.path().join(format!("out_{workers}"));
        let mut cfg = SynthesisConfig::parse(&common::config_toml(&out, &lib, &images, &depths, 1, 2024))
            .map_err(|e| e.to_string())?;
        cfg.workers = workers;
        let s = cmd_synthesize(&cfg, false, false).map_err(|e| e.to_string())?;
        ensure(s.entries == 16, || format!("{} entries", s.entries))?;
        outputs.push(sidecar_bytes(&out));
    }
    let sidecars = |m: &BTreeMap<String, Vec<u8>>| m.iter().filter(|(k, _)| k.ends_with(".json")).count();
    ensure(sidecars(&outputs[0]) == 16, || "missing sidecars".into())?;
    let differing: Vec<&String> = outputs[0]
        .iter()
        .filter(|(k, v)| outputs[1].get(*k) != Some(*v))
        .map(|(k, _)| k)
        .collect();
    ensure(differing.is_empty() && outputs[0].len() == outputs[1].len(), || {
        format!("files differ between worker counts: {differing:?}")
    })?;
    within(start.elapsed(), 60.0)?;
    Ok(format!("16 sidecars and {} files byte-identical", outputs[0].len()))
}

/// 9. The medium lowers UIQM for most synthesized pairs.
fn directional_sanity() -> Check {
    let table = JerlovTable::embedded();
    let lib = fixture_library(9);
    let opts = ResampleOptions::default();
    let w = UiqmWeights::default();
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut wins = 0;
    for _ in 0..200 {
        let clean = structured_scene(&mut rng, 64, 64);
        let (z0, z1) = (rng.random_range(0.5..2.0), rng.random_range(3.0..10.0));
        let depth = DepthMap::from_fn(64, 64, |x, y| z0 + (z1 - z0) * (1.0 - y as f64 / 63.0) + 0.01 * x as f64);
        let rec = synthesize_with_resampling(&clean, &depth, &table, &lib, &mut rng, &opts).map_err(|e| e.to_string())?;
        if uiqm(&clean, &w).uiqm > uiqm(&rec.underwater, &w).uiqm {
            wins += 1;
        }
    }
    let rate = wins as f64 / 200.0;
    ensure(rate >= 0.8, || format!("clean scored higher in {wins}/200 pairs"))?;
    Ok(format!("clean scored higher in {wins}/200 pairs ({:.1}%)", rate * 100.0))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("formation identity", formation_identity),
        ("inversion round trip", inversion_round_trip),
        ("depth monotonicity", depth_monotonicity),
        ("jerlov sampling and validity gate", jerlov_and_gate),
        ("k-means oracle", kmeans_oracle),
        ("metric oracles", metric_oracles),
        ("composite loss", composite_loss_checks),
        ("pipeline determinism", pipeline_determinism),
        ("directional sanity", directional_sanity),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS  [{}] {name}: {detail} ({secs:.2} s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL  [{}] {name}: {detail} ({secs:.2} s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
