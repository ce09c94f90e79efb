//! Forward underwater image formation, the dense decomposition
//! `I = J * T + B`, its inversion, and the information-loss gate used to
//! reject over-degraded syntheses.
//!
//! Per channel `c` and pixel depth `z`:
//!
//! ```text
//! T_c = exp(-beta_D_c * z)
//! B_c = B_inf_c * (1 - exp(-beta_B_c * z))
//! I_c = J_c * T_c + B_c
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::{DepthMap, LinearImage};
use crate::waterops::{sample_attenuation, AttenuationConfig, BackgroundLightLibrary, JerlovTable, MediumParams};

pub const DEFAULT_RESTORE_FLOOR: f64 = 0.05;
pub const DEFAULT_MAX_ATTEMPTS: usize = 10;

/// Dense per-pixel transmission `T` and backscatter `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct MediumMaps {
    pub transmission: LinearImage,
    pub backscatter: LinearImage,
}

impl MediumMaps {
    pub fn new(transmission: LinearImage, backscatter: LinearImage) -> Result<Self> {
        transmission.ensure_same_dims(backscatter.dims())?;
        Ok(Self {
            transmission,
            backscatter,
        })
    }

    /// `T = 1`, `B = 0`: water that does nothing.
    pub fn identity(width: usize, height: usize) -> Self {
        Self {
            transmission: LinearImage::filled(width, height, [1.0; 3]),
            backscatter: LinearImage::filled(width, height, [0.0; 3]),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.transmission.dims()
    }
}

fn per_channel_map(depth: &DepthMap, f: impl Fn(usize, f64) -> f64) -> LinearImage {
    let mut data = Vec::with_capacity(depth.data().len() * 3);
    for &z in depth.data() {
        data.extend_from_slice(&[f(0, z), f(1, z), f(2, z)]);
    }
    LinearImage::new(depth.width(), depth.height(), data).expect("finite medium map")
}

/// `T_c(x) = exp(-beta_D_c * z(x))`.
pub fn transmission_map(depth: &DepthMap, beta_d: [f64; 3]) -> LinearImage {
    per_channel_map(depth, |c, z| (-beta_d[c] * z).exp())
}

/// `B_c(x) = B_inf_c * (1 - exp(-beta_B_c * z(x)))`.
pub fn backscatter_map(depth: &DepthMap, beta_b: [f64; 3], b_inf: [f64; 3]) -> LinearImage {
    per_channel_map(depth, |c, z| b_inf[c] * -(-beta_b[c] * z).exp_m1())
}

pub fn medium_maps(depth: &DepthMap, params: &MediumParams) -> MediumMaps {
    MediumMaps {
        transmission: transmission_map(depth, params.beta_d),
        backscatter: backscatter_map(depth, params.beta_b, params.b_inf),
    }
}

/// `I = J * T + B`, elementwise.
pub fn compose(clean: &LinearImage, maps: &MediumMaps) -> Result<LinearImage> {
    clean.ensure_same_dims(maps.dims())?;
    let data = clean
        .data()
        .iter()
        .zip(maps.transmission.data())
        .zip(maps.backscatter.data())
        .map(|((&j, &t), &b)| j * t + b)
        .collect();
    LinearImage::new(clean.width(), clean.height(), data)
}

/// Output of [`restore`].
#[derive(Debug, Clone, PartialEq)]
pub struct Restoration {
    pub image: LinearImage,
    /// Per pixel: true when any channel's transmission was raised to the floor.
    pub floored: Vec<bool>,
}

impl Restoration {
    pub fn floored_count(&self) -> usize {
        self.floored.iter().filter(|&&f| f).count()
    }
}

/// `J = (I - B) / max(T, t_floor)`, clamped to `[0, 1]`.
pub fn restore(underwater: &LinearImage, maps: &MediumMaps, t_floor: f64) -> Result<Restoration> {
    if !(t_floor > 0.0) {
        return Err(Error::Validation(format!("t_floor must be positive, got {t_floor}")));
    }
    underwater.ensure_same_dims(maps.dims())?;
    let mut data = Vec::with_capacity(underwater.data().len());
    let mut floored = vec![false; underwater.pixel_count()];
    for (i, ((&obs, &t), &b)) in underwater
        .data()
        .iter()
        .zip(maps.transmission.data())
        .zip(maps.backscatter.data())
        .enumerate()
    {
        if t < t_floor {
            floored[i / 3] = true;
        }
        data.push(((obs - b) / t.max(t_floor)).clamp(0.0, 1.0));
    }
    Ok(Restoration {
        image: LinearImage::new(underwater.width(), underwater.height(), data)?,
        floored,
    })
}

/// Thresholds for the information-loss gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidityThresholds {
    /// A pixel is dark when its smallest channel transmission is below this.
    pub t_floor: f64,
    /// Largest accepted fraction of dark pixels (inclusive).
    pub dark_max: f64,
    /// Smallest accepted per-channel mean transmission (inclusive).
    pub t_mean_min: f64,
}

impl Default for ValidityThresholds {
    fn default() -> Self {
        Self {
            t_floor: 0.02,
            dark_max: 0.4,
            t_mean_min: 0.08,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    /// Minimum over channels of the mean transmission.
    pub min_mean_transmission: f64,
    pub dark_fraction: f64,
    pub accepted: bool,
    /// Number of rejected parameter draws before this record.
    pub resample_count: usize,
}

pub fn validity_check(maps: &MediumMaps, thresholds: &ValidityThresholds) -> ValidityReport {
    let t = &maps.transmission;
    let n = t.pixel_count() as f64;
    let mut sums = [0.0; 3];
    let mut dark = 0usize;
    for px in t.pixels() {
        for c in 0..3 {
            sums[c] += px[c];
        }
        if px[0].min(px[1]).min(px[2]) < thresholds.t_floor {
            dark += 1;
        }
    }
    let min_mean_transmission = sums.iter().map(|s| s / n).fold(f64::INFINITY, f64::min);
    let dark_fraction = dark as f64 / n;
    ValidityReport {
        min_mean_transmission,
        dark_fraction,
        accepted: dark_fraction <= thresholds.dark_max && min_mean_transmission >= thresholds.t_mean_min,
        resample_count: 0,
    }
}

/// A synthesized underwater image together with everything that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisRecord {
    pub params: MediumParams,
    /// Jerlov type index the attenuation came from, when sampled.
    pub water_type: Option<usize>,
    pub maps: MediumMaps,
    pub underwater: LinearImage,
    pub clean: LinearImage,
    pub depth: DepthMap,
    pub validity: ValidityReport,
}

impl SynthesisRecord {
    /// Largest underwater sample. Can exceed 1 when backscatter saturates
    /// faster than the direct signal decays.
    pub fn max_underwater(&self) -> f64 {
        self.underwater.data().iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max |I - (J * T + B)|`.
    pub fn compose_residual(&self) -> f64 {
        let recomposed = compose(&self.clean, &self.maps).expect("record dimensions agree");
        recomposed
            .data()
            .iter()
            .zip(self.underwater.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Renders `clean` through a water column of the given depth and parameters.
pub fn synthesize(
    clean: &LinearImage,
    depth: &DepthMap,
    params: &MediumParams,
    thresholds: &ValidityThresholds,
) -> Result<SynthesisRecord> {
    depth.ensure_pairs_with(clean.dims())?;
    let maps = medium_maps(depth, params);
    let underwater = compose(clean, &maps)?;
    let validity = validity_check(&maps, thresholds);
    let record = SynthesisRecord {
        params: *params,
        water_type: None,
        maps,
        underwater,
        clean: clean.clone(),
        depth: depth.clone(),
        validity,
    };
    let peak = record.max_underwater();
    if peak > 1.0 + 1e-6 {
        log::debug!("synthesized radiance peaks at {peak}; clamped at encode time");
    }
    Ok(record)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResampleOptions {
    pub attenuation: AttenuationConfig,
    pub thresholds: ValidityThresholds,
    pub max_attempts: usize,
}

impl Default for ResampleOptions {
    fn default() -> Self {
        Self {
            attenuation: AttenuationConfig::default(),
            thresholds: ValidityThresholds::default(),
            max_attempts: DEFAULT_MAX_ATTEMPTS,
        }
    }
}

/// Draws medium parameters until the validity gate accepts, up to
/// `max_attempts` draws. When every draw is rejected the attempt with the
/// highest `min_mean_transmission` is returned, flagged `accepted = false`
/// with `resample_count = max_attempts`.
pub fn synthesize_with_resampling<R: Rng + ?Sized>(
    clean: &LinearImage,
    depth: &DepthMap,
    table: &JerlovTable,
    library: &BackgroundLightLibrary,
    rng: &mut R,
    opts: &ResampleOptions,
) -> Result<SynthesisRecord> {
    if opts.max_attempts == 0 {
        return Err(Error::Config("max_attempts must be at least 1".into()));
    }
    depth.ensure_pairs_with(clean.dims())?;
    let mut best: Option<SynthesisRecord> = None;
    for attempt in 0..opts.max_attempts {
        let draw = sample_attenuation(table, rng, &opts.attenuation);
        let b_inf = library.sample(rng);
        let params = MediumParams {
            beta_d: draw.beta_d,
            beta_b: draw.beta_b,
            b_inf,
        };
        let mut record = synthesize(clean, depth, &params, &opts.thresholds)?;
        record.water_type = Some(draw.water_type);
        record.validity.resample_count = attempt;
        if record.validity.accepted {
            return Ok(record);
        }
        let better = best.as_ref().is_none_or(|b| {
            record.validity.min_mean_transmission > b.validity.min_mean_transmission
        });
        if better {
            best = Some(record);
        }
    }
    let mut record = best.expect("at least one attempt");
    record.validity.resample_count = opts.max_attempts;
    log::warn!(
        "no accepted medium after {} attempts; keeping best effort (min mean T = {:.4})",
        opts.max_attempts,
        record.validity.min_mean_transmission
    );
    Ok(record)
}
