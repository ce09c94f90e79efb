//! Jerlov water types and attenuation sampling.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EMBEDDED_TABLE: &str = include_str!("../../data/jerlov_kd.csv");

/// Number of Jerlov water types (oceanic I, IA, IB, II, III; coastal 1, 3, 5, 7, 9).
pub const JERLOV_TYPE_COUNT: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaterType {
    pub name: String,
    /// Diffuse attenuation in 1/m at 600, 525 and 475 nm, i.e. R, G, B.
    pub kd_rgb: [f64; 3],
}

/// The ten Jerlov water types projected onto RGB, clearest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JerlovTable {
    types: Vec<WaterType>,
}

impl JerlovTable {
    /// Table shipped in `data/jerlov_kd.csv`.
    pub fn embedded() -> Self {
        Self::parse(EMBEDDED_TABLE, "jerlov_kd.csv").expect("embedded Jerlov table is valid")
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses `water_type,kd_600,kd_525,kd_475` rows; `#` starts a comment line.
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let bad = |line: usize, reason: String| Error::DataFile {
            source_name: source_name.to_string(),
            line,
            reason,
        };
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut types = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| {
                let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
                bad(line, e.to_string())
            })?;
            let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
            if record.len() != 4 {
                return Err(bad(line, format!("expected 4 fields, found {}", record.len())));
            }
            let mut kd_rgb = [0.0; 3];
            for (c, slot) in kd_rgb.iter_mut().enumerate() {
                let field = &record[c + 1];
                let v: f64 = field
                    .parse()
                    .map_err(|_| bad(line, format!("not a number: {field:?}")))?;
                if !(v.is_finite() && v > 0.0) {
                    return Err(bad(line, format!("coefficient must be positive, got {v}")));
                }
                *slot = v;
            }
            types.push(WaterType {
                name: record[0].to_string(),
                kd_rgb,
            });
        }
        if types.len() != JERLOV_TYPE_COUNT {
            return Err(bad(
                0,
                format!("expected {JERLOV_TYPE_COUNT} water types, found {}", types.len()),
            ));
        }
        Ok(Self { types })
    }

    pub fn types(&self) -> &[WaterType] {
        &self.types
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }
}

/// Jitter and physical rails applied to sampled coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttenuationConfig {
    /// Half-width of the multiplicative uniform jitter, in `[0, 0.5]`.
    pub jitter: f64,
    pub beta_min: f64,
    pub beta_max: f64,
}

impl Default for AttenuationConfig {
    fn default() -> Self {
        Self {
            jitter: 0.15,
            beta_min: 0.01,
            beta_max: 6.0,
        }
    }
}

impl AttenuationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.jitter) {
            return Err(Error::Config(format!("jitter {} outside [0, 0.5]", self.jitter)));
        }
        if !(self.beta_min > 0.0 && self.beta_min < self.beta_max && self.beta_max.is_finite()) {
            return Err(Error::Config(format!(
                "invalid beta rails ({}, {}]",
                self.beta_min, self.beta_max
            )));
        }
        Ok(())
    }

    fn clamp(&self, beta: f64) -> f64 {
        beta.clamp(self.beta_min.next_up(), self.beta_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttenuationDraw {
    /// Index into [`JerlovTable::types`].
    pub water_type: usize,
    pub beta_d: [f64; 3],
    pub beta_b: [f64; 3],
}

/// Picks a water type uniformly, then jitters its RGB triple independently
/// for the attenuation and the backscatter coefficient.
pub fn sample_attenuation<R: Rng + ?Sized>(
    table: &JerlovTable,
    rng: &mut R,
    cfg: &AttenuationConfig,
) -> AttenuationDraw {
    let water_type = rng.random_range(0..table.len());
    let kd = table.types[water_type].kd_rgb;
    let lo = 1.0 - cfg.jitter;
    let hi = 1.0 + cfg.jitter;
    let mut jittered = || {
        let mut out = [0.0; 3];
        for (o, &k) in out.iter_mut().zip(&kd) {
            *o = cfg.clamp(k * rng.random_range(lo..=hi));
        }
        out
    };
    let beta_d = jittered();
    let beta_b = jittered();
    AttenuationDraw {
        water_type,
        beta_d,
        beta_b,
    }
}
