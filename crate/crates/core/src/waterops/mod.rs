//! Medium parameter generation: Jerlov-grounded attenuation, background
//! light extraction from real underwater images, and clustered sampling of
//! those lights.

pub mod jerlov;
pub mod kmeans;
pub mod library;
pub mod ulap;

use serde::{Deserialize, Serialize};

pub use jerlov::{sample_attenuation, AttenuationConfig, AttenuationDraw, JerlovTable, WaterType};
pub use kmeans::{kmeans, KMeansConfig, KMeansResult};
pub use library::{build_light_library, sample_background_light, BackgroundLightLibrary, LibraryConfig};
pub use ulap::{extract_background_light, ulap_depth, UlapCoefficients};

/// Physical parameters of a homogeneous water column, per RGB channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumParams {
    /// Attenuation of the direct signal, 1/m.
    #[serde(rename = "beta_D")]
    pub beta_d: [f64; 3],
    /// Backscatter coefficient, 1/m.
    #[serde(rename = "beta_B")]
    pub beta_b: [f64; 3],
    /// Veiling light at infinite distance, linear RGB.
    pub b_inf: [f64; 3],
}
