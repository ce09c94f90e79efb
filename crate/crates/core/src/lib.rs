//! Physics-based underwater image synthesis, scene-medium decomposition and
//! restoration scoring.
//!
//! The crate is organised around the dense decomposition `I = J * T + B`:
//!
//! - [`imagecore`]: linear-light image containers, colour conversions and file I/O.
//! - [`waterops`]: medium parameter generation (Jerlov attenuation sampling,
//!   background-light extraction and clustering).
//! - [`formation`]: forward model, inversion and the information-loss gate.
//! - [`metrics`]: PSNR, SSIM, MAE, UIQM and the weighted decomposition loss.
//! - [`pipeline`]: batch orchestration behind the `seasynth` CLI.

pub mod error;
pub mod formation;
pub mod imagecore;
pub mod metrics;
pub mod pipeline;
pub mod waterops;

pub use error::{Error, Result};
pub use formation::{MediumMaps, SynthesisRecord, ValidityReport, ValidityThresholds};
pub use imagecore::{DepthMap, LabImage, LinearImage};
pub use metrics::{LossWeights, ScoreReport};
pub use waterops::{BackgroundLightLibrary, JerlovTable, MediumParams};

/// Toolkit version embedded in manifests and sidecars.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
