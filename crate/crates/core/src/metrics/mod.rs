//! Full-reference and reference-free quality metrics, and the weighted
//! decomposition loss used to score restorations.

pub mod ssim;
pub mod uiqm;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::formation::{compose, MediumMaps};
use crate::imagecore::LinearImage;

pub use ssim::{ssim, ssim_with, SsimConfig};
pub use uiqm::{uiqm, uiqm_srgb, UiqmComponents, UiqmWeights};

fn bitwise_equal(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

fn psnr_slices(a: &[f64], b: &[f64], peak: f64) -> f64 {
    if bitwise_equal(a, b) {
        return f64::INFINITY;
    }
    let mse = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64;
    // Inputs that differ only in the sign of zero still get a finite score.
    10.0 * (peak * peak / mse.max(f64::MIN_POSITIVE)).log10()
}

fn mae_slices(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

/// Peak signal-to-noise ratio in dB. Bitwise-identical inputs give `+inf`.
pub fn psnr(a: &LinearImage, b: &LinearImage, peak: f64) -> Result<f64> {
    a.ensure_same_dims(b.dims())?;
    Ok(psnr_slices(a.data(), b.data(), peak))
}

/// Mean absolute error over all pixels and channels.
pub fn mae(a: &LinearImage, b: &LinearImage) -> Result<f64> {
    a.ensure_same_dims(b.dims())?;
    Ok(mae_slices(a.data(), b.data()))
}

pub fn l1_loss(a: &LinearImage, b: &LinearImage) -> Result<f64> {
    mae(a, b)
}

/// `L1 + (1 - SSIM)`.
pub fn image_loss(a: &LinearImage, b: &LinearImage) -> Result<f64> {
    Ok(l1_loss(a, b)? + (1.0 - ssim(a, b)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    #[serde(rename = "lambda_J")]
    pub lambda_j: f64,
    #[serde(rename = "lambda_T")]
    pub lambda_t: f64,
    #[serde(rename = "lambda_B")]
    pub lambda_b: f64,
    #[serde(rename = "lambda_L")]
    pub lambda_l: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_j: 1.0,
            lambda_t: 0.5,
            lambda_b: 0.5,
            lambda_l: 0.4,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.lambda_j, self.lambda_t, self.lambda_b, self.lambda_l];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config(format!("loss weights must be finite and >= 0, got {all:?}")));
        }
        Ok(())
    }
}

/// Serializes non-finite values as `null` and reads `null` back as `+inf`.
/// Absent fields stay `None`.
mod inf_as_null {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) if x.is_finite() => s.serialize_some(x),
            _ => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(Some(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY)))
    }
}

/// Per-pair scores. Fields that were not computed are omitted from JSON; a
/// PSNR of `null` is the identical-input sentinel.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    #[serde(default, skip_serializing_if = "Option::is_none", with = "inf_as_null")]
    pub psnr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bitwise_equal: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ssim: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l1: Option<f64>,
    #[serde(default, rename = "mae_T", skip_serializing_if = "Option::is_none")]
    pub mae_t: Option<f64>,
    #[serde(default, rename = "mae_B", skip_serializing_if = "Option::is_none")]
    pub mae_b: Option<f64>,
    #[serde(default, rename = "psnr_T", skip_serializing_if = "Option::is_none", with = "inf_as_null")]
    pub psnr_t: Option<f64>,
    #[serde(default, rename = "psnr_B", skip_serializing_if = "Option::is_none", with = "inf_as_null")]
    pub psnr_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uiqm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uiqm_components: Option<UiqmComponents>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_j: Option<f64>,
    #[serde(default, rename = "loss_T", skip_serializing_if = "Option::is_none")]
    pub loss_t: Option<f64>,
    #[serde(default, rename = "loss_B", skip_serializing_if = "Option::is_none")]
    pub loss_b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_uifm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub composite: Option<f64>,
    /// Reserved for externally computed neural scores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lpips: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub musiq: Option<f64>,
}

impl ScoreReport {
    /// Named numeric fields that are present, in a fixed order.
    pub fn metrics(&self) -> Vec<(&'static str, f64)> {
        let named = [
            ("psnr", self.psnr),
            ("ssim", self.ssim),
            ("l1", self.l1),
            ("psnr_T", self.psnr_t),
            ("mae_T", self.mae_t),
            ("psnr_B", self.psnr_b),
            ("mae_B", self.mae_b),
            ("uiqm", self.uiqm),
            ("loss_J", self.loss_j),
            ("loss_T", self.loss_t),
            ("loss_B", self.loss_b),
            ("loss_UIFM", self.loss_uifm),
            ("composite", self.composite),
        ];
        named.into_iter().filter_map(|(n, v)| v.map(|v| (n, v))).collect()
    }
}

/// PSNR, SSIM and L1 of a restoration against its reference.
pub fn full_reference(pred: &LinearImage, reference: &LinearImage) -> Result<ScoreReport> {
    pred.ensure_same_dims(reference.dims())?;
    Ok(ScoreReport {
        psnr: Some(psnr(pred, reference, 1.0)?),
        bitwise_equal: Some(bitwise_equal(pred.data(), reference.data())),
        ssim: Some(ssim(pred, reference)?),
        l1: Some(mae(pred, reference)?),
        ..Default::default()
    })
}

/// Reference-free UIQM score.
pub fn reference_free(img: &LinearImage, weights: &UiqmWeights) -> ScoreReport {
    let c = uiqm(img, weights);
    ScoreReport {
        uiqm: Some(c.uiqm),
        uiqm_components: Some(c),
        ..Default::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumScores {
    #[serde(rename = "psnr_T")]
    pub psnr_t: f64,
    #[serde(rename = "mae_T")]
    pub mae_t: f64,
    #[serde(rename = "psnr_B")]
    pub psnr_b: f64,
    #[serde(rename = "mae_B")]
    pub mae_b: f64,
}

impl From<MediumScores> for ScoreReport {
    fn from(m: MediumScores) -> Self {
        ScoreReport {
            psnr_t: Some(m.psnr_t),
            mae_t: Some(m.mae_t),
            psnr_b: Some(m.psnr_b),
            mae_b: Some(m.mae_b),
            ..Default::default()
        }
    }
}

/// PSNR and MAE of predicted transmission and backscatter maps.
pub fn evaluate_medium(pred: &MediumMaps, gt: &MediumMaps) -> Result<MediumScores> {
    let (pt, gt_t) = (&pred.transmission, &gt.transmission);
    let (pb, gt_b) = (&pred.backscatter, &gt.backscatter);
    Ok(MediumScores {
        psnr_t: psnr(pt, gt_t, 1.0)?,
        mae_t: mae(pt, gt_t)?,
        psnr_b: psnr(pb, gt_b, 1.0)?,
        mae_b: mae(pb, gt_b)?,
    })
}

/// A scene/medium decomposition: clean radiance plus medium maps.
#[derive(Debug, Clone, Copy)]
pub struct Decomposition<'a> {
    pub clean: &'a LinearImage,
    pub maps: &'a MediumMaps,
}

/// `lambda_J L_J + lambda_T L_T + lambda_B L_B + lambda_L L_UIFM`, where every
/// term is `L1 + (1 - SSIM)` and `L_UIFM` compares the recomposition of the
/// prediction with the observed input.
pub fn composite_loss(
    pred: Decomposition<'_>,
    gt: Decomposition<'_>,
    input: &LinearImage,
    w: &LossWeights,
) -> Result<ScoreReport> {
    w.validate()?;
    let dims = input.dims();
    for d in [pred.clean.dims(), pred.maps.dims(), gt.clean.dims(), gt.maps.dims()] {
        if d != dims {
            return Err(Error::DimensionMismatch { expected: dims, found: d });
        }
    }
    let loss_j = image_loss(pred.clean, gt.clean)?;
    let loss_t = image_loss(&pred.maps.transmission, &gt.maps.transmission)?;
    let loss_b = image_loss(&pred.maps.backscatter, &gt.maps.backscatter)?;
    let loss_uifm = image_loss(&compose(pred.clean, pred.maps)?, input)?;
    let composite = w.lambda_j * loss_j + w.lambda_t * loss_t + w.lambda_b * loss_b + w.lambda_l * loss_uifm;
    Ok(ScoreReport {
        loss_j: Some(loss_j),
        loss_t: Some(loss_t),
        loss_b: Some(loss_b),
        loss_uifm: Some(loss_uifm),
        composite: Some(composite),
        ..Default::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise(w: usize, h: usize, seed: u64) -> LinearImage {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        LinearImage::from_fn(w, h, |_, _| {
            let mut next = || {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 11) as f64 / (1u64 << 53) as f64
            };
            [next(), next(), next()]
        })
    }

    #[test]
    fn psnr_closed_forms() {
        let a = LinearImage::filled(8, 8, [0.5; 3]);
        let b = a.map_pixels(|p| p.map(|v| v - 0.1));
        assert!((psnr(&a, &b, 1.0).unwrap() - 20.0).abs() < 1e-9);
        let c = a.map_pixels(|p| p.map(|v| v + 0.01));
        assert!((psnr(&a, &c, 1.0).unwrap() - 40.0).abs() < 1e-9);
        assert_eq!(psnr(&a, &a, 1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn psnr_is_symmetric_and_checks_dims() {
        let a = noise(9, 7, 1);
        let b = noise(9, 7, 2);
        assert_eq!(psnr(&a, &b, 1.0).unwrap(), psnr(&b, &a, 1.0).unwrap());
        assert!(psnr(&a, &noise(7, 9, 2), 1.0).is_err());
    }

    #[test]
    fn signed_zero_is_not_identical() {
        let a = LinearImage::filled(2, 2, [0.0; 3]);
        let b = LinearImage::new(2, 2, vec![-0.0; 12]).unwrap();
        assert!(psnr(&a, &b, 1.0).unwrap().is_finite());
    }

    #[test]
    fn mae_matches_double_loop() {
        let a = noise(13, 11, 3);
        let b = noise(13, 11, 4);
        let mut sum = 0.0;
        for y in 0..11 {
            for x in 0..13 {
                let (p, q) = (a.pixel(x, y), b.pixel(x, y));
                for c in 0..3 {
                    sum += (p[c] - q[c]).abs();
                }
            }
        }
        assert!((mae(&a, &b).unwrap() - sum / (13.0 * 11.0 * 3.0)).abs() < 1e-12);
        let off = a.map_pixels(|p| p.map(|v| v + 0.25));
        assert!((mae(&a, &off).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn mae_triangle_inequality() {
        for s in 0..20 {
            let (a, b, c) = (noise(6, 5, s), noise(6, 5, s + 100), noise(6, 5, s + 200));
            let ab = mae(&a, &b).unwrap();
            let bc = mae(&b, &c).unwrap();
            let ac = mae(&a, &c).unwrap();
            assert!(ac <= ab + bc + 1e-15);
        }
    }

    #[test]
    fn medium_scores() {
        let t = noise(12, 12, 5).clamped();
        let b = noise(12, 12, 6).clamped();
        let gt = MediumMaps::new(t.clone(), b.clone()).unwrap();
        let same = evaluate_medium(&gt, &gt).unwrap();
        assert_eq!(same.mae_t, 0.0);
        assert_eq!(same.psnr_t, f64::INFINITY);

        let shifted = MediumMaps::new(t.map_pixels(|p| p.map(|v| v + 0.06)), b.clone()).unwrap();
        let s = evaluate_medium(&shifted, &gt).unwrap();
        assert!((s.mae_t - 0.06).abs() < 1e-12);
        assert_eq!(s.psnr_t, psnr(&shifted.transmission, &t, 1.0).unwrap());
        assert_eq!(s.mae_b, 0.0);
    }

    #[test]
    fn report_json_uses_null_for_identical() {
        let a = noise(12, 12, 7);
        let r = full_reference(&a, &a).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"psnr\":null"));
        assert!(json.contains("\"bitwise_equal\":true"));
        assert!(!json.contains("uiqm"));
        let back: ScoreReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.psnr, Some(f64::INFINITY));
        assert_eq!(back, r);
    }

    #[test]
    fn weights_reject_negatives() {
        assert!(LossWeights::default().validate().is_ok());
        let w = LossWeights {
            lambda_t: -0.1,
            ..Default::default()
        };
        assert!(w.validate().is_err());
        let json = serde_json::to_string(&LossWeights::default()).unwrap();
        assert_eq!(json, r#"{"lambda_J":1.0,"lambda_T":0.5,"lambda_B":0.5,"lambda_L":0.4}"#);
    }

    #[test]
    fn constant_error_composite_matches_hand_computation() {
        // Constant fields: SSIM has zero variances, so each term reduces to
        // |d| + 1 - (2 mu_p mu_g + C1) / (mu_p^2 + mu_g^2 + C1).
        let c1 = 1e-4;
        let term = |p: f64, g: f64| (p - g).abs() + 1.0 - (2.0 * p * g + c1) / (p * p + g * g + c1);
        let f = |v: f64| LinearImage::filled(16, 16, [v; 3]);
        let (gj, gt, gb) = (0.5, 0.6, 0.2);
        let (pj, pt, pb) = (0.4, 0.5, 0.3);
        let input = f(0.5);
        let gt_maps = MediumMaps::new(f(gt), f(gb)).unwrap();
        let pred_maps = MediumMaps::new(f(pt), f(pb)).unwrap();
        let gt_j = f(gj);
        let pred_j = f(pj);
        let r = composite_loss(
            Decomposition { clean: &pred_j, maps: &pred_maps },
            Decomposition { clean: &gt_j, maps: &gt_maps },
            &input,
            &LossWeights::default(),
        )
        .unwrap();
        let recon = pj * pt + pb;
        let expected = term(pj, gj) + 0.5 * term(pt, gt) + 0.5 * term(pb, gb) + 0.4 * term(recon, 0.5);
        assert!((r.composite.unwrap() - expected).abs() < 1e-9);
    }
}
