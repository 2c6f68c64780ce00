//! Pixel and feature-space distortion measures, the anchor normalization that
//! maps feature distortions onto the SSE scale, and the hybrid blend.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::frame::Block;
use crate::net::FeatureMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DistortionKind {
    Sse,
    Fsse,
    Fsad,
    Hfsse,
    Hfsad,
}

/// Element-wise error used in feature space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FeatureMetric {
    Fsse,
    Fsad,
}

impl DistortionKind {
    pub const ALL: [DistortionKind; 5] = [
        DistortionKind::Sse,
        DistortionKind::Fsse,
        DistortionKind::Fsad,
        DistortionKind::Hfsse,
        DistortionKind::Hfsad,
    ];

    pub fn feature_metric(self) -> Option<FeatureMetric> {
        match self {
            DistortionKind::Sse => None,
            DistortionKind::Fsse | DistortionKind::Hfsse => Some(FeatureMetric::Fsse),
            DistortionKind::Fsad | DistortionKind::Hfsad => Some(FeatureMetric::Fsad),
        }
    }

    pub fn uses_features(self) -> bool {
        self != DistortionKind::Sse
    }

    pub fn is_hybrid(self) -> bool {
        matches!(self, DistortionKind::Hfsse | DistortionKind::Hfsad)
    }

    pub fn name(self) -> &'static str {
        match self {
            DistortionKind::Sse => "sse",
            DistortionKind::Fsse => "fsse",
            DistortionKind::Fsad => "fsad",
            DistortionKind::Hfsse => "hfsse",
            DistortionKind::Hfsad => "hfsad",
        }
    }
}

impl fmt::Display for DistortionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistortionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DistortionKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown distortion kind {s:?}")))
    }
}

impl FeatureMetric {
    pub fn measure(self, orig: &FeatureMap, recon: &FeatureMap) -> Result<f64> {
        match self {
            FeatureMetric::Fsse => fsse(orig, recon),
            FeatureMetric::Fsad => fsad(orig, recon),
        }
    }
}

impl FromStr for FeatureMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fsse" => Ok(FeatureMetric::Fsse),
            "fsad" => Ok(FeatureMetric::Fsad),
            _ => Err(Error::Config(format!("unknown feature metric {s:?}"))),
        }
    }
}

/// Distortions of one candidate reconstruction.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CandidateDistortion {
    pub d_sse: f64,
    /// Raw feature distortion (FSSE or FSAD), before normalization.
    pub d_feat: f64,
    /// Feature distortion on the SSE scale; set by [`normalize_candidates`].
    pub d_feat_norm: Option<f64>,
}

impl CandidateDistortion {
    pub fn new(d_sse: f64, d_feat: f64) -> Self {
        CandidateDistortion {
            d_sse,
            d_feat,
            d_feat_norm: None,
        }
    }

    pub fn pixel_only(d_sse: f64) -> Self {
        Self::new(d_sse, 0.0)
    }
}

pub fn sse_pixel(orig: &Block, recon: &Block) -> Result<f64> {
    if !orig.same_size(recon) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            orig.width, orig.height, recon.width, recon.height
        )));
    }
    Ok(sse_samples(&orig.samples, &recon.samples) as f64)
}

pub(crate) fn sse_samples(a: &[u8], b: &[u8]) -> u64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as i32 - y as i32;
            (d * d) as u64
        })
        .sum()
}

fn check_shapes(a: &FeatureMap, b: &FeatureMap) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(Error::ShapeMismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width, a.height, a.channels, b.width, b.height, b.channels
        )))
    }
}

/// Sum of squared feature differences, accumulated in `f64`.
pub fn fsse(psi_orig: &FeatureMap, psi_recon: &FeatureMap) -> Result<f64> {
    check_shapes(psi_orig, psi_recon)?;
    Ok(psi_orig
        .values
        .iter()
        .zip(&psi_recon.values)
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum())
}

/// Sum of absolute feature differences, accumulated in `f64`.
pub fn fsad(psi_orig: &FeatureMap, psi_recon: &FeatureMap) -> Result<f64> {
    check_shapes(psi_orig, psi_recon)?;
    Ok(psi_orig
        .values
        .iter()
        .zip(&psi_recon.values)
        .map(|(&a, &b)| (a as f64 - b as f64).abs())
        .sum())
}

/// Rescales every feature distortion by `d_sse(first) / d_feat(first)`.
///
/// The first entry is the anchor: its normalized value is set to its pixel
/// SSE exactly. A zero anchor feature distortion uses a scale of 1.
pub fn normalize_candidates(cands: &mut [CandidateDistortion]) -> Result<()> {
    let (anchor, _) = cands.split_first().ok_or(Error::EmptyCandidates)?;
    let anchor_zero = anchor.d_feat == 0.0;
    let scale = if anchor_zero {
        1.0
    } else {
        anchor.d_sse / anchor.d_feat
    };
    for (i, c) in cands.iter_mut().enumerate() {
        c.d_feat_norm = Some(if i == 0 && !anchor_zero {
            c.d_sse
        } else {
            c.d_feat * scale
        });
    }
    Ok(())
}

/// The distortion that enters `J = D + λ·R` for `kind`.
pub fn effective_distortion(kind: DistortionKind, cand: &CandidateDistortion) -> Result<f64> {
    if kind == DistortionKind::Sse {
        return Ok(cand.d_sse);
    }
    let norm = cand.d_feat_norm.ok_or(Error::MissingNormalized(kind))?;
    Ok(if kind.is_hybrid() {
        0.5 * (cand.d_sse + norm)
    } else {
        norm
    })
}
