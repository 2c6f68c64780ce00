//! Split-decision comparison: pixel SSE, or feature distortion normalized
//! against the first candidate, or the hybrid of both.

use std::collections::HashMap;

use crate::distortion::{sse_samples, CandidateDistortion, DistortionKind};
use crate::error::{Error, Result};
use crate::frame::Block;
use crate::net::{extract_features, FeatureMap, Network};
use crate::rdo::config::{EncoderConfig, Rect};
use crate::rdo::cost::{rd_cost, select_candidate, RdCost};

/// Index of the cheapest candidate reconstruction of `orig_region`.
///
/// The first candidate is the normalization anchor. Ties go to the lower index.
pub fn compare_candidates(
    orig_region: &Block,
    candidates: &[(Block, u64)],
    cfg: &EncoderConfig,
    lambda: f64,
) -> Result<usize> {
    let mut cmp = Comparator::new(cfg.kind, cfg.network.as_deref(), lambda)?;
    Ok(cmp.compare(orig_region, candidates)?.0)
}

/// Compares candidates and caches the feature maps of original regions.
pub(crate) struct Comparator<'a> {
    kind: DistortionKind,
    net: Option<&'a Network>,
    lambda: f64,
    orig_maps: HashMap<Rect, FeatureMap>,
}

impl<'a> Comparator<'a> {
    pub fn new(kind: DistortionKind, net: Option<&'a Network>, lambda: f64) -> Result<Self> {
        if kind.uses_features() && net.is_none() {
            return Err(Error::MissingNetwork);
        }
        Ok(Comparator {
            kind,
            net,
            lambda,
            orig_maps: HashMap::new(),
        })
    }

    pub fn compare(&mut self, orig: &Block, candidates: &[(Block, u64)]) -> Result<(usize, RdCost)> {
        let recons: Vec<&Block> = candidates.iter().map(|(b, _)| b).collect();
        let rates: Vec<u64> = candidates.iter().map(|&(_, r)| r).collect();
        let mut dists = self.distortions(orig, &recons)?;
        if dists.len() == 1 {
            // a lone anchor normalizes to its own SSE
            return Ok((0, rd_cost(dists[0].d_sse, rates[0], self.lambda)));
        }
        select_candidate(self.kind, &mut dists, &rates, self.lambda)
    }

    /// Pixel SSE of every candidate, plus raw feature distortion for feature
    /// kinds. A single candidate needs no features: it is its own anchor.
    pub fn distortions(&mut self, orig: &Block, recons: &[&Block]) -> Result<Vec<CandidateDistortion>> {
        for r in recons {
            if !orig.same_size(r) {
                return Err(Error::DimensionMismatch(format!(
                    "candidate {}x{} vs region {}x{}",
                    r.width, r.height, orig.width, orig.height
                )));
            }
        }
        let mut dists: Vec<CandidateDistortion> = recons
            .iter()
            .map(|r| CandidateDistortion::pixel_only(sse_samples(&orig.samples, &r.samples) as f64))
            .collect();
        let metric = match self.kind.feature_metric() {
            Some(m) if recons.len() > 1 => m,
            _ => return Ok(dists),
        };
        let net = self.net.expect("checked in new");
        let key = Rect::new(orig.x, orig.y, orig.width, orig.height);
        if !self.orig_maps.contains_key(&key) {
            self.orig_maps.insert(key, extract_features(orig, net)?);
        }
        let psi_orig = &self.orig_maps[&key];
        for (d, r) in dists.iter_mut().zip(recons) {
            // identical pixels give identical features
            d.d_feat = if r.samples == orig.samples {
                0.0
            } else {
                metric.measure(psi_orig, &extract_features(r, net)?)?
            };
        }
        Ok(dists)
    }
}
