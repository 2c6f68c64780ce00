use crate::codec::quant::check_qp;
use crate::distortion::{effective_distortion, normalize_candidates, CandidateDistortion, DistortionKind};
use crate::error::{Error, Result};

/// Intra-slice Lagrangian constant.
pub const DEFAULT_K: f64 = 0.57;

/// Lagrange multiplier `k · 2^((qp − 12) / 3)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lambda {
    pub value: f64,
    pub k: f64,
    pub qp: u8,
}

pub fn lambda_from_qp(qp: i32, k: f64) -> Result<Lambda> {
    check_qp(qp)?;
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Config(format!("lambda constant k must be positive, got {k}")));
    }
    Ok(Lambda {
        value: k * ((qp - 12) as f64 / 3.0).exp2(),
        k,
        qp: qp as u8,
    })
}

/// `j = distortion + λ · rate_bits`
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RdCost {
    pub distortion: f64,
    pub rate_bits: u64,
    pub j: f64,
}

pub fn rd_cost(distortion: f64, rate_bits: u64, lambda: f64) -> RdCost {
    RdCost {
        distortion,
        rate_bits,
        j: distortion + lambda * rate_bits as f64,
    }
}

/// Normalizes (for feature kinds) and returns the index and cost of the
/// cheapest candidate. Ties go to the lower index.
pub fn select_candidate(
    kind: DistortionKind,
    dists: &mut [CandidateDistortion],
    rates: &[u64],
    lambda: f64,
) -> Result<(usize, RdCost)> {
    if dists.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    assert_eq!(dists.len(), rates.len());
    if kind.uses_features() {
        normalize_candidates(dists)?;
    }
    let mut best: Option<(usize, RdCost)> = None;
    for (i, (d, &r)) in dists.iter().zip(rates).enumerate() {
        let cost = rd_cost(effective_distortion(kind, d)?, r, lambda);
        if best.map_or(true, |(_, b)| cost.j < b.j) {
            best = Some((i, cost));
        }
    }
    Ok(best.expect("nonempty"))
}
