use crate::codec::quant::check_qp;
use crate::codec::{analyze, quantize_analysis, reconstruct_trial, write_trial, EncodedBlock, IntraMode, Neighbors, ParamConfig, QpSignal, Trial};
use crate::distortion::sse_samples;
use crate::error::{Error, Result};
use crate::frame::Block;
use crate::rdo::config::Rect;
use crate::rdo::cost::{rd_cost, RdCost};

/// Tries every `(mode, qp)` pair in the order DC, horizontal, vertical,
/// planar × ascending `qp_list`, scoring each with pixel SSE + λ·bits.
/// The first candidate with the lowest cost wins.
pub fn best_leaf_config(
    orig: &Block,
    ctx: &Neighbors,
    qp_list: &[u8],
    signal: QpSignal,
    lambda: f64,
) -> Result<(ParamConfig, EncodedBlock, RdCost)> {
    if qp_list.is_empty() {
        return Err(Error::Config("empty QP list".into()));
    }
    let mut best: Option<(usize, Trial, Block, RdCost)> = None;
    let mut analyses = Vec::with_capacity(IntraMode::ALL.len());
    for mode in IntraMode::ALL {
        let analysis = analyze(orig, ctx, mode)?;
        for &qp in qp_list {
            check_qp(qp as i32)?;
            let trial = quantize_analysis(&analysis, qp, signal);
            // distortion is non-negative, so the rate term alone bounds j
            if best.as_ref().is_some_and(|b| lambda * trial.bits as f64 >= b.3.j) {
                continue;
            }
            let recon = reconstruct_trial(&analysis, &trial, orig.x, orig.y)?;
            let sse = sse_samples(&orig.samples, &recon.samples) as f64;
            let cost = rd_cost(sse, trial.bits as u64, lambda);
            if best.as_ref().map_or(true, |b| cost.j < b.3.j) {
                best = Some((analyses.len(), trial, recon, cost));
            }
        }
        analyses.push(analysis);
    }
    let (a, trial, recon, cost) = best.expect("at least one candidate");
    let analysis = &analyses[a];
    let cfg = ParamConfig::new(analysis.mode, trial.qp as i32)?;
    let enc = EncodedBlock {
        bits: trial.bits,
        payload: write_trial(analysis, &trial, signal),
        recon,
    };
    Ok((cfg, enc, cost))
}

/// Reconstruction buffer for one CTU. Samples outside it read as unavailable.
#[derive(Clone, Debug)]
pub(crate) struct Canvas {
    pub area: Rect,
    pub samples: Vec<u8>,
}

impl Canvas {
    pub fn new(area: Rect) -> Self {
        Canvas {
            area,
            samples: vec![0; area.area()],
        }
    }

    fn offset(&self, x: usize, y: usize) -> usize {
        (y - self.area.y) * self.area.w + (x - self.area.x)
    }

    pub fn neighbors(&self, r: Rect) -> Neighbors {
        let top = (r.y > self.area.y).then(|| {
            let o = self.offset(r.x, r.y - 1);
            self.samples[o..o + r.w].to_vec()
        });
        let left = (r.x > self.area.x).then(|| {
            (r.y..r.y + r.h)
                .map(|y| self.samples[self.offset(r.x - 1, y)])
                .collect()
        });
        Neighbors { top, left }
    }

    pub fn read(&self, r: Rect) -> Block {
        let mut samples = Vec::with_capacity(r.area());
        for y in r.y..r.y + r.h {
            let o = self.offset(r.x, y);
            samples.extend_from_slice(&self.samples[o..o + r.w]);
        }
        Block {
            x: r.x,
            y: r.y,
            width: r.w,
            height: r.h,
            samples,
        }
    }

    pub fn write(&mut self, b: &Block) {
        for (row, src) in b.samples.chunks_exact(b.width).enumerate() {
            let o = self.offset(b.x, b.y + row);
            self.samples[o..o + b.width].copy_from_slice(src);
        }
    }
}
