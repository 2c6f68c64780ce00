//! Coding of a single block: prediction, transform, quantization and the
//! exp-Golomb coefficient payload, with the matching decoder.
//!
//! Payload layout (MSB first):
//!
//! ```text
//! mode            2 bits (0 DC, 1 horizontal, 2 vertical, 3 planar)
//! delta_qp        se(v), only when the stream enables delta-QP
//! coded_count     ue(v), zigzag index of the last nonzero level + 1 (0 = none)
//! per coefficient ue(|level|), then a sign bit (1 = negative) if level != 0
//! ```

use crate::codec::bits::{se_len, ue_len, BitReader, BitWriter};
use crate::codec::predict::{predict_intra, IntraMode, Neighbors};
use crate::codec::quant::{check_qp, qstep, quantize_coeff};
use crate::codec::transform::{dct2_forward, dct2_inverse, supported, zigzag};
use crate::error::{Error, Result};
use crate::frame::Block;

/// Largest level magnitude accepted by the decoder.
const MAX_LEVEL: u64 = 1 << 20;

/// Coding decision for one leaf block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamConfig {
    pub intra_mode: IntraMode,
    pub qp: u8,
}

impl ParamConfig {
    pub fn new(intra_mode: IntraMode, qp: i32) -> Result<Self> {
        check_qp(qp)?;
        Ok(ParamConfig {
            intra_mode,
            qp: qp as u8,
        })
    }
}

/// How a leaf's QP reaches the decoder.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QpSignal {
    /// QP equals the stream's base QP; nothing is coded.
    Implicit,
    /// A signed delta against `base` is coded.
    Delta { base: u8 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncodedBlock {
    pub recon: Block,
    pub bits: usize,
    pub payload: BitWriter,
}

/// Forward-transformed residual of one prediction mode, reusable across QPs.
pub(crate) struct Analysis {
    pub mode: IntraMode,
    pub pred: Block,
    pub coeffs: Vec<f64>,
}

pub(crate) fn analyze(orig: &Block, ctx: &Neighbors, mode: IntraMode) -> Result<Analysis> {
    let (w, h) = (orig.width, orig.height);
    if !supported(w, h) {
        return Err(Error::UnsupportedSize { w, h });
    }
    let pred = predict_intra(ctx, mode, w, h);
    let residual: Vec<f64> = orig.samples.iter().zip(&pred.samples).map(|(&o, &p)| o as f64 - p as f64).collect();
    let coeffs = dct2_forward(&residual, w, h)?;
    Ok(Analysis { mode, pred, coeffs })
}

/// Quantized levels of an analysis at one QP, with the payload length they
/// would take. Nothing is written yet.
pub(crate) struct Trial {
    pub qp: u8,
    pub levels: Vec<i32>,
    /// Zigzag index of the last nonzero level + 1.
    pub coded: usize,
    pub bits: usize,
}

pub(crate) fn quantize_analysis(analysis: &Analysis, qp: u8, signal: QpSignal) -> Trial {
    let (w, h) = (analysis.pred.width, analysis.pred.height);
    let step = qstep(qp);
    let scan = zigzag(w, h);
    let levels: Vec<i32> = analysis
        .coeffs
        .iter()
        .map(|&c| quantize_coeff(c, step))
        .collect();
    let coded = scan
        .iter()
        .rposition(|&p| levels[p as usize] != 0)
        .map_or(0, |i| i + 1);
    let mut bits = min_block_bits(signal, qp) - ue_len(0) + ue_len(coded as u64);
    for &p in &scan[..coded] {
        let level = levels[p as usize];
        bits += ue_len(level.unsigned_abs() as u64) + (level != 0) as usize;
    }
    Trial {
        qp,
        levels,
        coded,
        bits,
    }
}

pub(crate) fn write_trial(analysis: &Analysis, trial: &Trial, signal: QpSignal) -> BitWriter {
    let scan = zigzag(analysis.pred.width, analysis.pred.height);
    let mut payload = BitWriter::new();
    payload.put_bits(analysis.mode as u64, 2);
    if let QpSignal::Delta { base } = signal {
        payload.put_se(trial.qp as i64 - base as i64);
    }
    payload.put_ue(trial.coded as u64);
    for &p in &scan[..trial.coded] {
        let level = trial.levels[p as usize];
        payload.put_ue(level.unsigned_abs() as u64);
        if level != 0 {
            payload.put_bit(level < 0);
        }
    }
    debug_assert_eq!(payload.len(), trial.bits);
    payload
}

pub(crate) fn reconstruct_trial(analysis: &Analysis, trial: &Trial, x: usize, y: usize) -> Result<Block> {
    let mut recon = reconstruct(&analysis.pred, &trial.levels, trial.qp)?;
    recon.x = x;
    recon.y = y;
    Ok(recon)
}

/// Quantizes an analysis at `qp`, writes the payload and reconstructs.
pub(crate) fn code_analysis(
    analysis: &Analysis,
    qp: u8,
    signal: QpSignal,
    x: usize,
    y: usize,
) -> Result<EncodedBlock> {
    let trial = quantize_analysis(analysis, qp, signal);
    Ok(EncodedBlock {
        bits: trial.bits,
        recon: reconstruct_trial(analysis, &trial, x, y)?,
        payload: write_trial(analysis, &trial, signal),
    })
}

/// `clip(pred + round(idct(levels · qstep)), 0, 255)`
fn reconstruct(pred: &Block, levels: &[i32], qp: u8) -> Result<Block> {
    let (w, h) = (pred.width, pred.height);
    let samples = if levels.iter().all(|&l| l == 0) {
        pred.samples.clone()
    } else {
        let step = qstep(qp);
        let deq: Vec<f64> = levels.iter().map(|&l| l as f64 * step).collect();
        let res = dct2_inverse(&deq, w, h)?;
        pred.samples
            .iter()
            .zip(&res)
            .map(|(&p, &r)| (p as f64 + r.round()).clamp(0.0, 255.0) as u8)
            .collect()
    };
    Ok(Block {
        x: 0,
        y: 0,
        width: w,
        height: h,
        samples,
    })
}

/// Codes `orig` under `cfg`. The reconstruction keeps `orig`'s position.
pub fn encode_block(
    orig: &Block,
    ctx: &Neighbors,
    cfg: ParamConfig,
    signal: QpSignal,
) -> Result<EncodedBlock> {
    check_qp(cfg.qp as i32)?;
    let analysis = analyze(orig, ctx, cfg.intra_mode)?;
    code_analysis(&analysis, cfg.qp, signal, orig.x, orig.y)
}

/// Reads one block payload. `delta_range` is `Some(r)` when the stream
/// carries per-block delta-QP codes bounded by `±r`.
pub fn decode_block(
    reader: &mut BitReader<'_>,
    ctx: &Neighbors,
    w: usize,
    h: usize,
    base_qp: u8,
    delta_range: Option<u8>,
) -> Result<(Block, ParamConfig)> {
    if !supported(w, h) {
        return Err(Error::UnsupportedSize { w, h });
    }
    let mode = IntraMode::from_bits(reader.bits(2)?)?;
    let qp = match delta_range {
        None => base_qp as i64,
        Some(range) => {
            let delta = reader.se()?;
            if delta.abs() > range as i64 {
                return Err(Error::Malformed(format!(
                    "delta QP {delta} exceeds range {range}"
                )));
            }
            base_qp as i64 + delta
        }
    };
    if !(0..=51).contains(&qp) {
        return Err(Error::Malformed(format!("QP {qp} out of range")));
    }
    let qp = qp as u8;
    let coded = reader.ue()? as usize;
    if coded > w * h {
        return Err(Error::Malformed(format!(
            "{coded} coded coefficients in a {w}x{h} block"
        )));
    }
    let scan = zigzag(w, h);
    let mut levels = vec![0i32; w * h];
    for (i, &p) in scan[..coded].iter().enumerate() {
        let mag = reader.ue()?;
        if mag > MAX_LEVEL {
            return Err(Error::Malformed(format!("level magnitude {mag}")));
        }
        if mag == 0 && i + 1 == coded {
            return Err(Error::Malformed("last coded level is zero".into()));
        }
        let mut level = mag as i32;
        if mag != 0 && reader.bit()? {
            level = -level;
        }
        levels[p as usize] = level;
    }
    let pred = predict_intra(ctx, mode, w, h);
    let recon = reconstruct(&pred, &levels, qp)?;
    Ok((
        recon,
        ParamConfig {
            intra_mode: mode,
            qp,
        },
    ))
}

/// Bits of the smallest possible payload: mode plus an empty coefficient list.
pub fn min_block_bits(signal: QpSignal, qp: u8) -> usize {
    let delta = match signal {
        QpSignal::Implicit => 0,
        QpSignal::Delta { base } => se_len(qp as i64 - base as i64),
    };
    2 + delta + ue_len(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_block(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Block {
        Block::new(w, h, (0..w * h).map(|_| rng.gen()).collect()).unwrap()
    }

    fn decode(enc: &EncodedBlock, ctx: &Neighbors, base: u8, range: Option<u8>) -> Result<(Block, ParamConfig)> {
        let mut r = BitReader::new(enc.payload.as_bytes());
        let out = decode_block(&mut r, ctx, enc.recon.width, enc.recon.height, base, range)?;
        assert_eq!(r.position(), enc.bits);
        Ok(out)
    }

    #[test]
    fn flat_block_with_matching_context_costs_minimum() {
        let orig = Block::filled(8, 8, 90);
        let ctx = Neighbors {
            top: Some(vec![90; 8]),
            left: Some(vec![90; 8]),
        };
        for qp in [0, 22, 51] {
            let cfg = ParamConfig::new(IntraMode::Dc, qp).unwrap();
            let enc = encode_block(&orig, &ctx, cfg, QpSignal::Implicit).unwrap();
            assert_eq!(enc.recon.samples, orig.samples);
            assert_eq!(enc.bits, 3);
            assert_eq!(enc.bits, min_block_bits(QpSignal::Implicit, qp as u8));
        }
    }

    #[test]
    fn qp0_is_near_lossless() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (w, h) in [(4, 4), (8, 8), (16, 4), (32, 32)] {
            let orig = random_block(&mut rng, w, h);
            for mode in IntraMode::ALL {
                let enc = encode_block(&orig, &Neighbors::none(), ParamConfig::new(mode, 0).unwrap(), QpSignal::Implicit).unwrap();
                for (a, b) in orig.samples.iter().zip(&enc.recon.samples) {
                    assert!((*a as i32 - *b as i32).abs() <= 1);
                }
            }
        }
    }

    #[test]
    fn encoding_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let orig = random_block(&mut rng, 16, 8);
        let cfg = ParamConfig::new(IntraMode::Planar, 27).unwrap();
        let a = encode_block(&orig, &Neighbors::none(), cfg, QpSignal::Delta { base: 25 }).unwrap();
        let b = encode_block(&orig, &Neighbors::none(), cfg, QpSignal::Delta { base: 25 }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let orig = random_block(&mut rng, 8, 8);
        let enc = encode_block(&orig, &Neighbors::none(), ParamConfig::new(IntraMode::Dc, 12).unwrap(), QpSignal::Implicit).unwrap();
        let bytes = enc.payload.as_bytes();
        let mut r = BitReader::new(&bytes[..bytes.len() / 2]);
        assert!(decode_block(&mut r, &Neighbors::none(), 8, 8, 12, None).is_err());
    }

    #[test]
    fn malformed_fields_are_rejected() {
        // delta beyond the signalled range
        let mut w = BitWriter::new();
        w.put_bits(0, 2);
        w.put_se(3);
        w.put_ue(0);
        let mut r = BitReader::new(w.as_bytes());
        assert!(decode_block(&mut r, &Neighbors::none(), 4, 4, 22, Some(2)).is_err());
        // more coded coefficients than the block holds
        let mut w = BitWriter::new();
        w.put_bits(1, 2);
        w.put_ue(17);
        let mut r = BitReader::new(w.as_bytes());
        assert!(decode_block(&mut r, &Neighbors::none(), 4, 4, 22, None).is_err());
        // last coded level must be nonzero
        let mut w = BitWriter::new();
        w.put_bits(2, 2);
        w.put_ue(1);
        w.put_ue(0);
        let mut r = BitReader::new(w.as_bytes());
        assert!(decode_block(&mut r, &Neighbors::none(), 4, 4, 22, None).is_err());
    }

    fn arb_case() -> impl Strategy<Value = (Block, Neighbors, ParamConfig, Option<u8>)> {
        let dims = prop_oneof![Just(4usize), Just(8), Just(16), Just(32)];
        (dims.clone(), dims, 0i32..=51, 0usize..4, any::<u64>(), any::<bool>(), any::<bool>(), prop::option::of(0u8..=3))
            .prop_map(|(w, h, qp, m, seed, has_top, has_left, range)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let smooth = rng.gen_bool(0.5);
                let base: u8 = rng.gen();
                let samples = (0..w * h)
                    .map(|i| if smooth { base.wrapping_add((i % w) as u8) } else { rng.gen() })
                    .collect();
                let orig = Block::new(w, h, samples).unwrap();
                let ctx = Neighbors {
                    top: has_top.then(|| (0..w).map(|_| rng.gen()).collect()),
                    left: has_left.then(|| (0..h).map(|_| rng.gen()).collect()),
                };
                (orig, ctx, ParamConfig::new(IntraMode::ALL[m], qp).unwrap(), range)
            })
    }

    proptest! {
        #[test]
        fn decoder_reproduces_encoder((orig, ctx, cfg, range) in arb_case(), delta in -3i32..=3) {
            let (signal, base, qp_cfg) = match range {
                None => (QpSignal::Implicit, cfg.qp, cfg),
                Some(r) => {
                    let d = delta.clamp(-(r as i32), r as i32);
                    let qp = (cfg.qp as i32 + d).clamp(0, 51);
                    let base = cfg.qp;
                    (QpSignal::Delta { base }, base, ParamConfig::new(cfg.intra_mode, qp).unwrap())
                }
            };
            let range = range.map(|r| r.max((qp_cfg.qp as i32 - base as i32).unsigned_abs() as u8));
            let enc = encode_block(&orig, &ctx, qp_cfg, signal).unwrap();
            prop_assert!(enc.bits >= 2);
            prop_assert_eq!(enc.bits, enc.payload.len());
            let (recon, decoded_cfg) = decode(&enc, &ctx, base, range).unwrap();
            prop_assert_eq!(recon.samples, enc.recon.samples);
            prop_assert_eq!(decoded_cfg, qp_cfg);
        }
    }
}
