//! Deterministic intra block coder and decoder.

pub mod bits;
mod block;
pub mod predict;
pub mod quant;
pub mod transform;

pub use block::{decode_block, encode_block, min_block_bits, EncodedBlock, ParamConfig, QpSignal};
pub(crate) use block::{analyze, quantize_analysis, reconstruct_trial, write_trial, Trial};
pub use predict::{predict_intra, IntraMode, Neighbors};
pub use quant::{dequantize, qstep, quantize, QuantParams};
pub use transform::{dct2_forward, dct2_inverse};
