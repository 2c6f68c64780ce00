//! Block-based intra image codec with pluggable rate-distortion optimization.
//!
//! Partition decisions can be made on pixel SSE, on distances between
//! feature maps of a small convolutional network, or on a normalized blend of
//! both. Leaves always pick their mode and QP on pixel SSE. Every stream
//! decodes with the same decoder regardless of the metric used to encode it.
//!
//! Examples, one per capability (`cargo run --release --example <name>`):
//!
//! - `encode_decode`: encode a PGM, decode it, compare reconstructions
//! - `qp_sweep`: RD rows for one image over several QPs
//! - `feature_maps`: run the network and measure FSSE/FSAD
//! - `compare_kinds`: which candidate each distortion kind prefers
//! - `partition_oracle`: greedy partition search against full enumeration
//! - `delta_qp`: per-leaf QP refinement
//! - `bd_rate`: Bjøntegaard delta rate between two RD tables

pub mod cli;
pub mod codec;
pub mod distortion;
pub mod error;
pub mod frame;
pub mod metrics;
pub mod net;
pub mod rdo;

pub use error::{Error, Result};
