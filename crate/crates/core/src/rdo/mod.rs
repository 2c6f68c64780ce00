//! Rate-distortion optimization: λ, candidate comparison, partition search,
//! delta-QP and frame-level coding.

mod compare;
pub mod config;
pub mod cost;
mod leaf;
mod oracle;
mod partition;
pub mod stream;

pub use compare::compare_candidates;
pub use config::{EncoderConfig, Rect, SplitType, MAX_DELTA_QP_RANGE};
pub use cost::{lambda_from_qp, rd_cost, select_candidate, Lambda, RdCost, DEFAULT_K};
pub use leaf::best_leaf_config;
pub use oracle::{count_partition_trees, exhaustive_partition_oracle, ORACLE_MAX_UNITS};
pub use partition::{delta_qp_search, partition_region, LeafCode, PartitionNode};
pub use stream::{decode_frame, encode_frame, EncodeStats, EncodedFrame, StreamHeader};
