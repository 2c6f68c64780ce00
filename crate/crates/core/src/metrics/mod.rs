//! PSNR, feature fidelity, RD curves, BD-rate and the RD CSV format.

mod bdrate;
mod quality;
mod rdcsv;

pub use bdrate::{bd_rate, RdCurve, RdPoint, MIN_CURVE_POINTS};
pub use quality::{feature_fidelity, psnr, psnr_from_mse, FIDELITY_TILE};
pub use rdcsv::{
    curve_from_rows, emit_rd_csv, format_sig9, parse_rd_csv, read_rd_csv, write_rd_csv, QualityAxis, RdRow,
    AVG_LABEL, RD_CSV_HEADER,
};
