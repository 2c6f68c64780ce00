//! Encode one image at several QPs and print RD rows as CSV.
//!
//! `cargo run --release --example qp_sweep [image.pgm]`

use frdo::frame::{load_pgm, Frame};
use frdo::metrics::{psnr, write_rd_csv, RdRow};
use frdo::rdo::{encode_frame, EncoderConfig};

fn main() -> frdo::Result<()> {
    let frame = match std::env::args().nth(1) {
        Some(p) => load_pgm(p)?,
        None => Frame::new(64, 64, (0..4096).map(|i| ((i % 64) * 4 ^ (i / 64)) as u8).collect())?,
    };
    let mut rows = Vec::new();
    for qp in [12, 17, 22, 27] {
        let enc = encode_frame(&frame, &EncoderConfig::default().with_qp(qp))?;
        rows.push(RdRow {
            label: "image".into(),
            qp,
            rate_bpp: enc.stats.bpp(),
            psnr_db: psnr(&frame, &enc.recon)?,
            feat_db: f64::NAN,
            bits: enc.stats.total_bits,
        });
    }
    write_rd_csv(&rows, std::io::stdout())
}
