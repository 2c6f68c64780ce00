//! Encode an image, decode the bitstream, and check the two reconstructions
//! agree.
//!
//! `cargo run --example encode_decode [image.pgm] [qp]`

use frdo::frame::{load_pgm, Frame};
use frdo::metrics::psnr;
use frdo::rdo::{decode_frame, encode_frame, EncoderConfig};

fn synthetic(w: usize, h: usize) -> Frame {
    let samples = (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            (128.0 + 90.0 * (x / 9.0).sin() * (y / 13.0).cos()) as u8
        })
        .collect();
    Frame::new(w, h, samples).unwrap()
}

fn main() -> frdo::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let frame = match args.get(1) {
        Some(p) => load_pgm(p)?,
        None => synthetic(96, 80),
    };
    let qp = args.get(2).map_or(22, |q| q.parse().expect("qp"));
    let enc = encode_frame(&frame, &EncoderConfig::default().with_qp(qp))?;
    let dec = decode_frame(&enc.bitstream)?;
    assert_eq!(dec, enc.recon);
    println!(
        "{}x{} qp {qp}: {} bytes, {:.4} bpp, {} leaves, PSNR {:.2} dB",
        frame.width(),
        frame.height(),
        enc.bitstream.len(),
        enc.stats.bpp(),
        enc.stats.leaf_count,
        psnr(&frame, &dec)?
    );
    Ok(())
}
