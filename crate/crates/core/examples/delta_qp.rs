//! Per-leaf QP refinement: the leaves of a delta-QP search and the QPs they chose.

use frdo::frame::Frame;
use frdo::rdo::{delta_qp_search, lambda_from_qp, partition_region, EncoderConfig, Rect};

fn main() -> frdo::Result<()> {
    // smooth left half, textured right half
    let samples = (0..64 * 64)
        .map(|i| {
            let (x, y) = (i % 64, i / 64);
            if x < 32 { (x + y) as u8 * 2 } else { ((x * 131 + y * 71) % 256) as u8 }
        })
        .collect();
    let frame = Frame::new(64, 64, samples)?;
    let cfg = EncoderConfig::default().with_qp(27).with_delta_qp(3);
    let lambda = lambda_from_qp(27, cfg.k)?.value;
    let r = Rect::new(0, 0, 64, 64);
    let plain = partition_region(&frame, r, &cfg, lambda)?;
    let tree = delta_qp_search(&frame, r, &cfg, lambda)?;
    println!("fixed QP: J = {:.1}", plain.cost.j);
    println!("delta-QP: J = {:.1}", tree.cost.j);
    for leaf in tree.leaves() {
        let code = leaf.leaf.as_ref().expect("leaf");
        println!("  {} qp {} mode {:?}", leaf.rect, code.cfg.qp, code.cfg.intra_mode);
    }
    Ok(())
}
