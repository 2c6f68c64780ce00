//! Which candidate each distortion kind picks for the same block.

use std::sync::Arc;

use frdo::distortion::DistortionKind;
use frdo::frame::Block;
use frdo::net::seeded_network;
use frdo::rdo::{compare_candidates, lambda_from_qp, EncoderConfig};

fn main() -> frdo::Result<()> {
    let orig = Block::new(8, 8, (0..64).map(|i| ((i * 37) % 251) as u8).collect())?;
    // a coarse flat approximation, a noisy one, and a sharper but costly one
    let flat = Block::filled(8, 8, 125);
    let noisy = Block::new(8, 8, orig.samples.iter().map(|&v| v.saturating_add(9)).collect())?;
    let sharp = Block::new(8, 8, orig.samples.iter().map(|&v| v ^ 1).collect())?;
    let candidates = vec![(flat, 4), (noisy, 90), (sharp, 300)];
    let lambda = lambda_from_qp(27, 0.57)?.value;
    let net = Arc::new(seeded_network(5, 1, 8));
    for kind in DistortionKind::ALL {
        let cfg = EncoderConfig::default().with_kind(kind).with_network(net.clone());
        println!("{kind:>5}: candidate {}", compare_candidates(&orig, &candidates, &cfg, lambda)?);
    }
    Ok(())
}
