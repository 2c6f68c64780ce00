//! Run a feature network on a block and compare two blocks in feature space.
//!
//! `cargo run --example feature_maps [weights.manifest]`

use frdo::distortion::{fsad, fsse};
use frdo::frame::Block;
use frdo::net::{extract_features, load_weights, seeded_network};

fn main() -> frdo::Result<()> {
    let net = match std::env::args().nth(1) {
        Some(p) => load_weights(p)?,
        None => seeded_network(1, 1, 16),
    };
    let orig = Block::new(16, 16, (0..256).map(|i| ((i % 16) * 16) as u8).collect())?;
    let blurred = Block::new(
        16,
        16,
        orig.samples.iter().map(|&v| (v as u16 * 3 / 4 + 32) as u8).collect(),
    )?;
    let a = extract_features(&orig, &net)?;
    let b = extract_features(&blurred, &net)?;
    println!("feature map {}x{}x{}", a.width, a.height, a.channels);
    println!("FSSE {:.6}  FSAD {:.6}", fsse(&a, &b)?, fsad(&a, &b)?);
    Ok(())
}
