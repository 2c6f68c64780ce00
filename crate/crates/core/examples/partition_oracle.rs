//! The greedy partition search against exhaustive enumeration on a small region.

use frdo::frame::Frame;
use frdo::rdo::{count_partition_trees, exhaustive_partition_oracle, lambda_from_qp, partition_region, EncoderConfig, Rect};

fn main() -> frdo::Result<()> {
    let samples = (0..256).map(|i| ((i * 7919) % 256) as u8).collect();
    let frame = Frame::new(16, 16, samples)?;
    let cfg = EncoderConfig { ctu_size: 16, min_cu: 8, ..EncoderConfig::default() }.with_qp(17);
    let lambda = lambda_from_qp(17, cfg.k)?.value;
    let r = Rect::new(0, 0, 16, 16);
    let greedy = partition_region(&frame, r, &cfg, lambda)?;
    let (best, cost) = exhaustive_partition_oracle(&frame, r, &cfg, lambda)?;
    println!("{} candidate trees", count_partition_trees(r, &cfg));
    println!("greedy {:?}: J = {}", greedy.shape(), greedy.cost.j);
    println!("oracle {:?}: J = {}", best.shape(), cost.j);
    Ok(())
}
