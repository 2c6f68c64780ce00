//! Brute-force partition search for small regions.

use crate::distortion::sse_samples;
use crate::error::{Error, Result};
use crate::frame::{extract_block, Block, Frame};
use crate::rdo::compare::Comparator;
use crate::rdo::config::{EncoderConfig, Rect, SplitType};
use crate::rdo::cost::{rd_cost, RdCost};
use crate::rdo::leaf::{best_leaf_config, Canvas};
use crate::rdo::partition::{check_rect, LeafCode, LeafRule, PartitionNode};

/// Largest number of minimum-size units the oracle will enumerate over.
pub const ORACLE_MAX_UNITS: usize = 4;

#[derive(Clone, Debug)]
enum Shape {
    Leaf,
    Split(SplitType, Vec<Shape>),
}

fn all_shapes(r: Rect, cfg: &EncoderConfig, mtt_depth: u8) -> Vec<Shape> {
    let mut out = vec![Shape::Leaf];
    for split in SplitType::SPLITS {
        if !split.allowed(r, cfg.min_cu, mtt_depth, cfg.max_mtt_depth) {
            continue;
        }
        let depth = split.child_mtt_depth(mtt_depth);
        let mut combos: Vec<Vec<Shape>> = vec![vec![]];
        for c in split.children(r) {
            let opts = all_shapes(c, cfg, depth);
            combos = combos
                .into_iter()
                .flat_map(|prefix| {
                    opts.iter().map(move |o| {
                        let mut v = prefix.clone();
                        v.push(o.clone());
                        v
                    })
                })
                .collect();
        }
        out.extend(combos.into_iter().map(|kids| Shape::Split(split, kids)));
    }
    out
}

fn code_shape(
    shape: &Shape,
    r: Rect,
    frame: &Frame,
    canvas: &mut Canvas,
    rule: &LeafRule,
    lambda: f64,
) -> Result<PartitionNode> {
    match shape {
        Shape::Leaf => {
            let orig = extract_block(frame, r.x, r.y, r.w, r.h)?;
            let ctx = canvas.neighbors(r);
            let (cfg, enc, _) = best_leaf_config(&orig, &ctx, &rule.qps, rule.signal, lambda)?;
            canvas.write(&enc.recon);
            let rate = SplitType::CODE_BITS as u64 + enc.bits as u64;
            let sse = sse_samples(&orig.samples, &enc.recon.samples) as f64;
            Ok(PartitionNode {
                rect: r,
                split: SplitType::None,
                children: vec![],
                leaf: Some(LeafCode {
                    cfg,
                    payload: enc.payload,
                }),
                cost: rd_cost(sse, rate, lambda),
            })
        }
        Shape::Split(split, kids) => {
            let mut children = Vec::with_capacity(kids.len());
            for (k, c) in kids.iter().zip(split.children(r)) {
                children.push(code_shape(k, c, frame, canvas, rule, lambda)?);
            }
            let rate = SplitType::CODE_BITS as u64 + children.iter().map(|c| c.rate_bits()).sum::<u64>();
            let sse = children.iter().map(|c| c.cost.distortion).sum();
            Ok(PartitionNode {
                rect: r,
                split: *split,
                children,
                leaf: None,
                cost: rd_cost(sse, rate, lambda),
            })
        }
    }
}

/// Codes every legal partition tree of `rect` (as a CTU root, base QP, no
/// delta-QP) and returns the cheapest under the configured distortion kind.
/// All trees are compared at the root with the unsplit tree as anchor.
pub fn exhaustive_partition_oracle(
    frame: &Frame,
    rect: Rect,
    cfg: &EncoderConfig,
    lambda: f64,
) -> Result<(PartitionNode, RdCost)> {
    cfg.validate()?;
    check_rect(frame, rect, cfg.min_cu)?;
    let units = (rect.w / cfg.min_cu) * (rect.h / cfg.min_cu);
    if units > ORACLE_MAX_UNITS {
        return Err(Error::RegionTooLarge(format!(
            "{rect} with min_cu {} spans {units} units (limit {ORACLE_MAX_UNITS})",
            cfg.min_cu
        )));
    }
    let rule = LeafRule::fixed(cfg);
    let orig = extract_block(frame, rect.x, rect.y, rect.w, rect.h)?;
    let mut trees = Vec::new();
    let mut cands: Vec<(Block, u64)> = Vec::new();
    for shape in all_shapes(rect, cfg, 0) {
        let mut canvas = Canvas::new(rect);
        let node = code_shape(&shape, rect, frame, &mut canvas, &rule, lambda)?;
        cands.push((canvas.read(rect), node.rate_bits()));
        trees.push(node);
    }
    let mut cmp = Comparator::new(cfg.kind, cfg.network.as_deref(), lambda)?;
    let (win, cost) = cmp.compare(&orig, &cands)?;
    let mut tree = trees.swap_remove(win);
    tree.cost = cost;
    Ok((tree, cost))
}

/// Number of legal partition trees of `rect`.
pub fn count_partition_trees(rect: Rect, cfg: &EncoderConfig) -> usize {
    all_shapes(rect, cfg, 0).len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{Neighbors, QpSignal};
    use crate::rdo::cost::lambda_from_qp;

    #[test]
    fn tree_counts() {
        let c4 = EncoderConfig { min_cu: 4, ..EncoderConfig::default() };
        let c8 = EncoderConfig { min_cu: 8, ..EncoderConfig::default() };
        assert_eq!(count_partition_trees(Rect::new(0, 0, 8, 8), &c8), 1);
        // none, quad, bin_h x {none, bin_v}^2, bin_v x {none, bin_h}^2
        assert_eq!(count_partition_trees(Rect::new(0, 0, 8, 8), &c4), 10);
        assert_eq!(count_partition_trees(Rect::new(0, 0, 16, 16), &c8), 10);
        let no_mtt = EncoderConfig { max_mtt_depth: 0, ..c4 };
        assert_eq!(count_partition_trees(Rect::new(0, 0, 8, 8), &no_mtt), 2);
    }

    #[test]
    fn single_tree_equals_leaf_cost() {
        let f = Frame::new(8, 8, (0..64).map(|i| (i * 7 % 256) as u8).collect()).unwrap();
        let cfg = EncoderConfig { min_cu: 8, ..EncoderConfig::default() };
        let lambda = lambda_from_qp(22, 0.57).unwrap().value;
        let (tree, cost) = exhaustive_partition_oracle(&f, Rect::new(0, 0, 8, 8), &cfg, lambda).unwrap();
        assert_eq!(tree.split, SplitType::None);
        let orig = extract_block(&f, 0, 0, 8, 8).unwrap();
        let (_, _, leaf) = best_leaf_config(&orig, &Neighbors::none(), &[22], QpSignal::Implicit, lambda).unwrap();
        assert_eq!(cost.distortion, leaf.distortion);
        assert_eq!(cost.rate_bits, leaf.rate_bits + 3);
    }

    #[test]
    fn guard_rejects_large_regions() {
        let f = Frame::filled(16, 16, 0).unwrap();
        let cfg = EncoderConfig::default();
        assert!(matches!(
            exhaustive_partition_oracle(&f, Rect::new(0, 0, 16, 16), &cfg, 1.0),
            Err(Error::RegionTooLarge(_))
        ));
    }
}
