//! Bottom-up recursive partition search over one CTU.

use crate::codec::bits::BitWriter;
use crate::codec::{ParamConfig, QpSignal};
use crate::error::{Error, Result};
use crate::frame::{extract_block, Block, Frame};
use crate::rdo::compare::Comparator;
use crate::rdo::config::{EncoderConfig, Rect, SplitType};
use crate::rdo::cost::{rd_cost, RdCost};
use crate::rdo::leaf::{best_leaf_config, Canvas};

#[derive(Clone, Debug, PartialEq)]
pub struct LeafCode {
    pub cfg: ParamConfig,
    pub payload: BitWriter,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionNode {
    pub rect: Rect,
    pub split: SplitType,
    /// Empty iff `split` is `None`.
    pub children: Vec<PartitionNode>,
    /// Present iff `split` is `None`.
    pub leaf: Option<LeafCode>,
    /// Cost of the winning candidate in the comparison made at this node.
    pub cost: RdCost,
}

impl PartitionNode {
    /// Split codes and leaf payloads in pre-order.
    pub fn write(&self, w: &mut BitWriter) {
        w.put_bits(self.split.code(), SplitType::CODE_BITS);
        match &self.leaf {
            Some(leaf) => w.append(&leaf.payload),
            None => self.children.iter().for_each(|c| c.write(w)),
        }
    }

    pub fn rate_bits(&self) -> u64 {
        self.cost.rate_bits
    }

    pub fn leaves(&self) -> Vec<&PartitionNode> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a PartitionNode>) {
        if self.leaf.is_some() {
            out.push(self);
        }
        self.children.iter().for_each(|c| c.collect_leaves(out));
    }

    /// Split structure only, e.g. `quad(none,none,bin_h(none,none),none)`.
    pub fn shape(&self) -> String {
        if self.children.is_empty() {
            return self.split.to_string();
        }
        let kids: Vec<String> = self.children.iter().map(|c| c.shape()).collect();
        format!("{}({})", self.split, kids.join(","))
    }
}

/// Leaf QPs and how they are signalled.
#[derive(Clone, Debug)]
pub(crate) struct LeafRule {
    pub qps: Vec<u8>,
    pub signal: QpSignal,
}

impl LeafRule {
    pub fn fixed(cfg: &EncoderConfig) -> Self {
        LeafRule {
            qps: vec![cfg.base_qp],
            signal: QpSignal::Implicit,
        }
    }

    pub fn for_config(cfg: &EncoderConfig) -> Self {
        if cfg.delta_qp_enabled() {
            LeafRule {
                qps: cfg.leaf_qps(),
                signal: QpSignal::Delta { base: cfg.base_qp },
            }
        } else {
            Self::fixed(cfg)
        }
    }
}

pub(crate) struct Search<'a> {
    frame: &'a Frame,
    cfg: &'a EncoderConfig,
    rule: LeafRule,
    lambda: f64,
    cmp: Comparator<'a>,
    pub canvas: Canvas,
}

impl<'a> Search<'a> {
    pub fn new(frame: &'a Frame, ctu: Rect, cfg: &'a EncoderConfig, rule: LeafRule, lambda: f64) -> Result<Self> {
        cfg.validate()?;
        check_rect(frame, ctu, cfg.min_cu)?;
        Ok(Search {
            frame,
            cfg,
            rule,
            lambda,
            cmp: Comparator::new(cfg.kind, cfg.network.as_deref(), lambda)?,
            canvas: Canvas::new(ctu),
        })
    }

    /// Best tree for `r`; its reconstruction is left in the canvas.
    pub fn run(&mut self, r: Rect, mtt_depth: u8) -> Result<PartitionNode> {
        let orig = extract_block(self.frame, r.x, r.y, r.w, r.h)?;
        let ctx = self.canvas.neighbors(r);
        let (leaf_cfg, enc, _) = best_leaf_config(&orig, &ctx, &self.rule.qps, self.rule.signal, self.lambda)?;
        let none_rate = SplitType::CODE_BITS as u64 + enc.bits as u64;
        let mut nodes = vec![PartitionNode {
            rect: r,
            split: SplitType::None,
            children: vec![],
            leaf: Some(LeafCode {
                cfg: leaf_cfg,
                payload: enc.payload,
            }),
            cost: rd_cost(0.0, none_rate, self.lambda),
        }];
        let mut cands: Vec<(Block, u64)> = vec![(enc.recon, none_rate)];

        for split in SplitType::SPLITS {
            if !split.allowed(r, self.cfg.min_cu, mtt_depth, self.cfg.max_mtt_depth) {
                continue;
            }
            let child_depth = split.child_mtt_depth(mtt_depth);
            let mut children = Vec::new();
            let mut rate = SplitType::CODE_BITS as u64;
            for c in split.children(r) {
                let child = self.run(c, child_depth)?;
                rate += child.rate_bits();
                children.push(child);
            }
            cands.push((self.canvas.read(r), rate));
            nodes.push(PartitionNode {
                rect: r,
                split,
                children,
                leaf: None,
                cost: rd_cost(0.0, rate, self.lambda),
            });
        }

        let (win, cost) = self.cmp.compare(&orig, &cands)?;
        self.canvas.write(&cands[win].0);
        let mut node = nodes.swap_remove(win);
        node.cost = cost;
        Ok(node)
    }
}

pub(crate) fn check_rect(frame: &Frame, r: Rect, min_cu: usize) -> Result<()> {
    if r.x + r.w > frame.width() || r.y + r.h > frame.height() {
        return Err(Error::OutOfBounds {
            x: r.x,
            y: r.y,
            w: r.w,
            h: r.h,
            frame_w: frame.width(),
            frame_h: frame.height(),
        });
    }
    if r.w < min_cu || r.h < min_cu || !r.w.is_power_of_two() || !r.h.is_power_of_two() {
        return Err(Error::Config(format!("region {r} is not a legal coding unit for min_cu {min_cu}")));
    }
    Ok(())
}

/// Searches `rect` as a CTU root at the base QP. Prediction context is
/// confined to `rect`.
pub fn partition_region(frame: &Frame, rect: Rect, cfg: &EncoderConfig, lambda: f64) -> Result<PartitionNode> {
    Ok(search_ctu(frame, rect, cfg, LeafRule::fixed(cfg), lambda)?.0)
}

/// Like [`partition_region`], but every leaf also tries each QP in
/// `base ± delta_qp_range` and signals the chosen delta. λ stays at the
/// caller's value.
pub fn delta_qp_search(frame: &Frame, rect: Rect, cfg: &EncoderConfig, lambda: f64) -> Result<PartitionNode> {
    Ok(search_ctu(frame, rect, cfg, LeafRule::for_config(cfg), lambda)?.0)
}

/// Tree and reconstruction of one CTU.
pub(crate) fn search_ctu(
    frame: &Frame,
    rect: Rect,
    cfg: &EncoderConfig,
    rule: LeafRule,
    lambda: f64,
) -> Result<(PartitionNode, Block)> {
    let mut s = Search::new(frame, rect, cfg, rule, lambda)?;
    let node = s.run(rect, 0)?;
    Ok((node, s.canvas.read(rect)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdo::cost::lambda_from_qp;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lambda(qp: i32) -> f64 {
        lambda_from_qp(qp, 0.57).unwrap().value
    }

    #[test]
    fn flat_ctu_stays_unsplit() {
        let f = Frame::filled(64, 64, 77).unwrap();
        let cfg = EncoderConfig::default();
        let node = partition_region(&f, Rect::new(0, 0, 64, 64), &cfg, lambda(22)).unwrap();
        assert_eq!(node.split, SplitType::None);
        assert_eq!(node.cost.distortion, 0.0);
    }

    #[test]
    fn rates_add_up_and_children_tile() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = Frame::new(32, 32, (0..1024).map(|_| rng.gen()).collect()).unwrap();
        let cfg = EncoderConfig::default();
        let node = partition_region(&f, Rect::new(0, 0, 32, 32), &cfg, lambda(12)).unwrap();
        fn check(n: &PartitionNode) -> u64 {
            let mut w = BitWriter::new();
            n.write(&mut w);
            assert_eq!(w.len() as u64, n.rate_bits());
            let area: usize = n.children.iter().map(|c| c.rect.area()).sum();
            if !n.children.is_empty() {
                assert_eq!(area, n.rect.area());
            }
            n.children.iter().for_each(|c| {
                check(c);
            });
            n.rate_bits()
        }
        check(&node);
        assert!(node.leaves().iter().all(|l| l.rect.w >= 4 && l.rect.h >= 4));
    }

    #[test]
    fn zero_range_delta_search_matches_plain_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = Frame::new(16, 16, (0..256).map(|_| rng.gen()).collect()).unwrap();
        let cfg = EncoderConfig::default();
        let r = Rect::new(0, 0, 16, 16);
        assert_eq!(
            partition_region(&f, r, &cfg, lambda(22)).unwrap(),
            delta_qp_search(&f, r, &cfg, lambda(22)).unwrap()
        );
    }

    #[test]
    fn delta_search_leaves_use_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let f = Frame::new(32, 32, (0..1024).map(|_| rng.gen_range(60..200)).collect()).unwrap();
        let cfg = EncoderConfig::default().with_delta_qp(3);
        let node = delta_qp_search(&f, Rect::new(0, 0, 32, 32), &cfg, lambda(22)).unwrap();
        for l in node.leaves() {
            let qp = l.leaf.as_ref().unwrap().cfg.qp;
            assert!((19..=25).contains(&qp));
        }
    }

    #[test]
    fn illegal_rects_are_rejected() {
        let f = Frame::filled(16, 16, 0).unwrap();
        let cfg = EncoderConfig::default();
        assert!(partition_region(&f, Rect::new(8, 8, 16, 16), &cfg, 1.0).is_err());
        assert!(partition_region(&f, Rect::new(0, 0, 12, 16), &cfg, 1.0).is_err());
    }
}
