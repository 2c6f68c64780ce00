use std::fmt;
use std::sync::Arc;

use crate::codec::quant::check_qp;
use crate::distortion::DistortionKind;
use crate::error::{Error, Result};
use crate::net::Network;
use crate::rdo::cost::DEFAULT_K;

/// Widest delta-QP range the stream header can carry (3 bits).
pub const MAX_DELTA_QP_RANGE: u8 = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Rect { x, y, w, h }
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}@({},{})", self.w, self.h, self.x, self.y)
    }
}

/// Partition of a coding unit. `BinH`/`TriH` stack their children vertically
/// (the split lines run horizontally); `BinV`/`TriV` place them side by side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SplitType {
    None = 0,
    Quad = 1,
    BinH = 2,
    BinV = 3,
    TriH = 4,
    TriV = 5,
}

impl SplitType {
    /// Split candidates in tie-break order, after `None`.
    pub const SPLITS: [SplitType; 5] = [
        SplitType::Quad,
        SplitType::BinH,
        SplitType::BinV,
        SplitType::TriH,
        SplitType::TriV,
    ];

    /// Bits spent on the split code of every node.
    pub const CODE_BITS: u32 = 3;

    pub fn code(self) -> u64 {
        self as u64
    }

    pub fn from_code(code: u64) -> Result<Self> {
        Ok(match code {
            0 => SplitType::None,
            1 => SplitType::Quad,
            2 => SplitType::BinH,
            3 => SplitType::BinV,
            4 => SplitType::TriH,
            5 => SplitType::TriV,
            _ => return Err(Error::Malformed(format!("split code {code}"))),
        })
    }

    pub fn is_mtt(self) -> bool {
        !matches!(self, SplitType::None | SplitType::Quad)
    }

    /// Child rectangles in coding order.
    pub fn children(self, r: Rect) -> Vec<Rect> {
        let Rect { x, y, w, h } = r;
        match self {
            SplitType::None => vec![],
            SplitType::Quad => {
                let (hw, hh) = (w / 2, h / 2);
                vec![
                    Rect::new(x, y, hw, hh),
                    Rect::new(x + hw, y, hw, hh),
                    Rect::new(x, y + hh, hw, hh),
                    Rect::new(x + hw, y + hh, hw, hh),
                ]
            }
            SplitType::BinH => vec![Rect::new(x, y, w, h / 2), Rect::new(x, y + h / 2, w, h / 2)],
            SplitType::BinV => vec![Rect::new(x, y, w / 2, h), Rect::new(x + w / 2, y, w / 2, h)],
            SplitType::TriH => {
                let q = h / 4;
                vec![
                    Rect::new(x, y, w, q),
                    Rect::new(x, y + q, w, 2 * q),
                    Rect::new(x, y + 3 * q, w, q),
                ]
            }
            SplitType::TriV => {
                let q = w / 4;
                vec![
                    Rect::new(x, y, q, h),
                    Rect::new(x + q, y, 2 * q, h),
                    Rect::new(x + 3 * q, y, q, h),
                ]
            }
        }
    }

    /// Encoder-side legality. Quad splits are only allowed before any
    /// binary/ternary split on the path from the CTU root.
    pub fn allowed(self, r: Rect, min_cu: usize, mtt_depth: u8, max_mtt_depth: u8) -> bool {
        let mtt_ok = mtt_depth < max_mtt_depth;
        match self {
            SplitType::None => true,
            SplitType::Quad => mtt_depth == 0 && r.w == r.h && r.w >= 2 * min_cu,
            SplitType::BinH => mtt_ok && r.h >= 2 * min_cu,
            SplitType::BinV => mtt_ok && r.w >= 2 * min_cu,
            SplitType::TriH => mtt_ok && r.h % 4 == 0 && r.h >= 4 * min_cu,
            SplitType::TriV => mtt_ok && r.w % 4 == 0 && r.w >= 4 * min_cu,
        }
    }

    pub fn child_mtt_depth(self, mtt_depth: u8) -> u8 {
        if self.is_mtt() {
            mtt_depth + 1
        } else {
            mtt_depth
        }
    }
}

impl fmt::Display for SplitType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitType::None => "none",
            SplitType::Quad => "quad",
            SplitType::BinH => "bin_h",
            SplitType::BinV => "bin_v",
            SplitType::TriH => "tri_h",
            SplitType::TriV => "tri_v",
        })
    }
}

#[derive(Clone, Debug)]
pub struct EncoderConfig {
    pub ctu_size: usize,
    pub min_cu: usize,
    pub max_mtt_depth: u8,
    pub kind: DistortionKind,
    pub base_qp: u8,
    /// Per-leaf QP search range `±delta_qp_range`; 0 disables delta-QP.
    pub delta_qp_range: u8,
    /// Upper bound enforced on `delta_qp_range` by [`EncoderConfig::validate`].
    pub delta_qp_limit: u8,
    pub k: f64,
    pub network: Option<Arc<Network>>,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            ctu_size: 64,
            min_cu: 4,
            max_mtt_depth: 3,
            kind: DistortionKind::Sse,
            base_qp: 22,
            delta_qp_range: 0,
            delta_qp_limit: 3,
            k: DEFAULT_K,
            network: None,
        }
    }
}

impl EncoderConfig {
    pub fn with_kind(mut self, kind: DistortionKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn with_qp(mut self, qp: u8) -> Self {
        self.base_qp = qp;
        self
    }

    pub fn with_network(mut self, net: Arc<Network>) -> Self {
        self.network = Some(net);
        self
    }

    pub fn with_delta_qp(mut self, range: u8) -> Self {
        self.delta_qp_range = range;
        self
    }

    pub fn delta_qp_enabled(&self) -> bool {
        self.delta_qp_range > 0
    }

    pub fn validate(&self) -> Result<()> {
        let pow2 = |n: usize| n.is_power_of_two();
        if !pow2(self.min_cu) || self.min_cu < 4 {
            return Err(Error::Config(format!(
                "min_cu must be a power of two >= 4, got {}",
                self.min_cu
            )));
        }
        if !pow2(self.ctu_size) || self.ctu_size > 128 || self.ctu_size < self.min_cu {
            return Err(Error::Config(format!(
                "ctu_size must be a power of two in [min_cu, 128], got {}",
                self.ctu_size
            )));
        }
        check_qp(self.base_qp as i32)?;
        if self.delta_qp_range > self.delta_qp_limit.min(MAX_DELTA_QP_RANGE) {
            return Err(Error::Config(format!(
                "delta-QP range {} exceeds limit {}",
                self.delta_qp_range,
                self.delta_qp_limit.min(MAX_DELTA_QP_RANGE)
            )));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::Config(format!("k must be positive, got {}", self.k)));
        }
        if self.kind.uses_features() && self.network.is_none() {
            return Err(Error::MissingNetwork);
        }
        Ok(())
    }

    /// Leaf QPs searched: `base ± delta_qp_range`, clamped to `[0, 51]`, ascending.
    pub fn leaf_qps(&self) -> Vec<u8> {
        let lo = (self.base_qp as i32 - self.delta_qp_range as i32).max(0);
        let hi = (self.base_qp as i32 + self.delta_qp_range as i32).min(51);
        (lo..=hi).map(|q| q as u8).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiles(parent: Rect, kids: &[Rect]) -> bool {
        let mut cover = vec![0u8; parent.area()];
        for k in kids {
            for y in k.y..k.y + k.h {
                for x in k.x..k.x + k.w {
                    if x < parent.x || y < parent.y || x >= parent.x + parent.w || y >= parent.y + parent.h {
                        return false;
                    }
                    cover[(y - parent.y) * parent.w + (x - parent.x)] += 1;
                }
            }
        }
        cover.iter().all(|&c| c == 1)
    }

    #[test]
    fn children_tile_parent() {
        let r = Rect::new(16, 32, 32, 16);
        for s in SplitType::SPLITS {
            assert!(tiles(r, &s.children(r)), "{s}");
        }
        assert_eq!(
            SplitType::TriV.children(Rect::new(0, 0, 16, 8)).iter().map(|c| c.w).collect::<Vec<_>>(),
            vec![4, 8, 4]
        );
    }

    #[test]
    fn legality_rules() {
        let r8 = Rect::new(0, 0, 8, 8);
        let legal: Vec<_> = SplitType::SPLITS.into_iter().filter(|s| s.allowed(r8, 4, 0, 0)).collect();
        assert_eq!(legal, vec![SplitType::Quad]);
        let legal: Vec<_> = SplitType::SPLITS.into_iter().filter(|s| s.allowed(r8, 4, 0, 3)).collect();
        assert_eq!(legal, vec![SplitType::Quad, SplitType::BinH, SplitType::BinV]);
        let r16 = Rect::new(0, 0, 16, 16);
        assert!(SplitType::TriH.allowed(r16, 4, 0, 3));
        assert!(!SplitType::TriH.allowed(r16, 8, 0, 3));
        assert!(!SplitType::Quad.allowed(r16, 4, 1, 3));
        assert!(!SplitType::BinV.allowed(r16, 4, 3, 3));
        assert!(!SplitType::Quad.allowed(Rect::new(0, 0, 16, 8), 4, 0, 3));
    }

    #[test]
    fn split_codes_round_trip() {
        for s in std::iter::once(SplitType::None).chain(SplitType::SPLITS) {
            assert_eq!(SplitType::from_code(s.code()).unwrap(), s);
        }
        assert!(SplitType::from_code(6).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(EncoderConfig::default().validate().is_ok());
        let c = EncoderConfig::default().with_kind(DistortionKind::Hfsad);
        assert!(matches!(c.validate(), Err(Error::MissingNetwork)));
        let c = EncoderConfig::default().with_delta_qp(4);
        assert!(c.validate().is_err());
        let c = EncoderConfig { delta_qp_limit: 5, ..EncoderConfig::default() }.with_delta_qp(4);
        assert!(c.validate().is_ok());
        let c = EncoderConfig { ctu_size: 48, ..EncoderConfig::default() };
        assert!(c.validate().is_err());
        let c = EncoderConfig { base_qp: 60, ..EncoderConfig::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn leaf_qps_range_and_clamp() {
        let c = EncoderConfig::default().with_qp(22).with_delta_qp(3);
        assert_eq!(c.leaf_qps(), (19..=25).collect::<Vec<u8>>());
        let c = EncoderConfig::default().with_qp(1).with_delta_qp(3);
        assert_eq!(c.leaf_qps(), vec![0, 1, 2, 3, 4]);
        assert_eq!(EncoderConfig::default().leaf_qps(), vec![22]);
    }
}
