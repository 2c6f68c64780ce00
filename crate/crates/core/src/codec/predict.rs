//! Four-mode intra prediction from the reconstructed row above and column
//! to the left.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::frame::Block;

/// Value used for neighbors outside the current CTU.
pub const UNAVAILABLE: u8 = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IntraMode {
    Dc = 0,
    Horizontal = 1,
    Vertical = 2,
    Planar = 3,
}

impl IntraMode {
    /// Enumeration order used by the leaf search.
    pub const ALL: [IntraMode; 4] = [
        IntraMode::Dc,
        IntraMode::Horizontal,
        IntraMode::Vertical,
        IntraMode::Planar,
    ];

    pub fn from_bits(bits: u64) -> Result<Self> {
        IntraMode::ALL
            .get(bits as usize)
            .copied()
            .ok_or_else(|| Error::Malformed(format!("intra mode code {bits}")))
    }
}

impl fmt::Display for IntraMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IntraMode::Dc => "dc",
            IntraMode::Horizontal => "horizontal",
            IntraMode::Vertical => "vertical",
            IntraMode::Planar => "planar",
        })
    }
}

impl FromStr for IntraMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IntraMode::ALL
            .into_iter()
            .find(|m| m.to_string() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown intra mode {s:?}")))
    }
}

/// Reconstructed neighbor samples of a block. `None` marks a side that lies
/// outside the current CTU.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Neighbors {
    pub top: Option<Vec<u8>>,
    pub left: Option<Vec<u8>>,
}

impl Neighbors {
    pub fn none() -> Self {
        Self::default()
    }
}

pub fn predict_intra(ctx: &Neighbors, mode: IntraMode, w: usize, h: usize) -> Block {
    let fallback_top = vec![UNAVAILABLE; w];
    let fallback_left = vec![UNAVAILABLE; h];
    let top = ctx.top.as_deref().unwrap_or(&fallback_top);
    let left = ctx.left.as_deref().unwrap_or(&fallback_left);
    debug_assert!(top.len() >= w && left.len() >= h);

    let samples = match mode {
        IntraMode::Dc => {
            let mut sum = 0u32;
            let mut n = 0u32;
            if let Some(t) = &ctx.top {
                sum += t[..w].iter().map(|&v| v as u32).sum::<u32>();
                n += w as u32;
            }
            if let Some(l) = &ctx.left {
                sum += l[..h].iter().map(|&v| v as u32).sum::<u32>();
                n += h as u32;
            }
            let dc = if n == 0 {
                UNAVAILABLE
            } else {
                ((sum + n / 2) / n) as u8
            };
            vec![dc; w * h]
        }
        IntraMode::Horizontal => left[..h]
            .iter()
            .flat_map(|&v| std::iter::repeat(v).take(w))
            .collect(),
        IntraMode::Vertical => top[..w].repeat(h),
        IntraMode::Planar => {
            let (lw, lh) = (w.trailing_zeros(), h.trailing_zeros());
            let top_right = top[w - 1] as u32;
            let bottom_left = left[h - 1] as u32;
            let mut s = Vec::with_capacity(w * h);
            for y in 0..h {
                for x in 0..w {
                    let vert = (h - 1 - y) as u32 * top[x] as u32 + (y + 1) as u32 * bottom_left;
                    let horz = (w - 1 - x) as u32 * left[y] as u32 + (x + 1) as u32 * top_right;
                    let v = ((vert << lw) + (horz << lh) + (w * h) as u32) >> (lw + lh + 1);
                    s.push(v as u8);
                }
            }
            s
        }
    };
    Block {
        x: 0,
        y: 0,
        width: w,
        height: h,
        samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_neighbors_dc_is_mid_gray() {
        let p = predict_intra(&Neighbors::none(), IntraMode::Dc, 4, 4);
        assert!(p.samples.iter().all(|&v| v == 128));
    }

    #[test]
    fn horizontal_copies_left_column() {
        let ctx = Neighbors {
            top: None,
            left: Some(vec![50; 4]),
        };
        let p = predict_intra(&ctx, IntraMode::Horizontal, 8, 4);
        assert!(p.samples.iter().all(|&v| v == 50));
        let ctx = Neighbors {
            top: None,
            left: Some(vec![1, 2, 3, 4]),
        };
        let p = predict_intra(&ctx, IntraMode::Horizontal, 4, 4);
        assert_eq!(&p.samples[4..8], &[2, 2, 2, 2]);
    }

    #[test]
    fn vertical_copies_top_row() {
        let ctx = Neighbors {
            top: Some(vec![1, 2, 3, 4]),
            left: None,
        };
        let p = predict_intra(&ctx, IntraMode::Vertical, 4, 8);
        assert!(p.samples.chunks(4).all(|r| r == [1, 2, 3, 4]));
    }

    #[test]
    fn dc_rounds_mean_of_available_sides() {
        let ctx = Neighbors {
            top: Some(vec![10, 20]),
            left: Some(vec![10, 30]),
        };
        let p = predict_intra(&ctx, IntraMode::Dc, 2, 2);
        assert_eq!(p.samples, vec![18; 4]);
        let ctx = Neighbors {
            top: None,
            left: Some(vec![10, 11, 11, 11]),
        };
        assert_eq!(predict_intra(&ctx, IntraMode::Dc, 4, 4).samples[0], 11);
    }

    #[test]
    fn planar_of_flat_neighbors_is_flat() {
        let ctx = Neighbors {
            top: Some(vec![77; 16]),
            left: Some(vec![77; 8]),
        };
        let p = predict_intra(&ctx, IntraMode::Planar, 16, 8);
        assert!(p.samples.iter().all(|&v| v == 77));
    }

    #[test]
    fn planar_blends_between_edges() {
        let ctx = Neighbors {
            top: Some(vec![0; 4]),
            left: Some(vec![0, 0, 0, 200]),
        };
        let p = predict_intra(&ctx, IntraMode::Planar, 4, 4);
        // vertical ramp toward bottom-left, no horizontal contribution
        assert_eq!(p.at_xy(0, 0), 25);
        assert!(p.at_xy(0, 3) > p.at_xy(0, 0));
        assert!(p.at_xy(3, 3) < p.at_xy(0, 3));
    }
}
