//! Separable orthonormal 2-D DCT-II on power-of-two blocks from 4 to 128.
//!
//! Sums run in `f64` in a fixed order so encoder and decoder agree bit-exactly.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const MIN_TX: usize = 4;
pub const MAX_TX: usize = 128;

const SIZES: usize = 6; // 4, 8, 16, 32, 64, 128

pub fn supported(w: usize, h: usize) -> bool {
    let ok = |n: usize| n.is_power_of_two() && (MIN_TX..=MAX_TX).contains(&n);
    ok(w) && ok(h)
}

fn check(w: usize, h: usize) -> Result<()> {
    if supported(w, h) {
        Ok(())
    } else {
        Err(Error::UnsupportedSize { w, h })
    }
}

fn size_index(n: usize) -> usize {
    n.trailing_zeros() as usize - 2
}

/// `basis[k * n + i] = s(k)·cos(π(2i+1)k / 2n)`
fn basis(n: usize) -> &'static [f64] {
    static TABLES: [OnceLock<Vec<f64>>; SIZES] = [const { OnceLock::new() }; SIZES];
    TABLES[size_index(n)].get_or_init(|| {
        let mut b = Vec::with_capacity(n * n);
        for k in 0..n {
            let s = if k == 0 {
                (1.0 / n as f64).sqrt()
            } else {
                (2.0 / n as f64).sqrt()
            };
            for i in 0..n {
                b.push(s * (PI * (2 * i + 1) as f64 * k as f64 / (2 * n) as f64).cos());
            }
        }
        b
    })
}

/// `basis_t[i * n + k] = basis[k * n + i]`
fn basis_t(n: usize) -> &'static [f64] {
    static TABLES: [OnceLock<Vec<f64>>; SIZES] = [const { OnceLock::new() }; SIZES];
    TABLES[size_index(n)].get_or_init(|| {
        let b = basis(n);
        (0..n * n).map(|j| b[(j % n) * n + j / n]).collect()
    })
}

/// Forward transform of a row-major `w × h` residual. Output is row-major by
/// vertical frequency, then horizontal frequency.
pub fn dct2_forward(residual: &[f64], w: usize, h: usize) -> Result<Vec<f64>> {
    check(w, h)?;
    assert_eq!(residual.len(), w * h);
    let (bt, bh) = (basis_t(w), basis(h));
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        let row = &residual[y * w..(y + 1) * w];
        let dst = &mut tmp[y * w..(y + 1) * w];
        for (i, &r) in row.iter().enumerate() {
            for (d, c) in dst.iter_mut().zip(&bt[i * w..(i + 1) * w]) {
                *d += r * c;
            }
        }
    }
    let mut out = vec![0.0; w * h];
    for v in 0..h {
        let b = &bh[v * h..(v + 1) * h];
        for y in 0..h {
            let c = b[y];
            let src = &tmp[y * w..(y + 1) * w];
            for (o, s) in out[v * w..(v + 1) * w].iter_mut().zip(src) {
                *o += c * s;
            }
        }
    }
    Ok(out)
}

pub fn dct2_inverse(coeffs: &[f64], w: usize, h: usize) -> Result<Vec<f64>> {
    check(w, h)?;
    assert_eq!(coeffs.len(), w * h);
    let (bw, bh) = (basis(w), basis(h));
    let mut tmp = vec![0.0; w * h];
    for v in 0..h {
        let src = &coeffs[v * w..(v + 1) * w];
        if src.iter().all(|&c| c == 0.0) {
            continue;
        }
        let b = &bh[v * h..(v + 1) * h];
        for y in 0..h {
            let c = b[y];
            for (t, s) in tmp[y * w..(y + 1) * w].iter_mut().zip(src) {
                *t += c * s;
            }
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        let row = &tmp[y * w..(y + 1) * w];
        let dst = &mut out[y * w..(y + 1) * w];
        for (u, &t) in row.iter().enumerate() {
            if t == 0.0 {
                continue;
            }
            let b = &bw[u * w..(u + 1) * w];
            for (d, c) in dst.iter_mut().zip(b) {
                *d += t * c;
            }
        }
    }
    Ok(out)
}

/// Anti-diagonal zigzag order over a `w × h` coefficient block: index `i`
/// of the scan holds the row-major position of the `i`-th coefficient.
pub fn zigzag(w: usize, h: usize) -> &'static [u16] {
    static TABLES: [[OnceLock<Vec<u16>>; SIZES]; SIZES] =
        [const { [const { OnceLock::new() }; SIZES] }; SIZES];
    TABLES[size_index(w)][size_index(h)].get_or_init(|| {
        let mut order = Vec::with_capacity(w * h);
        for s in 0..w + h - 1 {
            let ys: Vec<usize> = (0..h).filter(|&y| s >= y && s - y < w).collect();
            // odd diagonals run top to bottom, even ones bottom to top
            let iter: Box<dyn Iterator<Item = &usize>> = if s % 2 == 1 {
                Box::new(ys.iter())
            } else {
                Box::new(ys.iter().rev())
            };
            for &y in iter {
                order.push((y * w + (s - y)) as u16);
            }
        }
        order
    })
}
