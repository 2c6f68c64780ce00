use crate::error::{Error, Result};

pub const MAX_QP: i32 = 51;

/// QP and its step size `2^((qp − 4) / 6)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantParams {
    pub qp: u8,
    pub qstep: f64,
}

impl QuantParams {
    pub fn new(qp: i32) -> Result<Self> {
        check_qp(qp)?;
        Ok(QuantParams {
            qp: qp as u8,
            qstep: qstep(qp as u8),
        })
    }
}

pub fn check_qp(qp: i32) -> Result<()> {
    if (0..=MAX_QP).contains(&qp) {
        Ok(())
    } else {
        Err(Error::QpOutOfRange(qp))
    }
}

pub fn qstep(qp: u8) -> f64 {
    ((qp as f64 - 4.0) / 6.0).exp2()
}

/// Round half away from zero.
#[inline]
pub fn quantize_coeff(c: f64, qstep: f64) -> i32 {
    // non-negative, so truncation is floor
    let level = (c.abs() / qstep + 0.5) as i32;
    if c < 0.0 {
        -level
    } else {
        level
    }
}

pub fn quantize(coeffs: &[f64], qp: u8) -> Vec<i32> {
    let step = qstep(qp);
    coeffs.iter().map(|&c| quantize_coeff(c, step)).collect()
}

pub fn dequantize(levels: &[i32], qp: u8) -> Vec<f64> {
    let step = qstep(qp);
    levels.iter().map(|&l| l as f64 * step).collect()
}
