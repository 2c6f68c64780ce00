use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Fewest points a curve must have for the cubic fit.
pub const MIN_CURVE_POINTS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RdPoint {
    /// Bits per pixel.
    pub rate: f64,
    pub quality: f64,
}

impl RdPoint {
    pub fn new(rate: f64, quality: f64) -> Self {
        RdPoint { rate, quality }
    }
}

/// Points sorted by strictly increasing rate.
#[derive(Clone, Debug, PartialEq)]
pub struct RdCurve {
    points: Vec<RdPoint>,
}

impl RdCurve {
    /// Sorts by rate. Rates must be positive and distinct, qualities finite.
    /// Quality that falls as rate rises is logged, not rejected.
    pub fn new(mut points: Vec<RdPoint>) -> Result<Self> {
        if points.len() < MIN_CURVE_POINTS {
            return Err(Error::TooFewPoints(points.len()));
        }
        for p in &points {
            if !(p.rate > 0.0 && p.rate.is_finite()) {
                return Err(Error::InvalidCurve(format!("rate {} is not positive", p.rate)));
            }
            if !p.quality.is_finite() {
                return Err(Error::InvalidCurve(format!("quality {} is not finite", p.quality)));
            }
        }
        points.sort_by(|a, b| a.rate.total_cmp(&b.rate));
        for w in points.windows(2) {
            if w[0].rate == w[1].rate {
                return Err(Error::InvalidCurve(format!("duplicate rate {}", w[0].rate)));
            }
            if w[1].quality < w[0].quality {
                log::warn!(
                    "quality falls from {} to {} as rate rises from {} to {}",
                    w[0].quality,
                    w[1].quality,
                    w[0].rate,
                    w[1].rate
                );
            }
        }
        Ok(RdCurve { points })
    }

    pub fn points(&self) -> &[RdPoint] {
        &self.points
    }

    fn quality_range(&self) -> (f64, f64) {
        let q = self.points.iter().map(|p| p.quality);
        (q.clone().fold(f64::INFINITY, f64::min), q.fold(f64::NEG_INFINITY, f64::max))
    }
}

/// Cubic least-squares fit of `log10(rate)` against quality, in a centred and
/// scaled quality variable `u = (q − shift) / scale`.
struct LogRateFit {
    coeffs: [f64; 4],
    shift: f64,
    scale: f64,
}

impl LogRateFit {
    fn new(curve: &RdCurve, shift: f64, scale: f64) -> Result<Self> {
        let n = curve.points.len();
        let a = DMatrix::from_fn(n, 4, |i, j| ((curve.points[i].quality - shift) / scale).powi(j as i32));
        let b = DVector::from_iterator(n, curve.points.iter().map(|p| p.rate.log10()));
        let c = a
            .svd(true, true)
            .solve(&b, 1e-12)
            .map_err(|e| Error::InvalidCurve(format!("cubic fit failed: {e}")))?;
        Ok(LogRateFit {
            coeffs: [c[0], c[1], c[2], c[3]],
            shift,
            scale,
        })
    }

    /// `∫ p(q) dq` over `[lo, hi]`.
    fn integral(&self, lo: f64, hi: f64) -> f64 {
        let anti = |q: f64| {
            let u = (q - self.shift) / self.scale;
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * u.powi(k as i32 + 1) / (k + 1) as f64)
                .sum::<f64>()
        };
        (anti(hi) - anti(lo)) * self.scale
    }
}

/// Bjøntegaard delta rate of `test` against `anchor`, in percent. Negative
/// means `test` needs less rate for the same quality.
pub fn bd_rate(anchor: &RdCurve, test: &RdCurve) -> Result<f64> {
    let (alo, ahi) = anchor.quality_range();
    let (tlo, thi) = test.quality_range();
    let (lo, hi) = (alo.max(tlo), ahi.min(thi));
    if lo >= hi {
        return Err(Error::NoOverlap);
    }
    let shift = 0.5 * (lo + hi);
    let scale = 0.5 * (hi - lo);
    let fa = LogRateFit::new(anchor, shift, scale)?;
    let ft = LogRateFit::new(test, shift, scale)?;
    let delta = (ft.integral(lo, hi) - fa.integral(lo, hi)) / (hi - lo);
    Ok((10f64.powf(delta) - 1.0) * 100.0)
}
