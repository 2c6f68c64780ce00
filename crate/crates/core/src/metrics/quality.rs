use crate::distortion::{sse_samples, FeatureMetric};
use crate::error::{Error, Result};
use crate::frame::{extract_block, Frame};
use crate::net::{extract_features, Network};

/// Side of the square tiles feature fidelity is measured on.
pub const FIDELITY_TILE: usize = 64;

fn check_dims(orig: &Frame, recon: &Frame) -> Result<()> {
    if orig.width() != recon.width() || orig.height() != recon.height() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            orig.width(),
            orig.height(),
            recon.width(),
            recon.height()
        )));
    }
    Ok(())
}

/// `10·log10(255² / MSE)`; `f64::INFINITY` for identical frames.
pub fn psnr(orig: &Frame, recon: &Frame) -> Result<f64> {
    check_dims(orig, recon)?;
    let mse = sse_samples(orig.samples(), recon.samples()) as f64 / orig.samples().len() as f64;
    Ok(psnr_from_mse(mse))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0f64 * 255.0 / mse).log10()
    }
}

/// `−10·log10(mean per-element feature error)`, where the mean runs over all
/// feature elements of all non-overlapping 64×64 tiles (edge tiles may be
/// smaller). `f64::INFINITY` when the error is zero.
pub fn feature_fidelity(orig: &Frame, recon: &Frame, net: &Network, metric: FeatureMetric) -> Result<f64> {
    check_dims(orig, recon)?;
    let (mut err, mut count) = (0.0f64, 0usize);
    for y in (0..orig.height()).step_by(FIDELITY_TILE) {
        for x in (0..orig.width()).step_by(FIDELITY_TILE) {
            let w = FIDELITY_TILE.min(orig.width() - x);
            let h = FIDELITY_TILE.min(orig.height() - y);
            let a = extract_features(&extract_block(orig, x, y, w, h)?, net)?;
            let b = extract_features(&extract_block(recon, x, y, w, h)?, net)?;
            err += metric.measure(&a, &b)?;
            count += a.values.len();
        }
    }
    let mean = err / count as f64;
    Ok(if mean == 0.0 { f64::INFINITY } else { -10.0 * mean.log10() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn psnr_examples() {
        let a = Frame::filled(4, 4, 10).unwrap();
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        let b = Frame::filled(4, 4, 11).unwrap();
        assert!((psnr(&a, &b).unwrap() - 48.130_803_608).abs() < 1e-6);
        let black = Frame::filled(2, 2, 0).unwrap();
        let white = Frame::filled(2, 2, 255).unwrap();
        assert_eq!(psnr(&black, &white).unwrap(), 0.0);
        assert!(psnr(&a, &black).is_err());
    }

    #[test]
    fn identity_network_fsse_fidelity_equals_psnr() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let orig = Frame::new(100, 72, (0..7200).map(|_| rng.gen()).collect()).unwrap();
        let noisy: Vec<u8> = orig.samples().iter().map(|&v| v.saturating_add(rng.gen_range(0..9))).collect();
        let recon = Frame::new(100, 72, noisy).unwrap();
        let ff = feature_fidelity(&orig, &recon, &Network::identity(), FeatureMetric::Fsse).unwrap();
        assert!((ff - psnr(&orig, &recon).unwrap()).abs() < 1e-4);
    }

    #[test]
    fn fidelity_drops_with_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let net = crate::net::seeded_network(3, 1, 8);
        let orig = Frame::new(64, 64, (0..4096).map(|i| ((i % 64) * 3) as u8).collect()).unwrap();
        assert_eq!(feature_fidelity(&orig, &orig, &net, FeatureMetric::Fsad).unwrap(), f64::INFINITY);
        let mut last = f64::INFINITY;
        for amp in [2, 8, 32, 96] {
            let s = orig
                .samples()
                .iter()
                .map(|&v| (v as i32 + rng.gen_range(-amp..=amp)).clamp(0, 255) as u8)
                .collect();
            let f = feature_fidelity(&orig, &Frame::new(64, 64, s).unwrap(), &net, FeatureMetric::Fsad).unwrap();
            assert!(f < last, "amp {amp}: {f} !< {last}");
            last = f;
        }
    }
}
