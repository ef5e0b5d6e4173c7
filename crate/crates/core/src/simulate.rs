//! Low-resolution acquisition simulator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::image::DepthImage;
use crate::resample::resize_to;

/// Bicubic downsampling by `factor` followed by depth-dependent Gaussian
/// noise with per-pixel sigma `noise_sigma_base * depth / max_depth`.
///
/// `max_depth` is the maximum of `hr`. Dimensions that are not a multiple of
/// `factor` are first padded by edge replication on the right and bottom.
pub fn simulate_lr(
    hr: &DepthImage,
    factor: usize,
    noise_sigma_base: f64,
    rng_seed: u64,
) -> Result<DepthImage> {
    if factor < 2 {
        return Err(Error::InvalidParameter(format!(
            "downsampling factor must be >= 2, got {factor}"
        )));
    }
    if !(noise_sigma_base.is_finite() && noise_sigma_base >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise sigma must be finite and >= 0, got {noise_sigma_base}"
        )));
    }
    hr.ensure_finite("high-resolution input")?;

    let pad_w = (factor - hr.width() % factor) % factor;
    let pad_h = (factor - hr.height() % factor) % factor;
    let padded;
    let src = if pad_w > 0 || pad_h > 0 {
        padded = hr.pad_edge(0, 0, pad_w, pad_h);
        &padded
    } else {
        hr
    };

    let mut lr = resize_to(src, src.width() / factor, src.height() / factor)?;
    let max_depth = hr.max();
    if noise_sigma_base > 0.0 && max_depth > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let gain = noise_sigma_base / max_depth;
        for v in lr.data_mut() {
            let n: f64 = StandardNormal.sample(&mut rng);
            *v += gain * v.max(0.0) * n;
        }
    }
    Ok(lr)
}
