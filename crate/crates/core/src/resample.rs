//! Separable bicubic resampling with the Keys kernel (a = -0.5).
//!
//! Pixel centers are aligned (`src = (dst + 0.5) * in / out - 0.5`) and
//! samples outside the image are clamped to the nearest edge pixel. Each
//! output is accumulated as `base + sum(w_k * (v_k - base))` with `base` the
//! nearest tap, so constant inputs come back bit-exact.

use crate::error::{Error, Result};
use crate::image::DepthImage;

pub const KEYS_A: f64 = -0.5;

/// Keys cubic convolution kernel.
#[inline]
pub fn keys_kernel(x: f64) -> f64 {
    let a = KEYS_A;
    let x = x.abs();
    if x <= 1.0 {
        ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a
    } else {
        0.0
    }
}

/// Source taps and weights for one output coordinate.
#[derive(Debug, Clone, Copy)]
struct Taps {
    index: [usize; 4],
    weight: [f64; 4],
    /// Which of the four taps is nearest to the sample position.
    nearest: usize,
}

fn axis_taps(in_len: usize, out_len: usize) -> Vec<Taps> {
    let ratio = in_len as f64 / out_len as f64;
    let last = in_len as isize - 1;
    (0..out_len)
        .map(|j| {
            let src = (j as f64 + 0.5) * ratio - 0.5;
            let i0 = src.floor();
            let frac = src - i0;
            let i0 = i0 as isize;
            let mut index = [0usize; 4];
            let mut weight = [0f64; 4];
            for k in 0..4 {
                let offset = k as isize - 1;
                index[k] = (i0 + offset).clamp(0, last) as usize;
                weight[k] = keys_kernel(frac - offset as f64);
            }
            let nearest = if frac < 0.5 { 1 } else { 2 };
            Taps {
                index,
                weight,
                nearest,
            }
        })
        .collect()
}

#[inline]
fn interpolate(taps: &Taps, sample: impl Fn(usize) -> f64) -> f64 {
    let base = sample(taps.index[taps.nearest]);
    let mut acc = 0.0;
    for k in 0..4 {
        acc += taps.weight[k] * (sample(taps.index[k]) - base);
    }
    base + acc
}

/// Resizes to an explicit output size.
pub fn resize_to(img: &DepthImage, out_width: usize, out_height: usize) -> Result<DepthImage> {
    if out_width == 0 || out_height == 0 {
        return Err(Error::InvalidParameter(format!(
            "resize target {out_width}x{out_height} is empty"
        )));
    }
    let (w, h) = img.dims();
    let xs = axis_taps(w, out_width);
    let ys = axis_taps(h, out_height);
    let src = img.data();

    let mut horizontal = vec![0.0; out_width * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        let dst = &mut horizontal[y * out_width..(y + 1) * out_width];
        for (out, taps) in dst.iter_mut().zip(&xs) {
            *out = interpolate(taps, |i| row[i]);
        }
    }

    let mut out = vec![0.0; out_width * out_height];
    for (y, taps) in ys.iter().enumerate() {
        let dst = &mut out[y * out_width..(y + 1) * out_width];
        for (x, v) in dst.iter_mut().enumerate() {
            *v = interpolate(taps, |i| horizontal[i * out_width + x]);
        }
    }
    DepthImage::new(out_width, out_height, out)
}

/// Output size for a scale factor: each side is `round(len * factor)`.
pub fn scaled_dims(width: usize, height: usize, factor: f64) -> Result<(usize, usize)> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "scale factor must be positive, got {factor}"
        )));
    }
    let ow = (width as f64 * factor).round() as usize;
    let oh = (height as f64 * factor).round() as usize;
    if ow == 0 || oh == 0 {
        return Err(Error::InvalidParameter(format!(
            "factor {factor} shrinks {width}x{height} to nothing"
        )));
    }
    Ok((ow, oh))
}

/// Bicubic up- or downsampling by `factor`.
pub fn bicubic_resize(img: &DepthImage, factor: f64) -> Result<DepthImage> {
    let (ow, oh) = scaled_dims(img.width(), img.height(), factor)?;
    resize_to(img, ow, oh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct 1-D cubic convolution with edge clamping, written independently
    /// of the tap tables.
    fn keys_convolve_1d(signal: &[f64], pos: f64) -> f64 {
        let n = signal.len() as isize;
        let lo = pos.floor() as isize - 3;
        let hi = pos.floor() as isize + 3;
        (lo..=hi)
            .map(|i| signal[i.clamp(0, n - 1) as usize] * keys_kernel(pos - i as f64))
            .sum()
    }

    #[test]
    fn kernel_values() {
        assert_eq!(keys_kernel(0.0), 1.0);
        assert_eq!(keys_kernel(1.0), 0.0);
        assert_eq!(keys_kernel(2.0), 0.0);
        assert!((keys_kernel(0.5) - 0.5625).abs() < 1e-15);
        assert!((keys_kernel(1.5) + 0.0625).abs() < 1e-15);
    }

    #[test]
    fn constant_is_exact() {
        let img = DepthImage::filled(7, 5, 7.0);
        for factor in [0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0] {
            let out = bicubic_resize(&img, factor).unwrap();
            assert!(out.data().iter().all(|&v| v == 7.0), "factor {factor}");
        }
    }

    #[test]
    fn unit_factor_is_identity() {
        let img = DepthImage::from_fn(6, 4, |x, y| ((x * 7 + y * 13) % 11) as f64 * 0.37);
        let out = bicubic_resize(&img, 1.0).unwrap();
        for (a, b) in img.data().iter().zip(out.data()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn ramp_upscale_matches_direct_convolution() {
        let ramp = [0.0, 1.0, 2.0, 3.0];
        let img = DepthImage::new(4, 1, ramp.to_vec()).unwrap();
        let out = resize_to(&img, 8, 1).unwrap();
        for j in 0..8 {
            let pos = (j as f64 + 0.5) / 2.0 - 0.5;
            let expected = keys_convolve_1d(&ramp, pos);
            assert!((out.data()[j] - expected).abs() < 1e-9, "sample {j}");
        }
        // Interior samples see four in-range taps; cubic convolution
        // reproduces the line exactly there.
        assert!((out.data()[3] - 1.25).abs() < 1e-9);
        assert!((out.data()[4] - 1.75).abs() < 1e-9);
    }

    #[test]
    fn downsample_dims() {
        let img = DepthImage::filled(12, 8, 1.0);
        assert_eq!(bicubic_resize(&img, 0.25).unwrap().dims(), (3, 2));
        assert!(bicubic_resize(&img, 0.01).is_err());
        assert!(bicubic_resize(&img, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn resize_is_linear(
            xs in proptest::collection::vec(-100.0f64..100.0, 30),
            ys in proptest::collection::vec(-100.0f64..100.0, 30),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
            factor in prop::sample::select(vec![0.5, 1.0, 2.0, 2.5, 4.0]),
        ) {
            let x = DepthImage::new(6, 5, xs).unwrap();
            let y = DepthImage::new(6, 5, ys).unwrap();
            let combo = DepthImage::new(
                6, 5,
                x.data().iter().zip(y.data()).map(|(p, q)| a * p + b * q).collect(),
            ).unwrap();
            let lhs = bicubic_resize(&combo, factor).unwrap();
            let rx = bicubic_resize(&x, factor).unwrap();
            let ry = bicubic_resize(&y, factor).unwrap();
            for i in 0..lhs.len() {
                let rhs = a * rx.data()[i] + b * ry.data()[i];
                prop_assert!((lhs.data()[i] - rhs).abs() <= 1e-9);
            }
        }
    }
}
