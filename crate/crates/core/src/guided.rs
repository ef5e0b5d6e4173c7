//! Gray-guide guided filter with an O(1)-per-pixel box mean.
//!
//! Windows are `(2r+1)^2` squares clipped at the image border, and every
//! mean is normalized by the clipped window's actual pixel count.

use crate::error::{Error, Result};
use crate::image::{DepthImage, GuideImage};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidedFilterParams {
    radius: usize,
    epsilon: f64,
}

impl GuidedFilterParams {
    pub const DEFAULT_RADIUS: usize = 8;
    pub const DEFAULT_EPSILON: f64 = 1e-4;

    pub fn new(radius: usize, epsilon: f64) -> Result<Self> {
        if radius < 1 {
            return Err(Error::InvalidParameter(
                "guided filter radius must be >= 1".into(),
            ));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "guided filter epsilon must be > 0, got {epsilon}"
            )));
        }
        Ok(GuidedFilterParams { radius, epsilon })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

impl Default for GuidedFilterParams {
    fn default() -> Self {
        GuidedFilterParams {
            radius: Self::DEFAULT_RADIUS,
            epsilon: Self::DEFAULT_EPSILON,
        }
    }
}

/// Summed-area table with a zero guard row and column.
struct IntegralImage {
    stride: usize,
    sums: Vec<f64>,
}

impl IntegralImage {
    fn new(width: usize, height: usize, data: &[f64]) -> Self {
        let stride = width + 1;
        let mut sums = vec![0.0; stride * (height + 1)];
        for y in 0..height {
            let mut row_sum = 0.0;
            for x in 0..width {
                row_sum += data[y * width + x];
                sums[(y + 1) * stride + x + 1] = sums[y * stride + x + 1] + row_sum;
            }
        }
        IntegralImage { stride, sums }
    }

    /// Sum over `[x0, x1) x [y0, y1)`.
    #[inline]
    fn rect_sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
        let s = self.stride;
        self.sums[y1 * s + x1] - self.sums[y0 * s + x1] - self.sums[y1 * s + x0]
            + self.sums[y0 * s + x0]
    }
}

fn box_mean(width: usize, height: usize, data: &[f64], radius: usize) -> Vec<f64> {
    if radius == 0 {
        return data.to_vec();
    }
    let table = IntegralImage::new(width, height, data);
    let mut out = Vec::with_capacity(data.len());
    for y in 0..height {
        let y0 = y.saturating_sub(radius);
        let y1 = (y + radius + 1).min(height);
        for x in 0..width {
            let x0 = x.saturating_sub(radius);
            let x1 = (x + radius + 1).min(width);
            let area = ((x1 - x0) * (y1 - y0)) as f64;
            out.push(table.rect_sum(x0, y0, x1, y1) / area);
        }
    }
    out
}

/// Mean over the clipped `(2r+1)^2` window around each pixel.
pub fn box_filter(img: &DepthImage, radius: usize) -> DepthImage {
    let (w, h) = img.dims();
    DepthImage::new(w, h, box_mean(w, h, img.data(), radius)).expect("same dimensions")
}

/// Guided filter of `p` steered by `guide`.
///
/// Each window fits `q = a * I + b` by least squares with ridge `epsilon` on
/// `a`; the output averages the coefficients of all windows covering a pixel.
pub fn guided_filter(
    p: &DepthImage,
    guide: &GuideImage,
    params: &GuidedFilterParams,
) -> Result<DepthImage> {
    if p.dims() != guide.dims() {
        return Err(Error::DimensionMismatch(format!(
            "guided filter input {}x{} vs guide {}x{}",
            p.width(),
            p.height(),
            guide.width(),
            guide.height()
        )));
    }
    let (w, h) = p.dims();
    let r = params.radius;
    let eps = params.epsilon;
    let gi = guide.data();
    // Filtering p - p[0] and adding p[0] back keeps constant inputs bit-exact.
    let shift = p.data()[0];
    let shifted: Vec<f64> = p.data().iter().map(|v| v - shift).collect();
    let src = &shifted[..];

    let mean_i = box_mean(w, h, gi, r);
    let mean_p = box_mean(w, h, src, r);
    let ii: Vec<f64> = gi.iter().map(|v| v * v).collect();
    let ip: Vec<f64> = gi.iter().zip(src).map(|(i, v)| i * v).collect();
    let corr_ii = box_mean(w, h, &ii, r);
    let corr_ip = box_mean(w, h, &ip, r);

    let mut a = Vec::with_capacity(src.len());
    let mut b = Vec::with_capacity(src.len());
    for k in 0..src.len() {
        let var_i = (corr_ii[k] - mean_i[k] * mean_i[k]).max(0.0);
        let cov_ip = corr_ip[k] - mean_i[k] * mean_p[k];
        let ak = cov_ip / (var_i + eps);
        a.push(ak);
        b.push(mean_p[k] - ak * mean_i[k]);
    }

    let mean_a = box_mean(w, h, &a, r);
    let mean_b = box_mean(w, h, &b, r);
    let out = mean_a
        .iter()
        .zip(&mean_b)
        .zip(gi)
        .map(|((ma, mb), i)| ma * i + mb + shift)
        .collect();
    DepthImage::new(w, h, out)
}
