//! Scalar image containers.
//!
//! [`DepthImage`] is the general real-valued grid used for depth maps and
//! for any intermediate field of the same shape (filtered images, gradient
//! components). [`GuideImage`] holds an intensity image clamped to `[0, 1]`.
//! Both store pixels row-major.

use crate::error::{Error, Result};

/// BT.601 luma weights for R, G and B.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl DepthImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {width}x{height} image",
                data.len()
            )));
        }
        Ok(DepthImage {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "empty image");
        DepthImage {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "empty image");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        DepthImage {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    /// Value at `(x, y)` with coordinates clamped to the image bounds.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.data[cy * self.width + cx]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DepthImage {
        DepthImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the first NaN or infinite pixel.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.data.iter().position(|v| !v.is_finite())
    }

    pub fn ensure_finite(&self, context: &str) -> Result<()> {
        match self.first_non_finite() {
            Some(index) => Err(Error::NonFinitePixel {
                index,
                context: context.to_owned(),
            }),
            None => Ok(()),
        }
    }

    pub fn ensure_same_dims(&self, other: &DepthImage, what: &str) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch(format!(
                "{what}: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }

    /// Copy of the `w`x`h` rectangle whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<DepthImage> {
        if w == 0 || h == 0 || x0 + w > self.width || y0 + h > self.height {
            return Err(Error::InvalidParameter(format!(
                "crop {w}x{h}+{x0}+{y0} outside {}x{} image",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            let start = y * self.width + x0;
            data.extend_from_slice(&self.data[start..start + w]);
        }
        Ok(DepthImage {
            width: w,
            height: h,
            data,
        })
    }

    /// Grows the image by replicating its border pixels.
    pub fn pad_edge(&self, left: usize, top: usize, right: usize, bottom: usize) -> DepthImage {
        let width = self.width + left + right;
        let height = self.height + top + bottom;
        DepthImage::from_fn(width, height, |x, y| {
            self.get_clamped(x as isize - left as isize, y as isize - top as isize)
        })
    }
}

/// Intensity image with values clamped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GuideImage {
    plane: DepthImage,
}

impl GuideImage {
    /// Non-finite values are rejected; everything else is clamped to `[0, 1]`.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        let plane = DepthImage::new(width, height, data)?;
        Self::from_plane(plane)
    }

    pub fn from_plane(mut plane: DepthImage) -> Result<Self> {
        plane.ensure_finite("guide image")?;
        for v in plane.data_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        Ok(GuideImage { plane })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.plane.width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.plane.height()
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        self.plane.dims()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        self.plane.data()
    }

    /// The guide viewed as a plain scalar grid.
    #[inline]
    pub fn as_plane(&self) -> &DepthImage {
        &self.plane
    }

    pub fn pad_edge(&self, left: usize, top: usize, right: usize, bottom: usize) -> GuideImage {
        GuideImage {
            plane: self.plane.pad_edge(left, top, right, bottom),
        }
    }
}

/// Interleaved multi-channel image with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

/// BT.601 luma of an RGB image, normalized to `[0, 1]`.
pub fn to_grayscale(rgb: &ColorImage) -> Result<GuideImage> {
    if rgb.channels != 3 {
        return Err(Error::InvalidParameter(format!(
            "grayscale conversion needs 3 channels, got {}",
            rgb.channels
        )));
    }
    if rgb.data.len() != rgb.width * rgb.height * 3 {
        return Err(Error::DimensionMismatch(format!(
            "{} values for a {}x{}x3 image",
            rgb.data.len(),
            rgb.width,
            rgb.height
        )));
    }
    let luma = rgb
        .data
        .chunks_exact(3)
        .map(|px| {
            // Written around the green channel so gray pixels map exactly.
            px[1] + LUMA_WEIGHTS[0] * (px[0] - px[1]) + LUMA_WEIGHTS[2] * (px[2] - px[1])
        })
        .collect();
    GuideImage::new(rgb.width, rgb.height, luma)
}
