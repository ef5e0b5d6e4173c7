//! Fourier-domain solver for the quadratic u-subproblem.
//!
//! Minimizes
//!
//! ```text
//! ||u - d||^2 + rho ||u - z||^2 + beta (||Dx u - h||^2 + ||Dy u - v||^2)
//! ```
//!
//! where `Dx`, `Dy` are circular forward differences. Under periodic
//! boundaries both operators are diagonalized by the 2-D DFT, so the normal
//! equations reduce to one complex division per frequency.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::image::DepthImage;

/// Forward and inverse plans for one image size.
#[derive(Clone)]
struct Fft2d {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2d {
    fn new(width: usize, height: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2d {
            width,
            height,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    fn run(&self, buf: &mut [Complex64], rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        let (w, h) = (self.width, self.height);
        rows.process(buf);
        let mut column = vec![Complex64::default(); h];
        let mut scratch = vec![Complex64::default(); cols.get_inplace_scratch_len()];
        for x in 0..w {
            for y in 0..h {
                column[y] = buf[y * w + x];
            }
            cols.process_with_scratch(&mut column, &mut scratch);
            for y in 0..h {
                buf[y * w + x] = column[y];
            }
        }
    }

    /// Unnormalized forward DFT, row-major in and out.
    fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.row_fwd, &self.col_fwd);
    }

    /// Inverse DFT including the `1 / (w h)` normalization.
    fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.row_inv, &self.col_inv);
        let norm = 1.0 / (self.width * self.height) as f64;
        for v in buf.iter_mut() {
            *v *= norm;
        }
    }

    fn forward_real(&self, data: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }
}

/// Transfer functions of the difference operators for one image size,
/// plus the FFT plans for that size. Immutable once built.
#[derive(Clone)]
pub struct OtfCache {
    width: usize,
    height: usize,
    otf_dx: Vec<Complex64>,
    otf_dy: Vec<Complex64>,
    denom_base: Vec<f64>,
    fft: Fft2d,
}

impl std::fmt::Debug for OtfCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OtfCache")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

/// Embeds the forward difference as a periodic kernel: -1 at the origin and
/// +1 at the wrapped position, so that convolving gives `u[i+1] - u[i]`.
fn difference_kernel(width: usize, height: usize, horizontal: bool) -> Vec<f64> {
    let mut k = vec![0.0; width * height];
    k[0] = -1.0;
    if horizontal {
        k[width - 1] = 1.0;
    } else {
        k[(height - 1) * width] = 1.0;
    }
    k
}

impl OtfCache {
    pub fn build(width: usize, height: usize) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::InvalidParameter(format!(
                "OTF cache needs at least 2x2, got {width}x{height}"
            )));
        }
        let fft = Fft2d::new(width, height);
        let otf_dx = fft.forward_real(&difference_kernel(width, height, true));
        let otf_dy = fft.forward_real(&difference_kernel(width, height, false));
        let denom_base = otf_dx
            .iter()
            .zip(&otf_dy)
            .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
            .collect();
        Ok(OtfCache {
            width,
            height,
            otf_dx,
            otf_dy,
            denom_base,
            fft,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn otf_dx(&self) -> &[Complex64] {
        &self.otf_dx
    }

    pub fn otf_dy(&self) -> &[Complex64] {
        &self.otf_dy
    }

    /// `|F(dx)|^2 + |F(dy)|^2` per frequency.
    pub fn denom_base(&self) -> &[f64] {
        &self.denom_base
    }

    pub fn serves(&self, img: &DepthImage) -> bool {
        img.dims() == (self.width, self.height)
    }

    pub fn forward(&self, img: &DepthImage) -> Vec<Complex64> {
        self.fft.forward_real(img.data())
    }

    /// Inverse transform; returns the real part and the largest discarded
    /// imaginary magnitude.
    pub fn inverse_real(&self, mut spectrum: Vec<Complex64>) -> (DepthImage, f64) {
        self.fft.inverse(&mut spectrum);
        let max_imag = spectrum.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
        let data = spectrum.into_iter().map(|c| c.re).collect();
        let img = DepthImage::new(self.width, self.height, data).expect("cache dimensions");
        (img, max_imag)
    }

    /// Like [`solve_u`], also returning the largest imaginary component
    /// dropped after the inverse transform.
    pub fn solve_with_residue(
        &self,
        d_up: &DepthImage,
        z: &DepthImage,
        h: &DepthImage,
        v: &DepthImage,
        rho: f64,
        beta: f64,
    ) -> Result<(DepthImage, f64)> {
        for (name, img) in [("d_up", d_up), ("z", z), ("h", h), ("v", v)] {
            if !self.serves(img) {
                return Err(Error::DimensionMismatch(format!(
                    "{name} is {}x{}, solver cache is {}x{}",
                    img.width(),
                    img.height(),
                    self.width,
                    self.height
                )));
            }
        }
        if !(rho.is_finite() && rho >= 0.0) || !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rho and beta must be finite and >= 0, got rho={rho}, beta={beta}"
            )));
        }
        let fd = self.forward(d_up);
        let fz = self.forward(z);
        let fh = self.forward(h);
        let fv = self.forward(v);
        let spectrum = (0..fd.len())
            .map(|k| {
                let num = fd[k]
                    + fz[k] * rho
                    + (self.otf_dx[k].conj() * fh[k] + self.otf_dy[k].conj() * fv[k]) * beta;
                num / (1.0 + rho + beta * self.denom_base[k])
            })
            .collect();
        Ok(self.inverse_real(spectrum))
    }
}

/// Exact minimizer of the quadratic u-subproblem under periodic boundaries.
pub fn solve_u(
    d_up: &DepthImage,
    z: &DepthImage,
    h: &DepthImage,
    v: &DepthImage,
    rho: f64,
    beta: f64,
    cache: &OtfCache,
) -> Result<DepthImage> {
    cache
        .solve_with_residue(d_up, z, h, v, rho, beta)
        .map(|(u, _)| u)
}

/// Circular forward differences `(u[x+1] - u[x], u[y+1] - u[y])`, wrapping
/// at the last column and row. Matches the kernels behind [`OtfCache`].
pub fn forward_differences(u: &DepthImage) -> (DepthImage, DepthImage) {
    let (w, h) = u.dims();
    let dx = DepthImage::from_fn(w, h, |x, y| u.get((x + 1) % w, y) - u.get(x, y));
    let dy = DepthImage::from_fn(w, h, |x, y| u.get(x, (y + 1) % h) - u.get(x, y));
    (dx, dy)
}
