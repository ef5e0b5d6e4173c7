//! Guided depth upsampling with a low-gradient (l0^t) regularizer.
//!
//! The solver alternates a guided filter, an FFT quadratic solve and a
//! closed-form gradient shrinkage. See [`pipeline::upsample`].

pub mod bench;
pub mod error;
pub mod fft;
pub mod guided;
pub mod image;
pub mod io;
pub mod pipeline;
pub mod prox;
pub mod resample;
pub mod simulate;
pub mod synthetic;

pub use error::{Error, ParseErrorKind, Result};
pub use guided::{guided_filter, GuidedFilterParams};
pub use image::{DepthImage, GuideImage};
pub use pipeline::{upsample, ConvergenceTrace, Regularizer, SolverParams};
pub use prox::{prox_l0t, PenaltyParams};
