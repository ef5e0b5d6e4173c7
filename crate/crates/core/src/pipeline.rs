//! Alternating guided-filter / low-gradient upsampling loop.
//!
//! Each iteration first grows the coupling weights (`beta <- kappa beta`,
//! `lambda = value_scale * beta / beta0`, `rho = 0.1 beta`), then runs
//!
//! 1. `z = GF(u, guide)`
//! 2. `u = argmin ||u - d||^2 + rho ||u - z||^2 + beta ||grad u - (h, v)||^2`
//! 3. `(h, v) = prox(grad u)` with threshold weight `lambda`
//!
//! so the u-step uses the gradient targets from the previous iteration. The
//! first iteration takes `(h, v) = grad d`.

use std::fmt::Write as _;

use crate::bench::rmse;
use crate::error::{Error, Result};
use crate::fft::{forward_differences, OtfCache};
use crate::guided::{guided_filter, GuidedFilterParams};
use crate::image::{DepthImage, GuideImage};
use crate::prox::{l0_measure, l0t_measure, prox_l0, PenaltyParams, RegimeBoundaries};
use crate::resample::resize_to;

/// Border added on every side before the periodic solve when padding is on.
pub const PAD_WIDTH: usize = 16;

/// Stage order recorded in every trace.
pub const STAGE_ORDER: &str = "z,u,hv";

/// Gradient shrinkage used in step 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularizer {
    /// Reduced penalty `t` for unit-magnitude gradients.
    LowGradient,
    /// Plain nonzero count (hard threshold at `sqrt(lambda)`).
    L0,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    pub t: f64,
    pub beta0: f64,
    pub kappa: f64,
    pub max_iter: usize,
    pub gf: GuidedFilterParams,
    pub pad: bool,
    /// Depth value that maps to one unit of the 0..value_scale working range
    /// is `depth_scale / value_scale`; also the numerator of the lambda
    /// schedule.
    pub value_scale: f64,
    /// Full-scale input depth. `None` keeps data already within
    /// `[0, value_scale]` untouched and otherwise maps the input maximum to
    /// `value_scale`.
    pub depth_scale: Option<f64>,
    pub regularizer: Regularizer,
    /// Clamp the final output to the range of the low-resolution input.
    pub clamp_output: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            t: 0.75,
            beta0: 0.0025,
            kappa: 2.0,
            max_iter: 30,
            gf: GuidedFilterParams::default(),
            pad: true,
            value_scale: 255.0,
            depth_scale: None,
            regularizer: Regularizer::LowGradient,
            clamp_output: true,
        }
    }
}

pub const MAX_ITERATIONS: usize = 100;

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.t > 0.0 && self.t < 1.0) {
            return bad(format!("t must lie in (0, 1), got {}", self.t));
        }
        if !(self.beta0.is_finite() && self.beta0 > 0.0) {
            return bad(format!("beta0 must be > 0, got {}", self.beta0));
        }
        if !(self.kappa.is_finite() && self.kappa > 1.0) {
            return bad(format!("kappa must be > 1, got {}", self.kappa));
        }
        if self.max_iter > MAX_ITERATIONS {
            return bad(format!(
                "max_iter must be at most {MAX_ITERATIONS}, got {}",
                self.max_iter
            ));
        }
        if !(self.value_scale.is_finite() && self.value_scale > 0.0) {
            return bad(format!("value_scale must be > 0, got {}", self.value_scale));
        }
        if let Some(s) = self.depth_scale {
            if !(s.is_finite() && s > 0.0) {
                return bad(format!("depth_scale must be > 0, got {s}"));
            }
        }
        Ok(())
    }

    /// The same solver with plain l0 shrinkage.
    pub fn gfl0(&self) -> SolverParams {
        SolverParams {
            regularizer: Regularizer::L0,
            ..self.clone()
        }
    }

    /// `beta` implied by a given `lambda` under the coupled schedule.
    pub fn beta_for_lambda(&self, lambda: f64) -> f64 {
        lambda * self.beta0 / self.value_scale
    }
}

/// Weights in force during one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub beta: f64,
    pub lambda: f64,
    pub rho: f64,
}

impl Schedule {
    /// State before the first update: `beta = beta0 / 2`.
    pub fn initial(params: &SolverParams) -> Self {
        Self::at_gain(params, 0.5)
    }

    /// `gain = beta / beta0`; keeping it explicit avoids a rounding step in
    /// `lambda`.
    fn at_gain(params: &SolverParams, gain: f64) -> Self {
        let beta = gain * params.beta0;
        Schedule {
            beta,
            lambda: params.value_scale * gain,
            rho: 0.1 * beta,
        }
    }

    pub fn advance(&self, params: &SolverParams) -> Self {
        Self::at_gain(params, self.lambda / params.value_scale * params.kappa)
    }
}

/// Auxiliary gradient targets for the horizontal and vertical derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub h: DepthImage,
    pub v: DepthImage,
}

impl GradientField {
    fn shrink(&self, regularizer: Regularizer, t: f64, lambda: f64) -> Result<GradientField> {
        let apply = |g: &DepthImage| -> Result<DepthImage> {
            let data = match regularizer {
                Regularizer::LowGradient => {
                    let bounds = RegimeBoundaries::new(&PenaltyParams::new(t, lambda)?);
                    g.data().iter().map(|&x| bounds.prox(x)).collect()
                }
                Regularizer::L0 => g.data().iter().map(|&x| prox_l0(x, lambda)).collect(),
            };
            DepthImage::new(g.width(), g.height(), data)
        };
        Ok(GradientField {
            h: apply(&self.h)?,
            v: apply(&self.v)?,
        })
    }
}

/// Circular forward differences of `u`.
pub fn gradient(u: &DepthImage) -> GradientField {
    let (h, v) = forward_differences(u);
    GradientField { h, v }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub beta: f64,
    pub lambda: f64,
    pub rho: f64,
    pub objective: f64,
    pub rmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceTrace {
    pub records: Vec<IterationRecord>,
    /// Range the final output was clamped to, if clamping was applied.
    pub clamp_range: Option<(f64, f64)>,
}

impl ConvergenceTrace {
    pub const CSV_HEADER: &'static str = "iter,beta,lambda,rho,objective,rmse";

    /// CSV with one row per iteration; `rmse` is empty without ground truth.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let rmse = r.rmse.map(|v| format!("{v}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.iter, r.beta, r.lambda, r.rho, r.objective, rmse
            );
        }
        out
    }
}

/// Surrogate energy `||u - d||^2 + rho ||u - GF(u)||^2 + lambda * R(grad u)`,
/// with `rho` tied to `lambda` through the schedule and `R` the measure that
/// matches `params.regularizer`.
pub fn objective(
    u: &DepthImage,
    d_up: &DepthImage,
    guide: &GuideImage,
    params: &SolverParams,
    lambda: f64,
) -> Result<f64> {
    u.ensure_same_dims(d_up, "objective")?;
    let rho = 0.1 * params.beta_for_lambda(lambda);
    let filtered = guided_filter(u, guide, &params.gf)?;
    let fidelity: f64 = u
        .data()
        .iter()
        .zip(d_up.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let smooth: f64 = u
        .data()
        .iter()
        .zip(filtered.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let grad = gradient(u);
    let measure = match params.regularizer {
        Regularizer::LowGradient => {
            l0t_measure(grad.h.data(), params.t) + l0t_measure(grad.v.data(), params.t)
        }
        Regularizer::L0 => l0_measure(grad.h.data()) + l0_measure(grad.v.data()),
    };
    Ok(fidelity + rho * smooth + lambda * measure)
}

fn guard(img: &DepthImage, stage: &'static str, iteration: usize) -> Result<()> {
    match img.first_non_finite() {
        Some(index) => Err(Error::NumericalAbort {
            stage,
            iteration,
            index,
        }),
        None => Ok(()),
    }
}

/// Upsamples `lr` by `factor` under guidance of `guide`.
///
/// Returns the high-resolution depth and a per-iteration trace. With `gt`
/// present the trace carries the RMSE of each iterate (after the same
/// output clamping as the final result).
pub fn upsample(
    lr: &DepthImage,
    guide: &GuideImage,
    factor: usize,
    params: &SolverParams,
    gt: Option<&DepthImage>,
) -> Result<(DepthImage, ConvergenceTrace)> {
    params.validate()?;
    if factor < 2 {
        return Err(Error::InvalidParameter(format!(
            "upsampling factor must be >= 2, got {factor}"
        )));
    }
    let (gw, gh) = guide.dims();
    if (lr.width() * factor, lr.height() * factor) != (gw, gh) {
        return Err(Error::DimensionMismatch(format!(
            "guide is {gw}x{gh}, expected {}x{} for factor {factor}",
            lr.width() * factor,
            lr.height() * factor
        )));
    }
    if let Some(gt) = gt {
        if gt.dims() != (gw, gh) {
            return Err(Error::DimensionMismatch(format!(
                "ground truth is {}x{}, guide is {gw}x{gh}",
                gt.width(),
                gt.height()
            )));
        }
    }
    lr.ensure_finite("low-resolution input")?;

    let d_up = resize_to(lr, gw, gh)?;
    if params.max_iter == 0 {
        return Ok((d_up, ConvergenceTrace::default()));
    }

    let lr_max = lr.max();
    let full_scale = params
        .depth_scale
        .unwrap_or(if lr_max <= params.value_scale {
            params.value_scale
        } else {
            lr_max
        });
    let to_work = params.value_scale / full_scale;
    let clamp_range = params.clamp_output.then(|| (lr.min(), lr_max));

    let pad = if params.pad { PAD_WIDTH } else { 0 };
    let d_work = d_up.map(|v| v * to_work).pad_edge(pad, pad, pad, pad);
    let guide_work = guide.pad_edge(pad, pad, pad, pad);
    let cache = OtfCache::build(d_work.width(), d_work.height())?;

    let to_output = |u: &DepthImage| -> Result<DepthImage> {
        let cropped = u.crop(pad, pad, gw, gh)?;
        Ok(cropped.map(|v| {
            let v = v / to_work;
            match clamp_range {
                Some((lo, hi)) => v.clamp(lo, hi),
                None => v,
            }
        }))
    };

    let mut u = d_work.clone();
    let mut targets = gradient(&d_work);
    let mut schedule = Schedule::initial(params);
    let mut trace = ConvergenceTrace {
        records: Vec::with_capacity(params.max_iter),
        clamp_range,
    };

    for iter in 1..=params.max_iter {
        schedule = schedule.advance(params);

        let z = guided_filter(&u, &guide_work, &params.gf)?;
        guard(&z, "guided_filter", iter)?;

        u = cache
            .solve_with_residue(
                &d_work,
                &z,
                &targets.h,
                &targets.v,
                schedule.rho,
                schedule.beta,
            )?
            .0;
        guard(&u, "solve_u", iter)?;

        targets = gradient(&u).shrink(params.regularizer, params.t, schedule.lambda)?;
        guard(&targets.h, "shrink_h", iter)?;
        guard(&targets.v, "shrink_v", iter)?;

        let objective = objective(&u, &d_work, &guide_work, params, schedule.lambda)?;
        let rmse = match gt {
            Some(gt) => Some(rmse(&to_output(&u)?, gt, None)?),
            None => None,
        };
        trace.records.push(IterationRecord {
            iter,
            beta: schedule.beta,
            lambda: schedule.lambda,
            rho: schedule.rho,
            objective,
            rmse,
        });
    }

    Ok((to_output(&u)?, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_guide(w: usize, h: usize) -> GuideImage {
        GuideImage::new(w, h, vec![0.5; w * h]).unwrap()
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let g = gradient(&DepthImage::filled(5, 4, 3.0));
        assert!(g.h.data().iter().chain(g.v.data()).all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_of_ramp() {
        let g = gradient(&DepthImage::from_fn(8, 3, |x, _| x as f64));
        for y in 0..3 {
            for x in 0..7 {
                assert_eq!(g.h.get(x, y), 1.0);
            }
        }
    }

    #[test]
    fn schedule_law() {
        let params = SolverParams::default();
        let mut s = Schedule::initial(&params);
        assert_eq!(s.beta, 0.00125);
        assert_eq!(s.lambda, 127.5);
        for p in 1..=30 {
            s = s.advance(&params);
            let kp = 2f64.powi(p);
            assert_eq!(s.beta, kp * params.beta0 / 2.0);
            assert_eq!(s.lambda, params.value_scale * kp / 2.0);
            assert!((s.rho - 0.1 * kp * params.beta0 / 2.0).abs() <= 1e-15 * s.rho);
        }
    }

    #[test]
    fn zero_iterations_return_bicubic() {
        let lr = DepthImage::from_fn(6, 5, |x, y| (x * x + 3 * y) as f64);
        let params = SolverParams {
            max_iter: 0,
            ..Default::default()
        };
        let (out, trace) = upsample(&lr, &flat_guide(12, 10), 2, &params, None).unwrap();
        assert_eq!(out, resize_to(&lr, 12, 10).unwrap());
        assert!(trace.records.is_empty());
    }

    #[test]
    fn constant_scene_is_fixed_point() {
        let lr = DepthImage::filled(8, 8, 77.0);
        let guide = GuideImage::from_plane(DepthImage::from_fn(32, 32, |x, y| {
            ((x * 5 + y * 3) % 17) as f64 / 16.0
        }))
        .unwrap();
        for pad in [true, false] {
            let params = SolverParams {
                max_iter: 10,
                pad,
                clamp_output: false,
                ..Default::default()
            };
            let (out, trace) = upsample(&lr, &guide, 4, &params, None).unwrap();
            assert_eq!(trace.records.len(), 10);
            for &v in out.data() {
                assert!((v - 77.0).abs() < 1e-6, "{v}");
            }
        }
    }

    #[test]
    fn rejects_mismatched_guide() {
        let lr = DepthImage::filled(4, 4, 1.0);
        let err = upsample(&lr, &flat_guide(8, 7), 2, &SolverParams::default(), None).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
        let gt = DepthImage::filled(4, 4, 1.0);
        let err = upsample(
            &lr,
            &flat_guide(8, 8),
            2,
            &SolverParams::default(),
            Some(&gt),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn rejects_invalid_params() {
        let lr = DepthImage::filled(4, 4, 1.0);
        let guide = flat_guide(8, 8);
        for params in [
            SolverParams {
                t: 1.0,
                ..Default::default()
            },
            SolverParams {
                kappa: 1.0,
                ..Default::default()
            },
            SolverParams {
                beta0: 0.0,
                ..Default::default()
            },
            SolverParams {
                max_iter: 101,
                ..Default::default()
            },
        ] {
            assert!(matches!(
                upsample(&lr, &guide, 2, &params, None),
                Err(Error::InvalidParameter(_))
            ));
        }
    }

    #[test]
    fn non_finite_stage_aborts_with_stage_name() {
        let lr = DepthImage::filled(4, 4, 10.0);
        let params = SolverParams {
            beta0: 1e-300,
            kappa: 1e300,
            max_iter: 3,
            ..Default::default()
        };
        let err = upsample(&lr, &flat_guide(8, 8), 2, &params, None).unwrap_err();
        match err {
            Error::NumericalAbort { stage, .. } => assert!(!stage.is_empty()),
            Error::InvalidParameter(_) => {}
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn objective_zero_at_fixed_point() {
        let d = DepthImage::filled(6, 6, 4.0);
        let guide = flat_guide(6, 6);
        let val = objective(&d, &d, &guide, &SolverParams::default(), 255.0).unwrap();
        assert_eq!(val, 0.0);
    }

    #[test]
    fn objective_grows_with_spike() {
        let d = DepthImage::filled(6, 6, 4.0);
        let guide = flat_guide(6, 6);
        let params = SolverParams {
            gf: GuidedFilterParams::new(1, 1e-4).unwrap(),
            ..Default::default()
        };
        let base = objective(&d, &d, &guide, &params, 10.0).unwrap();
        let mut spiked = d.clone();
        spiked.set(3, 3, 7.0);
        assert!(objective(&spiked, &d, &guide, &params, 10.0).unwrap() > base);
    }

    #[test]
    fn trace_csv_layout() {
        let trace = ConvergenceTrace {
            records: vec![IterationRecord {
                iter: 1,
                beta: 0.0025,
                lambda: 255.0,
                rho: 0.00025,
                objective: 1.5,
                rmse: None,
            }],
            clamp_range: None,
        };
        assert_eq!(
            trace.to_csv(),
            "iter,beta,lambda,rho,objective,rmse\n1,0.0025,255,0.00025,1.5,\n"
        );
    }
}
