//! Low-gradient penalty and its closed-form proximal map.
//!
//! The penalty charges nothing for a zero value, `t` for a value with
//! magnitude in `(0, 1]` and `1` above that. The per-element problem
//!
//! ```text
//! E(p) = (x - p)^2 + alpha * H_t(p)
//! ```
//!
//! has a minimizer in `{0, sgn(x), x}`. Which one wins depends on `|x|`
//! against four thresholds, and for `|x| >= 1` on where `alpha` falls
//! relative to the two roots `(2 - t -+ 2 sqrt(1 - t)) / t^2` of
//! `t^2 a^2 + (2t - 4) a + 1 = 0`. Ties go to the smaller-magnitude
//! candidate.

use crate::error::{Error, Result};

/// Weight `t` for small nonzero values and threshold weight `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyParams {
    t: f64,
    alpha: f64,
}

impl PenaltyParams {
    pub fn new(t: f64, alpha: f64) -> Result<Self> {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "penalty weight t must lie in (0, 1), got {t}"
            )));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "threshold weight alpha must be > 0, got {alpha}"
            )));
        }
        Ok(PenaltyParams { t, alpha })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Position of `alpha` relative to the two regime boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `alpha < alpha_low`: large inputs never shrink to zero.
    Low,
    /// `alpha_low <= alpha <= alpha_high`: all three outcomes occur.
    Middle,
    /// `alpha > alpha_high`: plain hard thresholding at `sqrt(alpha)`.
    High,
}

/// Regime boundaries and decision thresholds for one `(t, alpha)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeBoundaries {
    pub t: f64,
    pub alpha: f64,
    pub alpha_low: f64,
    pub alpha_high: f64,
    /// `(1 + alpha t) / 2`: below it (middle regime) zero beats `sgn(x)`.
    pub thr_zero: f64,
    /// `1 + sqrt(alpha (1 - t))`: above it `x` beats `sgn(x)`.
    pub thr_one: f64,
    /// `sqrt(alpha)`: above it `x` beats zero.
    pub thr_sqrt: f64,
    /// `sqrt(alpha t)`: the cut for `|x| < 1`.
    pub thr_small: f64,
}

/// The two roots of `t^2 a^2 + (2t - 4) a + 1 = 0`.
pub fn alpha_bounds(t: f64) -> (f64, f64) {
    let s = (1.0 - t).sqrt();
    let t2 = t * t;
    ((2.0 - t - 2.0 * s) / t2, (2.0 - t + 2.0 * s) / t2)
}

impl RegimeBoundaries {
    pub fn new(params: &PenaltyParams) -> Self {
        let (t, alpha) = (params.t, params.alpha);
        let (alpha_low, alpha_high) = alpha_bounds(t);
        RegimeBoundaries {
            t,
            alpha,
            alpha_low,
            alpha_high,
            thr_zero: (1.0 + alpha * t) / 2.0,
            thr_one: 1.0 + (alpha * (1.0 - t)).sqrt(),
            thr_sqrt: alpha.sqrt(),
            thr_small: (alpha * t).sqrt(),
        }
    }

    /// Both boundaries belong to the middle regime.
    pub fn regime(&self) -> Regime {
        if self.alpha > self.alpha_high {
            Regime::High
        } else if self.alpha < self.alpha_low {
            Regime::Low
        } else {
            Regime::Middle
        }
    }

    /// Closed-form minimizer of `(x - p)^2 + alpha * H_t(p)`.
    #[inline]
    pub fn prox(&self, x: f64) -> f64 {
        let mag = x.abs();
        if mag < 1.0 {
            return if mag <= self.thr_small { 0.0 } else { x };
        }
        match self.regime() {
            Regime::High => {
                if mag <= self.thr_sqrt {
                    0.0
                } else {
                    x
                }
            }
            Regime::Middle => {
                if mag <= self.thr_zero {
                    0.0
                } else if mag <= self.thr_one {
                    x.signum()
                } else {
                    x
                }
            }
            Regime::Low => {
                if mag <= self.thr_one {
                    x.signum()
                } else {
                    x
                }
            }
        }
    }
}

/// `H_t(p)`: 0 at zero, `t` for `0 < |p| <= 1`, 1 beyond.
#[inline]
pub fn penalty_h(p: f64, t: f64) -> f64 {
    let mag = p.abs();
    if mag == 0.0 {
        0.0
    } else if mag <= 1.0 {
        t
    } else {
        1.0
    }
}

/// Sum of `H_t` over all elements.
pub fn l0t_measure(field: &[f64], t: f64) -> f64 {
    field.iter().map(|&f| penalty_h(f, t)).sum()
}

/// Plain nonzero count.
pub fn l0_measure(field: &[f64]) -> f64 {
    field.iter().filter(|&&f| f != 0.0).count() as f64
}

/// Per-element energy `(x - p)^2 + alpha * H_t(p)`.
#[inline]
pub fn energy(x: f64, p: f64, params: &PenaltyParams) -> f64 {
    (x - p) * (x - p) + params.alpha * penalty_h(p, params.t)
}

pub fn prox_l0t(x: f64, params: &PenaltyParams) -> f64 {
    RegimeBoundaries::new(params).prox(x)
}

/// Element-wise [`prox_l0t`] with the thresholds computed once.
pub fn prox_field(field: &[f64], params: &PenaltyParams) -> Vec<f64> {
    let bounds = RegimeBoundaries::new(params);
    field.iter().map(|&x| bounds.prox(x)).collect()
}

/// Hard threshold for the plain l0 count: keep `x` iff `x^2 > alpha`.
#[inline]
pub fn prox_l0(x: f64, alpha: f64) -> f64 {
    if x * x <= alpha {
        0.0
    } else {
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(t: f64, alpha: f64) -> PenaltyParams {
        PenaltyParams::new(t, alpha).unwrap()
    }

    /// Exhaustive reference: dense grid over [-|x|-2, |x|+2] plus the
    /// candidates {0, +-1, x}.
    fn grid_argmin(x: f64, p: &PenaltyParams, step: f64) -> (f64, f64) {
        let lo = -x.abs() - 2.0;
        let n = ((2.0 * x.abs() + 4.0) / step).round() as usize;
        let mut best = (0.0, energy(x, 0.0, p));
        let mut consider = |cand: f64| {
            let e = energy(x, cand, p);
            if e < best.1 {
                best = (cand, e);
            }
        };
        for cand in [1.0, -1.0, x] {
            consider(cand);
        }
        for k in 0..=n {
            consider(lo + k as f64 * step);
        }
        best
    }

    #[test]
    fn penalty_values() {
        assert_eq!(penalty_h(0.0, 0.75), 0.0);
        assert_eq!(penalty_h(-0.5, 0.75), 0.75);
        assert_eq!(penalty_h(1.0, 0.75), 0.75);
        assert_eq!(penalty_h(2.0, 0.75), 1.0);
        assert_eq!(penalty_h(-2.0, 0.75), 1.0);
    }

    #[test]
    fn measure_sums() {
        assert_eq!(l0t_measure(&[0.0; 5], 0.75), 0.0);
        assert_eq!(l0t_measure(&[0.0, 0.5, 2.0], 0.75), 1.75);
        assert_eq!(l0t_measure(&[-1.0, 1.0], 0.75), 1.5);
        assert_eq!(l0_measure(&[0.0, 0.5, -2.0]), 2.0);
    }

    #[test]
    fn boundaries_at_three_quarters() {
        let (lo, hi) = alpha_bounds(0.75);
        assert!((lo - 0.25 / 0.5625).abs() < 1e-12);
        assert!((hi - 4.0).abs() < 1e-12);
    }

    #[test]
    fn middle_regime_examples() {
        let p = params(0.75, 1.0);
        assert_eq!(RegimeBoundaries::new(&p).regime(), Regime::Middle);
        assert_eq!(prox_l0t(0.0, &p), 0.0);
        assert_eq!(prox_l0t(1.2, &p), 1.0);
        assert_eq!(prox_l0t(2.0, &p), 2.0);
        assert_eq!(prox_l0t(0.5, &p), 0.0);
        assert_eq!(prox_l0t(0.9, &p), 0.9);
    }

    #[test]
    fn high_regime_examples() {
        let p = params(0.75, 9.0);
        assert_eq!(RegimeBoundaries::new(&p).regime(), Regime::High);
        assert_eq!(prox_l0t(2.0, &p), 0.0);
        assert_eq!(prox_l0t(4.0, &p), 4.0);
        // Tie at |x| = sqrt(alpha) goes to zero.
        assert_eq!(prox_l0t(3.0, &p), 0.0);
    }

    #[test]
    fn low_regime_examples() {
        let p = params(0.75, 0.25);
        assert_eq!(RegimeBoundaries::new(&p).regime(), Regime::Low);
        assert_eq!(prox_l0t(1.1, &p), 1.0);
        assert_eq!(prox_l0t(-1.1, &p), -1.0);
        assert_eq!(prox_l0t(1.4, &p), 1.4);
    }

    #[test]
    fn worked_examples_agree_with_grid_oracle() {
        let cases = [
            (0.75, 1.0, 1.2),
            (0.75, 1.0, 2.0),
            (0.75, 1.0, 0.5),
            (0.75, 1.0, 0.9),
            (0.75, 9.0, 2.0),
            (0.75, 9.0, 4.0),
            (0.75, 0.25, 1.1),
            (0.75, 0.25, -1.1),
            (0.75, 0.25, 1.4),
        ];
        for (t, alpha, x) in cases {
            let p = params(t, alpha);
            let (arg, e) = grid_argmin(x, &p, 1e-4);
            let closed = prox_l0t(x, &p);
            assert!(
                (arg - closed).abs() < 1e-9,
                "x={x} alpha={alpha}: {arg} vs {closed}"
            );
            assert!((energy(x, closed, &p) - e).abs() < 1e-12);
        }
    }

    #[test]
    fn field_example() {
        let out = prox_field(&[1.2, 0.5, 4.0], &params(0.75, 1.0));
        assert_eq!(out, vec![1.0, 0.0, 4.0]);
        assert_eq!(prox_field(&[0.0; 4], &params(0.75, 1.0)), vec![0.0; 4]);
    }

    #[test]
    fn vanishing_alpha_leaves_field_unchanged() {
        let field = [0.0, 1e-3, -0.4, 1.0, -1.0, 1.7, 250.0, -3.3];
        let out = prox_field(&field, &params(0.75, 1e-12));
        for (a, b) in field.iter().zip(&out) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn boundary_alpha_uses_middle_formula() {
        let t = 0.75;
        let (lo, hi) = alpha_bounds(t);
        assert_eq!(
            RegimeBoundaries::new(&params(t, lo)).regime(),
            Regime::Middle
        );
        assert_eq!(
            RegimeBoundaries::new(&params(t, hi)).regime(),
            Regime::Middle
        );
    }

    /// The un-simplified case split with min/max guards. Returns `None` where
    /// none of its branches applies.
    fn min_max_case_split(x: f64, b: &RegimeBoundaries) -> Option<f64> {
        let mag = x.abs();
        if mag <= b.thr_zero.min(b.thr_sqrt) {
            Some(0.0)
        } else if b.thr_zero < mag && mag <= b.thr_one {
            Some(x.signum())
        } else if mag > b.thr_one.max(b.thr_sqrt) {
            Some(x)
        } else {
            None
        }
    }

    #[test]
    fn min_max_case_split_agrees_where_decidable() {
        let mut checked = 0;
        for ti in 1..20 {
            let t = ti as f64 / 20.0;
            for ai in -30..=30 {
                let alpha = 10f64.powf(ai as f64 / 10.0);
                let b = RegimeBoundaries::new(&params(t, alpha));
                for xi in 0..400 {
                    let x = 1.0 + xi as f64 * 0.05;
                    if let Some(p) = min_max_case_split(x, &b) {
                        assert_eq!(p, b.prox(x), "t={t} alpha={alpha} x={x}");
                        checked += 1;
                    }
                }
            }
        }
        assert!(checked > 100_000);
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(PenaltyParams::new(0.0, 1.0).is_err());
        assert!(PenaltyParams::new(1.0, 1.0).is_err());
        assert!(PenaltyParams::new(0.5, 0.0).is_err());
        assert!(PenaltyParams::new(0.5, f64::INFINITY).is_err());
    }

    #[test]
    fn l0_hard_threshold() {
        assert_eq!(prox_l0(2.0, 4.0), 0.0);
        assert_eq!(prox_l0(-2.1, 4.0), -2.1);
        assert_eq!(prox_l0(0.5, 0.1), 0.5);
    }
}
