//! Closed-form single-shot phase error of a Ramsey measurement with a
//! (possibly non-unitary) squeezed state and contrast loss.
//!
//! Inside `|phi| < pi/2` the error is the linearized variance-over-slope
//! expression; it diverges towards `pi/2`, so it is capped at the largest
//! physically possible error. Beyond `pi/2` the estimate wraps and the error
//! grows quadratically.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::ensemble::EnsembleSpec;
use crate::error::{Error, Result};
use crate::search::bisect_threshold;

/// Bisection tolerance for the stitch angle, radians.
const STITCH_TOL: f64 = 1e-10;

/// Antisqueezed `S_x` variance in units where the CSS has `S/2`:
/// `(chi^2 - chi^-2)^2 / 8`.
pub fn delta_sx_sq(chi2: f64) -> f64 {
    let d = chi2 - 1.0 / chi2;
    d * d / 8.0
}

/// Mean final `S_z` signal, `C (N/2) sin(phi)`.
pub fn sz_signal_mean(spec: &EnsembleSpec, phi: f64) -> f64 {
    spec.contrast() * spec.spin() * phi.sin()
}

/// Variance of the final `S_z` projection, including the excess noise of
/// decohered atoms.
pub fn sz_variance_final(spec: &EnsembleSpec, phi: f64) -> f64 {
    let n = spec.atoms();
    let c = spec.contrast();
    let (s, co) = phi.sin_cos();
    let ct = spec.theta().cos();
    let coherent = c * (0.25 * n * spec.xi2() * co * co + delta_sx_sq(spec.chi2()) * s * s);
    let decohered = 0.25
        * n
        * (1.0 - c - spec.ramsey_contrast() * (1.0 - spec.prep_contrast()) * co * co * ct * ct);
    coherent + decohered
}

/// Coefficients of the inner branch written as
/// `base + tan_coef * tan^2 + sec_coef * sec^2`.
#[derive(Debug, Clone, Copy)]
struct InnerCoefficients {
    base: f64,
    tan_coef: f64,
    sec_coef: f64,
}

impl InnerCoefficients {
    fn new(spec: &EnsembleSpec) -> Self {
        let n = spec.atoms();
        let c = spec.contrast();
        let d = spec.chi2() - 1.0 / spec.chi2();
        let ct = spec.theta().cos();
        let leak = spec.ramsey_contrast() * (1.0 - spec.prep_contrast()) * ct * ct / (c * c * n);
        InnerCoefficients {
            base: spec.xi2() / (c * n) - leak,
            tan_coef: d * d / (2.0 * c * n * n),
            sec_coef: (1.0 - c) / (c * c * n),
        }
    }

    fn eval(&self, phi: f64) -> f64 {
        let t = phi.tan();
        let t2 = t * t;
        (self.base + self.tan_coef * t2 + self.sec_coef * (1.0 + t2)).max(0.0)
    }
}

/// Linearized phase error `(Delta phi)^2` for `|phi| < pi/2`, clamped at 0.
pub fn phase_error_sq_inner(spec: &EnsembleSpec, phi: f64) -> Result<f64> {
    if !(phi.abs() < FRAC_PI_2) {
        return Err(Error::OutsideLinearDomain { phi });
    }
    Ok(InnerCoefficients::new(spec).eval(phi))
}

/// Largest possible phase error `Delta phi_max` (radians).
pub fn max_phase_error(spec: &EnsembleSpec) -> f64 {
    max_phase_error_sq(spec).sqrt()
}

fn max_phase_error_sq(spec: &EnsembleSpec) -> f64 {
    let n = spec.atoms();
    let c = spec.contrast();
    let d = spec.chi2() - 1.0 / spec.chi2();
    (2.0 * d * d / (n * n * c) + 4.0 * (1.0 - c) / (n * c * c)).sqrt()
}

/// Error once the true phase has wrapped past `pi/2`.
pub fn phase_error_sq_outer(spec: &EnsembleSpec, phi: f64) -> f64 {
    outer(max_phase_error_sq(spec), phi)
}

fn outer(max_sq: f64, phi: f64) -> f64 {
    let x = phi.abs() - FRAC_PI_2;
    4.0 * x * x + max_sq
}

/// The stitched error curve `(Delta phi)^2(phi)` for all real `phi`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PhaseErrorCurve {
    #[serde(skip)]
    spec: EnsembleSpec,
    #[serde(skip)]
    coef: InnerCoefficients,
    phi_star: f64,
    max_error_sq: f64,
    cap: f64,
}

/// Builds the stitched curve.
///
/// The inner branch is capped at `Delta phi_max^2`. When the inner value at
/// `phi = 0` already exceeds that cap (the coherent state, or contrast or
/// excess noise large enough that the cap sits below the flat part of the
/// curve) the cap is raised to the `phi = 0` value, so the interior becomes
/// flat rather than falling below its own minimum.
pub fn build_phase_error_curve(spec: &EnsembleSpec) -> PhaseErrorCurve {
    let coef = InnerCoefficients::new(spec);
    let max_error_sq = max_phase_error_sq(spec);
    let at_zero = coef.eval(0.0);
    let (cap, phi_star) = if at_zero >= max_error_sq {
        (at_zero, FRAC_PI_2)
    } else {
        let upper = FRAC_PI_2 * (1.0 - f64::EPSILON);
        let star = bisect_threshold(|p| coef.eval(p) >= max_error_sq, 0.0, upper, STITCH_TOL);
        (max_error_sq, star)
    };
    PhaseErrorCurve {
        spec: *spec,
        coef,
        phi_star,
        max_error_sq,
        cap,
    }
}

impl PhaseErrorCurve {
    pub fn spec(&self) -> &EnsembleSpec {
        &self.spec
    }

    /// Smallest `|phi|` at which the interior reaches the cap; `pi/2` when
    /// the cap is suspended.
    pub fn phi_star(&self) -> f64 {
        self.phi_star
    }

    pub fn max_error(&self) -> f64 {
        self.max_error_sq.sqrt()
    }

    pub fn max_error_sq(&self) -> f64 {
        self.max_error_sq
    }

    /// Plateau value used on `phi_star <= |phi| < pi/2`.
    pub fn cap(&self) -> f64 {
        self.cap
    }

    /// True when the interior cap was lifted above `Delta phi_max^2`.
    pub fn cap_suspended(&self) -> bool {
        self.cap > self.max_error_sq
    }

    pub fn eval(&self, phi: f64) -> f64 {
        let a = phi.abs();
        if a < FRAC_PI_2 {
            if a >= self.phi_star {
                self.cap
            } else {
                self.coef.eval(a).min(self.cap)
            }
        } else if a == FRAC_PI_2 {
            self.max_error_sq
        } else {
            outer(self.max_error_sq, a)
        }
    }

    /// Points in `[0, inf)` where the curve is not smooth.
    pub fn kinks(&self) -> [f64; 2] {
        [self.phi_star, FRAC_PI_2]
    }

    pub fn sample(&self, phis: &[f64]) -> Vec<f64> {
        phis.iter().map(|&p| self.eval(p)).collect()
    }
}
