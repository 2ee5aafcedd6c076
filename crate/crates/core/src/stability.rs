//! Clock stability from the stitched error curve: the phase variance
//! accumulated over a total averaging time `T` with Ramsey time `tau`,
//! its optimization over `tau`, and the operating-regime classification.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::analytic::{build_phase_error_curve, PhaseErrorCurve};
use crate::ensemble::EnsembleSpec;
use crate::error::{Error, Result};
use crate::quadrature::{integrate_panels, QuadOptions};
use crate::search::golden_section_minimize;

/// Relative accuracy promised for the stability integral.
pub const VARIANCE_REL_TOL: f64 = 1e-8;
/// Regime boundary in `alpha = A^4 xi^-6 N^-1`.
pub const REGIME_BOUNDARY: f64 = 5.0;

const GRID_POINTS: usize = 200;
const GRID_LO: f64 = 1e-4;
const GRID_HI: f64 = 3.0;
/// Golden-section bracket width on `ln tau`, i.e. 0.1% in `tau`.
const REFINE_TOL: f64 = 1e-3;
const FLAT_TOL: f64 = 1e-6;
/// Integration half-width in LO standard deviations.
const TAIL_SIGMAS: f64 = 8.0;

/// Gaussian density of the LO phase deviation after `tau`.
pub fn lo_phase_pdf(gamma: f64, tau: f64, phi: f64) -> f64 {
    let s = gamma * tau;
    (-phi * phi / (2.0 * s * s)).exp() / (s * (2.0 * PI).sqrt())
}

/// `int_L^inf P(phi) [4 (phi - pi/2)^2 + m] dphi` for a zero-mean Gaussian of
/// width `s`.
fn outer_tail(s: f64, l: f64, m: f64) -> f64 {
    let q = 0.5 * libm::erfc(l / (s * std::f64::consts::SQRT_2));
    let p = (-l * l / (2.0 * s * s)).exp() / (s * (2.0 * PI).sqrt());
    let h = FRAC_PI_2;
    let second = s * s * q + s * s * l * p;
    let first = s * s * p;
    4.0 * (second - 2.0 * h * first + h * h * q) + m * q
}

/// Expected single-shot error `int P(phi, tau) (Delta phi)^2(phi) dphi`.
pub fn expected_shot_error(curve: &PhaseErrorCurve, gamma: f64, tau: f64) -> Result<f64> {
    let s = gamma * tau;
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "gamma * tau must be positive, got {s}"
        )));
    }
    let width = TAIL_SIGMAS * s;
    let l = PI + width;
    let mut breaks = vec![0.0, width, l];
    breaks.extend(curve.kinks());
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let opts = QuadOptions {
        rel_tol: 1e-2 * VARIANCE_REL_TOL,
        abs_tol: 0.0,
        max_panels: 4000,
    };
    let r = integrate_panels(
        |phi| lo_phase_pdf(gamma, tau, phi) * curve.eval(phi),
        &breaks,
        opts,
    )?;
    let tail = outer_tail(s, l, curve.max_error_sq());
    let total = 2.0 * (r.value + tail);
    if 2.0 * r.abs_error > VARIANCE_REL_TOL * total.abs() {
        return Err(Error::QuadratureNotConverged {
            estimate: total,
            error: 2.0 * r.abs_error,
        });
    }
    Ok(total)
}

/// Phase variance of the LO after total time `T` with Ramsey time `tau`:
/// `(T / tau) int P(phi, tau) (Delta phi)^2(phi) dphi`.
pub fn clock_phase_variance(
    curve: &PhaseErrorCurve,
    gamma: f64,
    tau: f64,
    total_time: f64,
) -> Result<f64> {
    check_times(gamma, tau, total_time)?;
    Ok(total_time / tau * expected_shot_error(curve, gamma, tau)?)
}

fn check_times(gamma: f64, tau: f64, total_time: f64) -> Result<()> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tau must be positive, got {tau}"
        )));
    }
    if !(total_time.is_finite() && tau <= total_time) {
        return Err(Error::InvalidArgument(format!(
            "Ramsey time {tau} exceeds total time {total_time}"
        )));
    }
    Ok(())
}

/// `alpha = A^4 / (xi^6 N)`.
pub fn regime_alpha(spec: &EnsembleSpec) -> f64 {
    let a2 = spec.area();
    a2 * a2 / (spec.xi2().powi(3) * spec.atoms())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// Squeezing-limited: stability improves in proportion to `xi^2`.
    #[serde(rename = "I")]
    SqueezingLimited,
    /// Antisqueezing-limited: the optimal Ramsey time shrinks.
    #[serde(rename = "II")]
    AntisqueezingLimited,
}

impl Regime {
    pub fn classify(alpha: f64) -> Regime {
        if alpha < REGIME_BOUNDARY {
            Regime::SqueezingLimited
        } else {
            Regime::AntisqueezingLimited
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityResult {
    /// Optimal Ramsey time.
    pub tau: f64,
    pub total_time: f64,
    pub gamma: f64,
    pub sigma2_phi: f64,
    /// `sigma2_phi / T^2`.
    pub sigma2_omega: f64,
    pub regime_alpha: f64,
    pub regime: Regime,
    /// Relative to a perfect-contrast coherent clock at its own optimum.
    pub sql_ratio_db: f64,
    /// The objective varied by less than 1e-6 (relative) over the search.
    pub flat_objective: bool,
}

impl StabilityResult {
    pub fn gamma_tau(&self) -> f64 {
        self.gamma * self.tau
    }
}

/// `10 log10(sigma2 / sigma2_css)`.
pub fn compare_to_css(result: &StabilityResult, css: &StabilityResult) -> f64 {
    10.0 * (result.sigma2_phi / css.sigma2_phi).log10()
}

#[derive(Debug, Clone, Copy)]
struct Optimum {
    tau: f64,
    sigma2: f64,
    flat: bool,
}

fn search_range(gamma: f64, total_time: f64) -> (f64, f64) {
    let hi = (GRID_HI / gamma).min(total_time);
    let lo = (GRID_LO / gamma).min(hi);
    (lo, hi)
}

fn minimize_tau(curve: &PhaseErrorCurve, gamma: f64, total_time: f64) -> Result<Optimum> {
    let (lo, hi) = search_range(gamma, total_time);
    // exp(ln(T)) may land one ulp above T.
    let to_tau = |ln_tau: f64| ln_tau.exp().min(hi);
    let objective = |ln_tau: f64| clock_phase_variance(curve, gamma, to_tau(ln_tau), total_time);
    if lo == hi {
        return Ok(Optimum {
            tau: hi,
            sigma2: objective(hi.ln())?,
            flat: true,
        });
    }
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|i| {
            if i == GRID_POINTS - 1 {
                b
            } else {
                a + step * i as f64
            }
        })
        .collect();
    let values = grid
        .iter()
        .map(|&x| objective(x))
        .collect::<Result<Vec<_>>>()?;

    let (best, &vbest) = values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .expect("non-empty grid");
    let vmax = values.iter().cloned().fold(f64::MIN, f64::max);
    let flat = (vmax - vbest) <= FLAT_TOL * vbest.abs();

    let left = grid[best.saturating_sub(1)];
    let right = grid[(best + 1).min(GRID_POINTS - 1)];
    // Errors inside the bracket cannot occur for grid neighbours that
    // already evaluated; map any to +inf so the search steers away.
    let f = |x: f64| objective(x).unwrap_or(f64::INFINITY);
    let (x, fx) = golden_section_minimize(f, left, right, REFINE_TOL, 200);
    let (tau, sigma2) = if fx <= vbest {
        (to_tau(x), fx)
    } else {
        (to_tau(grid[best]), vbest)
    };
    Ok(Optimum { tau, sigma2, flat })
}

/// Optimal clock of a perfect-contrast coherent state of `atoms` atoms.
/// Cached: every map cell needs the same reference.
fn css_optimum(atoms: f64, fractional: bool, gamma: f64, total_time: f64) -> Result<Optimum> {
    type Key = (u64, u64, u64);
    static CACHE: OnceLock<Mutex<HashMap<Key, Optimum>>> = OnceLock::new();
    let key = (atoms.to_bits(), gamma.to_bits(), total_time.to_bits());
    let cache = CACHE.get_or_init(Default::default);
    if let Some(o) = cache.lock().expect("cache poisoned").get(&key) {
        return Ok(*o);
    }
    let spec = crate::ensemble::EnsembleParams::coherent(atoms)
        .with_fractional_atoms(fractional)
        .validate()?;
    let o = minimize_tau(&build_phase_error_curve(&spec), gamma, total_time)?;
    cache.lock().expect("cache poisoned").insert(key, o);
    Ok(o)
}

/// Optimizes the Ramsey time `tau in (0, T]` for the given curve.
///
/// A 200-point logarithmic scan over `gamma tau in [1e-4, 3]` (clipped at
/// `T`) locates the best grid point, then a golden-section search on
/// `ln tau` refines it to 0.1%.
pub fn optimize_ramsey_time(
    curve: &PhaseErrorCurve,
    gamma: f64,
    total_time: f64,
) -> Result<StabilityResult> {
    check_times(gamma, total_time, total_time)?;
    let spec = curve.spec();
    let opt = minimize_tau(curve, gamma, total_time)?;
    let css = css_optimum(
        spec.atoms(),
        spec.params().fractional_atoms,
        gamma,
        total_time,
    )?;
    let alpha = regime_alpha(spec);
    Ok(StabilityResult {
        tau: opt.tau,
        total_time,
        gamma,
        sigma2_phi: opt.sigma2,
        sigma2_omega: opt.sigma2 / (total_time * total_time),
        regime_alpha: alpha,
        regime: Regime::classify(alpha),
        sql_ratio_db: 10.0 * (opt.sigma2 / css.sigma2).log10(),
        flat_objective: opt.flat,
    })
}

/// Builds the curve for `spec` and optimizes its Ramsey time.
pub fn optimize_spec(spec: &EnsembleSpec, gamma: f64, total_time: f64) -> Result<StabilityResult> {
    optimize_ramsey_time(&build_phase_error_curve(spec), gamma, total_time)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::EnsembleParams;
    use crate::quadrature::integrate;
    use crate::units::{db_to_linear, Decibels};

    fn db(x: f64) -> f64 {
        db_to_linear(Decibels(x))
    }

    fn sss(n: f64, xi_db: f64, a_db: f64) -> EnsembleSpec {
        EnsembleParams::squeezed(n, db(xi_db), db(a_db))
            .validate()
            .unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    /// Composite Simpson on a uniform grid over `[-L, L]`.
    fn simpson_oracle(curve: &PhaseErrorCurve, gamma: f64, tau: f64, n: usize) -> f64 {
        let s = gamma * tau;
        let l = PI + 12.0 * s;
        let h = 2.0 * l / n as f64;
        let f = |x: f64| lo_phase_pdf(gamma, tau, x) * curve.eval(x);
        let mut acc = f(-l) + f(l);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(-l + h * i as f64);
        }
        acc * h / 3.0
    }

    #[test]
    fn pdf_normalized_and_even() {
        for (g, t) in [(1.0, 0.01), (1.0, 0.5), (3.0, 1.0)] {
            let w = 8.0 * g * t;
            let breaks = [-40.0, -w, 0.0, w, 40.0];
            let r = integrate_panels(|x| lo_phase_pdf(g, t, x), &breaks, QuadOptions::default())
                .unwrap();
            assert!((r.value - 1.0).abs() < 1e-10);
            assert_eq!(lo_phase_pdf(g, t, 0.2), lo_phase_pdf(g, t, -0.2));
        }
        assert!(rel(lo_phase_pdf(2.0, 0.1, 0.0), 1.0 / (0.2 * (2.0 * PI).sqrt())) < 1e-15);
    }

    #[test]
    fn tail_matches_quadrature() {
        let (s, l, m) = (0.7, 2.5, 0.03);
        let f = |x: f64| {
            let p = (-x * x / (2.0 * s * s)).exp() / (s * (2.0 * PI).sqrt());
            p * (4.0 * (x - FRAC_PI_2).powi(2) + m)
        };
        let r = integrate(f, l, l + 20.0, QuadOptions::default()).unwrap();
        assert!(rel(outer_tail(s, l, m), r.value) < 1e-10);
    }

    #[test]
    fn matches_dense_simpson() {
        let cases = [
            (EnsembleParams::coherent(1e4).validate().unwrap(), 0.3),
            (sss(1e4, -15.0, 25.0), 0.1),
            (sss(1e4, -15.0, 25.0), 0.01),
            (sss(1e3, -10.0, 0.0), 1.2),
        ];
        for (spec, gt) in cases {
            let curve = build_phase_error_curve(&spec);
            let q = clock_phase_variance(&curve, 1.0, gt, 2.0).unwrap() / 2.0;
            let o = simpson_oracle(&curve, 1.0, gt, 400_000) / gt;
            assert!(rel(q, o) < 1e-6, "gt={gt}: {q} vs {o}");
        }
    }

    #[test]
    fn saturation_at_short_ramsey_times() {
        // Large antisqueezing pushes the optimum down to gamma tau ~ 2.5e-3;
        // below it the shot-noise floor takes over and the variance rises.
        let curve = build_phase_error_curve(&sss(1e4, -15.0, 25.0));
        let a = clock_phase_variance(&curve, 1.0, 3e-3, 1.0).unwrap();
        let b = clock_phase_variance(&curve, 1.0, 3e-4, 1.0).unwrap();
        let c = clock_phase_variance(&curve, 1.0, 3e-2, 1.0).unwrap();
        assert!(b > a && c > a);
    }

    #[test]
    fn coherent_short_time_limit() {
        let curve = build_phase_error_curve(&EnsembleParams::coherent(1e4).validate().unwrap());
        let gt = 1e-3;
        let v = clock_phase_variance(&curve, 1.0, gt, 1.0).unwrap();
        assert!(rel(v, 1.0 / (gt * 1e4)) < 1e-12);
    }

    #[test]
    fn linear_in_total_time() {
        let curve = build_phase_error_curve(&sss(1e4, -12.0, 6.0));
        let a = clock_phase_variance(&curve, 1.0, 0.2, 1.0).unwrap();
        let b = clock_phase_variance(&curve, 1.0, 0.2, 2.0).unwrap();
        assert!(rel(b, 2.0 * a) < 1e-15);
    }

    #[test]
    fn rejects_tau_beyond_total_time() {
        let curve = build_phase_error_curve(&sss(1e4, -12.0, 6.0));
        assert!(clock_phase_variance(&curve, 1.0, 2.0, 1.0).is_err());
        assert!(clock_phase_variance(&curve, 1.0, 0.0, 1.0).is_err());
        assert!(clock_phase_variance(&curve, -1.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn coherent_optimum_matches_exhaustive_scan() {
        let spec = EnsembleParams::coherent(1e4).validate().unwrap();
        let curve = build_phase_error_curve(&spec);
        let r = optimize_ramsey_time(&curve, 1.0, 1.0).unwrap();
        let (a, b) = (1e-4f64.ln(), 1.0f64.ln());
        let best = (0..10_000)
            .map(|i| (a + (b - a) * i as f64 / 9999.0).exp())
            .map(|t| (t, clock_phase_variance(&curve, 1.0, t, 1.0).unwrap()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        assert!(r.sigma2_phi <= best.1 * (1.0 + 1e-9));
        assert!(rel(r.tau, best.0) < 5e-3, "{} vs {}", r.tau, best.0);
        assert!((0.3..0.6).contains(&r.gamma_tau()));
        assert_eq!(r.sql_ratio_db, 0.0);
        assert_eq!(r.sigma2_omega, r.sigma2_phi);
    }

    #[test]
    fn optimum_is_local_minimum() {
        let curve = build_phase_error_curve(&sss(1e4, -20.0, 10.0));
        let r = optimize_ramsey_time(&curve, 1.0, 1.0).unwrap();
        for f in [1.0 - 2e-3, 1.0 + 2e-3] {
            let v = clock_phase_variance(&curve, 1.0, r.tau * f, 1.0).unwrap();
            assert!(v >= r.sigma2_phi);
        }
    }

    #[test]
    fn regime_alpha_examples() {
        let s = sss(1e4, -15.0, 0.0);
        assert!(rel(regime_alpha(&s), 10f64.powf(0.5)) < 1e-12);
        assert_eq!(Regime::classify(regime_alpha(&s)), Regime::SqueezingLimited);
        let s = sss(1e4, -15.0, 15.0);
        assert!(rel(regime_alpha(&s), 10f64.powf(3.5)) < 1e-12);
        assert_eq!(
            Regime::classify(regime_alpha(&s)),
            Regime::AntisqueezingLimited
        );
        // On xi^2 = N^(-1/3) with A = 1, alpha is exactly 1.
        let s = EnsembleParams::squeezed(1e3, 0.1, 1.0).validate().unwrap();
        assert!(rel(regime_alpha(&s), 1.0) < 1e-12);
    }

    #[test]
    fn compare_identical_is_zero() {
        let r = optimize_spec(&sss(1e4, -10.0, 3.0), 1.0, 1.0).unwrap();
        assert_eq!(compare_to_css(&r, &r), 0.0);
    }

    #[test]
    fn frequency_variance_scales_with_total_time() {
        let r = optimize_spec(&sss(1e4, -10.0, 3.0), 2.0, 0.5).unwrap();
        assert_eq!(r.sigma2_omega, r.sigma2_phi / 0.25);
        assert!(r.tau <= 0.5);
    }
}
