//! Randomized invariant checks shared by the property and acceptance suites.
//! Each check returns the number of random draws it made, or a description
//! of the first violation.

#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use squeezeclock::oracle::{
    apply_contrast_model, build_css, build_nonunitary_mixture, build_pure_squeezed,
    conditional_sz_distribution, spin_rotations, symmetric_grid, PhaseProbe,
};
use squeezeclock::quadrature::{integrate_panels, QuadOptions};
use squeezeclock::stability::{expected_shot_error, lo_phase_pdf};
use squeezeclock::{
    build_phase_error_curve, clock_phase_variance, db_to_linear, optimize_spec, stability_map,
    Axis, AxisScale, Decibels, EnsembleParams, EnsembleSpec, SqueezeOrientation, SweepParameter,
};

pub type Check = Result<usize, String>;

pub const SPEC_DRAWS: usize = 1000;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn db(x: f64) -> f64 {
    db_to_linear(Decibels(x))
}

/// A random valid ensemble covering the whole supported range.
pub fn draw_spec(r: &mut ChaCha8Rng) -> EnsembleSpec {
    let atoms = 2.0 * (10f64.powf(r.random_range(2.0..6.0)) / 2.0).round();
    let xi2 = db(r.random_range(-30.0..0.0));
    let a2 = db(r.random_range(0.0..30.0));
    let mut contrast = || {
        if r.random_bool(0.5) {
            1.0
        } else {
            r.random_range(0.3..1.0)
        }
    };
    let (c1, c2) = (contrast(), contrast());
    let orientation = match r.random_range(0..3) {
        0 => SqueezeOrientation::MeasurementBased,
        1 => SqueezeOrientation::FeedbackBased,
        _ => SqueezeOrientation::Explicit(r.random_range(0.0..FRAC_PI_2)),
    };
    let p = EnsembleParams::squeezed(atoms, xi2, a2)
        .with_contrast(c1, c2)
        .with_orientation(orientation);
    p.validate()
        .unwrap_or_else(|e| panic!("draw {p:?} rejected: {e}"))
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Even, finite, positive, non-decreasing in |phi|, and continuous at pi/2
/// from outside.
pub fn curve_shape(seed: u64, draws: usize) -> Check {
    let mut r = rng(seed);
    for _ in 0..draws {
        let spec = draw_spec(&mut r);
        let c = build_phase_error_curve(&spec);
        let mut prev = 0.0;
        for i in 0..=400 {
            let phi = PI * i as f64 / 400.0;
            let v = c.eval(phi);
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{spec:?}: value {v} at {phi}"));
            }
            if c.eval(-phi) != v {
                return Err(format!("{spec:?}: not even at {phi}"));
            }
            if v < prev * (1.0 - 1e-12) {
                return Err(format!("{spec:?}: decreases at {phi}: {prev} -> {v}"));
            }
            prev = v;
        }
        let edge = c.eval(FRAC_PI_2);
        if edge != c.max_error_sq() || rel(c.eval(FRAC_PI_2 + 1e-9), edge) > 1e-9 {
            return Err(format!("{spec:?}: discontinuous at pi/2"));
        }
    }
    Ok(draws)
}

/// Positive, finite clock variance that is linear in the total time, and an
/// optimizer result that is a local minimum.
pub fn stability_consistency(seed: u64, draws: usize) -> Check {
    let mut r = rng(seed);
    for _ in 0..draws {
        let spec = draw_spec(&mut r);
        let c = build_phase_error_curve(&spec);
        let gt = 10f64.powf(r.random_range(-3.0..0.0));
        let a = clock_phase_variance(&c, 1.0, gt, 1.0).map_err(|e| e.to_string())?;
        let b = clock_phase_variance(&c, 1.0, gt, 3.0).map_err(|e| e.to_string())?;
        if !(a.is_finite() && a > 0.0) || rel(b, 3.0 * a) > 1e-14 {
            return Err(format!("{spec:?}: variance {a} / {b} at gamma tau {gt}"));
        }
        let opt = optimize_spec(&spec, 1.0, 1.0).map_err(|e| e.to_string())?;
        for f in [0.98, 1.02] {
            // The search covers gamma tau in [1e-4, T].
            let t = (opt.tau * f).clamp(1e-4, 1.0);
            let v = clock_phase_variance(&c, 1.0, t, 1.0).map_err(|e| e.to_string())?;
            if v < opt.sigma2_phi * (1.0 - 1e-9) {
                return Err(format!("{spec:?}: tau {t} beats optimum {}", opt.tau));
            }
        }
    }
    Ok(draws)
}

/// LO density integrates to one; coherent states and all conditional
/// outcome distributions are normalized.
pub fn normalization(seed: u64, draws: usize) -> Check {
    let mut r = rng(seed);
    for _ in 0..draws {
        let g = 10f64.powf(r.random_range(-1.0..1.0));
        let t = 10f64.powf(r.random_range(-3.0..0.0));
        let w = 8.0 * g * t;
        let q = integrate_panels(
            |x| lo_phase_pdf(g, t, x),
            &[-w, 0.0, w],
            QuadOptions::default(),
        )
        .map_err(|e| e.to_string())?;
        // The 8-sigma window holds all but 1.2e-15 of the mass.
        if (q.value - 1.0).abs() > 1e-12 {
            return Err(format!("pdf mass {} for gamma {g}, tau {t}", q.value));
        }
    }
    for _ in 0..draws.min(50) {
        let n = 2 * r.random_range(1..2000usize);
        let css = build_css(n).map_err(|e| e.to_string())?;
        let norm = css.components()[0].norm_sq();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(format!("CSS N={n} norm {norm}"));
        }
    }
    // ConditionalDistribution::new rejects columns that are not normalized.
    for _ in 0..draws.min(20) {
        let n = 2 * r.random_range(60..120usize);
        let (c1, c2) = (r.random_range(0.6..1.0), r.random_range(0.6..1.0));
        // The contrast model rebuilds the state on its N C1 C2 core atoms.
        let chi2 = r.random_range(1.0..n as f64 * c1 * c2 / 20.0);
        let state = build_pure_squeezed(n, chi2).map_err(|e| e.to_string())?;
        let phis = symmetric_grid(PI, 31);
        conditional_sz_distribution(&state, &phis).map_err(|e| format!("N={n}: {e}"))?;
        let c = apply_contrast_model(&state, c1, c2, 0.2).map_err(|e| e.to_string())?;
        c.conditional(&phis)
            .map_err(|e| format!("contrast N={n}: {e}"))?;
    }
    Ok(draws)
}

/// The y rotations are orthogonal and compose additively.
pub fn unitarity(seed: u64, draws: usize) -> Check {
    let mut r = rng(seed);
    for _ in 0..draws {
        let n = 2 * r.random_range(1..100usize);
        let rot = spin_rotations(n).map_err(|e| e.to_string())?;
        let (a, b) = (r.random_range(-PI..PI), r.random_range(-PI..PI));
        let da = rot.y_rotation(a);
        let db = rot.y_rotation(b);
        let id = &da * da.transpose();
        let err = (id - nalgebra::DMatrix::identity(n + 1, n + 1)).amax();
        if err > 1e-10 {
            return Err(format!("N={n}: D D^T deviates by {err}"));
        }
        let comp = (&da * &db - rot.y_rotation(a + b)).amax();
        if comp > 1e-10 {
            return Err(format!("N={n}: composition error {comp}"));
        }
    }
    Ok(draws)
}

/// Mixture moments are the weighted component sums, the displacement only
/// adds noise, and the squeezed variance hits its target away from the
/// curvature limit.
pub fn mixture_moments(seed: u64, draws: usize) -> Check {
    let mut r = rng(seed);
    for _ in 0..draws {
        let n = 2 * r.random_range(100..400usize);
        let chi2 = r.random_range(2.0..n as f64 / 40.0);
        let area = r.random_range(1.0..5.0);
        let xi2 = (area / chi2).min(1.0);
        let mix = build_nonunitary_mixture(n, xi2, chi2, 21).map_err(|e| e.to_string())?;
        let pure = build_pure_squeezed(n, chi2).map_err(|e| e.to_string())?;
        let total = mix.moments();
        let (mut sy2, mut sz2, mut w) = (0.0, 0.0, 0.0);
        for c in mix.components() {
            let m = mix.component_moments(c);
            sy2 += c.weight * m.sy2;
            sz2 += c.weight * m.sz2;
            w += c.weight;
        }
        let tag = format!("N={n} chi2={chi2} A2={area}");
        if (w - 1.0).abs() > 1e-12 || rel(total.sy2, sy2) > 1e-12 || rel(total.sz2, sz2) > 1e-12 {
            return Err(format!("{tag}: moments are not weighted sums"));
        }
        if total.var_y() < pure.moments().var_y() * (1.0 - 1e-12) {
            return Err(format!("{tag}: displacement reduced the variance"));
        }
        let target = xi2 * n as f64 / 4.0;
        if rel(total.var_y(), target) > 0.05 {
            return Err(format!("{tag}: var_y {} vs {target}", total.var_y()));
        }
    }
    Ok(draws)
}

/// A curve that is constant where the LO density lives integrates to that
/// constant.
pub fn quadrature_constant(seed: u64, draws: usize) -> Check {
    let mut r = rng(seed);
    for _ in 0..draws {
        let n = 10f64.powf(r.random_range(2.0..6.0)).round();
        let spec = EnsembleParams::coherent(n)
            .with_fractional_atoms(true)
            .validate()
            .map_err(|e| e.to_string())?;
        let c = build_phase_error_curve(&spec);
        let gt = 10f64.powf(r.random_range(-4.0..-1.5));
        let v = expected_shot_error(&c, 1.0, gt).map_err(|e| e.to_string())?;
        if rel(v, 1.0 / n) > 1e-10 {
            return Err(format!("N={n}, gamma tau {gt}: {v} vs {}", 1.0 / n));
        }
        let (a, b) = (r.random_range(-5.0..0.0), r.random_range(0.1..5.0));
        let k = r.random_range(0.1..10.0);
        let q =
            integrate_panels(|_| k, &[a, b], QuadOptions::default()).map_err(|e| e.to_string())?;
        if rel(q.value, k * (b - a)) > 1e-14 {
            return Err(format!("constant {k} on [{a}, {b}]: {}", q.value));
        }
    }
    Ok(draws)
}

/// A parallel sweep gives the same grid whatever the thread count.
pub fn parallel_determinism(seed: u64, draws: usize) -> Check {
    let mut r = rng(seed);
    for _ in 0..draws {
        let n = 10f64.powf(r.random_range(3.0..5.0)).round();
        let template = EnsembleParams::coherent(n).with_fractional_atoms(true);
        let hi = r.random_range(-25.0..-5.0);
        let axes = vec![
            Axis::linspace(SweepParameter::Xi2, AxisScale::Db, hi - 5.0, hi, 6)
                .map_err(|e| e.to_string())?,
            Axis::linspace(
                SweepParameter::A2,
                AxisScale::Db,
                0.0,
                r.random_range(3.0..20.0),
                5,
            )
            .map_err(|e| e.to_string())?,
        ];
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| stability_map(&template, &axes, 1.0, 1.0))
                .map_err(|e| e.to_string())
        };
        let (one, many) = (run(1)?, run(4)?);
        if one != many {
            return Err(format!("N={n}: grids differ between 1 and 4 threads"));
        }
    }
    Ok(draws)
}
