//! Ensemble and local-oscillator descriptions shared by every other module.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on `A^2 >= 1` so that specs built from `(xi2, A2)` with
/// `chi2 = A2 / xi2` survive floating-point rounding.
const AREA_SLACK: f64 = 1e-12;

/// How the squeezed state is oriented relative to the `S_z = 0` plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SqueezeOrientation {
    /// Measurement-based squeezing, `theta = 0`.
    #[default]
    MeasurementBased,
    /// Feedback-based squeezing, `theta = arcsin(1/chi)`.
    FeedbackBased,
    /// Any tilt in `[0, pi/2]`.
    Explicit(f64),
}

/// Raw, unvalidated ensemble parameters. All variance ratios are linear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    pub atoms: f64,
    /// Squeezed-quadrature variance ratio `xi^2`.
    pub squeezing: f64,
    /// Antisqueezed-quadrature variance ratio `chi^2`.
    pub antisqueezing: f64,
    pub prep_contrast: f64,
    pub ramsey_contrast: f64,
    pub orientation: SqueezeOrientation,
    /// Accept non-integer atom numbers (smooth sweeps over N).
    pub fractional_atoms: bool,
}

impl EnsembleParams {
    /// Coherent spin state with perfect contrast.
    pub fn coherent(atoms: f64) -> Self {
        EnsembleParams {
            atoms,
            squeezing: 1.0,
            antisqueezing: 1.0,
            prep_contrast: 1.0,
            ramsey_contrast: 1.0,
            orientation: SqueezeOrientation::MeasurementBased,
            fractional_atoms: false,
        }
    }

    /// Squeezed state given `xi^2` and the excess area `A^2`; `chi^2 = A^2 / xi^2`.
    pub fn squeezed(atoms: f64, squeezing: f64, area: f64) -> Self {
        EnsembleParams {
            squeezing,
            antisqueezing: area / squeezing,
            ..Self::coherent(atoms)
        }
    }

    pub fn with_contrast(mut self, prep: f64, ramsey: f64) -> Self {
        self.prep_contrast = prep;
        self.ramsey_contrast = ramsey;
        self
    }

    pub fn with_orientation(mut self, orientation: SqueezeOrientation) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn with_fractional_atoms(mut self, allow: bool) -> Self {
        self.fractional_atoms = allow;
        self
    }

    pub fn validate(&self) -> Result<EnsembleSpec> {
        validate_spec(self)
    }
}

/// A validated ensemble. Derived quantities are populated at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    params: EnsembleParams,
    spin: f64,
    area: f64,
    contrast: f64,
    theta: f64,
}

/// Checks the physical constraints and fills in `S`, `A^2`, `C` and `theta`.
pub fn validate_spec(params: &EnsembleParams) -> Result<EnsembleSpec> {
    let p = params;
    let bad = |msg: String| Err(Error::InvalidSpec(msg));

    if !p.atoms.is_finite() || p.atoms < 2.0 {
        return bad(format!("atom number must be >= 2, got {}", p.atoms));
    }
    if !p.fractional_atoms && p.atoms.fract() != 0.0 {
        return bad(format!("atom number must be an integer, got {}", p.atoms));
    }
    if !(p.squeezing.is_finite() && p.squeezing > 0.0) {
        return bad(format!(
            "squeezing xi^2 must be positive, got {}",
            p.squeezing
        ));
    }
    if p.squeezing > 1.0 + AREA_SLACK {
        return bad(format!("squeezing xi^2 must be <= 1, got {}", p.squeezing));
    }
    if !(p.antisqueezing.is_finite() && p.antisqueezing > 0.0) {
        return bad(format!(
            "antisqueezing chi^2 must be positive, got {}",
            p.antisqueezing
        ));
    }
    let area = p.squeezing * p.antisqueezing;
    if area < 1.0 - AREA_SLACK {
        return bad(format!(
            "excess area A^2 = xi^2 chi^2 = {area} violates the Heisenberg bound A^2 >= 1"
        ));
    }
    for (name, c) in [("prep", p.prep_contrast), ("ramsey", p.ramsey_contrast)] {
        if !(c > 0.0 && c <= 1.0) {
            return bad(format!("{name} contrast must lie in (0, 1], got {c}"));
        }
    }
    let theta = match p.orientation {
        SqueezeOrientation::MeasurementBased => 0.0,
        SqueezeOrientation::FeedbackBased => (1.0 / p.antisqueezing.sqrt()).min(1.0).asin(),
        SqueezeOrientation::Explicit(t) => {
            if !(0.0..=FRAC_PI_2).contains(&t) {
                return bad(format!("orientation angle must lie in [0, pi/2], got {t}"));
            }
            t
        }
    };

    Ok(EnsembleSpec {
        params: *p,
        spin: p.atoms / 2.0,
        area: area.max(1.0),
        contrast: p.prep_contrast * p.ramsey_contrast,
        theta,
    })
}

impl EnsembleSpec {
    pub fn params(&self) -> &EnsembleParams {
        &self.params
    }

    pub fn atoms(&self) -> f64 {
        self.params.atoms
    }

    /// Spin length `S = N/2`.
    pub fn spin(&self) -> f64 {
        self.spin
    }

    pub fn xi2(&self) -> f64 {
        self.params.squeezing
    }

    pub fn chi2(&self) -> f64 {
        self.params.antisqueezing
    }

    /// Excess antisqueezing area `A^2 = xi^2 chi^2` (clamped to >= 1).
    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn prep_contrast(&self) -> f64 {
        self.params.prep_contrast
    }

    pub fn ramsey_contrast(&self) -> f64 {
        self.params.ramsey_contrast
    }

    /// Total contrast `C = C1 C2`.
    pub fn contrast(&self) -> f64 {
        self.contrast
    }

    /// Squeezing orientation angle in radians.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn is_coherent(&self) -> bool {
        self.params.squeezing == 1.0 && self.params.antisqueezing == 1.0
    }

    /// Same atom number, unsqueezed, perfect contrast.
    pub fn coherent_reference(&self) -> EnsembleSpec {
        let p = EnsembleParams {
            fractional_atoms: self.params.fractional_atoms,
            ..EnsembleParams::coherent(self.params.atoms)
        };
        validate_spec(&p).expect("coherent reference of a valid spec is valid")
    }
}

/// Wineland (metrological Ramsey) squeezing parameter `xi_R^2 = xi^2 / C^2`.
///
/// The minimal quadrature variance is taken as the prepared-state value
/// `(S/2) xi^2`; contrast-induced excess noise is not folded in.
pub fn ramsey_squeezing_parameter(spec: &EnsembleSpec) -> f64 {
    spec.xi2() / (spec.contrast() * spec.contrast())
}

/// Free-running local oscillator with Gaussian phase diffusion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoModel {
    /// Dephasing rate `gamma`; the phase deviation after `tau` has standard
    /// deviation `gamma * tau`.
    pub gamma: f64,
}

impl LoModel {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "dephasing rate must be positive, got {gamma}"
            )));
        }
        Ok(LoModel { gamma })
    }

    pub fn phase_std(&self, tau: f64) -> f64 {
        self.gamma * tau
    }

    /// Probability density of the LO phase deviation after Ramsey time `tau`.
    pub fn phase_pdf(&self, tau: f64, phi: f64) -> f64 {
        let s = self.phase_std(tau);
        (-phi * phi / (2.0 * s * s)).exp() / (s * (2.0 * PI).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{db_to_linear, Decibels};

    #[test]
    fn coherent_state_is_valid() {
        let spec = EnsembleParams::coherent(1e4).validate().unwrap();
        assert_eq!(spec.area(), 1.0);
        assert_eq!(spec.contrast(), 1.0);
        assert_eq!(spec.spin(), 5e3);
        assert_eq!(spec.theta(), 0.0);
    }

    #[test]
    fn heisenberg_violation_rejected() {
        let p = EnsembleParams {
            squeezing: 0.1,
            antisqueezing: 5.0,
            ..EnsembleParams::coherent(1e4)
        };
        let err = p.validate().unwrap_err();
        assert!(
            matches!(err, Error::InvalidSpec(ref m) if m.contains("Heisenberg")),
            "{err}"
        );
    }

    #[test]
    fn hosten_state_is_valid() {
        let xi2 = 10f64.powf(-2.01);
        let chi2 = 10f64.powf(1.9 + 2.01);
        let p = EnsembleParams {
            squeezing: xi2,
            antisqueezing: chi2,
            ..EnsembleParams::coherent(5e5)
        }
        .with_contrast(0.962, 1.0);
        let spec = p.validate().unwrap();
        assert!((spec.area() - 10f64.powf(1.9)).abs() < 1e-9);
        assert!((spec.contrast() - 0.962).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_atoms_and_contrast() {
        for atoms in [1.0, 0.0, -4.0, f64::NAN, 10.5] {
            assert!(
                EnsembleParams::coherent(atoms).validate().is_err(),
                "{atoms}"
            );
        }
        assert!(EnsembleParams::coherent(10.5)
            .with_fractional_atoms(true)
            .validate()
            .is_ok());
        for c in [0.0, -0.1, 1.01, f64::NAN] {
            assert!(EnsembleParams::coherent(100.0)
                .with_contrast(c, 1.0)
                .validate()
                .is_err());
            assert!(EnsembleParams::coherent(100.0)
                .with_contrast(1.0, c)
                .validate()
                .is_err());
        }
    }

    #[test]
    fn squeezing_above_one_rejected() {
        assert!(EnsembleParams::squeezed(100.0, 1.5, 2.0)
            .validate()
            .is_err());
    }

    #[test]
    fn orientation_modes() {
        let base = EnsembleParams::squeezed(1e3, 0.01, 1.0);
        let fb = base
            .with_orientation(SqueezeOrientation::FeedbackBased)
            .validate()
            .unwrap();
        assert!((fb.theta() - (0.1f64).asin()).abs() < 1e-12);
        let ex = base
            .with_orientation(SqueezeOrientation::Explicit(0.3))
            .validate()
            .unwrap();
        assert_eq!(ex.theta(), 0.3);
        assert!(base
            .with_orientation(SqueezeOrientation::Explicit(2.0))
            .validate()
            .is_err());
    }

    #[test]
    fn validation_is_idempotent() {
        let spec = EnsembleParams::squeezed(1e4, db_to_linear(Decibels(-15.0)), 30.0)
            .with_contrast(0.9, 0.8)
            .validate()
            .unwrap();
        assert_eq!(spec.params().validate().unwrap(), spec);
    }

    #[test]
    fn wineland_parameter() {
        let s = EnsembleParams::squeezed(100.0, 0.1, 1.0)
            .validate()
            .unwrap();
        assert!((ramsey_squeezing_parameter(&s) - 0.1).abs() < 1e-15);
        let s = EnsembleParams::squeezed(100.0, 0.1, 1.0)
            .with_contrast(0.5, 1.0)
            .validate()
            .unwrap();
        assert!((ramsey_squeezing_parameter(&s) - 0.4).abs() < 1e-15);
        let s = EnsembleParams::coherent(100.0).validate().unwrap();
        assert_eq!(ramsey_squeezing_parameter(&s), 1.0);
    }

    #[test]
    fn lo_pdf_peak_and_symmetry() {
        let lo = LoModel::new(2.0).unwrap();
        let tau = 0.1;
        assert!((lo.phase_pdf(tau, 0.0) - 1.0 / (0.2 * (2.0 * PI).sqrt())).abs() < 1e-14);
        assert_eq!(lo.phase_pdf(tau, 0.3), lo.phase_pdf(tau, -0.3));
        assert!(LoModel::new(0.0).is_err());
    }
}
