//! Collective-spin states in the Dicke basis: coherent, squeezed and
//! non-unitary (mixture) squeezed states.

use serde::{Deserialize, Serialize};

use super::eigen::{check_atoms, gauss_hermite, spin_rotations, sx_tridiagonal};
use crate::error::{Error, Result};

/// Default number of mixture components.
pub const DEFAULT_COMPONENTS: usize = 21;

/// How the pure squeezed state is synthesized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SqueezeProfile {
    /// Real Gaussian amplitudes `exp(-m^2 / (4 (S/2) chi^2))` in `m`.
    #[default]
    Gaussian,
    /// Oscillator squeezed vacuum mapped onto the `S_x` eigenbasis
    /// (Fock state `n` <-> `S_x = S - n`).
    HolsteinPrimakoff,
}

/// Enough information to rebuild the same kind of state at another size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StateRecipe {
    Coherent,
    Squeezed {
        chi2: f64,
        profile: SqueezeProfile,
    },
    Mixture {
        xi2: f64,
        chi2: f64,
        components: usize,
        profile: SqueezeProfile,
    },
}

impl StateRecipe {
    pub fn build(&self, atoms: usize) -> Result<DickeEnsembleState> {
        match *self {
            StateRecipe::Coherent => build_css(atoms),
            StateRecipe::Squeezed { chi2, profile } => {
                build_pure_squeezed_with(atoms, chi2, profile)
            }
            StateRecipe::Mixture {
                xi2,
                chi2,
                components,
                profile,
            } => build_nonunitary_mixture_with(atoms, xi2, chi2, components, profile),
        }
    }
}

/// One pure state of the mixture, amplitudes indexed by `m + S`.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl Component {
    fn real(weight: f64, re: Vec<f64>) -> Self {
        let im = vec![0.0; re.len()];
        Component { weight, re, im }
    }

    pub fn norm_sq(&self) -> f64 {
        self.re
            .iter()
            .zip(&self.im)
            .map(|(a, b)| a * a + b * b)
            .sum()
    }
}

/// Metadata of a constructed state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateMetadata {
    pub recipe: StateRecipe,
    /// Target squeezed variance ratio.
    pub xi2: f64,
    /// Target antisqueezed variance ratio.
    pub chi2: f64,
    /// Oscillator squeezing parameter `r = ln(chi^2) / 2`.
    pub lambda: f64,
    /// Variance of the `S_y` displacement distribution, `(S/2)(xi^2 - 1/chi^2)`.
    pub displacement_variance: f64,
}

/// Weighted mixture of pure states over the Dicke basis `m = -S..S`.
#[derive(Debug, Clone, PartialEq)]
pub struct DickeEnsembleState {
    atoms: usize,
    components: Vec<Component>,
    meta: StateMetadata,
}

/// First and second moments of the collective spin.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpinMoments {
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
    pub sx2: f64,
    pub sy2: f64,
    pub sz2: f64,
}

impl SpinMoments {
    pub fn var_x(&self) -> f64 {
        self.sx2 - self.sx * self.sx
    }
    pub fn var_y(&self) -> f64 {
        self.sy2 - self.sy * self.sy
    }
    pub fn var_z(&self) -> f64 {
        self.sz2 - self.sz * self.sz
    }

    fn add_scaled(&mut self, w: f64, o: &SpinMoments) {
        self.sx += w * o.sx;
        self.sy += w * o.sy;
        self.sz += w * o.sz;
        self.sx2 += w * o.sx2;
        self.sy2 += w * o.sy2;
        self.sz2 += w * o.sz2;
    }
}

impl DickeEnsembleState {
    pub fn atoms(&self) -> usize {
        self.atoms
    }

    pub fn spin(&self) -> f64 {
        self.atoms as f64 / 2.0
    }

    pub fn dim(&self) -> usize {
        self.atoms + 1
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn metadata(&self) -> &StateMetadata {
        &self.meta
    }

    /// Moments of a single component.
    pub fn component_moments(&self, c: &Component) -> SpinMoments {
        pure_moments(self.atoms, c)
    }

    /// Moments of the mixture (weighted sums of component moments).
    pub fn moments(&self) -> SpinMoments {
        let mut acc = SpinMoments::default();
        for c in &self.components {
            acc.add_scaled(c.weight, &pure_moments(self.atoms, c));
        }
        acc
    }

    /// Returns a copy rotated by `angle` about the y axis.
    pub fn rotated_about_y(&self, angle: f64) -> Result<DickeEnsembleState> {
        if angle == 0.0 {
            return Ok(self.clone());
        }
        let rot = spin_rotations(self.atoms)?;
        let d = rot.y_rotation(angle);
        let components = self
            .components
            .iter()
            .map(|c| {
                let re = nalgebra::DVector::from_column_slice(&c.re);
                let im = nalgebra::DVector::from_column_slice(&c.im);
                Component {
                    weight: c.weight,
                    re: (&d * re).iter().copied().collect(),
                    im: (&d * im).iter().copied().collect(),
                }
            })
            .collect();
        Ok(DickeEnsembleState {
            atoms: self.atoms,
            components,
            meta: self.meta,
        })
    }
}

fn ladder(s: f64, m: f64) -> f64 {
    // <m+1| S_+ |m>
    (s * (s + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
}

fn pure_moments(atoms: usize, c: &Component) -> SpinMoments {
    let s = atoms as f64 / 2.0;
    let n = atoms + 1;
    let (re, im) = (&c.re, &c.im);
    let mut sz = 0.0;
    let mut sz2 = 0.0;
    for i in 0..n {
        let m = i as f64 - s;
        let p = re[i] * re[i] + im[i] * im[i];
        sz += m * p;
        sz2 += m * m * p;
    }
    // <S_+> = sum_m c_m conj(psi_{m+1}) psi_m
    let (mut p1r, mut p1i) = (0.0, 0.0);
    for i in 0..n - 1 {
        let c1 = ladder(s, i as f64 - s);
        p1r += c1 * (re[i + 1] * re[i] + im[i + 1] * im[i]);
        p1i += c1 * (re[i + 1] * im[i] - im[i + 1] * re[i]);
    }
    // Re <S_+^2>
    let mut p2r = 0.0;
    for i in 0..n.saturating_sub(2) {
        let m = i as f64 - s;
        let c2 = ladder(s, m) * ladder(s, m + 1.0);
        p2r += c2 * (re[i + 2] * re[i] + im[i + 2] * im[i]);
    }
    let transverse = s * (s + 1.0) - sz2;
    SpinMoments {
        sx: p1r,
        sy: p1i,
        sz,
        sx2: 0.5 * (p2r + transverse),
        sy2: 0.5 * (-p2r + transverse),
        sz2,
    }
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v {
        *x /= n;
    }
}

pub(crate) fn ln_binomial(n: f64, k: f64) -> f64 {
    libm::lgamma(n + 1.0) - libm::lgamma(k + 1.0) - libm::lgamma(n - k + 1.0)
}

/// Coherent spin state along `+x`: `<S,m|+x> = 2^-S sqrt(C(2S, S+m))`.
pub fn build_css(atoms: usize) -> Result<DickeEnsembleState> {
    check_atoms(atoms)?;
    let n = atoms as f64;
    let mut amps: Vec<f64> = (0..=atoms)
        .map(|k| (0.5 * ln_binomial(n, k as f64) - 0.5 * n * std::f64::consts::LN_2).exp())
        .collect();
    // lgamma rounding leaves the norm off by ~1e-11 at N = 4000.
    let norm = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    Ok(DickeEnsembleState {
        atoms,
        components: vec![Component::real(1.0, amps)],
        meta: StateMetadata {
            recipe: StateRecipe::Coherent,
            xi2: 1.0,
            chi2: 1.0,
            lambda: 0.0,
            displacement_variance: 0.0,
        },
    })
}

/// Pure (unitary) squeezed state with `S_z` variance `(S/2) chi^2` and
/// `S_y` variance `(S/2) / chi^2`, Gaussian profile.
pub fn build_pure_squeezed(atoms: usize, chi2: f64) -> Result<DickeEnsembleState> {
    build_pure_squeezed_with(atoms, chi2, SqueezeProfile::Gaussian)
}

pub fn build_pure_squeezed_with(
    atoms: usize,
    chi2: f64,
    profile: SqueezeProfile,
) -> Result<DickeEnsembleState> {
    check_atoms(atoms)?;
    if !(chi2 >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "antisqueezing chi^2 must be >= 1, got {chi2}"
        )));
    }
    if chi2 > atoms as f64 / 10.0 && chi2 > 1.0 {
        return Err(Error::InvalidArgument(format!(
            "chi^2 = {chi2} exceeds N/10 = {}; the oscillator picture of the spin breaks down",
            atoms as f64 / 10.0
        )));
    }
    let amps = match profile {
        SqueezeProfile::Gaussian => gaussian_profile(atoms, chi2),
        SqueezeProfile::HolsteinPrimakoff => oscillator_profile(atoms, chi2)?,
    };
    Ok(DickeEnsembleState {
        atoms,
        components: vec![Component::real(1.0, amps)],
        meta: StateMetadata {
            recipe: StateRecipe::Squeezed { chi2, profile },
            xi2: 1.0 / chi2,
            chi2,
            lambda: 0.5 * chi2.ln(),
            displacement_variance: 0.0,
        },
    })
}

fn gaussian_profile(atoms: usize, chi2: f64) -> Vec<f64> {
    let s = atoms as f64 / 2.0;
    let var = 0.5 * s * chi2;
    let mut v: Vec<f64> = (0..=atoms)
        .map(|i| {
            let m = i as f64 - s;
            (-m * m / (4.0 * var)).exp()
        })
        .collect();
    normalize(&mut v);
    v
}

/// Squeezed vacuum `sum_k c_2k |2k>` with `|n>` the `S_x = S - n`
/// eigenvector. Eigenvector signs are fixed so that `S_z + i S_y` acts as a
/// positive raising operator; the sign of `c_2k` then squeezes `S_y`.
fn oscillator_profile(atoms: usize, chi2: f64) -> Result<Vec<f64>> {
    let rot = spin_rotations(atoms)?;
    let dim = atoms + 1;
    let s = atoms as f64 / 2.0;
    let (_, off) = sx_tridiagonal(atoms);
    let t = (0.5 * chi2.ln()).tanh();

    // Coefficients up to the largest even Fock number; stop once negligible.
    let mut coeffs = vec![1.0];
    let mut k = 0usize;
    while 2 * (k + 1) < dim {
        let next = coeffs[k] * t * ((2 * k + 1) as f64 / (2 * k + 2) as f64).sqrt();
        if next.abs() < 1e-18 {
            break;
        }
        coeffs.push(next);
        k += 1;
    }
    let nmax = 2 * (coeffs.len() - 1);

    // Raising operator R = S_z + (S_+ - S_-)/2 applied to a vector.
    let raise = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for i in 0..dim {
            out[i] += (i as f64 - s) * v[i];
        }
        for i in 0..dim - 1 {
            // S_+/2 takes |i> to |i+1> and S_-/2 takes |i+1> to |i>, both with
            // amplitude off[i].
            let c = off[i];
            out[i + 1] += c * v[i];
            out[i] -= c * v[i + 1];
        }
        out
    };

    let mut prev = rot.sx_eigenvector(0);
    // Fix the vacuum sign: positive overlap with the coherent state.
    let css = build_css(atoms)?;
    let overlap: f64 = prev
        .iter()
        .zip(&css.components[0].re)
        .map(|(a, b)| a * b)
        .sum();
    if overlap < 0.0 {
        prev.iter_mut().for_each(|x| *x = -*x);
    }
    let mut out = vec![0.0; dim];
    for (a, p) in out.iter_mut().zip(&prev) {
        *a += coeffs[0] * p;
    }
    for n in 1..=nmax {
        let mut v = rot.sx_eigenvector(n);
        let rv = raise(&prev);
        let dot: f64 = v.iter().zip(&rv).map(|(a, b)| a * b).sum();
        if dot < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        if n % 2 == 0 {
            let c = coeffs[n / 2];
            for (a, b) in out.iter_mut().zip(&v) {
                *a += c * b;
            }
        }
        prev = v;
    }
    normalize(&mut out);
    Ok(out)
}

/// Non-unitary squeezed state: a Gauss-Hermite discretized mixture of pure
/// squeezed states (antisqueezing `chi^2`) displaced along `S_y` so that the
/// total `S_y` variance is `(S/2) xi^2`.
pub fn build_nonunitary_mixture(
    atoms: usize,
    xi2: f64,
    chi2: f64,
    components: usize,
) -> Result<DickeEnsembleState> {
    build_nonunitary_mixture_with(atoms, xi2, chi2, components, SqueezeProfile::Gaussian)
}

pub fn build_nonunitary_mixture_with(
    atoms: usize,
    xi2: f64,
    chi2: f64,
    components: usize,
    profile: SqueezeProfile,
) -> Result<DickeEnsembleState> {
    let area = xi2 * chi2;
    if !(area >= 1.0 - 1e-12) {
        return Err(Error::InvalidSpec(format!(
            "excess area A^2 = {area} violates the Heisenberg bound A^2 >= 1"
        )));
    }
    if components == 0 || components.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "mixture component count must be odd, got {components}"
        )));
    }
    let pure = build_pure_squeezed_with(atoms, chi2, profile)?;
    let s = atoms as f64 / 2.0;
    let dvar = (0.5 * s * (xi2 - 1.0 / chi2)).max(0.0);
    let recipe = StateRecipe::Mixture {
        xi2,
        chi2,
        components,
        profile,
    };
    let meta = StateMetadata {
        recipe,
        xi2,
        chi2,
        lambda: 0.5 * chi2.ln(),
        displacement_variance: dvar,
    };
    if dvar == 0.0 {
        return Ok(DickeEnsembleState { meta, ..pure });
    }
    let base = &pure.components[0];
    let spin_len = pure.component_moments(base).sx;
    let (nodes, weights) = gauss_hermite(components)?;
    let comps = nodes
        .iter()
        .zip(&weights)
        .map(|(&z, &w)| {
            let kappa = (dvar.sqrt() * z / spin_len).clamp(-1.0, 1.0).asin();
            let (re, im) = base
                .re
                .iter()
                .enumerate()
                .map(|(i, &a)| {
                    let (sn, cs) = (kappa * (i as f64 - s)).sin_cos();
                    (a * cs, a * sn)
                })
                .unzip();
            Component { weight: w, re, im }
        })
        .collect();
    Ok(DickeEnsembleState {
        atoms,
        components: comps,
        meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn css_two_atoms() {
        let s = build_css(2).unwrap();
        let a = &s.components()[0].re;
        assert!((a[0] - 0.5).abs() < 1e-14);
        assert!((a[1] - FRAC_1_SQRT_2).abs() < 1e-14);
        assert!((a[2] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn css_moments() {
        for n in [10, 100, 1000, 4000] {
            let s = build_css(n).unwrap();
            let m = s.moments();
            assert!((s.components()[0].norm_sq() - 1.0).abs() < 1e-12);
            assert!(rel(m.var_z(), n as f64 / 4.0) < 1e-9, "{n}");
            assert!(rel(m.var_y(), n as f64 / 4.0) < 1e-9, "{n}");
            assert!(rel(m.sx, n as f64 / 2.0) < 1e-9, "{n}");
        }
    }

    #[test]
    fn squeezed_variances() {
        let s = build_pure_squeezed(100, 1.0).unwrap();
        assert!(rel(s.moments().var_z(), 25.0) < 0.02);
        let s = build_pure_squeezed(1000, 10.0).unwrap();
        let m = s.moments();
        assert!(rel(m.var_z(), 250.0 * 10.0) < 0.02);
        assert!(rel(m.var_y(), 250.0 / 10.0) < 0.02);
        assert!(m.var_y() * m.var_z() >= m.sx * m.sx / 4.0);
    }

    #[test]
    fn rejects_broken_oscillator_regime() {
        assert!(build_pure_squeezed(1000, 101.0).is_err());
        assert!(build_pure_squeezed(1000, 0.5).is_err());
        assert!(build_pure_squeezed(1001, 2.0).is_err());
    }

    #[test]
    fn oscillator_profile_squeezes_sy() {
        let s = build_pure_squeezed_with(1000, 10.0, SqueezeProfile::HolsteinPrimakoff).unwrap();
        let m = s.moments();
        assert!((s.components()[0].norm_sq() - 1.0).abs() < 1e-12);
        assert!(rel(m.var_y(), 25.0) < 0.02, "{}", m.var_y());
        assert!(rel(m.var_z(), 2500.0) < 0.02, "{}", m.var_z());
        assert!(m.var_y() * m.var_z() >= m.sx * m.sx / 4.0 * (1.0 - 1e-12));
    }

    #[test]
    fn unit_area_mixture_is_pure_state() {
        let pure = build_pure_squeezed(1000, 10.0).unwrap();
        let mix = build_nonunitary_mixture(1000, 0.1, 10.0, 21).unwrap();
        assert_eq!(mix.components().len(), 1);
        assert_eq!(mix.components()[0], pure.components()[0]);
    }

    #[test]
    fn mixture_reaches_target_variance() {
        let mix = build_nonunitary_mixture(1000, 0.1, 100.0, 21).unwrap();
        let m = mix.moments();
        let w: f64 = mix.components().iter().map(|c| c.weight).sum();
        assert!((w - 1.0).abs() < 1e-12);
        for c in mix.components() {
            assert!((c.norm_sq() - 1.0).abs() < 1e-12);
            assert!(c.weight >= 0.0);
        }
        assert!(rel(m.var_y() / 250.0, 0.1) < 0.02, "{}", m.var_y() / 250.0);
        // Phase modulation leaves the S_z distribution untouched.
        let pure = build_pure_squeezed(1000, 100.0).unwrap();
        assert!(rel(m.var_z(), pure.moments().var_z()) < 1e-9);
    }

    #[test]
    fn mixture_moments_are_weighted_sums() {
        let mix = build_nonunitary_mixture(400, 0.2, 20.0, 7).unwrap();
        let total = mix.moments();
        let mut sy2 = 0.0;
        let mut sx = 0.0;
        for c in mix.components() {
            let m = mix.component_moments(c);
            sy2 += c.weight * m.sy2;
            sx += c.weight * m.sx;
        }
        assert!(rel(total.sy2, sy2) < 1e-12);
        assert!(rel(total.sx, sx) < 1e-12);
    }

    #[test]
    fn mixture_rejects_bad_inputs() {
        assert!(build_nonunitary_mixture(100, 0.1, 5.0, 21).is_err());
        assert!(build_nonunitary_mixture(100, 0.5, 4.0, 4).is_err());
    }

    #[test]
    fn y_rotation_moves_polarization() {
        let css = build_css(50).unwrap();
        let r = css.rotated_about_y(0.3).unwrap();
        let m = r.moments();
        // exp(-i a S_y) turns x towards -z by a.
        assert!(rel(m.sx, 25.0 * 0.3f64.cos()) < 1e-10);
        assert!(rel(m.sz.abs(), 25.0 * 0.3f64.sin()) < 1e-10);
        assert!((r.components()[0].norm_sq() - 1.0).abs() < 1e-12);
    }
}
