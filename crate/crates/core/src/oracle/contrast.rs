//! Contrast loss as a composite ensemble: a (tilted) squeezed core, two
//! decohered sub-ensembles of opposite polarization, and a reservoir of
//! atoms that left the clock transition.

use super::estimate::{conditional_sz_distribution, ConditionalDistribution, PhaseProbe};
use super::state::{ln_binomial, DickeEnsembleState};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ContrastComposite {
    atoms: usize,
    core: DickeEnsembleState,
    /// Atoms in each decohered half.
    half: usize,
    reservoir: usize,
    theta: f64,
}

/// Splits the `N` atoms of `state` into a squeezed core of `N C1 C2` atoms
/// (rebuilt at that size with the same squeezing and tilted by `theta` about
/// y), two halves of `N C2 (1 - C1) / 2` decohered atoms and a reservoir of
/// `N (1 - C2)` atoms. Sizes are rounded; the core is kept even and the
/// reservoir absorbs the remainder.
pub fn apply_contrast_model(
    state: &DickeEnsembleState,
    c1: f64,
    c2: f64,
    theta: f64,
) -> Result<ContrastComposite> {
    for (name, c) in [("prep", c1), ("ramsey", c2)] {
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::InvalidSpec(format!(
                "{name} contrast must lie in (0, 1], got {c}"
            )));
        }
    }
    let n = state.atoms();
    let nf = n as f64;
    let core_atoms = 2 * (nf * c1 * c2 / 2.0).round() as usize;
    if core_atoms < 2 {
        return Err(Error::InvalidSpec(format!(
            "contrast {} leaves fewer than two coherent atoms",
            c1 * c2
        )));
    }
    let half = ((nf * c2 * (1.0 - c1) / 2.0).round() as usize).min((n - core_atoms) / 2);
    let reservoir = n - core_atoms - 2 * half;
    let core = if core_atoms == n {
        state.clone()
    } else {
        state.metadata().recipe.build(core_atoms)?
    };
    Ok(ContrastComposite {
        atoms: n,
        core: core.rotated_about_y(theta)?,
        half,
        reservoir,
        theta,
    })
}

impl ContrastComposite {
    pub fn core(&self) -> &DickeEnsembleState {
        &self.core
    }

    /// `(core, each decohered half, reservoir)` atom counts.
    pub fn partition(&self) -> (usize, usize, usize) {
        (self.core.atoms(), self.half, self.reservoir)
    }
}

fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    if n == 0 {
        return vec![1.0];
    }
    let nf = n as f64;
    (0..=n)
        .map(|k| {
            let kf = k as f64;
            if p <= 0.0 {
                return if k == 0 { 1.0 } else { 0.0 };
            }
            if p >= 1.0 {
                return if k == n { 1.0 } else { 0.0 };
            }
            (ln_binomial(nf, kf) + kf * p.ln() + (nf - kf) * (1.0 - p).ln()).exp()
        })
        .collect()
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

impl PhaseProbe for ContrastComposite {
    fn atoms(&self) -> usize {
        self.atoms
    }

    /// Up-counts of the independent parts add, so the outcome distribution
    /// is the convolution of the parts' distributions.
    fn conditional(&self, phis: &[f64]) -> Result<ConditionalDistribution> {
        let core = conditional_sz_distribution(&self.core, phis)?;
        let reservoir = binomial_pmf(self.reservoir, 0.5);
        let ct = self.theta.cos();
        let columns = (0..phis.len())
            .map(|j| {
                let x = phis[j].cos() * ct;
                let up = binomial_pmf(self.half, 0.5 * (1.0 + x));
                let down = binomial_pmf(self.half, 0.5 * (1.0 - x));
                let mixed = convolve(&convolve(&up, &down), &reservoir);
                convolve(core.column(j), &mixed)
            })
            .collect();
        ConditionalDistribution::new(self.atoms, phis.to_vec(), columns)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::state::{build_css, build_pure_squeezed};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn full_contrast_is_identity() {
        let s = build_pure_squeezed(200, 5.0).unwrap();
        let c = apply_contrast_model(&s, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(c.partition(), (200, 0, 0));
        assert_eq!(c.core(), &s);
        let phis = [0.0, 0.4];
        assert_eq!(c.conditional(&phis).unwrap(), s.conditional(&phis).unwrap());
    }

    #[test]
    fn prep_loss_cancels_at_zero_phase() {
        // C1 = 0.5, theta = 0: final variance is C (N/4) xi^2 at phi = 0.
        let n = 1000;
        let s = build_pure_squeezed(n, 10.0).unwrap();
        let c = apply_contrast_model(&s, 0.5, 1.0, 0.0).unwrap();
        assert_eq!(c.partition(), (500, 250, 0));
        let d = c.conditional(&[0.0]).unwrap();
        let expect = 0.5 * 250.0 * 0.1;
        assert!(rel(d.var_sz(0), expect) < 0.03, "{}", d.var_sz(0));
        assert!(d.mean_sz(0).abs() < 1e-9);
    }

    #[test]
    fn ramsey_loss_adds_reservoir_noise() {
        let n = 1000;
        let s = build_css(n).unwrap();
        let c = apply_contrast_model(&s, 1.0, 0.5, 0.0).unwrap();
        assert_eq!(c.partition(), (500, 0, 500));
        let d = c.conditional(&[0.0, 0.3]).unwrap();
        // CSS core: (N C / 4) plus reservoir (N/4)(1 - C2).
        assert!(rel(d.var_sz(0), 125.0 + 125.0) < 1e-9);
        assert!(rel(d.mean_sz(1), 250.0 * 0.3f64.sin()) < 1e-9);
    }

    #[test]
    fn decohered_halves_follow_orientation() {
        let n = 400;
        let s = build_css(n).unwrap();
        let theta = 0.6;
        let c = apply_contrast_model(&s, 0.5, 1.0, theta).unwrap();
        let phi = 0.4;
        let d = c.conditional(&[phi]).unwrap();
        let core = c.core().conditional(&[phi]).unwrap();
        let x = phi.cos() * theta.cos();
        let halves = 100.0 * (1.0 - x * x) / 4.0 * 2.0;
        assert!(rel(d.var_sz(0), core.var_sz(0) + halves) < 1e-9);
    }

    #[test]
    fn binomial_normalized() {
        for (n, p) in [(0, 0.3), (7, 0.0), (7, 1.0), (500, 0.37)] {
            let s: f64 = binomial_pmf(n, p).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
