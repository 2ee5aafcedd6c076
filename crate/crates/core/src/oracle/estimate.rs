//! Measurement statistics after the Ramsey sequence and Bayesian phase
//! estimation on top of them.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::eigen::spin_rotations;
use super::state::DickeEnsembleState;
use crate::error::{Error, Result};

/// Default number of prior grid points on `[-pi/2, pi/2]`.
pub const DEFAULT_PRIOR_POINTS: usize = 801;
const MIN_PRIOR_POINTS: usize = 400;
const UNITARITY_TOL: f64 = 1e-8;
const CHUNK: usize = 64;

/// `P(S_z | phi)` for a grid of phases. Column `j` holds the probabilities
/// of the final `S_z = k - N/2`, `k = 0..=N`, for phase `phis[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalDistribution {
    atoms: usize,
    phis: Vec<f64>,
    columns: Vec<Vec<f64>>,
}

impl ConditionalDistribution {
    pub fn new(atoms: usize, phis: Vec<f64>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if phis.len() != columns.len() || columns.iter().any(|c| c.len() != atoms + 1) {
            return Err(Error::Oracle(
                "conditional table has inconsistent shape".into(),
            ));
        }
        for (j, c) in columns.iter().enumerate() {
            let total: f64 = c.iter().sum();
            if (total - 1.0).abs() > UNITARITY_TOL {
                return Err(Error::Oracle(format!(
                    "probabilities at phi = {} sum to {total}; unitarity lost",
                    phis[j]
                )));
            }
        }
        Ok(ConditionalDistribution {
            atoms,
            phis,
            columns,
        })
    }

    pub fn atoms(&self) -> usize {
        self.atoms
    }

    pub fn phis(&self) -> &[f64] {
        &self.phis
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    /// `S_z` value of row `k`.
    pub fn sz(&self, k: usize) -> f64 {
        k as f64 - self.atoms as f64 / 2.0
    }

    pub fn mean_sz(&self, j: usize) -> f64 {
        self.columns[j]
            .iter()
            .enumerate()
            .map(|(k, p)| p * self.sz(k))
            .sum()
    }

    pub fn var_sz(&self, j: usize) -> f64 {
        let mu = self.mean_sz(j);
        self.columns[j]
            .iter()
            .enumerate()
            .map(|(k, p)| p * (self.sz(k) - mu).powi(2))
            .sum()
    }
}

/// Anything that yields final `S_z` statistics as a function of the phase.
pub trait PhaseProbe: Sync {
    fn atoms(&self) -> usize;
    fn conditional(&self, phis: &[f64]) -> Result<ConditionalDistribution>;
}

impl PhaseProbe for DickeEnsembleState {
    fn atoms(&self) -> usize {
        DickeEnsembleState::atoms(self)
    }

    fn conditional(&self, phis: &[f64]) -> Result<ConditionalDistribution> {
        conditional_sz_distribution(self, phis)
    }
}

fn check_phase_grid(phis: &[f64]) -> Result<()> {
    if let Some(p) = phis.iter().find(|p| !(p.abs() <= PI)) {
        return Err(Error::InvalidArgument(format!(
            "phase {p} lies outside [-pi, pi]"
        )));
    }
    Ok(())
}

/// Rotation by `phi` about z followed by the final `pi/2` pulse about x,
/// then projection onto `S_z`, averaged over the mixture.
///
/// With `exp(-i pi/2 S_x) = R^dag exp(-i pi/2 S_y) R`, `R = exp(-i pi/2 S_z)`,
/// the outgoing probabilities are `|sum_m d_km exp(-i (phi + pi/2) m) psi_m|^2`
/// with `d` the real `pi/2` y-rotation matrix.
pub fn conditional_sz_distribution(
    state: &DickeEnsembleState,
    phis: &[f64],
) -> Result<ConditionalDistribution> {
    check_phase_grid(phis)?;
    let rot = spin_rotations(state.atoms())?;
    let d = &rot.half_pi_y;
    let n = state.dim();
    let s = state.spin();

    let chunks: Vec<&[f64]> = phis.chunks(CHUNK).collect();
    let parts: Vec<Vec<Vec<f64>>> = chunks
        .par_iter()
        .map(|chunk| {
            let mut probs = vec![vec![0.0; n]; chunk.len()];
            for c in state.components() {
                let mut bre = DMatrix::<f64>::zeros(n, chunk.len());
                let mut bim = DMatrix::<f64>::zeros(n, chunk.len());
                for (j, &phi) in chunk.iter().enumerate() {
                    for i in 0..n {
                        let (sn, cs) = ((phi + FRAC_PI_2) * (i as f64 - s)).sin_cos();
                        let (a, b) = (c.re[i], c.im[i]);
                        bre[(i, j)] = a * cs + b * sn;
                        bim[(i, j)] = b * cs - a * sn;
                    }
                }
                let are = d * bre;
                let aim = d * bim;
                for (j, col) in probs.iter_mut().enumerate() {
                    for (k, p) in col.iter_mut().enumerate() {
                        *p += c.weight * (are[(k, j)].powi(2) + aim[(k, j)].powi(2));
                    }
                }
            }
            probs
        })
        .collect();

    let columns = parts.into_iter().flatten().collect();
    ConditionalDistribution::new(state.atoms(), phis.to_vec(), columns)
}

/// `n` points on `[-a, a]`, exactly mirror symmetric.
pub fn symmetric_grid(a: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    let h = 2.0 * a / (n - 1) as f64;
    let mut g: Vec<f64> = (0..n).map(|i| -a + h * i as f64).collect();
    for i in 0..n / 2 {
        g[n - 1 - i] = -g[i];
    }
    if n % 2 == 1 {
        g[n / 2] = 0.0;
    }
    g
}

/// Posterior-mean phase estimate for each measurement outcome under a
/// uniform prior on `[-pi/2, pi/2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesEstimator {
    pub phi_est: Vec<f64>,
    /// Outcomes with zero probability everywhere on the prior; estimate 0.
    pub zero_rows: Vec<usize>,
}

/// `phi_est(S_z) = int phi P dphi / int P dphi` over the prior interval, by
/// the trapezoid rule on the distribution's phase grid.
pub fn bayes_estimator(dist: &ConditionalDistribution) -> Result<BayesEstimator> {
    let phis = dist.phis();
    let inside: Vec<usize> = (0..phis.len())
        .filter(|&j| phis[j].abs() <= FRAC_PI_2 + 1e-12)
        .collect();
    let sorted = inside.windows(2).all(|w| phis[w[1]] > phis[w[0]]);
    let covers = inside
        .first()
        .map(|&j| phis[j] <= -FRAC_PI_2 + 1e-9)
        .unwrap_or(false)
        && inside
            .last()
            .map(|&j| phis[j] >= FRAC_PI_2 - 1e-9)
            .unwrap_or(false);
    if inside.len() < MIN_PRIOR_POINTS || !sorted || !covers {
        return Err(Error::InvalidArgument(format!(
            "prior grid must be increasing and cover [-pi/2, pi/2] with >= {MIN_PRIOR_POINTS} points"
        )));
    }
    let weights: Vec<f64> = (0..inside.len())
        .map(|i| {
            let left = if i > 0 {
                phis[inside[i]] - phis[inside[i - 1]]
            } else {
                0.0
            };
            let right = if i + 1 < inside.len() {
                phis[inside[i + 1]] - phis[inside[i]]
            } else {
                0.0
            };
            0.5 * (left + right)
        })
        .collect();

    let rows = dist.atoms() + 1;
    let mut phi_est = vec![0.0; rows];
    let mut zero_rows = Vec::new();
    for (k, est) in phi_est.iter_mut().enumerate() {
        let (mut num, mut den) = (0.0, 0.0);
        for (w, &j) in weights.iter().zip(&inside) {
            let p = dist.column(j)[k];
            num += w * phis[j] * p;
            den += w * p;
        }
        if den > 0.0 {
            *est = num / den;
        } else {
            zero_rows.push(k);
        }
    }
    Ok(BayesEstimator { phi_est, zero_rows })
}

/// Mean-square estimation error at true phase `phi` given the outcome
/// probabilities `column`; `phi` may lie outside the prior interval.
pub fn expected_phase_error(column: &[f64], est: &BayesEstimator, phi: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (p, e) in column.iter().zip(&est.phi_est) {
        num += p * (e - phi).powi(2);
        den += p;
    }
    num / den
}

/// Numerically exact `(Delta phi)^2(phi)` of the probe at each phase.
pub fn oracle_phase_error_curve(
    probe: &dyn PhaseProbe,
    phis: &[f64],
    prior_points: usize,
) -> Result<Vec<f64>> {
    let prior = symmetric_grid(FRAC_PI_2, prior_points);
    let est = bayes_estimator(&probe.conditional(&prior)?)?;
    let dist = probe.conditional(phis)?;
    Ok((0..phis.len())
        .map(|j| expected_phase_error(dist.column(j), &est, phis[j]))
        .collect())
}

/// Largest change of the logarithmic slope `d ln f / d phi` across two
/// adjacent grid intervals. Sampling the two-interval change keeps a kink's
/// full slope change whichever interval it falls in.
pub fn log_slope_jump(phis: &[f64], values: &[f64]) -> f64 {
    let slopes: Vec<f64> = phis
        .windows(2)
        .zip(values.windows(2))
        .map(|(p, v)| (v[1].ln() - v[0].ln()) / (p[1] - p[0]))
        .collect();
    slopes
        .iter()
        .zip(slopes.iter().skip(2))
        .map(|(a, b)| (b - a).abs())
        .fold(0.0, f64::max)
}

/// Log-slope jumps at two resolutions; see [`detect_step`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepReport {
    pub coarse: f64,
    pub fine: f64,
    pub step: bool,
}

/// Jumps below this (rad^-1) count as smooth whatever their scaling.
pub const STEP_FLOOR: f64 = 1.0;

/// Tests `f` for a kink or step on `[lo, hi]` by evaluating the log-slope
/// jump on `points` and `2 points` samples. For a smooth curve the jump
/// shrinks in proportion to the spacing once the grid resolves it; at a kink
/// it stays put and at a discontinuity it grows. A step is reported when
/// halving the spacing keeps at least 3/4 of the jump.
pub fn detect_step<F>(f: F, lo: f64, hi: f64, points: usize) -> Result<StepReport>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if points < 4 || !(hi > lo) {
        return Err(Error::InvalidArgument(
            "step detection needs at least 4 points on a non-empty interval".into(),
        ));
    }
    let jump = |n: usize| -> Result<f64> {
        let phis: Vec<f64> = (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect();
        Ok(log_slope_jump(&phis, &f(&phis)?))
    };
    let (coarse, fine) = (jump(points)?, jump(2 * points)?);
    Ok(StepReport {
        coarse,
        fine,
        step: fine > STEP_FLOOR && fine >= 0.75 * coarse,
    })
}
