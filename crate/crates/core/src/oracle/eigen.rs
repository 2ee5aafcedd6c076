//! Symmetric tridiagonal eigensolver and the cached rotation matrices built
//! from the `S_x` eigendecomposition.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Largest atom number the oracle accepts.
pub const MAX_ORACLE_ATOMS: usize = 4000;

const MAX_QL_ITERATIONS: usize = 60;

/// Eigenvalues (ascending) and orthonormal eigenvectors (as columns) of a
/// real symmetric tridiagonal matrix, by implicit QL with Wilkinson shifts.
///
/// `diag` has length `n`, `off` length `n - 1` with `off[i]` coupling rows
/// `i` and `i + 1`.
pub fn tridiagonal_eigen(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = diag.len();
    if n == 0 || off.len() + 1 != n {
        return Err(Error::Oracle(format!(
            "tridiagonal shape mismatch: {} diagonal, {} off-diagonal",
            n,
            off.len()
        )));
    }
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    let mut z = DMatrix::<f64>::identity(n, n);

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() + dd == dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITERATIONS {
                return Err(Error::Oracle(format!(
                    "QL iteration did not converge for eigenvalue {l}"
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                rotate_columns(&mut z, i, s, c);
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| z[(r, order[c])]);
    Ok((values, vectors))
}

/// Applies a Givens rotation to eigenvector columns `i` and `i + 1`.
fn rotate_columns(z: &mut DMatrix<f64>, i: usize, s: f64, c: f64) {
    let n = z.nrows();
    let (left, right) = z.as_mut_slice().split_at_mut((i + 1) * n);
    let zi = &mut left[i * n..];
    let zj = &mut right[..n];
    for (a, b) in zi.iter_mut().zip(zj.iter_mut()) {
        let f = *b;
        *b = s * *a + c * f;
        *a = c * *a - s * f;
    }
}

/// Nodes and weights of the `k`-point Gauss-Hermite rule for a standard
/// normal density (weights sum to 1), via Golub-Welsch.
pub fn gauss_hermite(k: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if k == 0 {
        return Err(Error::InvalidArgument(
            "Gauss-Hermite order must be >= 1".into(),
        ));
    }
    let off: Vec<f64> = (1..k).map(|i| (i as f64).sqrt()).collect();
    let (x, v) = tridiagonal_eigen(&vec![0.0; k], &off)?;
    let w: Vec<f64> = (0..k).map(|i| v[(0, i)] * v[(0, i)]).collect();
    // Enforce the exact mirror symmetry of the rule.
    let nodes = (0..k).map(|i| 0.5 * (x[i] - x[k - 1 - i])).collect();
    let total: f64 = w.iter().sum();
    let weights = (0..k)
        .map(|i| 0.5 * (w[i] + w[k - 1 - i]) / total)
        .collect();
    Ok((nodes, weights))
}

/// Collective-spin rotation data for `N` atoms in the symmetric subspace,
/// Dicke index `i <-> m = i - N/2`.
#[derive(Debug)]
pub struct SpinRotations {
    pub atoms: usize,
    /// Eigenvalues of `S_x`, ascending.
    pub values: Vec<f64>,
    /// Eigenvectors of `S_x` as columns.
    pub vectors: DMatrix<f64>,
    /// Real matrix of `exp(-i pi/2 S_y)`.
    pub half_pi_y: DMatrix<f64>,
}

impl SpinRotations {
    fn new(atoms: usize) -> Result<Self> {
        let (diag, off) = sx_tridiagonal(atoms);
        let (values, vectors) = tridiagonal_eigen(&diag, &off)?;
        let mut rot = SpinRotations {
            atoms,
            values,
            vectors,
            half_pi_y: DMatrix::zeros(0, 0),
        };
        rot.half_pi_y = rot.y_rotation(FRAC_PI_2);
        Ok(rot)
    }

    pub fn dim(&self) -> usize {
        self.atoms + 1
    }

    pub fn spin(&self) -> f64 {
        self.atoms as f64 / 2.0
    }

    /// Real matrix of `exp(-i angle S_y)`, from
    /// `exp(-i a S_y) = R exp(-i a S_x) R^dag` with `R = exp(-i pi/2 S_z)`.
    pub fn y_rotation(&self, angle: f64) -> DMatrix<f64> {
        let n = self.dim();
        let q = &self.vectors;
        let scaled = |f: &dyn Fn(f64) -> f64| {
            let mut qs = q.clone();
            for (j, mut col) in qs.column_iter_mut().enumerate() {
                col *= f(angle * self.values[j]);
            }
            &qs * q.transpose()
        };
        let cos_part = scaled(&f64::cos);
        let sin_part = scaled(&f64::sin);
        let s = self.spin();
        DMatrix::from_fn(n, n, |k, m| {
            let phase = FRAC_PI_2 * ((m as f64 - s) - (k as f64 - s));
            phase.cos() * cos_part[(k, m)] + phase.sin() * sin_part[(k, m)]
        })
    }

    /// Eigenvector of `S_x` with eigenvalue `S - n`.
    pub fn sx_eigenvector(&self, n: usize) -> Vec<f64> {
        let col = self.dim() - 1 - n;
        self.vectors.column(col).iter().copied().collect()
    }
}

/// Diagonal and off-diagonal of `S_x` in the Dicke basis.
pub fn sx_tridiagonal(atoms: usize) -> (Vec<f64>, Vec<f64>) {
    let s = atoms as f64 / 2.0;
    let off = (0..atoms)
        .map(|i| {
            let m = i as f64 - s;
            0.5 * (s * (s + 1.0) - m * (m + 1.0)).sqrt()
        })
        .collect();
    (vec![0.0; atoms + 1], off)
}

type Slot = Arc<OnceLock<std::result::Result<Arc<SpinRotations>, Error>>>;

/// Rotation data for `atoms` atoms, computed once per atom number and shared
/// between threads. Concurrent callers for the same `atoms` wait for the
/// first computation instead of repeating it.
pub fn spin_rotations(atoms: usize) -> Result<Arc<SpinRotations>> {
    check_atoms(atoms)?;
    static CACHE: OnceLock<Mutex<HashMap<usize, Slot>>> = OnceLock::new();
    let slot = {
        let mut map = CACHE
            .get_or_init(Default::default)
            .lock()
            .expect("rotation cache poisoned");
        map.entry(atoms).or_default().clone()
    };
    slot.get_or_init(|| SpinRotations::new(atoms).map(Arc::new))
        .clone()
}

pub fn check_atoms(atoms: usize) -> Result<()> {
    if atoms < 2 || !atoms.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "the quantum oracle needs an even atom number >= 2, got {atoms}"
        )));
    }
    if atoms > MAX_ORACLE_ATOMS {
        return Err(Error::InvalidArgument(format!(
            "the quantum oracle is limited to N <= {MAX_ORACLE_ATOMS} atoms, got {atoms}"
        )));
    }
    Ok(())
}
