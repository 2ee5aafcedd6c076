//! One- and two-parameter maps of the optimized clock.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{EnsembleParams, SqueezeOrientation};
use crate::error::{Error, Result};
use crate::stability::{optimize_spec, StabilityResult};
use crate::units::{db_to_linear, linear_to_db, Decibels};

/// Ensemble field varied along an axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Atoms,
    /// `xi^2`, holding the excess area `A^2` fixed.
    Xi2,
    /// `A^2`, holding `xi^2` fixed.
    A2,
    /// `chi^2`, holding `xi^2` fixed.
    Chi2,
    C1,
    C2,
    Theta,
}

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParameter::Atoms => "atoms",
            SweepParameter::Xi2 => "xi2",
            SweepParameter::A2 => "a2",
            SweepParameter::Chi2 => "chi2",
            SweepParameter::C1 => "c1",
            SweepParameter::C2 => "c2",
            SweepParameter::Theta => "theta",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "atoms" | "n" => SweepParameter::Atoms,
            "xi2" | "squeezing" => SweepParameter::Xi2,
            "a2" | "area" => SweepParameter::A2,
            "chi2" | "antisqueezing" => SweepParameter::Chi2,
            "c1" | "prep_contrast" => SweepParameter::C1,
            "c2" | "ramsey_contrast" => SweepParameter::C2,
            "theta" | "orientation" => SweepParameter::Theta,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown sweep parameter '{other}'"
                )))
            }
        })
    }

    /// Writes the linear value `v` into `p`.
    pub fn apply(&self, p: &mut EnsembleParams, v: f64) {
        match self {
            SweepParameter::Atoms => {
                p.atoms = v;
                p.fractional_atoms = true;
            }
            SweepParameter::Xi2 => {
                let area = p.squeezing * p.antisqueezing;
                p.squeezing = v;
                p.antisqueezing = area / v;
            }
            SweepParameter::A2 => p.antisqueezing = v / p.squeezing,
            SweepParameter::Chi2 => p.antisqueezing = v,
            SweepParameter::C1 => p.prep_contrast = v,
            SweepParameter::C2 => p.ramsey_contrast = v,
            SweepParameter::Theta => p.orientation = SqueezeOrientation::Explicit(v),
        }
    }
}

/// How axis values are written. `Db` values are converted with
/// `10^(x/10)`; `Linear` and `Log` values are used as given (`Log` only
/// records that they were log-spaced).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisScale {
    Linear,
    Db,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub parameter: SweepParameter,
    pub scale: AxisScale,
    /// Samples in the axis' own scale (dB for `Db`).
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(parameter: SweepParameter, scale: AxisScale, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "axis '{}' has no samples",
                parameter.name()
            )));
        }
        let increasing = values.windows(2).all(|w| w[1] > w[0]);
        let decreasing = values.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "axis '{}' samples must be finite and strictly monotone",
                parameter.name()
            )));
        }
        if scale == AxisScale::Log && values.iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "log axis '{}' needs positive samples",
                parameter.name()
            )));
        }
        Ok(Axis {
            parameter,
            scale,
            values,
        })
    }

    /// `n` evenly spaced samples from `lo` to `hi` inclusive, in the axis' scale.
    pub fn linspace(
        parameter: SweepParameter,
        scale: AxisScale,
        lo: f64,
        hi: f64,
        n: usize,
    ) -> Result<Self> {
        let values = match n {
            0 => vec![],
            1 => vec![lo],
            _ => (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect(),
        };
        Axis::new(parameter, scale, values)
    }

    /// `n` log-spaced linear samples from `lo` to `hi` inclusive.
    pub fn logspace(parameter: SweepParameter, lo: f64, hi: f64, n: usize) -> Result<Self> {
        let a = Axis::linspace(parameter, AxisScale::Linear, lo.ln(), hi.ln(), n)?;
        Axis::new(
            parameter,
            AxisScale::Log,
            a.values.iter().map(|v| v.exp()).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn linear(&self, i: usize) -> f64 {
        match self.scale {
            AxisScale::Db => db_to_linear(Decibels(self.values[i])),
            AxisScale::Linear | AxisScale::Log => self.values[i],
        }
    }
}

/// One map cell: the ensemble it was run with and its outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub index: Vec<usize>,
    pub params: EnsembleParams,
    pub result: Option<StabilityResult>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub axes: Vec<Axis>,
    pub gamma: f64,
    pub total_time: f64,
    /// Row-major: the first axis varies slowest.
    pub cells: Vec<SweepCell>,
}

impl SweepGrid {
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Axis::len).collect()
    }

    pub fn cell(&self, index: &[usize]) -> &SweepCell {
        let mut flat = 0;
        for (axis, &i) in self.axes.iter().zip(index) {
            flat = flat * axis.len() + i;
        }
        &self.cells[flat]
    }

    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.result.is_none()).count()
    }
}

fn unravel(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for (k, &n) in shape.iter().enumerate().rev() {
        idx[k] = flat % n;
        flat /= n;
    }
    idx
}

/// Optimizes the clock on every grid cell. Cells run in parallel on the
/// current rayon pool and are collected in grid order, so the result does
/// not depend on scheduling. A failing cell records its error and the map
/// carries on.
pub fn stability_map(
    template: &EnsembleParams,
    axes: &[Axis],
    gamma: f64,
    total_time: f64,
) -> Result<SweepGrid> {
    if axes.len() > 2 {
        return Err(Error::InvalidArgument(format!(
            "at most two sweep axes are supported, got {}",
            axes.len()
        )));
    }
    if axes.len() == 2 && axes[0].parameter == axes[1].parameter {
        return Err(Error::InvalidArgument("sweep axes must differ".into()));
    }
    let shape: Vec<usize> = axes.iter().map(Axis::len).collect();
    let total: usize = shape.iter().product();

    let cells = (0..total)
        .into_par_iter()
        .map(|flat| {
            let index = unravel(flat, &shape);
            let mut params = *template;
            // xi^2 before A^2/chi^2 so that the latter see the swept xi^2.
            let mut order: Vec<usize> = (0..axes.len()).collect();
            order.sort_by_key(|&k| axes[k].parameter != SweepParameter::Xi2);
            for k in order {
                axes[k]
                    .parameter
                    .apply(&mut params, axes[k].linear(index[k]));
            }
            let outcome = params
                .validate()
                .and_then(|spec| optimize_spec(&spec, gamma, total_time));
            let (result, error) = match outcome {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e.to_string())),
            };
            SweepCell {
                index,
                params,
                result,
                error,
            }
        })
        .collect();

    Ok(SweepGrid {
        axes: axes.to_vec(),
        gamma,
        total_time,
        cells,
    })
}

/// Location of the best squeezing for one value of `A^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub a2_db: f64,
    pub xi2_db: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryFit {
    pub points: Vec<BoundaryPoint>,
    /// Geometric mean of `alpha` over `points`.
    pub constant: f64,
}

/// Fits the regime-boundary constant on an `(xi^2, A^2)` map.
///
/// For each `A^2` the optimized variance is minimized over `xi^2`: squeezing
/// beyond that point only shortens the Ramsey time, which is the
/// antisqueezing-limited regime. The minimum is located by a parabola
/// through the best grid cell and its neighbours in `(dB, ln sigma^2)`;
/// rows whose minimum sits on the grid edge are skipped. Both axes must be
/// in dB.
pub fn fit_regime_boundary(grid: &SweepGrid, atoms: f64) -> Result<BoundaryFit> {
    let find = |p| grid.axes.iter().position(|a| a.parameter == p);
    let (Some(kx), Some(ka)) = (find(SweepParameter::Xi2), find(SweepParameter::A2)) else {
        return Err(Error::InvalidArgument(
            "boundary fit needs xi2 and a2 axes".into(),
        ));
    };
    if grid.axes[kx].scale != AxisScale::Db || grid.axes[ka].scale != AxisScale::Db {
        return Err(Error::InvalidArgument("boundary fit needs dB axes".into()));
    }
    let xs = &grid.axes[kx].values;
    let mut points = Vec::new();
    for (ia, &a2_db) in grid.axes[ka].values.iter().enumerate() {
        let row: Option<Vec<f64>> = (0..xs.len())
            .map(|ix| {
                let mut idx = [0usize; 2];
                idx[kx] = ix;
                idx[ka] = ia;
                grid.cell(&idx).result.map(|r| r.sigma2_phi.ln())
            })
            .collect();
        let Some(row) = row else { continue };
        let (j, _) = row
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty axis");
        if j == 0 || j + 1 == row.len() {
            continue;
        }
        let xi_db = parabola_vertex(
            [xs[j - 1], xs[j], xs[j + 1]],
            [row[j - 1], row[j], row[j + 1]],
        );
        let xi2 = db_to_linear(Decibels(xi_db));
        let a2 = db_to_linear(Decibels(a2_db));
        points.push(BoundaryPoint {
            a2_db,
            xi2_db: xi_db,
            alpha: a2 * a2 / (xi2.powi(3) * atoms),
        });
    }
    if points.is_empty() {
        return Err(Error::InvalidArgument(
            "no interior minimum found on any row".into(),
        ));
    }
    let mean_ln = points.iter().map(|p| p.alpha.ln()).sum::<f64>() / points.len() as f64;
    Ok(BoundaryFit {
        points,
        constant: mean_ln.exp(),
    })
}

/// Abscissa of the vertex of the parabola through three points.
pub fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> f64 {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let curv = (d2 - d1) / (x[2] - x[0]);
    if curv.abs() < f64::MIN_POSITIVE {
        return x[1];
    }
    let v = 0.5 * (x[0] + x[1]) - d1 / (2.0 * curv);
    v.clamp(x[0].min(x[2]), x[0].max(x[2]))
}

/// Converts a linear value for display on a dB axis.
pub fn to_axis_units(scale: AxisScale, linear: f64) -> f64 {
    match scale {
        AxisScale::Db => linear_to_db(linear).0,
        AxisScale::Linear | AxisScale::Log => linear,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_validation() {
        assert!(Axis::new(SweepParameter::C1, AxisScale::Linear, vec![]).is_err());
        assert!(Axis::new(SweepParameter::C1, AxisScale::Linear, vec![0.5, 0.5]).is_err());
        assert!(Axis::new(SweepParameter::C1, AxisScale::Linear, vec![1.0, 0.5, 0.7]).is_err());
        assert!(Axis::new(SweepParameter::C1, AxisScale::Linear, vec![1.0, 0.9, 0.5]).is_ok());
        assert!(Axis::new(SweepParameter::Atoms, AxisScale::Log, vec![-1.0, 10.0]).is_err());
        let a = Axis::linspace(SweepParameter::Xi2, AxisScale::Db, 0.0, -30.0, 61).unwrap();
        assert_eq!(a.len(), 61);
        assert_eq!(a.values[60], -30.0);
        assert!((a.linear(20) - 0.1).abs() < 1e-15);
        let l = Axis::logspace(SweepParameter::Atoms, 1e2, 1e6, 5).unwrap();
        assert!((l.values[2] - 1e4).abs() < 1e-8);
    }

    #[test]
    fn xi2_sweep_holds_area() {
        let mut p = EnsembleParams::squeezed(1e4, 0.1, 10.0);
        SweepParameter::Xi2.apply(&mut p, 0.01);
        assert!((p.squeezing * p.antisqueezing - 10.0).abs() < 1e-12);
        SweepParameter::A2.apply(&mut p, 2.0);
        assert!((p.squeezing * p.antisqueezing - 2.0).abs() < 1e-12);
        assert_eq!(p.squeezing, 0.01);
    }

    #[test]
    fn parabola_vertex_exact_for_quadratics() {
        let f = |x: f64| 3.0 * (x + 1.25).powi(2) - 2.0;
        let v = parabola_vertex([-2.0, -1.0, 0.5], [f(-2.0), f(-1.0), f(0.5)]);
        assert!((v + 1.25).abs() < 1e-12);
    }

    #[test]
    fn unravel_is_row_major() {
        assert_eq!(unravel(0, &[3, 4]), vec![0, 0]);
        assert_eq!(unravel(5, &[3, 4]), vec![1, 1]);
        assert_eq!(unravel(11, &[3, 4]), vec![2, 3]);
    }

    #[test]
    fn map_records_failures_and_keeps_order() {
        let t = EnsembleParams::squeezed(1e3, 0.1, 1.0);
        let axes = [
            Axis::new(SweepParameter::C1, AxisScale::Linear, vec![1.0, 0.8]).unwrap(),
            Axis::new(SweepParameter::A2, AxisScale::Linear, vec![0.5, 1.0, 4.0]).unwrap(),
        ];
        let g = stability_map(&t, &axes, 1.0, 1.0).unwrap();
        assert_eq!(g.shape(), vec![2, 3]);
        assert_eq!(g.cells.len(), 6);
        assert_eq!(g.failures(), 2);
        assert!(g
            .cell(&[1, 0])
            .error
            .as_deref()
            .unwrap()
            .contains("Heisenberg"));
        assert_eq!(g.cell(&[1, 2]).index, vec![1, 2]);
        assert_eq!(g.cell(&[1, 2]).params.prep_contrast, 0.8);
    }

    #[test]
    fn too_many_axes_rejected() {
        let a = Axis::new(SweepParameter::C1, AxisScale::Linear, vec![1.0]).unwrap();
        let b = Axis::new(SweepParameter::C2, AxisScale::Linear, vec![1.0]).unwrap();
        let c = Axis::new(SweepParameter::Theta, AxisScale::Linear, vec![0.0]).unwrap();
        let t = EnsembleParams::coherent(100.0);
        assert!(stability_map(&t, &[a.clone(), b, c], 1.0, 1.0).is_err());
        assert!(stability_map(&t, &[a.clone(), a], 1.0, 1.0).is_err());
    }
}
