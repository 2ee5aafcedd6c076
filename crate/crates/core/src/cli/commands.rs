//! Subcommand implementations. Each produces a [`Table`] (and optionally
//! extra JSON) without touching the filesystem, except `experiments`, which
//! reads its input table.

use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;
use serde_json::Value;

use super::config::{OracleConfig, Run, RunConfig};
use super::output::{Cell, Table};
use super::CliError;
use crate::analytic::build_phase_error_curve;
use crate::ensemble::{EnsembleParams, EnsembleSpec};
use crate::oracle::{
    apply_contrast_model, build_css, build_nonunitary_mixture_with, build_pure_squeezed_with,
    oracle_phase_error_curve, PhaseProbe, MAX_ORACLE_ATOMS,
};
use crate::stability::{clock_phase_variance, optimize_spec, Regime};
use crate::sweep::{fit_regime_boundary, stability_map, SweepParameter};
use crate::units::{db_to_linear, linear_to_db, Decibels};

pub struct CommandOutput {
    pub table: Table,
    pub extra: Option<Value>,
    /// Set when `validate` finds a tolerance breach; output is still written.
    pub failure: Option<String>,
}

impl CommandOutput {
    fn table(table: Table) -> Self {
        CommandOutput {
            table,
            extra: None,
            failure: None,
        }
    }
}

const ECHO: [&str; 7] = ["label", "atoms", "xi2_db", "a2_db", "c1", "c2", "theta"];

fn headers(lead: &[&'static str]) -> Vec<&'static str> {
    lead.iter().copied().chain(ECHO).collect()
}

/// Input columns that let any row be re-run on its own.
fn echo(label: &str, p: &EnsembleParams) -> Vec<Cell> {
    let theta = p.validate().ok().map(|s| s.theta());
    vec![
        Cell::from(label),
        Cell::Num(p.atoms),
        Cell::Num(linear_to_db(p.squeezing).0),
        Cell::Num(linear_to_db(p.squeezing * p.antisqueezing).0),
        Cell::Num(p.prep_contrast),
        Cell::Num(p.ramsey_contrast),
        theta.into(),
    ]
}

fn with_echo(mut lead: Vec<Cell>, run: &Run) -> Vec<Cell> {
    lead.extend(echo(&run.label, &run.params));
    lead
}

fn validation<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Validation(e.to_string())
}

fn spec_of(run: &Run) -> Result<EnsembleSpec, CliError> {
    run.params.validate().map_err(validation)
}

/// `n` points from `lo` to `hi` inclusive.
fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Exact-simulation probe for a spec: coherent, pure or mixed squeezed
/// state, wrapped in the contrast model when `C < 1`.
pub fn oracle_probe(
    spec: &EnsembleSpec,
    cfg: &OracleConfig,
) -> Result<Box<dyn PhaseProbe>, CliError> {
    let n = spec.atoms();
    if n.fract() != 0.0 || n > MAX_ORACLE_ATOMS as f64 {
        return Err(CliError::Validation(format!(
            "the quantum oracle is tractable only for integer N <= {MAX_ORACLE_ATOMS}, got {n}"
        )));
    }
    let atoms = n as usize;
    let state = if spec.is_coherent() {
        build_css(atoms)
    } else if (spec.area() - 1.0).abs() < 1e-9 {
        build_pure_squeezed_with(atoms, spec.chi2(), cfg.profile)
    } else {
        build_nonunitary_mixture_with(atoms, spec.xi2(), spec.chi2(), cfg.components, cfg.profile)
    }
    .map_err(validation)?;
    if spec.contrast() < 1.0 {
        let c = apply_contrast_model(
            &state,
            spec.prep_contrast(),
            spec.ramsey_contrast(),
            spec.theta(),
        )
        .map_err(validation)?;
        Ok(Box::new(c))
    } else {
        Ok(Box::new(state))
    }
}

pub fn phase_error(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let pe = &cfg.phase_error;
    if pe.points == 0 {
        return Err(CliError::Validation("phase grid is empty".into()));
    }
    let xs = linspace(pe.phi_over_pi_min, pe.phi_over_pi_max, pe.points);
    let lead: &[&str] = if pe.oracle {
        &["phi_over_pi", "dphi_sq_analytic", "dphi_sq_oracle"]
    } else {
        &["phi_over_pi", "dphi_sq_analytic"]
    };
    let mut table = Table::new(&headers(lead));
    for run in cfg.runs().map_err(validation)? {
        let spec = spec_of(&run)?;
        let curve = build_phase_error_curve(&spec);
        let phis: Vec<f64> = xs.iter().map(|x| x * PI).collect();
        let oracle = if pe.oracle {
            let probe = oracle_probe(&spec, &cfg.oracle)?;
            Some(
                oracle_phase_error_curve(probe.as_ref(), &phis, cfg.oracle.prior_points)
                    .map_err(validation)?,
            )
        } else {
            None
        };
        for (j, (&x, &phi)) in xs.iter().zip(&phis).enumerate() {
            let mut lead = vec![Cell::Num(x), Cell::Num(curve.eval(phi))];
            if let Some(o) = &oracle {
                lead.push(Cell::Num(o[j]));
            }
            table.push(with_echo(lead, &run));
        }
    }
    Ok(CommandOutput::table(table))
}

pub fn stability(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let st = &cfg.stability;
    if st.points == 0 {
        return Err(CliError::Validation("Ramsey-time grid is empty".into()));
    }
    if !(st.gamma_tau_min > 0.0 && st.gamma_tau_max >= st.gamma_tau_min) {
        return Err(CliError::Validation(
            "gamma_tau range must be positive and increasing".into(),
        ));
    }
    let gamma = cfg.lo.gamma;
    let total = cfg.lo.total_time();
    let grid: Vec<f64> = linspace(st.gamma_tau_min.ln(), st.gamma_tau_max.ln(), st.points)
        .into_iter()
        .map(f64::exp)
        .filter(|gt| gt / gamma <= total)
        .collect();
    if grid.len() < st.points {
        eprintln!(
            "warning: {} Ramsey times exceed the total time and were dropped",
            st.points - grid.len()
        );
    }
    let mut table = Table::new(&headers(&["gamma_tau", "sigma2_phi"]));
    for run in cfg.runs().map_err(validation)? {
        let curve = build_phase_error_curve(&spec_of(&run)?);
        let values: Vec<f64> = grid
            .par_iter()
            .map(|gt| clock_phase_variance(&curve, gamma, gt / gamma, total))
            .collect::<Result<_, _>>()
            .map_err(validation)?;
        for (gt, v) in grid.iter().zip(values) {
            table.push(with_echo(vec![Cell::Num(*gt), Cell::Num(v)], &run));
        }
    }
    Ok(CommandOutput::table(table))
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::SqueezingLimited => "I",
        Regime::AntisqueezingLimited => "II",
    }
}

pub fn optimize(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let gamma = cfg.lo.gamma;
    let total = cfg.lo.total_time();
    let mut table = Table::new(&headers(&[
        "tau_opt",
        "gamma_tau_opt",
        "sigma2_phi",
        "sigma2_omega",
        "alpha",
        "regime",
        "sql_ratio_db",
        "flat_objective",
    ]));
    let runs = cfg.runs().map_err(validation)?;
    let results: Vec<_> = runs
        .par_iter()
        .map(|run| optimize_spec(&spec_of(run)?, gamma, total).map_err(validation))
        .collect::<Result<_, _>>()?;
    for (run, r) in runs.iter().zip(results) {
        if r.flat_objective {
            eprintln!(
                "warning: objective is flat over the Ramsey-time range ({})",
                run.label
            );
        }
        table.push(with_echo(
            vec![
                Cell::Num(r.tau),
                Cell::Num(r.gamma_tau()),
                Cell::Num(r.sigma2_phi),
                Cell::Num(r.sigma2_omega),
                Cell::Num(r.regime_alpha),
                Cell::from(regime_name(r.regime)),
                Cell::Num(r.sql_ratio_db),
                Cell::Bool(r.flat_objective),
            ],
            run,
        ));
    }
    Ok(CommandOutput::table(table))
}

pub fn map(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let axes = cfg
        .map
        .axes
        .iter()
        .map(|a| a.axis())
        .collect::<Result<Vec<_>, _>>()
        .map_err(validation)?;
    if axes.is_empty() {
        return Err(CliError::Validation("map needs at least one axis".into()));
    }
    let template = cfg.ensemble.params().map_err(validation)?;
    let grid =
        stability_map(&template, &axes, cfg.lo.gamma, cfg.lo.total_time()).map_err(validation)?;

    let mut table = Table::new(&headers(&[
        "axis1",
        "axis2",
        "sigma2_phi",
        "sql_ratio_db",
        "tau_opt",
        "alpha",
        "error",
    ]));
    for cell in &grid.cells {
        let coord = |k: usize| -> Cell {
            grid.axes
                .get(k)
                .map(|a| Cell::Num(a.values[cell.index[k]]))
                .unwrap_or(Cell::Empty)
        };
        let r = cell.result;
        let mut row = vec![
            coord(0),
            coord(1),
            r.map(|r| r.sigma2_phi).into(),
            r.map(|r| r.sql_ratio_db).into(),
            r.map(|r| r.tau).into(),
            r.map(|r| r.regime_alpha).into(),
            cell.error.clone().into(),
        ];
        row.extend(echo("", &cell.params));
        table.push(row);
    }
    let failures = grid.failures();
    if failures > 0 {
        eprintln!("warning: {failures} map cells failed; see the error column");
    }

    let mut extra = serde_json::Map::new();
    extra.insert(
        "axes".into(),
        serde_json::to_value(&grid.axes).expect("axes serialize"),
    );
    if cfg.map.boundary_fit {
        let fit = fit_regime_boundary(&grid, template.atoms).map_err(validation)?;
        eprintln!(
            "regime boundary: A^4 xi^-6 N^-1 = {} from {} rows",
            fit.constant,
            fit.points.len()
        );
        extra.insert(
            "boundary_fit".into(),
            serde_json::to_value(&fit).expect("fit serializes"),
        );
    }
    Ok(CommandOutput {
        table,
        extra: Some(Value::Object(extra)),
        failure: None,
    })
}

pub fn validate(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let v = &cfg.validate;
    if v.points == 0 {
        return Err(CliError::Validation("phase grid is empty".into()));
    }
    let xs = linspace(-1.0, 1.0, v.points);
    let phis: Vec<f64> = xs.iter().map(|x| x * PI).collect();
    let mut table = Table::new(&headers(&[
        "phi_over_pi",
        "dphi_sq_analytic",
        "dphi_sq_oracle",
        "rel_error",
        "checked",
        "pass",
    ]));
    let mut worst: Option<(f64, String)> = None;
    let runs = cfg.runs().map_err(validation)?;
    // Reject intractable requests before any expensive work.
    let probes = runs
        .iter()
        .map(|run| oracle_probe(&spec_of(run)?, &cfg.oracle))
        .collect::<Result<Vec<_>, _>>()?;
    for (run, probe) in runs.iter().zip(&probes) {
        let curve = build_phase_error_curve(&spec_of(run)?);
        let oracle = oracle_phase_error_curve(probe.as_ref(), &phis, cfg.oracle.prior_points)
            .map_err(validation)?;
        for ((&x, &phi), &o) in xs.iter().zip(&phis).zip(&oracle) {
            let a = curve.eval(phi);
            let rel = (a - o).abs() / o;
            let checked = x.abs() <= v.phi_over_pi_limit + 1e-12;
            let pass = !checked || rel <= v.tolerance;
            if checked && worst.as_ref().is_none_or(|(w, _)| rel > *w) {
                let p = &run.params;
                worst = Some((
                    rel,
                    format!(
                        "label '{}', N = {}, xi2 = {} dB, A2 = {} dB, phi/pi = {}",
                        run.label,
                        p.atoms,
                        linear_to_db(p.squeezing).0,
                        linear_to_db(p.squeezing * p.antisqueezing).0,
                        x
                    ),
                ));
            }
            table.push(with_echo(
                vec![
                    Cell::Num(x),
                    Cell::Num(a),
                    Cell::Num(o),
                    Cell::Num(rel),
                    Cell::Bool(checked),
                    Cell::Bool(pass),
                ],
                run,
            ));
        }
    }
    let failure = match worst {
        Some((w, ref at)) if w > v.tolerance => Some(format!(
            "oracle and analytic curves differ by {:.3}% (tolerance {}%) at {at}",
            100.0 * w,
            100.0 * v.tolerance
        )),
        _ => None,
    };
    if let Some((w, at)) = &worst {
        eprintln!("worst checked cell: relative error {w} at {at}");
    }
    Ok(CommandOutput {
        table,
        extra: None,
        failure,
    })
}

/// One experimentally reported squeezed state.
#[derive(Debug, Clone, PartialEq, serde::Deserialize)]
struct ExperimentRow {
    label: String,
    atoms: f64,
    xi2_db: f64,
    a2_db: f64,
}

pub fn experiments(cfg: &RunConfig, table_path: Option<&Path>) -> Result<CommandOutput, CliError> {
    let path = table_path
        .map(Path::to_path_buf)
        .or_else(|| cfg.experiments.table.clone())
        .ok_or_else(|| {
            CliError::Validation("experiments needs a table (--table or experiments.table)".into())
        })?;
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;

    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let base = cfg.ensemble.params().map_err(validation)?;
    let mut rows = Vec::new();
    for (i, rec) in reader.deserialize::<ExperimentRow>().enumerate() {
        let row = match rec {
            Ok(r) => r,
            Err(e) => {
                eprintln!("warning: skipping malformed row {}: {e}", i + 1);
                continue;
            }
        };
        let mut p = base;
        p.atoms = row.atoms;
        p.fractional_atoms = true;
        SweepParameter::Xi2.apply(&mut p, db_to_linear(Decibels(row.xi2_db)));
        SweepParameter::A2.apply(&mut p, db_to_linear(Decibels(row.a2_db)));
        match p.validate() {
            Ok(spec) => rows.push((row, spec)),
            Err(e) => eprintln!("warning: skipping row '{}': {e}", row.label),
        }
    }

    let gamma = cfg.lo.gamma;
    let total = cfg.lo.total_time();
    let results: Vec<_> = rows
        .par_iter()
        .map(|(_, spec)| optimize_spec(spec, gamma, total))
        .collect();

    let mut table = Table::new(&[
        "label",
        "atoms",
        "xi2_db",
        "a2_db",
        "alpha",
        "regime",
        "tau_opt",
        "sigma2_phi",
        "gain_db",
        "c1",
        "c2",
        "theta",
        "error",
    ]);
    for ((row, spec), r) in rows.iter().zip(results) {
        let lead = vec![
            Cell::from(row.label.as_str()),
            Cell::Num(row.atoms),
            Cell::Num(row.xi2_db),
            Cell::Num(row.a2_db),
        ];
        let tail = vec![
            Cell::Num(spec.prep_contrast()),
            Cell::Num(spec.ramsey_contrast()),
            Cell::Num(spec.theta()),
        ];
        let mid = match r {
            Ok(r) => vec![
                Cell::Num(r.regime_alpha),
                Cell::from(regime_name(r.regime)),
                Cell::Num(r.tau),
                Cell::Num(r.sigma2_phi),
                Cell::Num(r.sql_ratio_db),
            ],
            Err(_) => vec![Cell::Empty; 5],
        };
        let err = match r {
            Ok(_) => Cell::Empty,
            Err(e) => Cell::Text(e.to_string()),
        };
        let mut cells = lead;
        cells.extend(mid);
        cells.extend(tail);
        cells.push(err);
        table.push(cells);
    }
    Ok(CommandOutput::table(table))
}
