//! Phase-estimation error and frequency stability of Ramsey clocks operated
//! with spin-squeezed states under local-oscillator dephasing.
//!
//! The crate is organised bottom-up:
//!
//! * [`units`] and [`ensemble`] hold the shared domain types (atom number,
//!   squeezing, antisqueezing, contrast, local-oscillator model).
//! * [`analytic`] evaluates the closed-form single-shot phase error and
//!   stitches it into a [`PhaseErrorCurve`].
//! * [`stability`] integrates that curve against the LO phase distribution,
//!   optimizes the Ramsey time and classifies the operating regime;
//!   [`sweep`] maps the optimum over one or two parameters.
//! * [`oracle`] is an exact collective-spin simulation with Bayesian phase
//!   estimation, used to validate the analytic curve.
//! * [`cli`] is the command-line front end (config parsing, CSV/JSON output).

// `!(x < y)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cli;
pub mod ensemble;
pub mod error;
pub mod oracle;
pub mod quadrature;
pub mod search;
pub mod stability;
pub mod sweep;
pub mod units;

pub use analytic::{build_phase_error_curve, PhaseErrorCurve};
pub use ensemble::{
    ramsey_squeezing_parameter, validate_spec, EnsembleParams, EnsembleSpec, LoModel,
    SqueezeOrientation,
};
pub use error::{Error, Result};
pub use stability::{
    clock_phase_variance, compare_to_css, optimize_ramsey_time, optimize_spec, regime_alpha,
    Regime, StabilityResult,
};
pub use sweep::{stability_map, Axis, AxisScale, SweepGrid, SweepParameter};
pub use units::{db_to_linear, linear_to_db, Decibels};
