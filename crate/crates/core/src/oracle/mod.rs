//! Exact collective-spin simulation of the Ramsey sequence with Bayesian
//! phase estimation. Used as ground truth for the analytic error curve.

pub mod contrast;
pub mod eigen;
pub mod estimate;
pub mod state;

pub use contrast::{apply_contrast_model, ContrastComposite};
pub use eigen::{
    gauss_hermite, spin_rotations, tridiagonal_eigen, SpinRotations, MAX_ORACLE_ATOMS,
};
pub use estimate::{
    bayes_estimator, conditional_sz_distribution, detect_step, expected_phase_error,
    log_slope_jump, oracle_phase_error_curve, symmetric_grid, BayesEstimator,
    ConditionalDistribution, PhaseProbe, StepReport, DEFAULT_PRIOR_POINTS, STEP_FLOOR,
};
pub use state::{
    build_css, build_nonunitary_mixture, build_nonunitary_mixture_with, build_pure_squeezed,
    build_pure_squeezed_with, Component, DickeEnsembleState, SpinMoments, SqueezeProfile,
    StateMetadata, StateRecipe, DEFAULT_COMPONENTS,
};
