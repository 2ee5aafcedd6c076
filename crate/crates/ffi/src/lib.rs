//! C ABI over the `squeezeclock` library.
//!
//! Conventions:
//! * Every fallible function returns an [`SscStatus`] and writes its result
//!   through an out-pointer, which is left untouched on failure.
//! * On failure a message is stored per thread; read it with
//!   [`ssc_last_error_message`].
//! * Handles come from `*_new` and must be released with the matching
//!   `*_free`. Passing NULL to a free function is a no-op.
//! * Panics never cross the boundary; they are reported as `SSC_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use squeezeclock::{
    build_phase_error_curve, clock_phase_variance, optimize_spec, regime_alpha, Decibels,
    EnsembleParams, EnsembleSpec, Error, PhaseErrorCurve, Regime, SqueezeOrientation,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SscStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidSpec = 2,
    OutOfDomain = 3,
    NumericalFailure = 4,
    Panic = 5,
}

/// How to orient the squeezed quadrature.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SscOrientation {
    /// Tilt 0.
    MeasurementBased = 0,
    /// Tilt arcsin(1/chi).
    FeedbackBased = 1,
    /// Tilt given by `theta`.
    Explicit = 2,
}

/// Ensemble parameters. Variance ratios are linear (not dB).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SscSpecParams {
    pub atoms: f64,
    pub squeezing: f64,
    pub antisqueezing: f64,
    pub prep_contrast: f64,
    pub ramsey_contrast: f64,
    /// One of `SscOrientation`; other values are rejected.
    pub orientation: u32,
    /// Used only with `SSC_ORIENTATION_EXPLICIT`.
    pub theta: f64,
    /// Nonzero to accept non-integer atom numbers.
    pub fractional_atoms: u8,
}

/// Optimized clock performance.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SscStabilityResult {
    pub tau: f64,
    pub sigma2_phi: f64,
    pub sigma2_omega: f64,
    pub regime_alpha: f64,
    /// 1 for squeezing-limited, 2 for antisqueezing-limited.
    pub regime: u8,
    pub sql_ratio_db: f64,
    pub flat_objective: u8,
}

/// Opaque validated ensemble.
pub struct SscSpec(EnsembleSpec);

/// Opaque phase-estimation error curve.
pub struct SscCurve(PhaseErrorCurve);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SscStatus {
    match e {
        Error::InvalidSpec(_) | Error::InvalidArgument(_) | Error::Oracle(_) => {
            SscStatus::InvalidSpec
        }
        Error::OutsideLinearDomain { .. } => SscStatus::OutOfDomain,
        Error::QuadratureNotConverged { .. } => SscStatus::NumericalFailure,
    }
}

/// Runs `f`, converting errors and panics into a status plus last-error text.
fn guard(f: impl FnOnce() -> Result<(), (SscStatus, String)>) -> SscStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SscStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            SscStatus::Panic
        }
    }
}

fn lib(e: Error) -> (SscStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (SscStatus, String) {
    (SscStatus::NullPointer, format!("{name} is NULL"))
}

/// # Safety
/// `p` must be NULL or valid for reads of `T`.
unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, (SscStatus, String)> {
    p.as_ref().ok_or_else(|| null(name))
}

/// # Safety
/// `p` must be NULL or valid for writes of `T`.
unsafe fn write<T>(p: *mut T, name: &str, v: T) -> Result<(), (SscStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    p.write(v);
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ssc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ssc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Converts decibels to a linear ratio.
#[no_mangle]
pub extern "C" fn ssc_db_to_linear(db: f64) -> f64 {
    squeezeclock::db_to_linear(Decibels(db))
}

/// Converts a linear ratio to decibels.
#[no_mangle]
pub extern "C" fn ssc_linear_to_db(ratio: f64) -> f64 {
    squeezeclock::linear_to_db(ratio).0
}

/// Validates `params` and returns a new handle in `*out`.
///
/// # Safety
/// `params` must point to a valid `SscSpecParams`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ssc_spec_new(
    params: *const SscSpecParams,
    out: *mut *mut SscSpec,
) -> SscStatus {
    guard(|| {
        let p = deref(params, "params")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let orientation = match p.orientation {
            o if o == SscOrientation::MeasurementBased as u32 => {
                SqueezeOrientation::MeasurementBased
            }
            o if o == SscOrientation::FeedbackBased as u32 => SqueezeOrientation::FeedbackBased,
            o if o == SscOrientation::Explicit as u32 => SqueezeOrientation::Explicit(p.theta),
            o => return Err((SscStatus::InvalidSpec, format!("unknown orientation {o}"))),
        };
        let spec = EnsembleParams {
            atoms: p.atoms,
            squeezing: p.squeezing,
            antisqueezing: p.antisqueezing,
            prep_contrast: p.prep_contrast,
            ramsey_contrast: p.ramsey_contrast,
            orientation,
            fractional_atoms: p.fractional_atoms != 0,
        }
        .validate()
        .map_err(lib)?;
        write(out, "out", Box::into_raw(Box::new(SscSpec(spec))))
    })
}

/// # Safety
/// `spec` must be NULL or a handle from `ssc_spec_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ssc_spec_free(spec: *mut SscSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Regime indicator `A^4 / (xi^6 N)`; values above 5 mean antisqueezing
/// limits the clock.
///
/// # Safety
/// `spec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ssc_spec_regime_alpha(spec: *const SscSpec, out: *mut f64) -> SscStatus {
    guard(|| {
        let s = deref(spec, "spec")?;
        write(out, "out", regime_alpha(&s.0))
    })
}

/// Builds the phase-estimation error curve of `spec`.
///
/// # Safety
/// `spec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ssc_curve_new(spec: *const SscSpec, out: *mut *mut SscCurve) -> SscStatus {
    guard(|| {
        let s = deref(spec, "spec")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let c = build_phase_error_curve(&s.0);
        write(out, "out", Box::into_raw(Box::new(SscCurve(c))))
    })
}

/// # Safety
/// `curve` must be NULL or a handle from `ssc_curve_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ssc_curve_free(curve: *mut SscCurve) {
    if !curve.is_null() {
        drop(Box::from_raw(curve));
    }
}

/// Squared phase-estimation error at LO phase `phi` (radians, any real).
///
/// # Safety
/// `curve` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ssc_curve_eval(
    curve: *const SscCurve,
    phi: f64,
    out: *mut f64,
) -> SscStatus {
    guard(|| {
        let c = deref(curve, "curve")?;
        if !phi.is_finite() {
            return Err((
                SscStatus::OutOfDomain,
                format!("phi must be finite, got {phi}"),
            ));
        }
        write(out, "out", c.0.eval(phi))
    })
}

/// Where the curve switches to its cap, and the error at `|phi| = pi/2`.
///
/// # Safety
/// `curve` must be a live handle; both out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ssc_curve_kinks(
    curve: *const SscCurve,
    phi_star: *mut f64,
    max_error: *mut f64,
) -> SscStatus {
    guard(|| {
        let c = deref(curve, "curve")?;
        if phi_star.is_null() || max_error.is_null() {
            return Err(null("output"));
        }
        write(phi_star, "phi_star", c.0.phi_star())?;
        write(max_error, "max_error", c.0.max_error())
    })
}

/// Clock phase variance after `total_time` for Ramsey time `tau` with LO
/// noise rate `gamma`.
///
/// # Safety
/// `curve` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ssc_clock_phase_variance(
    curve: *const SscCurve,
    gamma: f64,
    tau: f64,
    total_time: f64,
    out: *mut f64,
) -> SscStatus {
    guard(|| {
        let c = deref(curve, "curve")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let v = clock_phase_variance(&c.0, gamma, tau, total_time).map_err(lib)?;
        write(out, "out", v)
    })
}

/// Optimizes the Ramsey time for `spec`.
///
/// # Safety
/// `spec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ssc_optimize(
    spec: *const SscSpec,
    gamma: f64,
    total_time: f64,
    out: *mut SscStabilityResult,
) -> SscStatus {
    guard(|| {
        let s = deref(spec, "spec")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = optimize_spec(&s.0, gamma, total_time).map_err(lib)?;
        write(
            out,
            "out",
            SscStabilityResult {
                tau: r.tau,
                sigma2_phi: r.sigma2_phi,
                sigma2_omega: r.sigma2_omega,
                regime_alpha: r.regime_alpha,
                regime: match r.regime {
                    Regime::SqueezingLimited => 1,
                    Regime::AntisqueezingLimited => 2,
                },
                sql_ratio_db: r.sql_ratio_db,
                flat_objective: r.flat_objective as u8,
            },
        )
    })
}
