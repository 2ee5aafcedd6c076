#ifndef SQUEEZECLOCK_H
#define SQUEEZECLOCK_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SscStatus {
  SSC_STATUS_OK = 0,
  SSC_STATUS_NULL_POINTER = 1,
  SSC_STATUS_INVALID_SPEC = 2,
  SSC_STATUS_OUT_OF_DOMAIN = 3,
  SSC_STATUS_NUMERICAL_FAILURE = 4,
  SSC_STATUS_PANIC = 5,
} SscStatus;

/**
 * How to orient the squeezed quadrature.
 */
typedef enum SscOrientation {
  /**
   * Tilt 0.
   */
  SSC_ORIENTATION_MEASUREMENT_BASED = 0,
  /**
   * Tilt arcsin(1/chi).
   */
  SSC_ORIENTATION_FEEDBACK_BASED = 1,
  /**
   * Tilt given by `theta`.
   */
  SSC_ORIENTATION_EXPLICIT = 2,
} SscOrientation;

/**
 * Opaque phase-estimation error curve.
 */
typedef struct SscCurve SscCurve;

/**
 * Opaque validated ensemble.
 */
typedef struct SscSpec SscSpec;

/**
 * Ensemble parameters. Variance ratios are linear (not dB).
 */
typedef struct SscSpecParams {
  double atoms;
  double squeezing;
  double antisqueezing;
  double prep_contrast;
  double ramsey_contrast;
  /**
   * One of `SscOrientation`; other values are rejected.
   */
  uint32_t orientation;
  /**
   * Used only with `SSC_ORIENTATION_EXPLICIT`.
   */
  double theta;
  /**
   * Nonzero to accept non-integer atom numbers.
   */
  uint8_t fractional_atoms;
} SscSpecParams;

/**
 * Optimized clock performance.
 */
typedef struct SscStabilityResult {
  double tau;
  double sigma2_phi;
  double sigma2_omega;
  double regime_alpha;
  /**
   * 1 for squeezing-limited, 2 for antisqueezing-limited.
   */
  uint8_t regime;
  double sql_ratio_db;
  uint8_t flat_objective;
} SscStabilityResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *ssc_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ssc_version(void);

/**
 * Converts decibels to a linear ratio.
 */
double ssc_db_to_linear(double db);

/**
 * Converts a linear ratio to decibels.
 */
double ssc_linear_to_db(double ratio);

/**
 * Validates `params` and returns a new handle in `*out`.
 *
 * # Safety
 * `params` must point to a valid `SscSpecParams`; `out` must be writable.
 */
enum SscStatus ssc_spec_new(const struct SscSpecParams *params, struct SscSpec **out);

/**
 * # Safety
 * `spec` must be NULL or a handle from `ssc_spec_new` not yet freed.
 */
void ssc_spec_free(struct SscSpec *spec);

/**
 * Regime indicator `A^4 / (xi^6 N)`; values above 5 mean antisqueezing
 * limits the clock.
 *
 * # Safety
 * `spec` must be a live handle; `out` must be writable.
 */
enum SscStatus ssc_spec_regime_alpha(const struct SscSpec *spec, double *out);

/**
 * Builds the phase-estimation error curve of `spec`.
 *
 * # Safety
 * `spec` must be a live handle; `out` must be writable.
 */
enum SscStatus ssc_curve_new(const struct SscSpec *spec, struct SscCurve **out);

/**
 * # Safety
 * `curve` must be NULL or a handle from `ssc_curve_new` not yet freed.
 */
void ssc_curve_free(struct SscCurve *curve);

/**
 * Squared phase-estimation error at LO phase `phi` (radians, any real).
 *
 * # Safety
 * `curve` must be a live handle; `out` must be writable.
 */
enum SscStatus ssc_curve_eval(const struct SscCurve *curve, double phi, double *out);

/**
 * Where the curve switches to its cap, and the error at `|phi| = pi/2`.
 *
 * # Safety
 * `curve` must be a live handle; both out-pointers must be writable.
 */
enum SscStatus ssc_curve_kinks(const struct SscCurve *curve, double *phi_star, double *max_error);

/**
 * Clock phase variance after `total_time` for Ramsey time `tau` with LO
 * noise rate `gamma`.
 *
 * # Safety
 * `curve` must be a live handle; `out` must be writable.
 */
enum SscStatus ssc_clock_phase_variance(const struct SscCurve *curve,
                                        double gamma,
                                        double tau,
                                        double total_time,
                                        double *out);

/**
 * Optimizes the Ramsey time for `spec`.
 *
 * # Safety
 * `spec` must be a live handle; `out` must be writable.
 */
enum SscStatus ssc_optimize(const struct SscSpec *spec,
                            double gamma,
                            double total_time,
                            struct SscStabilityResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SQUEEZECLOCK_H */
