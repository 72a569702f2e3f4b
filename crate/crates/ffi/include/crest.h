/* crest C API — generated by cbindgen, do not edit. */

#ifndef CREST_H
#define CREST_H

/* This file is auto-generated; regenerate by building crest-ffi. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum CrestStatus {
  CREST_STATUS_OK = 0,
  CREST_STATUS_NULL_ARGUMENT = 1,
  CREST_STATUS_INVALID_UTF8 = 2,
  CREST_STATUS_PARSE_ERROR = 3,
  CREST_STATUS_INVALID_ARGUMENT = 4,
  CREST_STATUS_OUT_OF_DOMAIN = 5,
  CREST_STATUS_NO_CONVERGENCE = 6,
  CREST_STATUS_DEGENERATE_MAXIMUM = 7,
  CREST_STATUS_QUADRATURE_NOT_CONVERGED = 8,
  CREST_STATUS_UNRELIABLE = 9,
  CREST_STATUS_RANGE_ERROR = 10,
  CREST_STATUS_INTERNAL = 11,
} CrestStatus;

/**
 * Generator families exposed over the C ABI.
 */
typedef enum CrestPhiKind {
  /**
   * `λ²/2` (the `p` argument is ignored).
   */
  CREST_PHI_KIND_GAUSSIAN = 0,
  /**
   * `λ²` on `|λ| ≤ 1`, `|λ|^p` beyond.
   */
  CREST_PHI_KIND_POWER = 1,
  /**
   * `|λ|^p / p`.
   */
  CREST_PHI_KIND_PURE_POWER = 2,
} CrestPhiKind;

/**
 * Opaque handle to a field law (domain, mean, basis, seed).
 */
typedef struct CrestFieldSpec CrestFieldSpec;

/**
 * Opaque handle to one realized sample path.
 */
typedef struct CrestSample CrestSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *crest_version(void);

/**
 * Message for the most recent failure on this thread. The pointer stays
 * valid until the next failing crest call on the same thread.
 */
const char *crest_last_error(void);

/**
 * Parse a field-spec TOML document (`domain`, optional `mean`, `terms`
 * array) and return an owned handle.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string and `out` a valid pointer;
 * the returned handle must be released with [`crest_field_spec_free`].
 */
enum CrestStatus crest_field_spec_parse(const char *text,
                                        uint64_t seed,
                                        struct CrestFieldSpec **out);

/**
 * Release a field-spec handle (NULL is a no-op).
 *
 * # Safety
 * `spec` must be NULL or a pointer returned by [`crest_field_spec_parse`]
 * that has not been freed yet.
 */
void crest_field_spec_free(struct CrestFieldSpec *spec);

/**
 * Domain dimension of a spec; 0 for NULL.
 *
 * # Safety
 * `spec` must be NULL or a live handle.
 */
size_t crest_field_spec_dim(const struct CrestFieldSpec *spec);

/**
 * Draw the coefficients of `replicate_id` into a new sample handle.
 *
 * # Safety
 * `spec` must be a live handle and `out` a valid pointer; the returned
 * handle must be released with [`crest_sample_free`].
 */
enum CrestStatus crest_sample_create(const struct CrestFieldSpec *spec,
                                     uint64_t replicate_id,
                                     struct CrestSample **out);

/**
 * Release a sample handle (NULL is a no-op).
 *
 * # Safety
 * `sample` must be NULL or a pointer returned by [`crest_sample_create`]
 * that has not been freed yet.
 */
void crest_sample_free(struct CrestSample *sample);

/**
 * Evaluate `ξ(x)`.
 *
 * # Safety
 * `sample` must be a live handle, `x` must point to `dim` doubles, and
 * `out` must be a valid pointer.
 */
enum CrestStatus crest_eval(const struct CrestSample *sample,
                            const double *x,
                            size_t dim,
                            double *out);

/**
 * Analytic gradient into `out[0..dim]`.
 *
 * # Safety
 * As [`crest_eval`]; `out` must point to `dim` writable doubles.
 */
enum CrestStatus crest_gradient(const struct CrestSample *sample,
                                const double *x,
                                size_t dim,
                                double *out);

/**
 * Analytic Hessian into `out[0..dim*dim]`, row-major.
 *
 * # Safety
 * As [`crest_eval`]; `out` must point to `dim * dim` writable doubles.
 */
enum CrestStatus crest_hessian(const struct CrestSample *sample,
                               const double *x,
                               size_t dim,
                               double *out);

/**
 * `ζ(x) = |det η(x)|^{1/2}`.
 *
 * # Safety
 * As [`crest_eval`].
 */
enum CrestStatus crest_zeta(const struct CrestSample *sample,
                            const double *x,
                            size_t dim,
                            double *out);

/**
 * Multistart maximization with default options. Writes the maximum value,
 * the argmax (length `dim`), whether it is interior, and `|det η(x0)|`.
 *
 * # Safety
 * `sample` must be a live handle; `out_argmax` must point to `dim`
 * writable doubles; the scalar out-pointers must be valid.
 */
enum CrestStatus crest_find_max(const struct CrestSample *sample,
                                double *out_value,
                                double *out_argmax,
                                size_t dim,
                                bool *out_interior,
                                double *out_abs_det);

/**
 * `ln I(λ)` of the Hessian-weighted Laplace integral (`-inf` when the
 * integrand vanishes identically).
 *
 * # Safety
 * `sample` must be a live handle and `out_log` a valid pointer.
 */
enum CrestStatus crest_log_integral(const struct CrestSample *sample,
                                    double lambda,
                                    double *out_log);

/**
 * Pathwise ratio `I(λ) / ((2π/λ)^{d/2} e^{λM})` with default options.
 *
 * # Safety
 * `sample` must be a live handle and `out_ratio` a valid pointer.
 */
enum CrestStatus crest_pathwise_ratio(const struct CrestSample *sample,
                                      double lambda,
                                      double *out_ratio);

/**
 * Young–Fenchel conjugate `φ*(u)` of a built-in generator.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CrestStatus crest_young_fenchel(enum CrestPhiKind kind, double p, double u, double *out);

/**
 * `ln T(u)` of the predicted tail for transform growth `C λ^α e^{λ^q/q}`.
 *
 * # Safety
 * `out_log` must be a valid pointer.
 */
enum CrestStatus crest_tail_prediction_log(double alpha,
                                           double c_r,
                                           double q,
                                           double u,
                                           double *out_log);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CREST_H */
