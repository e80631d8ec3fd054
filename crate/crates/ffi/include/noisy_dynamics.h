#ifndef NOISY_DYNAMICS_H
#define NOISY_DYNAMICS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NdStatus {
  ND_STATUS_OK = 0,
  ND_STATUS_NULL_POINTER = 1,
  ND_STATUS_INVALID_INPUT = 2,
  ND_STATUS_OVERFLOW = 3,
  ND_STATUS_SOLVER_FAILURE = 4,
  ND_STATUS_PANIC = 5,
} NdStatus;

typedef enum NdMethod {
  ND_METHOD_POWER = 0,
  ND_METHOD_EIGEN = 1,
} NdMethod;

typedef enum NdVariant {
  ND_VARIANT_PIECEWISE = 0,
  ND_VARIANT_SIGMOID = 1,
} NdVariant;

typedef enum NdVerdict {
  ND_VERDICT_ACCEPT = 0,
  ND_VERDICT_REJECT = 1,
  ND_VERDICT_INDETERMINATE = 3,
} NdVerdict;

/**
 * Piecewise-polynomial density on [0, 1].
 */
typedef struct NdDensity NdDensity;

/**
 * Square fixed-point matrix.
 */
typedef struct NdMatrix NdMatrix;

/**
 * A map of [0, 1] with Gaussian noise.
 */
typedef struct NdSystem NdSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread. Valid until the next
 * failing call on the same thread; never NULL.
 */
const char *nd_last_error(void);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must come from this library (or be NULL) and not be freed twice.
 */
void nd_string_free(char *s);

/**
 * Build an `n`×`n` matrix from `n*n` row-major doubles, stored at `bits`.
 *
 * # Safety
 * `entries` must point to `n*n` doubles; `out` must be writable.
 */
enum NdStatus nd_matrix_new(size_t n, const double *entries, uint32_t bits, struct NdMatrix **out);

/**
 * Parse the JSON matrix format `{"n", "precision_bits", "entries"}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum NdStatus nd_matrix_from_json(const char *json, struct NdMatrix **out);

/**
 * # Safety
 * `m` must come from this library (or be NULL) and not be freed twice.
 */
void nd_matrix_free(struct NdMatrix *m);

/**
 * Dimension of `m`, or 0 for NULL.
 *
 * # Safety
 * `m` must be a live handle or NULL.
 */
size_t nd_matrix_dim(const struct NdMatrix *m);

/**
 * Entry `(i, j)` rounded to double.
 *
 * # Safety
 * `m` must be a live handle; `out` must be writable.
 */
enum NdStatus nd_matrix_get(const struct NdMatrix *m, size_t i, size_t j, double *out);

/**
 * JSON text of `m` with exact decimal entries; free with [`nd_string_free`].
 *
 * # Safety
 * `m` must be a live handle; `out` must be writable.
 */
enum NdStatus nd_matrix_to_json(const struct NdMatrix *m, char **out);

/**
 * `m^E` within `2^-bits` for a decimal exponent `E`. Returns
 * `ND_STATUS_OVERFLOW` (and leaves `out` untouched) when the result would
 * exceed `2^bound_log2` in norm.
 *
 * # Safety
 * `m` must be a live handle, `exponent` a NUL-terminated string and `out` writable.
 */
enum NdStatus nd_matrix_power(const struct NdMatrix *m,
                              const char *exponent,
                              uint32_t bits,
                              int64_t bound_log2,
                              struct NdMatrix **out);

/**
 * A noisy system from map JSON (`polynomial`, `sigmoid_sum` or `logistic`)
 * and noise level `eps`, evaluated at `bits`.
 *
 * # Safety
 * `map_json` must be a NUL-terminated string; `out` must be writable.
 */
enum NdStatus nd_system_new(const char *map_json, double eps, uint32_t bits, struct NdSystem **out);

/**
 * # Safety
 * `s` must come from this library (or be NULL) and not be freed twice.
 */
void nd_system_free(struct NdSystem *s);

/**
 * Invariant density of `sys` to accuracy `delta` with default constants.
 *
 * # Safety
 * `sys` must be a live handle; `out` must be writable.
 */
enum NdStatus nd_invariant_measure(const struct NdSystem *sys,
                                   double delta,
                                   enum NdMethod method,
                                   struct NdDensity **out);

/**
 * # Safety
 * `d` must come from this library (or be NULL) and not be freed twice.
 */
void nd_density_free(struct NdDensity *d);

/**
 * Density value at `x` in [0, 1].
 *
 * # Safety
 * `d` must be a live handle; `out` must be writable.
 */
enum NdStatus nd_density_eval(const struct NdDensity *d, double x, double *out);

/**
 * Mass of the density on `[a, b]`.
 *
 * # Safety
 * `d` must be a live handle; `out` must be writable.
 */
enum NdStatus nd_density_weight(const struct NdDensity *d, double a, double b, double *out);

/**
 * Decide a Turing machine (JSON) from the invariant measure of its
 * embedding. `weight` receives the mass on [1/2, 1] and may be NULL.
 *
 * # Safety
 * `tm_json` must be a NUL-terminated string; `verdict` must be writable.
 */
enum NdStatus nd_decide(const char *tm_json,
                        enum NdVariant variant,
                        enum NdVerdict *verdict,
                        double *weight);

/**
 * Library version as a static string.
 */
const char *nd_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NOISY_DYNAMICS_H */
