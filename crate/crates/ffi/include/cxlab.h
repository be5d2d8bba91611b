#ifndef CXLAB_H
#define CXLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes; zero is success.
 */
typedef enum CxlabStatus {
  CXLAB_STATUS_OK = 0,
  CXLAB_STATUS_INVALID_ARGUMENT = 1,
  CXLAB_STATUS_DOMAIN = 2,
  CXLAB_STATUS_PRECONDITION = 3,
  CXLAB_STATUS_RESOURCE = 4,
  CXLAB_STATUS_INEXACT = 5,
  CXLAB_STATUS_NOT_CONVERGED = 6,
  CXLAB_STATUS_PARSE = 7,
  CXLAB_STATUS_NULL_POINTER = 8,
  CXLAB_STATUS_UTF8 = 9,
  CXLAB_STATUS_INTERNAL = 10,
  CXLAB_STATUS_PANIC = 11,
} CxlabStatus;

/**
 * Scalar mode of a computation.
 */
typedef enum CxlabMode {
  CXLAB_MODE_EXACT = 0,
  CXLAB_MODE_FLOAT = 1,
} CxlabMode;

/**
 * Opaque bi-tree instance.
 */
typedef struct CxlabBitreeInstance CxlabBitreeInstance;

/**
 * Opaque equilibrium measure.
 */
typedef struct CxlabEquilibrium CxlabEquilibrium;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message on this thread, or null. Free with [`cxlab_string_free`].
 */
char *cxlab_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and must not be used afterwards.
 */
void cxlab_string_free(char *s);

/**
 * Library version, statically allocated.
 */
const char *cxlab_version(void);

/**
 * Depth of the longest common prefix of two node literals such as `"0110"`.
 *
 * # Safety
 * `a` and `b` must be nul-terminated strings; `out` must be writable.
 */
enum CxlabStatus cxlab_lcp_depth(const char *a, const char *b, size_t *out);

/**
 * Builds the bi-tree instance for `n ∈ {4, 16, 256, 65536}`.
 *
 * # Safety
 * `out` must be writable; free the handle with [`cxlab_bitree_instance_free`].
 */
enum CxlabStatus cxlab_bitree_instance_new(uint64_t n, struct CxlabBitreeInstance **out);

/**
 * # Safety
 * `inst` must come from [`cxlab_bitree_instance_new`] or be null.
 */
void cxlab_bitree_instance_free(struct CxlabBitreeInstance *inst);

/**
 * Number of rectangles in the family.
 *
 * # Safety
 * `inst` must be a live handle; `out` must be writable.
 */
enum CxlabStatus cxlab_bitree_instance_family_len(const struct CxlabBitreeInstance *inst,
                                                  size_t *out);

/**
 * Instance summary as JSON: `n, s, m, delta, lambda, family`.
 *
 * # Safety
 * `inst` must be a live handle; `out` must be writable.
 */
enum CxlabStatus cxlab_bitree_instance_json(const struct CxlabBitreeInstance *inst, char **out);

/**
 * Solves the equilibrium QP of the instance family.
 *
 * A run that hits `max_iters` still returns a handle; check
 * [`cxlab_equilibrium_converged`].
 *
 * # Safety
 * `inst` must be a live handle; `out` must be writable; free the result with
 * [`cxlab_equilibrium_free`].
 */
enum CxlabStatus cxlab_equilibrium_solve(const struct CxlabBitreeInstance *inst,
                                         double tol,
                                         uint64_t max_iters,
                                         bool symmetric,
                                         struct CxlabEquilibrium **out);

/**
 * # Safety
 * `eq` must come from [`cxlab_equilibrium_solve`] or be null.
 */
void cxlab_equilibrium_free(struct CxlabEquilibrium *eq);

/**
 * # Safety
 * `eq` must be a live handle; `out` must be writable.
 */
enum CxlabStatus cxlab_equilibrium_cap(const struct CxlabEquilibrium *eq, double *out);

/**
 * # Safety
 * `eq` must be a live handle; `out` must be writable.
 */
enum CxlabStatus cxlab_equilibrium_kkt(const struct CxlabEquilibrium *eq, double *out);

/**
 * # Safety
 * `eq` must be a live handle; `out` must be writable.
 */
enum CxlabStatus cxlab_equilibrium_converged(const struct CxlabEquilibrium *eq, bool *out);

/**
 * The full equilibrium record as JSON.
 *
 * # Safety
 * `eq` must be a live handle; `out` must be writable.
 */
enum CxlabStatus cxlab_equilibrium_json(const struct CxlabEquilibrium *eq, char **out);

/**
 * Runs one cell of a named experiment (as accepted by `cxlab run`) and
 * returns its JSON report. `cell_json` is an object of parameters.
 *
 * # Safety
 * Strings must be nul-terminated; `out` must be writable.
 */
enum CxlabStatus cxlab_run_cell_json(const char *experiment,
                                     const char *cell_json,
                                     enum CxlabMode mode,
                                     uint64_t seed,
                                     char **out);

/**
 * Increasing, subadditive counterexample on `levels` levels.
 *
 * # Safety
 * `out` must be writable.
 */
enum CxlabStatus cxlab_cex_increasing_json(uint64_t levels,
                                           double p,
                                           enum CxlabMode mode,
                                           char **out);

/**
 * Direct counterexample with `f = 1` on the leftmost path.
 *
 * # Safety
 * `out` must be writable.
 */
enum CxlabStatus cxlab_cex_direct_json(uint64_t levels, double p, enum CxlabMode mode, char **out);

/**
 * Counterexample for `1 < p < 2`, always in float mode.
 *
 * # Safety
 * `out` must be writable.
 */
enum CxlabStatus cxlab_cex_p_less_2_json(uint32_t k, double p, char **out);

/**
 * Audit of the `p > 2` construction on both variants.
 *
 * # Safety
 * `out` must be writable.
 */
enum CxlabStatus cxlab_cex_new23_json(uint64_t levels,
                                      double p,
                                      enum CxlabMode mode,
                                      bool with_path,
                                      char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CXLAB_H */
