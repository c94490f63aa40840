#ifndef JSPLIT_H
#define JSPLIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum JsplitStatus {
  JSPLIT_STATUS_OK = 0,
  JSPLIT_STATUS_NULL_POINTER = 1,
  JSPLIT_STATUS_INVALID_ARGUMENT = 2,
  // No splitting certificate was found within the search budget.
  JSPLIT_STATUS_UNVERIFIED = 3,
  // Pullback or series did not converge.
  JSPLIT_STATUS_NOT_CONVERGED = 4,
  // Other outcome where the hypotheses could not be confirmed.
  JSPLIT_STATUS_DEGENERATE = 5,
  JSPLIT_STATUS_BUFFER_TOO_SMALL = 6,
  JSPLIT_STATUS_IO = 7,
  JSPLIT_STATUS_PANIC = 8,
} JsplitStatus;

// Opaque map family.
typedef struct JsplitFamily JsplitFamily;

// Splitting certificate found by the search.
typedef struct JsplitSplitting {
  // Block length of the certificate.
  size_t m;
  double mass_a;
  double mass_b;
  // `1 - min(mass_a, mass_b)`.
  double lambda;
  // 1 when found by exhaustive enumeration, 0 for Monte Carlo.
  int32_t exact;
} JsplitSplitting;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failing call on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *jsplit_last_error(void);

// Library version as a static NUL-terminated string.
const char *jsplit_version(void);

// Creates a built-in family (`cantor1d`, `cantor2d`, `exp1d`, `fig1-2d`,
// `lip-pair`).
//
// # Safety
// `name` must be a NUL-terminated string and `out` a valid pointer.
enum JsplitStatus jsplit_family_builtin(const char *name, struct JsplitFamily **out);

// Creates a family from a JSON configuration, as accepted by `--config`.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum JsplitStatus jsplit_family_from_json(const char *json, struct JsplitFamily **out);

// Releases a family. Null is ignored.
//
// # Safety
// `fam` must come from a constructor above and not be used afterwards.
void jsplit_family_free(struct JsplitFamily *fam);

// State-space dimension, or 0 for a null handle.
//
// # Safety
// `fam` must be null or a live handle.
size_t jsplit_family_dim(const struct JsplitFamily *fam);

// `out = f_symbol(x)` for a finite-noise family; `symbol` is 1-based.
//
// # Safety
// `x` and `out` must each hold `jsplit_family_dim(fam)` doubles.
enum JsplitStatus jsplit_apply(const struct JsplitFamily *fam,
                               size_t symbol,
                               const double *x,
                               double *out);

// `out = f_theta(x)` for a family with continuous noise parameters.
//
// # Safety
// `theta` must hold `theta_len` doubles; `x` and `out` the family
// dimension.
enum JsplitStatus jsplit_apply_param(const struct JsplitFamily *fam,
                                     const double *theta,
                                     size_t theta_len,
                                     const double *x,
                                     double *out);

// Searches for a splitting certificate with block length up to `m_max`,
// exhaustively when feasible and otherwise with `blocks` sampled blocks.
// Returns `Unverified` when none is found.
//
// # Safety
// `out` must be a valid pointer.
enum JsplitStatus jsplit_check_splitting(const struct JsplitFamily *fam,
                                         size_t m_max,
                                         size_t blocks,
                                         uint64_t seed,
                                         struct JsplitSplitting *out);

// Draws `n` stationary samples by pullback iteration into `out`
// (row-major, `n * dim` doubles of capacity `out_len`). Samples that do
// not converge within `n_max` steps are dropped; `kept` receives the
// number written.
//
// # Safety
// `out` must hold `out_len` doubles and `kept` be a valid pointer.
enum JsplitStatus jsplit_pullback_sample(const struct JsplitFamily *fam,
                                         uint64_t seed,
                                         size_t n,
                                         double tol,
                                         size_t n_max,
                                         double *out,
                                         size_t out_len,
                                         size_t *kept);

// Fitted synchronization rate `r_hat` of the probe-image diameters over
// `n_max` steps and `replicas` noise streams.
//
// # Safety
// `r_hat` must be a valid pointer.
enum JsplitStatus jsplit_diameter_rate(const struct JsplitFamily *fam,
                                       size_t n_max,
                                       size_t replicas,
                                       uint64_t seed,
                                       double *r_hat);

// Wasserstein-1 distance (taxicab ground cost) between the uniform
// empirical measures on `nx` and `ny` points of dimension `dim`.
//
// # Safety
// `x` must hold `nx * dim` doubles, `y` `ny * dim`, and `out` be valid.
enum JsplitStatus jsplit_wasserstein1(size_t dim,
                                      const double *x,
                                      size_t nx,
                                      const double *y,
                                      size_t ny,
                                      double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* JSPLIT_H */
