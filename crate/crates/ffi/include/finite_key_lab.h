#ifndef FINITE_KEY_LAB_H
#define FINITE_KEY_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FklStatus {
  FKL_STATUS_OK = 0,
  FKL_STATUS_NULL_POINTER = 1,
  FKL_STATUS_DOMAIN = 2,
  FKL_STATUS_INVALID_DISTRIBUTION = 3,
  FKL_STATUS_COUNT_MISMATCH = 4,
  FKL_STATUS_LENGTH_MISMATCH = 5,
  FKL_STATUS_INVARIANT = 6,
  FKL_STATUS_SIZE_GUARD = 7,
  FKL_STATUS_CHANNEL_KIND = 8,
  FKL_STATUS_PANIC = 9,
} FklStatus;

typedef enum FklStrategy {
  FKL_STRATEGY_PSI0 = 0,
  FKL_STRATEGY_PSI1 = 1,
  FKL_STRATEGY_PSI2 = 2,
  FKL_STRATEGY_PSI2_PLUS0 = 3,
} FklStrategy;

/**
 * Opaque relative count vector.
 */
typedef struct FklCountVector FklCountVector;

/**
 * Opaque HD-BB84 parameter set.
 */
typedef struct FklQkdParams FklQkdParams;

/**
 * Opaque QRNG parameter set.
 */
typedef struct FklQrngParams FklQrngParams;

/**
 * Bounds on `log2 |J_q|`. `log_f` is meaningful only when `has_f` is non-zero.
 */
typedef struct FklJqBound {
  double log_f;
  uint8_t has_f;
  double log_g;
  double log_min;
} FklJqBound;

/**
 * A rate evaluation. `ell` keeps its sign; `rate` is clamped at zero.
 */
typedef struct FklRate {
  double ell;
  double rate;
  double delta;
  double eps_pa;
  double failure_prob;
} FklRate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *fkl_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *fkl_version(void);

/**
 * # Safety
 * `fractions` must point to `d` readable doubles; `out` must be writable.
 */
enum FklStatus fkl_count_vector_new(const double *fractions,
                                    size_t d,
                                    struct FklCountVector **out_handle);

/**
 * Count vector from absolute counts; the sample size is their sum.
 *
 * # Safety
 * `counts` must point to `d` readable integers; `out` must be writable.
 */
enum FklStatus fkl_count_vector_from_counts(const uint64_t *counts,
                                            size_t d,
                                            struct FklCountVector **out_handle);

/**
 * # Safety
 * `handle` must come from a `fkl_count_vector_*` constructor and not be freed twice.
 */
void fkl_count_vector_free(struct FklCountVector *handle);

/**
 * Analytic failure bound, unclamped.
 *
 * # Safety
 * `out_value` must be writable.
 */
enum FklStatus fkl_epsilon_cl(enum FklStrategy strategy,
                              uint64_t n,
                              uint64_t m,
                              uint32_t d,
                              double delta,
                              double *out_value);

/**
 * # Safety
 * `out_value` must be writable.
 */
enum FklStatus fkl_delta_for_epsilon(enum FklStrategy strategy,
                                     uint64_t n,
                                     uint64_t m,
                                     uint32_t d,
                                     double epsilon,
                                     double *out_value);

/**
 * Exact failure probability of a word (or word pair for the two-party
 * strategies, where `word_b` must be non-null) of length `n + m`.
 *
 * # Safety
 * `word_a` (and `word_b` when used) must point to `len` readable symbols.
 */
enum FklStatus fkl_exact_failure_probability(enum FklStrategy strategy,
                                             uint64_t n,
                                             uint64_t m,
                                             uint32_t d,
                                             double delta,
                                             const uint32_t *word_a,
                                             const uint32_t *word_b,
                                             size_t len,
                                             double *out_value);

/**
 * # Safety
 * `counts` must be a live handle; `out_bound` must be writable.
 */
enum FklStatus fkl_log_jq_bound(const struct FklCountVector *counts,
                                uint64_t n,
                                double delta,
                                struct FklJqBound *out_bound);

/**
 * Exact `log2 |J_q|`, `-inf` when the set is empty.
 *
 * # Safety
 * `counts` must be a live handle; `out_value` must be writable.
 */
enum FklStatus fkl_log_jq_exact(const struct FklCountVector *counts,
                                uint64_t n,
                                double delta,
                                double *out_value);

/**
 * Defaults: `m = ceil(0.07 N)`, `eps = 1e-36`, `beta = 1/3`, `eps_l2 = 1e-12`.
 *
 * # Safety
 * `out_handle` must be writable.
 */
enum FklStatus fkl_qrng_params_new(uint64_t total, uint32_t d, struct FklQrngParams **out_handle);

/**
 * Sets the test size as an absolute count (`test_size >= 1`) and the
 * failure parameters. The handle is unchanged on error.
 *
 * # Safety
 * `params` must be a live handle.
 */
enum FklStatus fkl_qrng_params_configure(struct FklQrngParams *params,
                                         uint64_t test_size,
                                         double epsilon,
                                         double beta,
                                         double epsilon_l2);

/**
 * # Safety
 * `params` must come from [`fkl_qrng_params_new`] and not be freed twice.
 */
void fkl_qrng_params_free(struct FklQrngParams *params);

/**
 * # Safety
 * Handles must be live; `out_rate` must be writable.
 */
enum FklStatus fkl_qrng_ell_ours(const struct FklCountVector *counts,
                                 const struct FklQrngParams *params,
                                 struct FklRate *out_rate);

/**
 * # Safety
 * `counts` must point to `d` readable integers summing to `m`.
 */
enum FklStatus fkl_qrng_ell_vallone(const uint64_t *counts,
                                    size_t d,
                                    uint64_t n,
                                    uint64_t m,
                                    double *out_value);

/**
 * # Safety
 * `out_value` must be writable.
 */
enum FklStatus fkl_qrng_ell_xu(double d0,
                               uint64_t total,
                               uint64_t n,
                               uint64_t m,
                               uint32_t d,
                               double epsilon,
                               double *out_value);

/**
 * Lossless defaults; `p_vac > 0` switches on the vacuum-aware bound.
 *
 * # Safety
 * `out_handle` must be writable.
 */
enum FklStatus fkl_qkd_params_new(uint64_t total,
                                  uint32_t d,
                                  double p_vac,
                                  struct FklQkdParams **out_handle);

/**
 * # Safety
 * `params` must come from [`fkl_qkd_params_new`] and not be freed twice.
 */
void fkl_qkd_params_free(struct FklQkdParams *params);

/**
 * Key length from the three-party bound at observed distance `q`.
 *
 * # Safety
 * `params` must be live; `out_rate` must be writable.
 */
enum FklStatus fkl_qkd_ell_ours(double q,
                                const struct FklQkdParams *params,
                                struct FklRate *out_rate);

/**
 * # Safety
 * `params` must be live; `out_rate` must be writable.
 */
enum FklStatus fkl_qkd_ell_prior(double q,
                                 const struct FklQkdParams *params,
                                 struct FklRate *out_rate);

/**
 * # Safety
 * `out_value` must be writable.
 */
enum FklStatus fkl_qkd_r_asym(uint32_t d, double q, double *out_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FINITE_KEY_LAB_H */
