#ifndef QUASIBATH_H
#define QUASIBATH_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Result codes shared by all functions.
 */
typedef enum QbStatus {
  QB_STATUS_OK = 0,
  QB_STATUS_NULL_POINTER = 1,
  QB_STATUS_INVALID_ARGUMENT = 2,
  QB_STATUS_INVALID_CONFIG = 3,
  QB_STATUS_NUMERICS = 4,
  QB_STATUS_DOMAIN = 5,
  QB_STATUS_SIZE_CAP = 6,
  QB_STATUS_IO = 7,
  QB_STATUS_BUFFER_TOO_SMALL = 8,
  QB_STATUS_PANIC = 9,
} QbStatus;

/**
 * Model parameters.
 */
typedef struct QbConfig QbConfig;

/**
 * Chain amplitudes on the time grid.
 */
typedef struct QbTrajectory QbTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the next
 * failing call on the same thread.
 */
const char *qb_last_error(void);

/**
 * Default parameters: 21 sites, golden-ratio modulation, one-dimensional bath.
 */
struct QbConfig *qb_config_default(void);

/**
 * Parses a flat TOML scenario.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a writable pointer.
 */
enum QbStatus qb_config_parse(const char *text, struct QbConfig **out);

/**
 * Sets one numeric parameter by its file key (`N_s`, `lambda`, `Delta`,
 * `beta`, `phi`, `d`, `g`, `N_b`, `dt`, `t_max`) and revalidates.
 * The configuration is left unchanged on failure.
 *
 * # Safety
 * `cfg` must come from this library; `key` must be NUL-terminated.
 */
enum QbStatus qb_config_set(struct QbConfig *cfg, const char *key, double value);

/**
 * Writes the 16-hex-digit configuration hash plus NUL into `buf` (17 bytes).
 *
 * # Safety
 * `cfg` must come from this library and `buf` must hold `len` bytes.
 */
enum QbStatus qb_config_hash(const struct QbConfig *cfg, char *buf, size_t len);

/**
 * # Safety
 * `cfg` must come from this library (or be null) and not be used afterwards.
 */
void qb_config_free(struct QbConfig *cfg);

/**
 * Propagates the chain from site `n0` (1-based) up to t_max.
 *
 * # Safety
 * `cfg` must come from this library and `out` must be writable.
 */
enum QbStatus qb_propagate(const struct QbConfig *cfg, size_t n0, struct QbTrajectory **out);

/**
 * Number of time samples, or 0 for a null handle.
 *
 * # Safety
 * `tr` must come from this library or be null.
 */
size_t qb_trajectory_len(const struct QbTrajectory *tr);

/**
 * Number of chain sites, or 0 for a null handle.
 *
 * # Safety
 * `tr` must come from this library or be null.
 */
size_t qb_trajectory_sites(const struct QbTrajectory *tr);

/**
 * Time and amplitude of site `n` (1-based) at sample `i`.
 *
 * # Safety
 * `tr` must come from this library; the output pointers must be writable.
 */
enum QbStatus qb_trajectory_amplitude(const struct QbTrajectory *tr,
                                      size_t i,
                                      size_t n,
                                      double *t,
                                      double *re,
                                      double *im);

/**
 * # Safety
 * `tr` must come from this library (or be null) and not be used afterwards.
 */
void qb_trajectory_free(struct QbTrajectory *tr);

/**
 * Real bound-state energies outside the bath band. Writes at most `cap`
 * energies and the total count into `count`; returns `BufferTooSmall` when
 * `cap` is short (the count is still written).
 *
 * # Safety
 * `cfg` must come from this library; `energies` must hold `cap` doubles
 * (it may be null when `cap` is 0) and `count` must be writable.
 */
enum QbStatus qb_bound_states(const struct QbConfig *cfg,
                              double *energies,
                              size_t cap,
                              size_t *count);

/**
 * Lattice Green function f_d(m; e) on the physical sheet.
 *
 * # Safety
 * `re` and `im` must be writable.
 */
enum QbStatus qb_green(double e_re, double e_im, int64_t m, size_t d, double *re, double *im);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QUASIBATH_H */
