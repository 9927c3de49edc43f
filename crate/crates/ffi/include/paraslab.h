#ifndef PARASLAB_H
#define PARASLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum PsStatus {
  PS_STATUS_OK = 0,
  PS_STATUS_NULL_POINTER = 1,
  PS_STATUS_INVALID_ARGUMENT = 2,
  PS_STATUS_INVALID_PARAMS = 3,
  PS_STATUS_CASE_MISMATCH = 4,
  PS_STATUS_NUMERICAL = 5,
  PS_STATUS_CONFIG = 6,
  PS_STATUS_IO = 7,
  PS_STATUS_PANIC = 8,
} PsStatus;

/**
 * Outcome of an evolution.
 */
typedef enum PsRunStatus {
  PS_RUN_STATUS_CONVERGED = 0,
  PS_RUN_STATUS_DIVERGED = 1,
  PS_RUN_STATUS_MAX_ITER = 2,
} PsRunStatus;

/**
 * Values of a function on the periodic grid `[-L, L)^N`.
 */
typedef struct PsField PsField;

/**
 * System parameters `(N, p, q, D1, D2)`.
 */
typedef struct PsParams PsParams;

/**
 * Result of [`ps_evolve`].
 */
typedef struct PsReport PsReport;

/**
 * Critical exponents of a parameter set.
 */
typedef struct PsExponents {
  double lambda_mu;
  double lambda_nu;
  double r1_star;
  double r2_star;
  double scal_u;
  double scal_v;
} PsExponents;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len - 1` bytes). Returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t ps_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ps_version(void);

/**
 * Build a parameter set; requires `0 < p <= q`, `pq > 1` and positive diffusivities.
 *
 * # Safety
 * `out` must be a valid pointer; the handle is released with [`ps_params_free`].
 */
enum PsStatus ps_params_new(uint32_t n,
                            double p,
                            double q,
                            double d1,
                            double d2,
                            struct PsParams **out);

/**
 * # Safety
 * `params` must be null or a handle from [`ps_params_new`] not yet freed.
 */
void ps_params_free(struct PsParams *params);

/**
 * Case of the parameters as 0..5 for A..F.
 *
 * # Safety
 * Pointers must be valid.
 */
enum PsStatus ps_classify(const struct PsParams *params, uint32_t *case_out);

/**
 * # Safety
 * Pointers must be valid.
 */
enum PsStatus ps_exponents(const struct PsParams *params, struct PsExponents *out);

/**
 * Field from `points^dim` row-major values on `[-halfwidth, halfwidth)^dim`.
 *
 * # Safety
 * `values` must point to `len` readable doubles; `out` must be valid.
 */
enum PsStatus ps_field_from_values(uint32_t dim,
                                   size_t points,
                                   double halfwidth,
                                   const double *values,
                                   size_t len,
                                   struct PsField **out);

/**
 * Sample the optimal pair of the parameters' case onto a grid. `k` is the
 * log-decay exponent of the modulator for cases D and E and is ignored
 * otherwise.
 *
 * # Safety
 * Pointers must be valid; both handles are released with [`ps_field_free`].
 */
enum PsStatus ps_field_optimal(const struct PsParams *params,
                               double c1,
                               double c2,
                               double k,
                               double halfwidth,
                               size_t points,
                               struct PsField **mu_out,
                               struct PsField **nu_out);

/**
 * Number of values in the field, or 0 for a null handle.
 *
 * # Safety
 * `field` must be null or a live handle.
 */
size_t ps_field_len(const struct PsField *field);

/**
 * Copy the values into `buf`, which must hold [`ps_field_len`] doubles.
 *
 * # Safety
 * `buf` must point to `len` writable doubles.
 */
enum PsStatus ps_field_values(const struct PsField *field, double *buf, size_t len);

/**
 * `S(D t)` applied to the field.
 *
 * # Safety
 * Pointers must be valid.
 */
enum PsStatus ps_heat_flow(const struct PsField *field,
                           double diffusivity,
                           double t,
                           struct PsField **out);

/**
 * # Safety
 * `field` must be null or a live handle.
 */
void ps_field_free(struct PsField *field);

/**
 * Picard evolution to `t_end` with default solver settings.
 *
 * # Safety
 * Pointers must be valid; the report is released with [`ps_report_free`].
 */
enum PsStatus ps_evolve(const struct PsParams *params,
                        const struct PsField *mu,
                        const struct PsField *nu,
                        double t_end,
                        size_t max_iter,
                        struct PsReport **out);

/**
 * # Safety
 * `report` must be a live handle.
 */
enum PsStatus ps_report_status(const struct PsReport *report, enum PsRunStatus *out);

/**
 * Number of checkpoints, or 0 for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
size_t ps_report_checkpoints(const struct PsReport *report);

/**
 * Checkpoint times and sup-norms of the last iterate; each buffer holds
 * `len >= ps_report_checkpoints` doubles. Any buffer may be null.
 *
 * # Safety
 * Non-null buffers must point to `len` writable doubles.
 */
enum PsStatus ps_report_sups(const struct PsReport *report,
                             double *times,
                             double *sup_u,
                             double *sup_v,
                             size_t len);

/**
 * # Safety
 * `report` must be null or a live handle.
 */
void ps_report_free(struct PsReport *report);

/**
 * Run a TOML configuration as the command-line tool would, writing its
 * artifacts. `exit_code` receives 0, 2 or 3 with the tool's meaning.
 *
 * # Safety
 * `toml` must be a NUL-terminated UTF-8 string; `exit_code` must be valid.
 */
enum PsStatus ps_run_config(const char *toml, int32_t *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PARASLAB_H */
