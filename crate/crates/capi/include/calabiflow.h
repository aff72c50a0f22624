#ifndef CALABIFLOW_H
#define CALABIFLOW_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes shared by every fallible entry point.
 */
typedef enum {
  CF_STATUS_OK = 0,
  CF_STATUS_NULL_ARGUMENT = 1,
  CF_STATUS_INVALID_ARGUMENT = 2,
  CF_STATUS_NOT_KAHLER = 3,
  CF_STATUS_INSUFFICIENT_DATA = 4,
  CF_STATUS_QUADRATURE_FAILED = 5,
  CF_STATUS_IO = 6,
  CF_STATUS_INTERNAL = 7,
} CfStatus;

/**
 * Opaque chart potential handle.
 */
typedef struct CfField CfField;

/**
 * Flat mirror of the functional report.
 */
typedef struct {
  double aubin_i;
  double energy_e;
  double mabuchi;
  double calabi_energy;
  double s_hat;
  double min_u;
  double max_u;
  double sup_e;
  double sup_s_dev;
} CfFunctionalReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Crate version as a static C string.
 */
const char *cf_version(void);

/**
 * Message describing the most recent failure on this thread.
 */
const char *cf_last_error_message(void);

/**
 * New zero potential on an n-by-n periodic chart; null on invalid geometry.
 */
CfField *cf_field_new_torus(uintptr_t grid_n, double period);

/**
 * Load a torus field file (see the field-file JSON schema); null on error.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string.
 */
CfField *cf_field_load_json(const char *path);

/**
 * Release a field handle (null is a no-op).
 *
 * # Safety
 * `field` must have come from this library and not been freed before.
 */
void cf_field_free(CfField *field);

/**
 * Number of grid samples held by the field.
 *
 * # Safety
 * `field` must be a live handle or null.
 */
uintptr_t cf_field_len(const CfField *field);

/**
 * Overwrite the potential samples (row-major, length must match).
 *
 * # Safety
 * `values` must point to `len` readable doubles; `field` must be live.
 */
CfStatus cf_field_set_values(CfField *field, const double *values, uintptr_t len);

/**
 * Copy the potential samples out (row-major, `len` must match).
 *
 * # Safety
 * `out` must point to `len` writable doubles; `field` must be live.
 */
CfStatus cf_field_get_values(const CfField *field, double *out, uintptr_t len);

/**
 * Full functional report of a field (Mabuchi slot is 0 for single fields).
 *
 * # Safety
 * `field` must be live; `out` must be writable.
 */
CfStatus cf_functionals_eval(const CfField *field, CfFunctionalReport *out);

/**
 * Integrate the flow described by a JSON config (the CLI schema) and hand
 * back the trajectory summary as a JSON string via `summary_out`.
 *
 * # Safety
 * `config_json` must be NUL-terminated; `summary_out`, when non-null,
 * receives a string to release with `cf_string_free`.
 */
CfStatus cf_flow_run_json(const char *config_json, char **summary_out);

/**
 * Release a string produced by this library (null is a no-op).
 *
 * # Safety
 * `s` must have come from this library and not been freed before.
 */
void cf_string_free(char *s);

/**
 * Least-squares exponential decay rate of a `(t, value)` series tail.
 *
 * # Safety
 * `ts` and `values` must point to `len` readable doubles.
 */
CfStatus cf_fit_decay(const double *ts,
                      const double *values,
                      uintptr_t len,
                      double tail_fraction,
                      double *rate_out,
                      double *r_squared_out);

/**
 * The radial L^p gradient integral of the scaled round-metric family.
 *
 * # Safety
 * `out` must be writable.
 */
CfStatus cf_lp_gradient_norm(double lambda, double p, double *out);

/**
 * The p < 2 majorant bound; `CF_STATUS_INVALID_ARGUMENT` when divergent.
 *
 * # Safety
 * `out` must be writable.
 */
CfStatus cf_lp_upper_bound(double p, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CALABIFLOW_H */
