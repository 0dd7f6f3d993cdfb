#ifndef NSADF_H
#define NSADF_H

/* Generated by cbindgen from nsadf-capi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible function.
typedef enum NsadfStatus {
  NSADF_STATUS_OK = 0,
  NSADF_STATUS_INVALID_ARGUMENT = 1,
  NSADF_STATUS_PARSE = 2,
  NSADF_STATUS_NUMERICAL = 3,
  NSADF_STATUS_IO = 4,
  NSADF_STATUS_NULL_POINTER = 5,
  NSADF_STATUS_PANIC = 6,
} NsadfStatus;

// A fitted non-stationary ADF: the quantile-regression grid with its
// per-ray threshold fits, plus the smooth Bernstein model (opaque).
typedef struct nsadf_adf_fit nsadf_adf_fit;

// A bivariate series on standard exponential margins (opaque).
typedef struct nsadf_series nsadf_series;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copy the last error message on this thread into `buf` (NUL-terminated,
// truncated to `cap`). Returns the full message length in bytes, excluding
// the terminator. `buf` may be null to query the length.
size_t nsadf_last_error_message(char *buf, size_t cap);

// Simulate `n` observations of the named dependence structure
// (`gaussian_pos`, `gaussian_neg`, `inv_logistic`, `inv_alog`,
// `inv_husler_reiss`, `gauge_model12`) with its standard parameter
// trajectory. `kappa1`/`kappa2` only affect `inv_alog`.
//
// # Safety
// `family` must be valid NUL-terminated UTF-8 and `out` a valid pointer.
enum NsadfStatus nsadf_simulate(const char *family,
                                size_t n,
                                uint64_t seed,
                                double kappa1,
                                double kappa2,
                                struct nsadf_series **out);

// Wrap caller-provided exponential-margin observations (copied).
//
// # Safety
// `x` and `y` must point to `len` readable doubles; `out` must be valid.
enum NsadfStatus nsadf_series_from_arrays(const double *x,
                                          const double *y,
                                          size_t len,
                                          struct nsadf_series **out);

// Number of observations, or 0 for a null handle.
size_t nsadf_series_len(const struct nsadf_series *series);

// Copy the series into caller buffers of length `nsadf_series_len`.
//
// # Safety
// `x_out` and `y_out` must hold at least `nsadf_series_len(series)` doubles.
enum NsadfStatus nsadf_series_values(const struct nsadf_series *series,
                                     double *x_out,
                                     double *y_out);

// # Safety
// `series` must come from this library and not be freed twice.
void nsadf_series_free(struct nsadf_series *series);

// Fit the non-stationary ADF to a series. `config_json` may be null for
// defaults, or a JSON object with optional keys `rays` (grid size),
// `degree` (Bernstein degree), `link` ("exponential" | "logit"), `seed`,
// and `poly_degree` (time-polynomial order of the quantile basis).
//
// # Safety
// `series` must be a live handle; `config_json`, when non-null, must be
// NUL-terminated UTF-8; `out` must be valid.
enum NsadfStatus nsadf_fit_adf(const struct nsadf_series *series,
                               const char *config_json,
                               struct nsadf_adf_fit **out);

// Number of rays in the fitted grid (the length of curve buffers).
size_t nsadf_adf_ray_count(const struct nsadf_adf_fit *fit);

// Constrained ADF value `λ*(w | z_t)`; `use_smooth` selects the Bernstein
// model (nonzero) or the quantile-regression grid (zero, nearest ray).
//
// # Safety
// `fit` must be a live handle and `out` a valid pointer.
enum NsadfStatus nsadf_adf_eval(const struct nsadf_adf_fit *fit,
                                double w,
                                uint32_t t,
                                int use_smooth,
                                double *out);

// Tail-dependence coefficient `η(t) = 1/(2 λ*(1/2 | z_t))`.
//
// # Safety
// `fit` must be a live handle and `out` a valid pointer.
enum NsadfStatus nsadf_adf_eta(const struct nsadf_adf_fit *fit,
                               uint32_t t,
                               int use_smooth,
                               double *out);

// Return curve at joint survival probability `p` and time `t`. Buffers
// `rays_out`, `x_out`, `y_out` must each hold `nsadf_adf_ray_count(fit)`
// doubles.
//
// # Safety
// `fit` must be a live handle; the three buffers must be writable with the
// documented capacity.
enum NsadfStatus nsadf_return_curve(const struct nsadf_adf_fit *fit,
                                    double p,
                                    uint32_t t,
                                    int use_smooth,
                                    double *rays_out,
                                    double *x_out,
                                    double *y_out);

// Serialize the fitted smooth model as a versioned JSON document the CLI
// can also read. Free the returned string with [`nsadf_string_free`].
//
// # Safety
// `fit` must be a live handle and `out` a valid pointer.
enum NsadfStatus nsadf_smooth_model_json(const struct nsadf_adf_fit *fit, char **out);

// # Safety
// `s` must come from this library and not be freed twice.
void nsadf_string_free(char *s);

// # Safety
// `fit` must come from this library and not be freed twice.
void nsadf_adf_fit_free(struct nsadf_adf_fit *fit);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NSADF_H */
