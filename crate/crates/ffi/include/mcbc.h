#ifndef MCBC_H
#define MCBC_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes of the C API.
typedef enum McbcStatus {
  MCBC_STATUS_OK = 0,
  MCBC_STATUS_NULL_POINTER = 1,
  MCBC_STATUS_INVALID_ARGUMENT = 2,
  MCBC_STATUS_INVALID_SERIES = 3,
  MCBC_STATUS_PARSE = 4,
  MCBC_STATUS_INSUFFICIENT_DATA = 5,
  MCBC_STATUS_NON_CONVERGENCE = 6,
  MCBC_STATUS_MISMATCH = 7,
  MCBC_STATUS_PANIC = 8,
} McbcStatus;

// Calibrated correction parameters handle.
typedef struct McbcParams McbcParams;

// Daily rainfall series handle.
typedef struct McbcSeries McbcSeries;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or an empty string. The
// pointer stays valid until the next API call on the same thread.
const char *mcbc_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *mcbc_version(void);

// Builds a series of `len` consecutive days starting on the given date.
// NaN entries are missing values.
//
// # Safety
// `values` must point to `len` readable doubles (or be null when `len` is 0)
// and `out` must be a valid pointer.
enum McbcStatus mcbc_series_new(int32_t year,
                                uint32_t month,
                                uint32_t day,
                                const double *values,
                                size_t len,
                                struct McbcSeries **out);

// Parses a `date,rain` CSV document.
//
// # Safety
// `csv` must be a NUL-terminated string and `out` a valid pointer.
enum McbcStatus mcbc_series_from_csv(const char *csv, struct McbcSeries **out);

// Number of days in the series; 0 for a null handle.
//
// # Safety
// `series` must be null or a live handle.
size_t mcbc_series_len(const struct McbcSeries *series);

// Writes the first day of the series.
//
// # Safety
// All pointers must be valid.
enum McbcStatus mcbc_series_start(const struct McbcSeries *series,
                                  int32_t *year,
                                  uint32_t *month,
                                  uint32_t *day);

// Copies the values into `buf`, which must hold exactly the series length.
// Missing values are written as NaN.
//
// # Safety
// `buf` must point to `len` writable doubles.
enum McbcStatus mcbc_series_values(const struct McbcSeries *series, double *buf, size_t len);

// Releases a series handle. Null is ignored.
//
// # Safety
// `series` must be null or a handle not yet freed.
void mcbc_series_free(struct McbcSeries *series);

// Calibrates `method` ("loci", "qm", "mc-loci" or "mc-qm") on paired
// observations and model output. `options_json` may be null or a JSON object
// with correction settings (`t_x`, `min_fit_n`, `calibration`, ...) and a
// `scheme`.
//
// # Safety
// Handles must be live, strings NUL-terminated and `out` valid.
enum McbcStatus mcbc_calibrate(const char *method,
                               const struct McbcSeries *obs,
                               const struct McbcSeries *model,
                               const char *options_json,
                               struct McbcParams **out);

// Applies calibrated parameters to a model series. `options_json` may carry
// a `scheme`; it must be the one used during calibration.
//
// # Safety
// Handles must be live, `options_json` null or NUL-terminated, `out` valid.
enum McbcStatus mcbc_apply(const struct McbcParams *params,
                           const struct McbcSeries *model,
                           const char *options_json,
                           struct McbcSeries **out);

// Serialises parameters to JSON. Release the string with
// [`mcbc_string_free`].
//
// # Safety
// `params` must be live and `out` valid.
enum McbcStatus mcbc_params_to_json(const struct McbcParams *params, char **out);

// Loads parameters previously written by [`mcbc_params_to_json`].
//
// # Safety
// `json` must be NUL-terminated and `out` valid.
enum McbcStatus mcbc_params_from_json(const char *json, struct McbcParams **out);

// Method name of a parameter set as a static string; null for a null handle.
//
// # Safety
// `params` must be null or live.
const char *mcbc_params_method(const struct McbcParams *params);

// Releases a parameter handle. Null is ignored.
//
// # Safety
// `params` must be null or a handle not yet freed.
void mcbc_params_free(struct McbcParams *params);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must be null or a string from this library not yet freed.
void mcbc_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MCBC_H */
