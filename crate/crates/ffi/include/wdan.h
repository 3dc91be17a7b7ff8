#ifndef WDAN_H
#define WDAN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>

/**
 * Result code of every fallible call.
 */
typedef enum WdanStatus {
  WDAN_STATUS_OK = 0,
  WDAN_STATUS_NULL_POINTER = 1,
  WDAN_STATUS_INVALID_ARGUMENT = 2,
  WDAN_STATUS_CONFIG = 3,
  WDAN_STATUS_DATA = 4,
  WDAN_STATUS_NUMERIC = 5,
  WDAN_STATUS_INTERNAL = 6,
  WDAN_STATUS_PANIC = 7,
} WdanStatus;

/**
 * Trained forecaster with the preprocessing it was trained with.
 */
typedef struct WdanModel WdanModel;

/**
 * Wavelet normalizer bound to one configuration.
 */
typedef struct WdanNormalizer WdanNormalizer;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *wdan_last_error_message(void);

void wdan_clear_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *wdan_version(void);

/**
 * Creates a normalizer. `basis` names a wavelet such as "coif3";
 * `periodization` selects periodic instead of symmetric extension.
 *
 * # Safety
 * `basis` must be a NUL-terminated string; `out` must be writable.
 */
enum WdanStatus wdan_normalizer_new(const char *basis,
                                    size_t levels,
                                    size_t window_half_width,
                                    double epsilon,
                                    bool periodization,
                                    struct WdanNormalizer **out);

/**
 * # Safety
 * `h` must come from [`wdan_normalizer_new`] and not be freed twice.
 */
void wdan_normalizer_free(struct WdanNormalizer *h);

/**
 * Shortest window the normalizer accepts, or 0 for a null handle.
 *
 * # Safety
 * `h` must be null or a live normalizer.
 */
size_t wdan_normalizer_min_len(const struct WdanNormalizer *h);

/**
 * Normalizes `x[0..len]`, writing the normalized window and the per-step
 * mean and std, each of length `len`. `out_mean`/`out_std` may be null.
 *
 * # Safety
 * Buffers must hold `len` elements.
 */
enum WdanStatus wdan_normalizer_normalize(const struct WdanNormalizer *h,
                                          const double *x,
                                          size_t len,
                                          double *out_normalized,
                                          double *out_mean,
                                          double *out_std);

/**
 * Writes `y * (std + epsilon) + mean` elementwise into `out`.
 *
 * # Safety
 * All buffers must hold `len` elements.
 */
enum WdanStatus wdan_denormalize(const double *y,
                                 const double *mean,
                                 const double *std,
                                 size_t len,
                                 double epsilon,
                                 double *out);

/**
 * Augmented Dickey-Fuller t-statistic with a constant and `lag` lagged
 * differences.
 *
 * # Safety
 * `x` must hold `len` elements and `out` must be writable.
 */
enum WdanStatus wdan_adf_statistic(const double *x, size_t len, size_t lag, double *out);

/**
 * Loads a model file written by `wdan train` (or a bare bundle record).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum WdanStatus wdan_model_load(const char *path, struct WdanModel **out);

/**
 * Same as [`wdan_model_load`] from an in-memory JSON document.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum WdanStatus wdan_model_from_json(const char *json, struct WdanModel **out);

/**
 * # Safety
 * `h` must come from a model constructor and not be freed twice.
 */
void wdan_model_free(struct WdanModel *h);

/**
 * Expected input length, or 0 for a null handle.
 *
 * # Safety
 * `h` must be null or a live model.
 */
size_t wdan_model_input_len(const struct WdanModel *h);

/**
 * Forecast length, or 0 for a null handle.
 *
 * # Safety
 * `h` must be null or a live model.
 */
size_t wdan_model_horizon(const struct WdanModel *h);

/**
 * Forecasts one channel: reads `input_len` values, writes `horizon`.
 *
 * # Safety
 * `input` must hold `input_len` and `out` `horizon` elements.
 */
enum WdanStatus wdan_model_forecast(const struct WdanModel *h,
                                    const double *input,
                                    size_t input_len,
                                    double *out,
                                    size_t horizon);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WDAN_H */
