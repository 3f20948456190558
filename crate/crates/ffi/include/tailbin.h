#ifndef TAILBIN_H
#define TAILBIN_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum TbStatus {
  TB_STATUS_OK = 0,
  /**
   * A required pointer was null.
   */
  TB_STATUS_NULL_POINTER = 1,
  /**
   * Malformed arguments or data.
   */
  TB_STATUS_INVALID_INPUT = 2,
  /**
   * The data do not support an estimate.
   */
  TB_STATUS_ESTIMATION = 3,
  /**
   * The output buffer is too small; the required length is reported.
   */
  TB_STATUS_BUFFER_TOO_SMALL = 4,
  /**
   * Internal failure caught at the boundary.
   */
  TB_STATUS_PANIC = 5,
} TbStatus;

typedef enum TbMethod {
  TB_METHOD_MLE = 0,
  TB_METHOD_HILL = 1,
  TB_METHOD_RANK_HALF = 2,
} TbMethod;

typedef enum TbTransform {
  TB_TRANSFORM_LOG_TAIL = 0,
  TB_TRANSFORM_RAW_ALL = 1,
  TB_TRANSFORM_RAW_TAIL = 2,
} TbTransform;

typedef enum TbCorrection {
  TB_CORRECTION_NONE = 0,
  TB_CORRECTION_JACKKNIFE = 1,
} TbCorrection;

/**
 * Cross-sectional tail fit.
 */
typedef struct TbCsFit TbCsFit;

/**
 * Fixed-effects panel fit.
 */
typedef struct TbFeFit TbFeFit;

/**
 * Accumulates panel rows before fitting.
 */
typedef struct TbPanelBuilder TbPanelBuilder;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message of this thread into `buf` (NUL terminated)
 * and return the full message length in bytes, excluding the terminator.
 *
 * # Safety
 * `buf` must be null or writable for `len` bytes.
 */
size_t tb_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tb_version(void);

/**
 * `q` such that `P(|T| <= q) = p` for `T ~ t(df)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum TbStatus tb_quantile_abs_t(double df, double p, double *out);

/**
 * `P(|T| <= q)` for `T ~ t(df)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum TbStatus tb_cdf_abs_t(double df, double q, double *out);

/**
 * Hill estimate over `xs[i] >= threshold`; `se` may be null.
 *
 * # Safety
 * `xs` must hold `n` values; `alpha` must be writable.
 */
enum TbStatus tb_hill_estimate(const double *xs,
                               size_t n,
                               double threshold,
                               double *alpha,
                               double *se);

/**
 * Rank-1/2 log-log regression estimate; `se` may be null.
 *
 * # Safety
 * As [`tb_hill_estimate`].
 */
enum TbStatus tb_rank_half_estimate(const double *xs,
                                    size_t n,
                                    double threshold,
                                    double *alpha,
                                    double *se);

/**
 * Fit the cross-sectional tail model. `z` is row-major `n x dz`; pass a
 * null `z` with `dz = 0` for a constant covariate.
 *
 * # Safety
 * `y` and `x` must hold `n` values, `z` `n * dz` values, `out` writable.
 */
enum TbStatus tb_cs_fit(const uint8_t *y,
                        const double *x,
                        size_t n,
                        const double *z,
                        size_t dz,
                        double q,
                        enum TbMethod method,
                        struct TbCsFit **out);

/**
 * Number of covariates of a fit.
 *
 * # Safety
 * `fit` must be a live handle or null.
 */
size_t tb_cs_fit_dz(const struct TbCsFit *fit);

/**
 * Copy `theta^(y)` into `out[..len]`; `len` must be at least `dz`.
 *
 * # Safety
 * `fit` must be live; `out` writable for `len` values.
 */
enum TbStatus tb_cs_fit_theta(const struct TbCsFit *fit, uint8_t y, double *out, size_t len);

/**
 * Plug-in `P(Y = 1 | X = x, Z = z)`.
 *
 * # Safety
 * `fit` must be live, `z` hold `dz` values, `p` writable.
 */
enum TbStatus tb_cs_fit_predict(const struct TbCsFit *fit,
                                double x,
                                const double *z,
                                size_t dz,
                                double *p);

/**
 * Limit elasticity `-|alpha_1(z) - alpha_0(z)|` and its standard error;
 * `se` may be null.
 *
 * # Safety
 * `fit` must be live, `z` hold `dz` values, `value` writable.
 */
enum TbStatus tb_cs_fit_elasticity(const struct TbCsFit *fit,
                                   const double *z,
                                   size_t dz,
                                   double *value,
                                   double *se);

/**
 * JSON artifact of a fit; release with [`tb_string_free`]. Null on error.
 *
 * # Safety
 * `fit` must be live or null.
 */
char *tb_cs_fit_to_json(const struct TbCsFit *fit);

/**
 * # Safety
 * `fit` must come from [`tb_cs_fit`] and not be used afterwards.
 */
void tb_cs_fit_free(struct TbCsFit *fit);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void tb_string_free(char *s);

/**
 * New empty panel with `dz` covariates per row (0 for a constant).
 */
struct TbPanelBuilder *tb_panel_builder_new(size_t dz);

/**
 * Append one `(unit, t, y, x, z)` row; `z` may be null when `dz = 0`.
 *
 * # Safety
 * `b` must be live, `unit` a NUL-terminated UTF-8 string, `z` hold `dz`
 * values.
 */
enum TbStatus tb_panel_builder_push(struct TbPanelBuilder *b,
                                    const char *unit,
                                    int64_t t,
                                    uint8_t y,
                                    double x,
                                    const double *z);

/**
 * # Safety
 * `b` must come from [`tb_panel_builder_new`] and not be used afterwards.
 */
void tb_panel_builder_free(struct TbPanelBuilder *b);

/**
 * Small-`T` conditional MLE; writes `theta*` and its standard errors
 * (`se` may be null) into buffers of at least `dz` values.
 *
 * # Safety
 * `b` must be live; `theta` (and `se` if non-null) writable for `len`.
 */
enum TbStatus tb_panel_conditional_fit(const struct TbPanelBuilder *b,
                                       double q,
                                       double *theta,
                                       double *se,
                                       size_t len);

/**
 * Fixed-effects fit with unit intercepts.
 *
 * # Safety
 * `b` must be live; `out` writable.
 */
enum TbStatus tb_panel_fe_fit(const struct TbPanelBuilder *b,
                              double q,
                              enum TbTransform transform,
                              enum TbCorrection correction,
                              struct TbFeFit **out);

/**
 * Copy `theta*` into `out[..len]`.
 *
 * # Safety
 * `fit` must be live; `out` writable for `len` values.
 */
enum TbStatus tb_fe_fit_theta(const struct TbFeFit *fit, double *out, size_t len);

/**
 * Number of units with an estimated intercept.
 *
 * # Safety
 * `fit` must be live or null.
 */
size_t tb_fe_fit_n_units(const struct TbFeFit *fit);

/**
 * Forecast probability for a retained unit at a new `x`.
 *
 * # Safety
 * `fit` must be live, `unit` NUL-terminated, `z` hold `dz` values, `p`
 * writable.
 */
enum TbStatus tb_fe_fit_forecast(const struct TbFeFit *fit,
                                 const char *unit,
                                 double x,
                                 const double *z,
                                 size_t dz,
                                 double *p);

/**
 * JSON artifact of a fit; release with [`tb_string_free`]. Null on error.
 *
 * # Safety
 * `fit` must be live or null.
 */
char *tb_fe_fit_to_json(const struct TbFeFit *fit);

/**
 * # Safety
 * `fit` must come from [`tb_panel_fe_fit`] and not be used afterwards.
 */
void tb_fe_fit_free(struct TbFeFit *fit);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TAILBIN_H */
