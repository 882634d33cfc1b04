#ifndef COUPLED_FUSION_H
#define COUPLED_FUSION_H

/* Generated by cbindgen from coupled-fusion-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible call.
typedef enum CfStatus {
  CF_STATUS_OK = 0,
  CF_STATUS_NULL_ARGUMENT = 1,
  CF_STATUS_INVALID_UTF8 = 2,
  CF_STATUS_DOMAIN_ERROR = 3,
  CF_STATUS_DIMENSION_MISMATCH = 4,
  CF_STATUS_PARSE_ERROR = 5,
  CF_STATUS_FIT_ERROR = 6,
  CF_STATUS_NUMERIC_ERROR = 7,
  CF_STATUS_IO_ERROR = 8,
  CF_STATUS_MODEL_FORMAT_ERROR = 9,
  CF_STATUS_BUFFER_TOO_SMALL = 10,
} CfStatus;

// Opaque handle to a fitted model loaded from a model file.
typedef struct CfModel CfModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the most recent failure on this thread. Never null;
// empty when no failure has occurred. Valid until the next failing call
// on the same thread.
const char *cf_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *cf_version(void);

// Coupled logarithm `ln_κ(x)`.
//
// # Safety
// `out` must point to writable memory for one `double`.
enum CfStatus cf_coupled_log(double x, double kappa, double *out);

// Coupled exponential `exp_κ(x)`, with truncation/saturation semantics.
//
// # Safety
// `out` must point to writable memory for one `double`.
enum CfStatus cf_coupled_exp(double x, double kappa, double *out);

// Coupled product of `len` nonnegative factors.
//
// # Safety
// `xs` must point to `len` readable doubles and `out` to one writable
// double.
enum CfStatus cf_coupled_product(const double *xs, size_t len, double kappa, double *out);

// Log-domain coupled product over `len` natural-log factors.
//
// # Safety
// `logs` must point to `len` readable doubles and `out` to one writable
// double.
enum CfStatus cf_log_coupled_product(const double *logs, size_t len, double kappa, double *out);

// Generalized mean of `len` probabilities at risk bias `r` with floor
// `floor`.
//
// # Safety
// `probs` must point to `len` readable doubles in [0, 1] and `out` to one
// writable double.
enum CfStatus cf_generalized_mean(const double *probs,
                                  size_t len,
                                  double r,
                                  double floor,
                                  double *out);

// Loads a model file written by the library (`out/models/*.model`).
// On success stores a heap handle in `*out`; release with
// `cf_model_free`.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a writable pointer
// slot.
enum CfStatus cf_model_load(const char *path, struct CfModel **out);

// Writes the model back to a file in the versioned text format.
//
// # Safety
// `model` must be a live handle from `cf_model_load`; `path`
// NUL-terminated.
enum CfStatus cf_model_save(const struct CfModel *model, const char *path);

// Releases a model handle. Null is a no-op.
//
// # Safety
// `model` must be null or a handle returned by `cf_model_load` that has
// not been freed yet.
void cf_model_free(struct CfModel *model);

// Feature dimension the model expects.
//
// # Safety
// `model` must be a live handle; `out` writable.
enum CfStatus cf_model_dim(const struct CfModel *model, size_t *out);

// Number of classes the model scores.
//
// # Safety
// `model` must be a live handle; `out` writable.
enum CfStatus cf_model_class_count(const struct CfModel *model, size_t *out);

// Posterior class probabilities for one feature vector.
//
// `features` must hold `cf_model_dim` doubles; `out_probs` must have room
// for `out_len >= cf_model_class_count` doubles. The posterior sums to 1.
//
// # Safety
// All pointers must satisfy the stated lengths.
enum CfStatus cf_model_predict(const struct CfModel *model,
                               const double *features,
                               size_t features_len,
                               double *out_probs,
                               size_t out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COUPLED_FUSION_H */
