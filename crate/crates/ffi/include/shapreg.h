#ifndef SHAPREG_H
#define SHAPREG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ShapregBasis {
  SHAPREG_BASIS_CAPACITY = 0,
  SHAPREG_BASIS_MOBIUS = 1,
  SHAPREG_BASIS_SHAPLEY = 2,
} ShapregBasis;

typedef enum ShapregPenalty {
  SHAPREG_PENALTY_NONE = 0,
  SHAPREG_PENALTY_L1 = 1,
  SHAPREG_PENALTY_L2 = 2,
} ShapregPenalty;

typedef enum ShapregStatus {
  SHAPREG_STATUS_OK = 0,
  // Bad argument value, including a null pointer.
  SHAPREG_STATUS_INVALID_ARGUMENT = 1,
  // Malformed or inconsistent data, file or model.
  SHAPREG_STATUS_DATA_ERROR = 2,
  // The fit stopped before reaching the tolerance; the model is still returned.
  SHAPREG_STATUS_NOT_CONVERGED = 3,
  SHAPREG_STATUS_IO = 4,
  SHAPREG_STATUS_PANIC = 5,
} ShapregStatus;

// A fitted k-additive model.
typedef struct ShapregModel ShapregModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null.
//
// The pointer stays valid until the next call into this library on the same thread.
const char *shapreg_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *shapreg_version(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void shapreg_string_free(char *s);

// Number of non-empty coalitions of size at most `k` among `n` features.
//
// # Safety
// `out` must be a valid pointer.
enum ShapregStatus shapreg_dimension(uintptr_t n, uintptr_t k, uint64_t *out);

// Reads a model JSON file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum ShapregStatus shapreg_model_load(const char *path, struct ShapregModel **out);

// Writes a model JSON file.
//
// # Safety
// `model` must be a live handle and `path` a NUL-terminated string.
enum ShapregStatus shapreg_model_save(const struct ShapregModel *model, const char *path);

// Serializes a model to a newly allocated JSON string.
//
// # Safety
// `model` must be a live handle and `out` a valid pointer. Free the result
// with [`shapreg_string_free`].
enum ShapregStatus shapreg_model_to_json(const struct ShapregModel *model, char **out);

// Releases a model handle. Null is ignored.
//
// # Safety
// `model` must come from this library and not have been freed.
void shapreg_model_free(struct ShapregModel *model);

// Feature count, additivity order and bias of a model. Any out pointer may be null.
//
// # Safety
// `model` must be a live handle; non-null out pointers must be valid.
enum ShapregStatus shapreg_model_info(const struct ShapregModel *model,
                                      uintptr_t *n_features,
                                      uintptr_t *k,
                                      double *bias);

// Copies the interaction indices, in canonical order, into `out`.
//
// # Safety
// `model` must be a live handle; `out` must hold `len` doubles, where `len`
// is the model's dimension.
enum ShapregStatus shapreg_model_indices(const struct ShapregModel *model,
                                         double *out,
                                         uintptr_t len);

// Positive-class probabilities for `rows` raw feature rows.
//
// # Safety
// `x` must hold `rows * cols` doubles and `out` must hold `rows` doubles.
enum ShapregStatus shapreg_model_predict_proba(const struct ShapregModel *model,
                                               const double *x,
                                               uintptr_t rows,
                                               uintptr_t cols,
                                               double *out);

// Fits a `k`-additive model on raw features and 0/1 labels.
//
// Returns `SHAPREG_STATUS_NOT_CONVERGED` with a usable model in `*out` when
// the iteration budget runs out.
//
// # Safety
// `x` must hold `rows * cols` doubles, `y` must hold `rows` bytes and `out`
// must be a valid pointer.
enum ShapregStatus shapreg_fit(const double *x,
                               const uint8_t *y,
                               uintptr_t rows,
                               uintptr_t cols,
                               uintptr_t k,
                               enum ShapregPenalty penalty,
                               double lambda,
                               uint64_t seed,
                               struct ShapregModel **out);

// Converts a set function between bases.
//
// `input` and `output` hold `len` doubles in canonical order, where `len`
// is the dimension for `(n, k)`. Capacity conversions require `k == n`.
//
// # Safety
// `input` and `output` must each hold `len` doubles.
enum ShapregStatus shapreg_transform(uintptr_t n,
                                     uintptr_t k,
                                     enum ShapregBasis from,
                                     enum ShapregBasis to,
                                     const double *input,
                                     double *output,
                                     uintptr_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHAPREG_H */
