#ifndef DIFFEOFLOW_H
#define DIFFEOFLOW_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define DF_MANIFOLD_SPD 0

#define DF_MANIFOLD_CORR 1

#define DF_SCHEME_EULER 0

#define DF_SCHEME_MIDPOINT 1

#define DF_SCHEME_RK4 2

typedef enum DfStatus {
  DF_STATUS_OK = 0,
  DF_STATUS_NULL_POINTER = 1,
  DF_STATUS_INVALID_INPUT = 2,
  DF_STATUS_NOT_POSITIVE_DEFINITE = 3,
  DF_STATUS_NOT_CORRELATION = 4,
  DF_STATUS_NUMERICAL = 5,
  DF_STATUS_MISSING_CLASS = 6,
  DF_STATUS_DIVERGED = 7,
  DF_STATUS_FORMAT = 8,
  DF_STATUS_INVALID_DATA = 9,
  DF_STATUS_IO = 10,
  DF_STATUS_PANIC = 11,
} DfStatus;

/**
 * Trained model and its source distribution.
 */
typedef struct DfModel DfModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *df_last_error_message(void);

/**
 * Dimension `m` of the flat coordinates for `d×d` matrices.
 *
 * # Safety
 * `out_m` must point to writable memory.
 */
enum DfStatus df_embed_dim(uint32_t manifold, size_t d, size_t *out_m);

/**
 * Flat coordinates of a matrix: `out` receives `m` values.
 *
 * # Safety
 * `matrix_in` must hold `d·d` values and `out` room for `m` values.
 */
enum DfStatus df_phi(uint32_t manifold, size_t d, const double *matrix_in, double *out);

/**
 * Matrix for flat coordinates: `z` holds `m` values, `out` receives `d·d`.
 *
 * # Safety
 * `z` must hold `m` values and `out` room for `d·d` values.
 */
enum DfStatus df_phi_inv(uint32_t manifold, size_t d, const double *z, double *out);

/**
 * Fréchet mean of `n` matrices stored back to back.
 *
 * # Safety
 * `matrices` must hold `n·d·d` values and `out` room for `d·d` values.
 */
enum DfStatus df_frechet_mean(uint32_t manifold,
                              size_t d,
                              size_t n,
                              const double *matrices,
                              double *out);

/**
 * Shrinks a symmetric matrix toward the identity until its smallest
 * eigenvalue is at least `eps`. A nonzero `preserve_unit_diag` keeps an
 * exact unit diagonal.
 *
 * # Safety
 * `matrix_in` must hold `d·d` values and `out` room for `d·d` values.
 */
enum DfStatus df_project_to_spd(size_t d,
                                const double *matrix_in,
                                double eps,
                                int32_t preserve_unit_diag,
                                double *out);

/**
 * Loads a model directory written by the training command.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum DfStatus df_model_load(const char *path, struct DfModel **out);

/**
 * Trains a model on a dataset directory. `config_json` may be null for
 * default hyperparameters.
 *
 * # Safety
 * String arguments must be NUL-terminated; `out` must be writable.
 */
enum DfStatus df_model_train(const char *data_dir, const char *config_json, struct DfModel **out);

/**
 * Writes the model to a directory.
 *
 * # Safety
 * `model` must come from this library; `path` must be NUL-terminated.
 */
enum DfStatus df_model_save(const struct DfModel *model, const char *path);

/**
 * Manifold code, matrix size and number of classes of a model.
 *
 * # Safety
 * `model` must come from this library; output pointers must be writable.
 */
enum DfStatus df_model_info(const struct DfModel *model,
                            uint32_t *out_manifold,
                            size_t *out_dim,
                            size_t *out_num_classes);

/**
 * Copies the sorted class labels into `out` (room for `capacity` labels).
 *
 * # Safety
 * `model` must come from this library; `out` must hold `capacity` values.
 */
enum DfStatus df_model_classes(const struct DfModel *model, int64_t *out, size_t capacity);

/**
 * Draws `n` samples of class `label`; `out` receives `n·d·d` values.
 *
 * # Safety
 * `model` must come from this library; `out` must have room for `n·d·d` values.
 */
enum DfStatus df_model_sample(const struct DfModel *model,
                              int64_t label,
                              size_t n,
                              size_t steps,
                              uint32_t scheme,
                              uint64_t seed,
                              double *out);

/**
 * Releases a model handle. Null is ignored.
 *
 * # Safety
 * `model` must come from this library and not be used afterwards.
 */
void df_model_free(struct DfModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DIFFEOFLOW_H */
