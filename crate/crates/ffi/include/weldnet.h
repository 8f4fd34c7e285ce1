#ifndef WELDNET_H
#define WELDNET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status returned by every fallible call.
 */
typedef enum WeldStatus {
  WELD_STATUS_OK = 0,
  WELD_STATUS_NULL_POINTER = 1,
  WELD_STATUS_INVALID_ARGUMENT = 2,
  WELD_STATUS_IO = 3,
  WELD_STATUS_FORMAT = 4,
  WELD_STATUS_NUMERICAL = 5,
  WELD_STATUS_PANIC = 6,
} WeldStatus;

/**
 * Trajectory dataset handle.
 */
typedef struct WeldDataset WeldDataset;

/**
 * Trained model handle (WeldNet or a baseline).
 */
typedef struct WeldModelHandle WeldModelHandle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *weld_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *weld_version(void);

/**
 * Generates a dataset with the family defaults for time span and domain.
 *
 * # Safety
 * `family` must be a NUL-terminated string and `out` a valid pointer.
 */
enum WeldStatus weld_dataset_generate(const char *family,
                                      size_t n_samples,
                                      size_t n_steps,
                                      size_t n_points,
                                      uint64_t seed,
                                      struct WeldDataset **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum WeldStatus weld_dataset_read(const char *path, struct WeldDataset **out);

/**
 * # Safety
 * `ds` must come from this library; `path` must be NUL-terminated.
 */
enum WeldStatus weld_dataset_write(const struct WeldDataset *ds, const char *path);

/**
 * Writes `(n_samples, n_steps, n_points)`; any output pointer may be NULL.
 *
 * # Safety
 * `ds` must come from this library.
 */
enum WeldStatus weld_dataset_shape(const struct WeldDataset *ds,
                                   size_t *n_samples,
                                   size_t *n_steps,
                                   size_t *n_points);

/**
 * Copies snapshot `x_n(t_k)` into `buf`, which must hold `len >= n_points`
 * doubles.
 *
 * # Safety
 * `ds` must come from this library and `buf` point to `len` writable doubles.
 */
enum WeldStatus weld_dataset_snapshot(const struct WeldDataset *ds,
                                      size_t n,
                                      size_t k,
                                      double *buf,
                                      size_t len);

/**
 * Releases a dataset. NULL is ignored.
 *
 * # Safety
 * `ds` must come from this library and not be used afterwards.
 */
void weld_dataset_free(struct WeldDataset *ds);

/**
 * Loads a model directory written by `weldnet train`.
 *
 * # Safety
 * `dir` must be NUL-terminated and `out` a valid pointer.
 */
enum WeldStatus weld_model_load(const char *dir, struct WeldModelHandle **out);

/**
 * Writes `(ambient_dim, n_steps)`; either pointer may be NULL.
 *
 * # Safety
 * `model` must come from this library.
 */
enum WeldStatus weld_model_dims(const struct WeldModelHandle *model,
                                size_t *ambient_dim,
                                size_t *n_steps);

/**
 * Predicts the state at time index `k` from `rows` initial states stored
 * row-major in `x0` (`rows * dim` doubles); writes `rows * dim` doubles to
 * `out`.
 *
 * # Safety
 * `model` must come from this library; `x0` and `out` must each point to
 * `rows * dim` doubles.
 */
enum WeldStatus weld_model_predict(const struct WeldModelHandle *model,
                                   const double *x0,
                                   size_t rows,
                                   size_t dim,
                                   size_t k,
                                   double *out);

/**
 * Releases a model. NULL is ignored.
 *
 * # Safety
 * `model` must come from this library and not be used afterwards.
 */
void weld_model_free(struct WeldModelHandle *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WELDNET_H */
