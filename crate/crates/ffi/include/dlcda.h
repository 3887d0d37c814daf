#ifndef DLCDA_H
#define DLCDA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DlcdaVariant {
  DLCDA_VARIANT_FULL = 0,
  DLCDA_VARIANT_DDA = 1,
  DLCDA_VARIANT_LCR = 2,
} DlcdaVariant;

typedef enum DlcdaKernel {
  DLCDA_KERNEL_NONE = 0,
  DLCDA_KERNEL_LINEAR = 1,
  DLCDA_KERNEL_RBF = 2,
} DlcdaKernel;

/*
 Result codes.
 */
typedef enum DlcdaStatus {
  DLCDA_STATUS_OK = 0,
  DLCDA_STATUS_NULL_POINTER = 1,
  DLCDA_STATUS_INVALID_ARGUMENT = 2,
  DLCDA_STATUS_DATA_ERROR = 3,
  DLCDA_STATUS_SOLVER_ERROR = 4,
  /*
   The requested value does not exist (e.g. accuracy without ground truth).
   */
  DLCDA_STATUS_NO_VALUE = 5,
  /*
   The output buffer is shorter than required.
   */
  DLCDA_STATUS_BUFFER_TOO_SMALL = 6,
  DLCDA_STATUS_PANIC = 7,
} DlcdaStatus;

/*
 Opaque dataset handle.
 */
typedef struct DlcdaDataset DlcdaDataset;

/*
 Opaque fitted-model handle.
 */
typedef struct DlcdaModel DlcdaModel;

/*
 Solver settings. Obtain defaults from [`dlcda_solver_config_default`].
 */
typedef struct DlcdaSolverConfig {
  size_t k;
  double alpha;
  double beta;
  size_t outer_iters;
  size_t inner_iters;
  double epsilon;
  double tol;
  enum DlcdaVariant variant;
  enum DlcdaKernel kernel;
  /*
   RBF bandwidth; any value `<= 0` selects the median heuristic.
   */
  double gamma;
  /*
   Eigen pencil ridge; any value `< 0` selects the default.
   */
  double ridge;
} DlcdaSolverConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message describing the most recent failure on this thread, or an empty
 string. The pointer stays valid until the next call into this library on
 the same thread.
 */
const char *dlcda_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *dlcda_version(void);

struct DlcdaSolverConfig dlcda_solver_config_default(void);

/*
 Copies `n_samples × n_features` sample-major values (and optionally
 `n_samples` labels in `1..=C`) into a new dataset.

 # Safety
 `features` must point to `n_features * n_samples` readable doubles;
 `labels`, when non-null, to `n_samples` readable `uint32_t`; `out` must be
 writable.
 */
enum DlcdaStatus dlcda_dataset_new(const double *features,
                                   size_t n_features,
                                   size_t n_samples,
                                   const uint32_t *labels,
                                   struct DlcdaDataset **out);

/*
 Releases a dataset. Null is ignored.

 # Safety
 `dataset` must come from [`dlcda_dataset_new`] and not be used afterwards.
 */
void dlcda_dataset_free(struct DlcdaDataset *dataset);

/*
 Fits a model. The target's labels, if any, are used for accuracy only.

 # Safety
 All pointers must be valid; `source` and `target` must be live datasets.
 */
enum DlcdaStatus dlcda_fit(const struct DlcdaDataset *source,
                           const struct DlcdaDataset *target,
                           const struct DlcdaSolverConfig *config,
                           struct DlcdaModel **out);

/*
 Releases a model. Null is ignored.

 # Safety
 `model` must come from [`dlcda_fit`] and not be used afterwards.
 */
void dlcda_model_free(struct DlcdaModel *model);

/*
 Number of target samples (length of the prediction buffer).

 # Safety
 `model` must be a live model or null (returns 0).
 */
size_t dlcda_model_target_count(const struct DlcdaModel *model);

/*
 Number of recorded outer iterations.

 # Safety
 `model` must be a live model or null (returns 0).
 */
size_t dlcda_model_iterations(const struct DlcdaModel *model);

/*
 Subspace dimension `k` after clamping.

 # Safety
 `model` must be a live model or null (returns 0).
 */
size_t dlcda_model_dim(const struct DlcdaModel *model);

/*
 Writes the target predictions (labels in `1..=C`).

 # Safety
 `out` must point to `len` writable `uint32_t`.
 */
enum DlcdaStatus dlcda_model_predictions(const struct DlcdaModel *model, uint32_t *out, size_t len);

/*
 Final target accuracy; [`DlcdaStatus::NoValue`] when the target had no
 labels.

 # Safety
 `out` must be writable.
 */
enum DlcdaStatus dlcda_model_final_accuracy(const struct DlcdaModel *model, double *out);

/*
 Writes the per-iteration objective values and, when `accuracy` is
 non-null, target accuracies (NaN where unknown). Both buffers need
 [`dlcda_model_iterations`] entries.

 # Safety
 Non-null buffers must hold `len` writable doubles.
 */
enum DlcdaStatus dlcda_model_history(const struct DlcdaModel *model,
                                     double *objective,
                                     double *accuracy,
                                     size_t len);

/*
 Writes the embedding `Z` (`k` values per sample, source samples first)
 sample-major; needs `k * (n_source + n_target)` entries.

 # Safety
 `out` must hold `len` writable doubles.
 */
enum DlcdaStatus dlcda_model_embedding(const struct DlcdaModel *model, double *out, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DLCDA_H */
