#ifndef SNOREGAN_H
#define SNOREGAN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SnoreganStatus {
  SNOREGAN_STATUS_OK = 0,
  SNOREGAN_STATUS_NULL_POINTER = 1,
  SNOREGAN_STATUS_INVALID_ARGUMENT = 2,
  SNOREGAN_STATUS_DIMENSION_MISMATCH = 3,
  SNOREGAN_STATUS_IO = 4,
  SNOREGAN_STATUS_FORMAT = 5,
  SNOREGAN_STATUS_RUNTIME = 6,
  SNOREGAN_STATUS_PANIC = 7,
} SnoreganStatus;

/*
 Trained scGAN. Create with [`snoregan_model_load`], release with
 [`snoregan_model_free`].
 */
typedef struct SnoreganModel SnoreganModel;

/*
 Message of the last failed call on this thread, or null. Valid until the
 next call into the library on this thread.
 */
const char *snoregan_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *snoregan_version(void);

/*
 Loads a model saved by `train-gan`.

 # Safety
 `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SnoreganStatus snoregan_model_load(const char *path, struct SnoreganModel **out);

/*
 Releases a model; null is ignored.

 # Safety
 `model` must come from [`snoregan_model_load`] and not be used afterwards.
 */
void snoregan_model_free(struct SnoreganModel *model);

/*
 Class count, feature width and sequence length (0 for static vectors).

 # Safety
 All pointers must be valid.
 */
enum SnoreganStatus snoregan_model_shape(const struct SnoreganModel *model,
                                         size_t *num_classes,
                                         size_t *feature_dim,
                                         size_t *sequence_length);

/*
 Draws one sample conditioned on `class` into `out` (`feature_dim` values,
 or `sequence_length × feature_dim` row-major for sequences).

 # Safety
 `out` must be valid for `out_len` writes.
 */
enum SnoreganStatus snoregan_model_generate(const struct SnoreganModel *model,
                                            size_t class_,
                                            uint64_t seed,
                                            double *out,
                                            size_t out_len);

/*
 Discriminator argmax for `x` under condition `class`; the fake output has
 index `num_classes` (index 1 of a binary cgan discriminator).

 # Safety
 `x` must be valid for `len` reads and `predicted` for one write.
 */
enum SnoreganStatus snoregan_model_discriminate(const struct SnoreganModel *model,
                                                const double *x,
                                                size_t len,
                                                size_t class_,
                                                size_t *predicted);

/*
 Alternation threshold `max(decay^i + offset, floor)`.

 # Safety
 `out` must be valid for one write.
 */
enum SnoreganStatus snoregan_threshold(double decay,
                                       double offset,
                                       double floor,
                                       size_t i,
                                       double *out);

/*
 Unweighted average recall of `n` predictions over `k` classes.

 # Safety
 `predictions` and `labels` must be valid for `n` reads, `out` for one write.
 */
enum SnoreganStatus snoregan_uar(const size_t *predictions,
                                 const size_t *labels,
                                 size_t n,
                                 size_t k,
                                 double *out);

/*
 Bag-of-audio-words histogram of `rows × cols` frames (row-major) over a
 `size × cols` codebook with `n` assignments per frame; writes `size` values.

 # Safety
 Buffers must be valid for the stated lengths.
 */
enum SnoreganStatus snoregan_boaw(const double *frames,
                                  size_t rows,
                                  size_t cols,
                                  const double *codebook,
                                  size_t size,
                                  size_t n,
                                  double *out);

#endif  /* SNOREGAN_H */
