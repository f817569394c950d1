#ifndef SUPEUCLID_H
#define SUPEUCLID_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SeStatus {
  SE_STATUS_OK = 0,
  SE_STATUS_NULL_POINTER = 1,
  SE_STATUS_INVALID_ARGUMENT = 2,
  SE_STATUS_DIMENSION = 3,
  SE_STATUS_NUMERIC = 4,
  SE_STATUS_FORMAT = 5,
  SE_STATUS_IO = 6,
  SE_STATUS_EMPTY_CLASS = 7,
  SE_STATUS_BUFFER_TOO_SMALL = 8,
  SE_STATUS_INTERNAL = 9,
  SE_STATUS_PANIC = 10,
} SeStatus;

/**
 * Embedding matrix with optional labels.
 */
typedef struct SeEmbeddings SeEmbeddings;

/**
 * Class means plus the normalization applied when they were fitted.
 */
typedef struct SePrototypes SePrototypes;

/**
 * Metrics for one ID/OoD pairing; OoD is the positive class.
 */
typedef struct SeEvalReport {
  double auroc;
  double fpr95;
  double threshold;
  size_t n_id;
  size_t n_ood;
} SeEvalReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *se_version(void);

/**
 * Message for the most recent failure on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *se_last_error_message(void);

/**
 * Reads a `SEMB` file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SeStatus se_embeddings_load(const char *path, struct SeEmbeddings **out);

/**
 * Copies an `n × d` row-major matrix (and optional labels, −1 for
 * unlabeled/OoD) into a new handle.
 *
 * # Safety
 * `data` must hold `n*d` floats; `labels` is NULL or holds `n` ints.
 */
enum SeStatus se_embeddings_from_f32(const float *data,
                                     size_t n,
                                     size_t d,
                                     const int32_t *labels,
                                     struct SeEmbeddings **out);

/**
 * Writes the handle as a `SEMB` file.
 *
 * # Safety
 * `emb` must be a live handle; `path` a NUL-terminated string.
 */
enum SeStatus se_embeddings_save(const struct SeEmbeddings *emb, const char *path);

/**
 * Row count, or 0 for NULL.
 *
 * # Safety
 * `emb` must be NULL or a live handle.
 */
size_t se_embeddings_len(const struct SeEmbeddings *emb);

/**
 * Row dimension, or 0 for NULL.
 *
 * # Safety
 * `emb` must be NULL or a live handle.
 */
size_t se_embeddings_dim(const struct SeEmbeddings *emb);

/**
 * # Safety
 * `emb` must be NULL or a handle not yet freed.
 */
void se_embeddings_free(struct SeEmbeddings *emb);

/**
 * Fits one mean per class from a labeled handle; `k` is one past the
 * largest label and every class below it must occur. With `normalize`, rows
 * are L2-normalized first, and [`se_score`] repeats that automatically.
 *
 * # Safety
 * `train` must be a live handle; `out` must be writable.
 */
enum SeStatus se_prototypes_fit(const struct SeEmbeddings *train,
                                bool normalize,
                                struct SePrototypes **out);

/**
 * Number of classes, or 0 for NULL.
 *
 * # Safety
 * `protos` must be NULL or a live handle.
 */
size_t se_prototypes_k(const struct SePrototypes *protos);

/**
 * Copies the `k × d` class means, row-major, into `out`.
 *
 * # Safety
 * `protos` must be a live handle; `out` must hold `capacity` doubles.
 */
enum SeStatus se_prototypes_means(const struct SePrototypes *protos, double *out, size_t capacity);

/**
 * # Safety
 * `protos` must be NULL or a handle not yet freed.
 */
void se_prototypes_free(struct SePrototypes *protos);

/**
 * Distance from every row of `feats` to its nearest class mean, written to
 * `out_scores`. Larger means more out-of-distribution.
 *
 * # Safety
 * Handles must be live; `out_scores` must hold `capacity` doubles.
 */
enum SeStatus se_score(const struct SePrototypes *protos,
                       const struct SeEmbeddings *feats,
                       double *out_scores,
                       size_t capacity);

/**
 * AUROC and FPR at 95% TPR with OoD as the positive class.
 *
 * # Safety
 * `id_scores`/`ood_scores` must hold `n_id`/`n_ood` doubles; `out` must be
 * writable.
 */
enum SeStatus se_evaluate(const double *id_scores,
                          size_t n_id,
                          const double *ood_scores,
                          size_t n_ood,
                          struct SeEvalReport *out);

/**
 * Fit on `train`, score `id` and `ood`, evaluate.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum SeStatus se_ingest(const struct SeEmbeddings *train,
                        const struct SeEmbeddings *id,
                        const struct SeEmbeddings *ood,
                        bool normalize,
                        struct SeEvalReport *out);

/**
 * Supervised contrastive loss of `rows` unit embeddings, and optionally its
 * gradient (`rows × d`, row-major) when `out_grad` is non-NULL.
 *
 * # Safety
 * `z` must hold `rows*d` doubles, `labels` `rows` ints, `out_grad` NULL or
 * `rows*d` doubles; `out_loss` must be writable.
 */
enum SeStatus se_scl_loss(const double *z,
                          size_t rows,
                          size_t d,
                          const int32_t *labels,
                          double tau,
                          double *out_loss,
                          double *out_grad);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUPEUCLID_H */
