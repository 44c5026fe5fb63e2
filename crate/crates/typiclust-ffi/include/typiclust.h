#ifndef TYPICLUST_H
#define TYPICLUST_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum TcStatus {
  TcStatus_Ok = 0,
  TcStatus_NullArgument = 1,
  TcStatus_Utf8Error = 2,
  TcStatus_IoError = 3,
  TcStatus_ValidationError = 4,
  TcStatus_NumericalError = 5,
  TcStatus_BufferTooSmall = 6,
} TcStatus;

/**
 * Opaque embedding-set handle.
 */
typedef struct TcEmbeddings TcEmbeddings;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *tc_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tc_version(void);

/**
 * Builds an embedding set from a row-major `rows x dims` f32 array.
 */
enum TcStatus tc_embeddings_create(const float *data,
                                   uint64_t rows,
                                   uint64_t dims,
                                   struct TcEmbeddings **out);

/**
 * Loads an EMB1 binary file (or CSV when the path ends in `.csv`).
 */
enum TcStatus tc_embeddings_load(const char *path, struct TcEmbeddings **out);

/**
 * Frees a handle returned by the create/load functions. Null is ignored.
 */
void tc_embeddings_free(struct TcEmbeddings *handle);

uint64_t tc_embeddings_rows(const struct TcEmbeddings *handle);

uint64_t tc_embeddings_dims(const struct TcEmbeddings *handle);

/**
 * Scales every row to unit Euclidean norm in place.
 */
enum TcStatus tc_embeddings_normalize(struct TcEmbeddings *handle);

/**
 * Runs an embeddings-only selection strategy (typiclust_rp, tpc_rand,
 * tpc_inv, tpc_noclust, random, coreset).
 *
 * `labeled` may be null when no indices are labeled yet. `out_indices`
 * must hold at least `budget` slots; the selected count (possibly fewer
 * than `budget` on a small pool) lands in `out_len`.
 */
enum TcStatus tc_select(const struct TcEmbeddings *handle,
                        const char *strategy,
                        uint64_t budget,
                        uint64_t seed,
                        uint64_t k_neighbors,
                        uint64_t max_clusters,
                        uint64_t min_cluster_size,
                        const uint64_t *labeled,
                        uint64_t labeled_len,
                        uint64_t *out_indices,
                        uint64_t *out_len);

/**
 * Uncertainty-family selection (uncertainty, margin, entropy) from a
 * row-stochastic `rows x classes` probability matrix.
 */
enum TcStatus tc_select_with_scores(const float *probs,
                                    uint64_t rows,
                                    uint64_t classes,
                                    const char *strategy,
                                    uint64_t budget,
                                    const uint64_t *labeled,
                                    uint64_t labeled_len,
                                    uint64_t *out_indices,
                                    uint64_t *out_len);

/**
 * Typicality (inverse mean distance to the k nearest neighbors) of every
 * point. `out_scores` must hold one f64 per row.
 */
enum TcStatus tc_typicality(const struct TcEmbeddings *handle,
                            uint64_t k_neighbors,
                            double *out_scores);

/**
 * Total-variation distance between two categorical distributions of
 * equal length.
 */
enum TcStatus tc_tv_distance(const double *first,
                             const double *second,
                             uint64_t classes,
                             double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TYPICLUST_H */
