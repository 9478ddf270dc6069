#ifndef DECOPT_H
#define DECOPT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DecoptStatus {
  DECOPT_STATUS_OK = 0,
  DECOPT_STATUS_NULL_ARGUMENT = 1,
  DECOPT_STATUS_INVALID_UTF8 = 2,
  DECOPT_STATUS_INVALID_CONFIG = 3,
  DECOPT_STATUS_INVALID_GRAPH = 4,
  DECOPT_STATUS_PRECONDITION = 5,
  DECOPT_STATUS_NUMERICAL = 6,
  DECOPT_STATUS_IO = 7,
  DECOPT_STATUS_OUT_OF_RANGE = 8,
  DECOPT_STATUS_PANIC = 9,
} DecoptStatus;

typedef enum DecoptRunStatus {
  DECOPT_RUN_STATUS_RUNNING = 0,
  DECOPT_RUN_STATUS_CONVERGED = 1,
  DECOPT_RUN_STATUS_DIVERGED = 2,
  DECOPT_RUN_STATUS_MAX_ITERS = 3,
} DecoptRunStatus;

/**
 * Opaque graph handle.
 */
typedef struct DecoptGraph DecoptGraph;

/**
 * Opaque handle to a finished experiment (all replicates).
 */
typedef struct DecoptRun DecoptRun;

typedef struct DecoptCounters {
  uint64_t comm_rounds;
  uint64_t grad_eval_rounds;
  uint64_t sample_grad_evals;
} DecoptCounters;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *decopt_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *decopt_version(void);

/**
 * Builds a graph from a JSON spec such as
 * `{"type": "random_regular", "n": 32, "degree": 5, "seed": 1}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum DecoptStatus decopt_graph_from_json(const char *json, struct DecoptGraph **out);

/**
 * # Safety
 * `graph` must come from [`decopt_graph_from_json`]; `out` must be writable.
 */
enum DecoptStatus decopt_graph_num_nodes(const struct DecoptGraph *graph, size_t *out);

/**
 * # Safety
 * `graph` must come from [`decopt_graph_from_json`]; `out` must be writable.
 */
enum DecoptStatus decopt_graph_num_edges(const struct DecoptGraph *graph, size_t *out);

/**
 * `λ₂(L) / λ_max(L)` of the graph Laplacian.
 *
 * # Safety
 * `graph` must come from [`decopt_graph_from_json`]; `out` must be writable.
 */
enum DecoptStatus decopt_graph_laplacian_ratio(const struct DecoptGraph *graph, double *out);

/**
 * # Safety
 * `graph` must come from [`decopt_graph_from_json`] or be null; it must not
 * be used afterwards.
 */
void decopt_graph_free(struct DecoptGraph *graph);

/**
 * Runs every replicate of an experiment config (same JSON as the CLI).
 * Divergence is a result, not an error.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum DecoptStatus decopt_run_from_json(const char *config_json, struct DecoptRun **out);

/**
 * # Safety
 * `run` must come from [`decopt_run_from_json`]; `out` must be writable.
 */
enum DecoptStatus decopt_run_replicates(const struct DecoptRun *run, size_t *out);

/**
 * # Safety
 * `run` must come from [`decopt_run_from_json`]; `out` must be writable.
 */
enum DecoptStatus decopt_run_median_final_gap(const struct DecoptRun *run, double *out);

/**
 * # Safety
 * `run` must come from [`decopt_run_from_json`]; `out` must be writable.
 */
enum DecoptStatus decopt_run_final_gap(const struct DecoptRun *run,
                                       size_t replicate_index,
                                       double *out);

/**
 * # Safety
 * `run` must come from [`decopt_run_from_json`]; `out` must be writable.
 */
enum DecoptStatus decopt_run_status(const struct DecoptRun *run,
                                    size_t replicate_index,
                                    enum DecoptRunStatus *out);

/**
 * # Safety
 * `run` must come from [`decopt_run_from_json`]; `out` must be writable.
 */
enum DecoptStatus decopt_run_counters(const struct DecoptRun *run,
                                      size_t replicate_index,
                                      struct DecoptCounters *out);

/**
 * Summary as JSON; release with [`decopt_string_free`].
 *
 * # Safety
 * `run` must come from [`decopt_run_from_json`]; `out` must be writable.
 */
enum DecoptStatus decopt_run_summary_json(const struct DecoptRun *run, char **out);

/**
 * Writes `<algorithm>_r<k>.csv` per replicate and `summary.json` to `dir`.
 *
 * # Safety
 * `run` must come from [`decopt_run_from_json`]; `dir` must be a
 * NUL-terminated string.
 */
enum DecoptStatus decopt_run_write_outputs(const struct DecoptRun *run, const char *dir);

/**
 * # Safety
 * `run` must come from [`decopt_run_from_json`] or be null; it must not be
 * used afterwards.
 */
void decopt_run_free(struct DecoptRun *run);

/**
 * Runs a verification suite (`equivalence`, `counterexamples`, `gradients`,
 * `oracles`, `topology` or `all`) and reports the number of checks.
 *
 * # Safety
 * `suite` must be a NUL-terminated string; `passed` and `total` writable.
 */
enum DecoptStatus decopt_verify(const char *suite, size_t *passed, size_t *total);

/**
 * # Safety
 * `s` must come from this library or be null.
 */
void decopt_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DECOPT_H */
