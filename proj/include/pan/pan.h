/* C interface to the PAN library.
 *
 * Every call returns a pan_status. On failure the message of the last error
 * raised on the calling thread is available from pan_last_error(). Strings
 * handed out through char** parameters are owned by the caller and released
 * with pan_string_free(). Configurations travel as JSON text.
 */
#ifndef PAN_PAN_H
#define PAN_PAN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PAN_API __declspec(dllexport)
#else
#define PAN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pan_status {
  PAN_OK = 0,
  PAN_ERR_INVALID_ARGUMENT = 1,
  PAN_ERR_INDEX_OUT_OF_RANGE = 2,
  PAN_ERR_SELF_LOOP = 3,
  PAN_ERR_GUARD_EXCEEDED = 4,
  PAN_ERR_NOT_CONVERGED = 5,
  PAN_ERR_SHAPE_MISMATCH = 6,
  PAN_ERR_NON_FINITE = 7,
  PAN_ERR_EMPTY_MASK = 8,
  PAN_ERR_STALE_CACHE = 9,
  PAN_ERR_IO = 10,
  PAN_ERR_FORMAT = 11,
  PAN_ERR_VERSION_MISMATCH = 12,
  PAN_ERR_CHECKSUM_MISMATCH = 13,
  PAN_ERR_MASK_OVERLAP = 14,
  PAN_ERR_DIVERGENCE = 15,
  PAN_ERR_INTERNAL = 99
} pan_status;

typedef enum pan_split { PAN_SPLIT_TRAIN = 0, PAN_SPLIT_VAL = 1, PAN_SPLIT_TEST = 2 } pan_split;

typedef struct pan_dataset pan_dataset;
typedef struct pan_propagator pan_propagator;
typedef struct pan_trials pan_trials;
typedef struct pan_grid pan_grid;

PAN_API const char* pan_version(void);
PAN_API const char* pan_status_name(pan_status status);
/* Message of the last failure on this thread; empty when none. */
PAN_API const char* pan_last_error(void);
PAN_API void pan_string_free(char* s);
PAN_API uint32_t pan_crc32(const void* data, size_t size);

/* Datasets (PANDS v1 files). */
PAN_API pan_status pan_dataset_load(const char* path, int normalize_features, pan_dataset** out);
PAN_API void pan_dataset_free(pan_dataset* ds);
/* Node, edge, feature and class counts plus the file checksum. */
PAN_API pan_status pan_dataset_info_json(const pan_dataset* ds, char** out_json);
/* Reads the file and reports every invariant breach instead of stopping at
 * the first. Structural damage (bad header, CRC, ranges) is still an error.
 * *out_ok is 1 when the report lists no problems. */
PAN_API pan_status pan_dataset_validate_file(const char* path, char** out_json, int* out_ok);

/* Propagators. Config keys: method, L, k (explicit weights, length L + 1). */
PAN_API pan_status pan_propagator_config_check(const char* config_json);
PAN_API pan_status pan_propagator_build(const pan_dataset* ds, const char* config_json,
                                        pan_propagator** out);
PAN_API void pan_propagator_free(pan_propagator* p);
PAN_API pan_status pan_propagator_inspect_json(const pan_propagator* p, char** out_json);

/* Training configurations. Keys: method, L, lr, dropout, weight_decay,
 * max_epochs, patience, hidden, seed, k_mode ("fixed" | "backprop"), k.
 * preset may be NULL or one of "cora", "citeseer", "pubmed". */
PAN_API pan_status pan_train_config_default(const char* preset, char** out_json);
/* Normalizes a config (missing keys take defaults) and validates it. */
PAN_API pan_status pan_train_config_check(const char* config_json, char** out_json);

/* Multi-seed training: seeds base_seed .. base_seed + n_trials - 1 on up to
 * `jobs` threads. On PAN_ERR_DIVERGENCE, pan_last_divergence_json() returns
 * the seed and the history recorded up to the failure. */
PAN_API pan_status pan_run_trials(const pan_dataset* ds, const char* config_json, size_t n_trials,
                                  uint64_t base_seed, size_t jobs, pan_trials** out);
PAN_API pan_status pan_last_divergence_json(char** out_json);
PAN_API void pan_trials_free(pan_trials* t);
PAN_API pan_status pan_trials_summary(const pan_trials* t, double* test_mean, double* test_std);
PAN_API pan_status pan_trials_manifest_json(const pan_trials* t, const pan_dataset* ds,
                                            const char* dataset_path, char** out_json);
PAN_API pan_status pan_trials_curves_csv(const pan_trials* t, char** out_csv);
PAN_API pan_status pan_trials_curves_summary_csv(const pan_trials* t, char** out_csv);
/* Writes <dir>/model_seed<S>.json and .bin for every trial. */
PAN_API pan_status pan_trials_save_models(const pan_trials* t, const pan_dataset* ds,
                                          const char* dir);

/* Accuracy of a saved model on one split of a dataset. */
PAN_API pan_status pan_model_evaluate(const char* model_stem, const pan_dataset* ds,
                                      pan_split split, double* out_accuracy);

/* Grid search over k on the simplex with the given step. */
PAN_API pan_status pan_grid_size(size_t cutoff, double step, size_t* out_size);
PAN_API pan_status pan_grid_search(const pan_dataset* ds, const char* config_json, double step,
                                   size_t n_trials, uint64_t base_seed, size_t jobs,
                                   pan_grid** out);
PAN_API void pan_grid_free(pan_grid* g);
PAN_API pan_status pan_grid_csv(const pan_grid* g, char** out_csv);
PAN_API pan_status pan_grid_manifest_json(const pan_grid* g, const pan_dataset* ds,
                                          const char* dataset_path, char** out_json);
/* Row of the winner: {"index", "k", "mean_val_acc", "std_val_acc", ...}. */
PAN_API pan_status pan_grid_best_json(const pan_grid* g, char** out_json);

#ifdef __cplusplus
}
#endif

#endif /* PAN_PAN_H */
