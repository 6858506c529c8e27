/* Amortized community detection: C interface.
 *
 * Handles are opaque and owned by the caller; free them with the matching
 * *_free function. Every call returns an acd_status; on failure the message
 * is available from acd_last_error() on the same thread.
 */
#ifndef ACD_ACD_H
#define ACD_ACD_H

#include <stddef.h>
#include <stdint.h>

#if defined(ACD_BUILDING_LIBRARY)
#define ACD_API __attribute__((visibility("default")))
#else
#define ACD_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum acd_status {
  ACD_OK = 0,
  ACD_ERR_IO = 1,        /* unreadable or unwritable file */
  ACD_ERR_CONFIG = 2,    /* invalid configuration or arguments */
  ACD_ERR_NUMERICAL = 3, /* non-finite loss during training */
  ACD_ERR_INTERNAL = 4
} acd_status;

typedef struct acd_model acd_model;
typedef struct acd_dataset acd_dataset;

/* Optional overrides shared by the run functions. Zero-initialize with acd_options_init. */
typedef struct acd_options {
  int has_seed;
  uint64_t seed;
  int has_samples;
  uint64_t samples;
  const char* family;     /* gen-data: overrides the config's family */
  const char* checkpoint; /* trained model file */
  const char* data;       /* dataset file (JSONL) */
} acd_options;

ACD_API const char* acd_version(void);
ACD_API const char* acd_status_string(acd_status status);
ACD_API const char* acd_last_error(void);
/* Human-readable summary of the last successful run_* call on this thread. */
ACD_API const char* acd_last_summary(void);
ACD_API void acd_options_init(acd_options* opts);

/* Command-level entry points. Inputs are validated before anything is written.
 * infer also writes <stem>_samples.jsonl (all samples and MAP labels per graph);
 * sweep also writes <stem>_threshold.csv and <stem>.svg. */
ACD_API acd_status acd_run_gen_data(const char* config_path, const acd_options* opts, const char* out_path);
ACD_API acd_status acd_run_train(const char* config_path, const acd_options* opts, const char* out_dir);
ACD_API acd_status acd_run_infer(const char* config_path, const acd_options* opts, const char* out_csv);
ACD_API acd_status acd_run_sweep(const char* config_path, const acd_options* opts, const char* out_csv);
ACD_API acd_status acd_run_calibrate(const char* config_path, const acd_options* opts, const char* out_csv);
ACD_API acd_status acd_run_bench(const char* config_path, const acd_options* opts, const char* out_csv);
ACD_API acd_status acd_run_uncertainty(const char* config_path, const acd_options* opts, const char* out_csv);

/* Datasets. */
ACD_API acd_status acd_dataset_load(const char* path, acd_dataset** out);
ACD_API void acd_dataset_free(acd_dataset* ds);
ACD_API size_t acd_dataset_size(const acd_dataset* ds);
ACD_API acd_status acd_dataset_graph_info(const acd_dataset* ds, size_t index, size_t* n_nodes, size_t* n_clusters);
/* Copies the ground-truth labels (1-based) of one graph; `labels` holds n_nodes entries. */
ACD_API acd_status acd_dataset_labels(const acd_dataset* ds, size_t index, int32_t* labels);

/* Models. */
ACD_API acd_status acd_model_load(const char* checkpoint_path, acd_model** out);
ACD_API void acd_model_free(acd_model* model);
/* JSON description of the architecture; valid until the model is freed. */
ACD_API const char* acd_model_describe(const acd_model* model);
/* Draws `samples` posterior samples for one graph and writes the MAP labeling
 * (n_nodes entries, canonical 1-based) and its score. */
ACD_API acd_status acd_model_map(const acd_model* model, const acd_dataset* ds, size_t index, size_t samples,
                                 uint64_t seed, int32_t* labels, double* score);

/* Metrics over two labelings of length n. */
ACD_API acd_status acd_ami(const int32_t* a, const int32_t* b, size_t n, double* out);
ACD_API acd_status acd_ari(const int32_t* a, const int32_t* b, size_t n, double* out);

#ifdef __cplusplus
}
#endif

#endif
