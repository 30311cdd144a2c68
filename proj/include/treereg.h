/* treereg: C API for training feedforward networks under decision-tree
 * simulability penalties and distilling them into per-region trees.
 *
 * All objects are opaque handles created and destroyed through this API.
 * Functions return TRG_OK on success; on failure they return a status code
 * and leave a human-readable message in trg_last_error() (thread-local).
 * Strings returned through char** out-parameters are heap-allocated and must
 * be released with trg_string_free().
 */
#ifndef TREEREG_H
#define TREEREG_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TRG_API __declspec(dllexport)
#else
#define TRG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum trg_status {
  TRG_OK = 0,
  TRG_ERR_INVALID_ARGUMENT = 1,
  TRG_ERR_SHAPE = 2,
  TRG_ERR_IO = 3,
  TRG_ERR_UNCOVERED_INPUT = 4,
  TRG_ERR_CONTRACT = 5,
  TRG_ERR_NUMERIC = 6,
  TRG_ERR_INTERNAL = 7
} trg_status;

typedef struct trg_dataset trg_dataset;
typedef struct trg_regions trg_regions;
typedef struct trg_model trg_model;
typedef struct trg_trees trg_trees;

TRG_API const char* trg_version(void);
TRG_API const char* trg_status_name(trg_status status);
/* Message from the most recent failing call on this thread. */
TRG_API const char* trg_last_error(void);
TRG_API void trg_string_free(char* s);

/* -- datasets ------------------------------------------------------------ */

/* generator_json: a config object with a "dataset" key, or the dataset
 * object itself, e.g. {"generator":"five_rectangles","seed":7}. Yields the
 * train and test splits plus the generator's region spec. */
TRG_API trg_status trg_generate_dataset(const char* generator_json,
                                        trg_dataset** train_out,
                                        trg_dataset** test_out,
                                        trg_regions** regions_out);

/* Loads a headered CSV and splits it 70/10/20 by seeded shuffle.
 * options_json example: {"label_columns":["y"],"standardize":true,"seed":1}. */
TRG_API trg_status trg_load_csv(const char* path, const char* options_json,
                                trg_dataset** train_out, trg_dataset** val_out,
                                trg_dataset** test_out);

/* Reads a file previously written by trg_dataset_save_csv. */
TRG_API trg_status trg_load_saved_csv(const char* path, trg_dataset** out);

/* regions may be NULL; when given, a region_id column is appended. */
TRG_API trg_status trg_dataset_save_csv(const trg_dataset* dataset,
                                        const trg_regions* regions,
                                        const char* path);

TRG_API trg_status trg_dataset_shape(const trg_dataset* dataset, int* rows,
                                     int* features, int* outputs);
TRG_API void trg_dataset_free(trg_dataset* dataset);

/* -- regions ------------------------------------------------------------- */

TRG_API trg_status trg_regions_kmeans(const trg_dataset* dataset, int k,
                                      uint64_t seed, trg_regions** out);
TRG_API trg_status trg_regions_from_json(const char* json_text,
                                         trg_regions** out);
TRG_API trg_status trg_regions_to_json(const trg_regions* regions,
                                       char** json_out);
TRG_API trg_status trg_regions_count(const trg_regions* regions, int* count);
TRG_API trg_status trg_regions_assign(const trg_regions* regions,
                                      const double* x, int dim,
                                      int* region_out);
TRG_API void trg_regions_free(trg_regions* regions);

/* -- training and evaluation ---------------------------------------------- */

/* config_json carries the {model, regularizer, tree, surrogate} keys; val
 * may be NULL (a validation split is carved from train). history_csv_out and
 * surrogate_csv_out may be NULL when the logs are not wanted. */
TRG_API trg_status trg_train(const char* config_json, const trg_dataset* train,
                             const trg_dataset* val, const trg_regions* regions,
                             trg_model** model_out, char** history_csv_out,
                             char** surrogate_csv_out);

TRG_API trg_status trg_model_save(const trg_model* model, const char* path);
TRG_API trg_status trg_model_load(const char* path, trg_model** out);
TRG_API trg_status trg_model_to_json(const trg_model* model, char** json_out);
TRG_API trg_status trg_model_from_json(const char* json_text, trg_model** out);
TRG_API trg_status trg_model_predict(const trg_model* model, const double* x,
                                     int dim, double* proba_out, int outputs);
TRG_API trg_status trg_model_param_count(const trg_model* model, size_t* count);
TRG_API void trg_model_free(trg_model* model);

/* Metrics as a JSON object: accuracy, f1, auc, eval_apl, fidelity,
 * region_apls, per_output_f1, per_output_auc. */
TRG_API trg_status trg_evaluate(const trg_model* model,
                                const trg_dataset* train,
                                const trg_dataset* test,
                                const trg_regions* regions,
                                const char* config_json, char** metrics_json_out);

/* One pruned tree per nonempty region and output, fit on the model's
 * thresholded predictions over the region's training rows. */
TRG_API trg_status trg_distill(const trg_model* model, const trg_dataset* train,
                               const trg_regions* regions,
                               const char* config_json, trg_trees** out);

TRG_API trg_status trg_trees_shape(const trg_trees* trees, int* regions,
                                   int* outputs);
TRG_API trg_status trg_trees_region_json(const trg_trees* trees, int region,
                                         char** json_out);
/* Routes x to its region and predicts one binary label per output. */
TRG_API trg_status trg_trees_predict(const trg_trees* trees,
                                     const trg_regions* regions,
                                     const double* x, int dim, int* labels_out,
                                     int outputs);
TRG_API void trg_trees_free(trg_trees* trees);

/* Runs the (kind, lambda, seed) grid from config_json's sweep key plus the
 * tree baselines; returns the results table as CSV text. */
TRG_API trg_status trg_sweep(const char* config_json, const trg_dataset* train,
                             const trg_dataset* val, const trg_dataset* test,
                             const trg_regions* regions, char** results_csv_out);

/* Euclidean projection of z onto the probability simplex. */
TRG_API trg_status trg_sparsemax(const double* z, int n, double* out);

#ifdef __cplusplus
}
#endif

#endif /* TREEREG_H */
