/*
Copyright 2026 The domaudit Authors. All rights reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/
#ifndef DOMAUDIT_DOMAUDIT_H_
#define DOMAUDIT_DOMAUDIT_H_

/* C interface to the domaudit library.
 *
 * Every function returns a da_status. On failure a one-line description is
 * available from da_last_error() on the calling thread. Strings returned
 * through char** out-parameters are owned by the caller and released with
 * da_string_free; id arrays with da_ids_free. Handles are opaque and freed
 * with their matching *_free function (which accepts NULL).
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DA_API __declspec(dllexport)
#else
#define DA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum da_status {
  DA_OK = 0,
  DA_ERR_INVALID_ARGUMENT = 1,
  DA_ERR_IO = 2,
  DA_ERR_FORMAT = 3,
  DA_ERR_UNREACHABLE = 4,
  DA_ERR_NUMERIC = 5,
  DA_ERR_NOT_FOUND = 6,
  DA_ERR_INTERNAL = 7
} da_status;

/* Domain label codes as stored on disk. */
typedef enum da_domain {
  DA_DOMAIN_UNKNOWN = -1,
  DA_DOMAIN_NATURAL = 0,
  DA_DOMAIN_AMBIGUOUS = 1,
  DA_DOMAIN_RENDITION = 2
} da_domain;

typedef enum da_variant { DA_VARIANT_LINEAR = 0, DA_VARIANT_CENTROID = 1, DA_VARIANT_DENSITY_RATIO = 2, DA_VARIANT_KNN = 3 } da_variant;

typedef struct da_store_writer da_store_writer;
typedef struct da_store_reader da_store_reader;
typedef struct da_model da_model;
typedef struct da_calibrated da_calibrated;
typedef struct da_server da_server;

DA_API const char* da_version(void);
DA_API const char* da_last_error(void);
DA_API const char* da_status_name(da_status status);
DA_API void da_string_free(char* s);
DA_API void da_ids_free(uint64_t* ids);

/* Parses "natural", "ambiguous", "rendition" (and short forms). */
DA_API da_status da_parse_domain(const char* name, da_domain* out);
DA_API const char* da_domain_name(da_domain d);

/* FNV-1a 64 over a file's bytes, for provenance records. */
DA_API da_status da_hash_file(const char* path, uint64_t* out);
DA_API uint64_t da_hash_bytes(const void* data, size_t size);

/* ---- embedding store ---- */

DA_API da_status da_store_writer_open(const char* path, uint32_t dimension, const char* source_note,
                                      da_store_writer** out);
DA_API da_status da_store_writer_append(da_store_writer* w, uint64_t id, da_domain label, int32_t class_label,
                                        const float* vector, uint32_t dimension);
DA_API da_status da_store_writer_finish(da_store_writer* w);
DA_API void da_store_writer_free(da_store_writer* w);

DA_API da_status da_store_reader_open(const char* path, da_store_reader** out);
DA_API da_status da_store_reader_info(const da_store_reader* r, uint32_t* dimension, uint64_t* count);
/* Copies the next record; *has_record is 0 at end of store. */
DA_API da_status da_store_reader_next(da_store_reader* r, uint64_t* id, da_domain* label, int32_t* class_label,
                                      float* vector, uint32_t capacity, int* has_record);
DA_API void da_store_reader_free(da_store_reader* r);

/* Text rows "<id> <label> <class> <v1,...,vd>"; vectors are L2-normalized. */
DA_API da_status da_store_import_tsv(const char* tsv_path, uint32_t dimension, const char* store_path,
                                     const char* source_note, uint64_t* count);
DA_API da_status da_store_manifest(const char* store_path, char** manifest_json);
/* Seeded train/val/test split; writes <prefix>.{train,val,test}.embs and returns the split JSON. */
DA_API da_status da_store_split(const char* store_path, uint64_t n_train, uint64_t n_val, uint64_t n_test,
                                uint64_t seed, const char* out_prefix, char** split_json);
DA_API da_status da_store_write_subset(const char* store_path, const uint64_t* ids, size_t n, const char* out_path);
DA_API da_status da_store_ids(const char* store_path, uint64_t** ids, da_domain** labels, size_t* n);
DA_API void da_labels_free(da_domain* labels);

DA_API da_status da_read_id_list(const char* path, uint64_t** ids, size_t* n);
DA_API da_status da_write_id_list(const char* path, const uint64_t* ids, size_t n);

/* ---- domain classifiers ---- */

typedef struct da_train_options {
  da_variant variant;
  const char* model_id;
  /* Classes for linear and centroid models; NULL/0 means natural, ambiguous, rendition. */
  const da_domain* classes;
  size_t n_classes;
  /* Reference class for density-ratio models, target style for kNN models. */
  da_domain target;
  int epochs;
  int batch_size;
  double learning_rate;
  double weight_decay;
  int lr_step_epochs;
  double lr_step_factor;
  uint64_t seed;
  int k;
  double ratio_threshold;
  double centroid_scale;
} da_train_options;

DA_API void da_train_options_default(da_train_options* opts);
DA_API da_status da_model_train(const char* train_store, const da_train_options* opts, da_model** out);
DA_API da_status da_model_load(const char* path, da_model** out);
DA_API da_status da_model_save(const da_model* m, const char* path);
DA_API da_status da_model_to_json(const da_model* m, char** json);
DA_API da_status da_model_score(const da_model* m, da_domain target, const float* x, uint32_t dimension, double* score);
DA_API void da_model_free(da_model* m);

/* ---- calibration ---- */

/* split_path may be NULL. k_max applies to kNN models only (0 = default). */
DA_API da_status da_calibrate(const da_model* m, const char* val_store, da_domain target, double precision,
                              const char* split_path, int k_max, da_calibrated** out);
DA_API da_status da_calibrated_load(const char* path, da_calibrated** out);
DA_API da_status da_calibrated_save(const da_calibrated* c, const char* path);
DA_API da_status da_calibrated_to_json(const da_calibrated* c, char** json);
DA_API da_status da_calibrated_accepts(const da_calibrated* c, const float* x, uint32_t dimension, int* accepted);
DA_API void da_calibrated_free(da_calibrated* c);

/* Highest validation recall among candidates for target; ties keep the first. */
DA_API da_status da_select_best(const da_calibrated* const* candidates, size_t n, da_domain target, size_t* index,
                                int* tied);
/* Precision/recall of a calibrated classifier on a labeled store. */
DA_API da_status da_evaluate(const da_calibrated* c, const char* store_path, char** json);
/* Summary rows (model_id, class, threshold, precision, recall, support); csv != 0 selects CSV. */
DA_API da_status da_calibration_report(const da_calibrated* const* items, size_t n, int csv, char** out);

/* ---- partitioner ---- */

typedef struct da_partition_options {
  size_t chunk_size;
  unsigned threads;
  const char* dataset;
  /* When set, id lists go to <prefix>.{natural,ambiguous,rendition}.ids. */
  const char* ids_prefix;
} da_partition_options;

DA_API void da_partition_options_default(da_partition_options* opts);
DA_API da_status da_partition(const char* store_path, const da_calibrated* natural_clf,
                              const da_calibrated* rendition_clf, const da_partition_options* opts,
                              char** report_json);
/* Aligned text table over CompositionReport JSON documents. */
DA_API da_status da_composition_table(const char* const* report_jsons, size_t n, char** table);
DA_API da_status da_composition_sweep(const char* store_path, const char* val_store,
                                      const da_model* const* natural_family, size_t n_natural,
                                      const da_model* const* rendition_family, size_t n_rendition,
                                      const double* levels, size_t n_levels, const da_partition_options* opts,
                                      char** sweep_json);
DA_API da_status da_clean_testset(const char* test_store, const da_calibrated* natural_clf,
                                  const da_calibrated* rendition_clf, da_domain intended, const char* source,
                                  char** json);

/* ---- curation ---- */

typedef struct da_mix_spec {
  const uint64_t* natural_pool;
  size_t n_natural_pool;
  const uint64_t* rendition_pool;
  size_t n_rendition_pool;
  /* add != 0 selects Add mode (n_natural + n_rendition ids); otherwise Replace (n_total ids). */
  int add;
  uint64_t n_total;
  uint64_t n_rendition;
  uint64_t n_natural;
  uint64_t seed;
} da_mix_spec;

DA_API da_status da_build_mix(const da_mix_spec* spec, uint64_t** ids, size_t* n, char** spec_json);
DA_API da_status da_rendition_count(uint64_t n_total, double rendition_parts, double natural_parts, uint64_t* out);
DA_API da_status da_subsample_random(const uint64_t* pool, size_t n_pool, uint64_t n, uint64_t seed, uint64_t** ids,
                                     size_t* n_out);
DA_API da_status da_subsample_balanced(const uint64_t* pool, const da_domain* labels, size_t n_pool,
                                       uint64_t per_class, uint64_t seed, uint64_t** ids, size_t* n_out);

/* ---- robustness metrics ---- */

DA_API da_status da_relative_accuracy(double acc_treated, double acc_baseline, double* ratio);
/* Table is CSV or JSON (chosen by content). test_sets is comma-separated or NULL for all. */
DA_API da_status da_relative_accuracy_table(const char* table_path, const char* treated, const char* baseline,
                                            const char* test_sets, char** json);
/* groups_path may be NULL for the default groups; baseline_models is comma-separated or NULL for all. */
DA_API da_status da_robustness(const char* table_path, const char* groups_path, const char* transform, int clamp,
                               const char* baseline_models, char** report_json, char** plot_csv);

/* ---- synthlab ---- */

/* config_text uses "key = value" lines; returns the resolved config as JSON. */
DA_API da_status da_synth(const char* config_text, const char* store_path, char** config_json);
DA_API da_status da_experiment(const char* store_path, const char* spec_json, const char* provenance_json,
                               char** result_json, char** result_csv);

/* ---- annotation ---- */

typedef struct da_server_options {
  const char* store_path;
  const char* label_dir;
  const char* image_dir;
  const char* ui_dir;
  const char* host;
  int port;
  const char* default_annotator;
  /* Optional pre-labeling pair; both or neither. */
  const da_calibrated* natural_clf;
  const da_calibrated* rendition_clf;
} da_server_options;

DA_API void da_server_options_default(da_server_options* opts);
DA_API da_status da_server_start(const da_server_options* opts, da_server** out, int* bound_port);
DA_API da_status da_server_wait(da_server* s);
DA_API da_status da_server_stop(da_server* s);
DA_API void da_server_free(da_server* s);

DA_API da_status da_merge_annotations(const char* const* label_files, size_t n, const char* reference, char** json);

#ifdef __cplusplus
}
#endif

#endif  // DOMAUDIT_DOMAUDIT_H_
