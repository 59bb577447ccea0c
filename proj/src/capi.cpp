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
#include "domaudit/domaudit.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "domaudit/annotation.hpp"
#include "domaudit/calibration.hpp"
#include "domaudit/classifiers.hpp"
#include "domaudit/curation.hpp"
#include "domaudit/embedding_store.hpp"
#include "domaudit/partitioner.hpp"
#include "domaudit/robustness.hpp"
#include "domaudit/synthlab.hpp"

#ifndef DOMAUDIT_VERSION
#define DOMAUDIT_VERSION "0.0.0"
#endif

using namespace domaudit;

struct da_store_writer {
  std::unique_ptr<StoreWriter> writer;
};
struct da_store_reader {
  std::unique_ptr<StoreReader> reader;
};
struct da_model {
  DomainClassifier model;
};
struct da_calibrated {
  CalibratedClassifier clf;
};
struct da_server {
  std::unique_ptr<AnnotationService> service;
  std::unique_ptr<AnnotationServer> server;
};

namespace {

thread_local std::string g_last_error;

da_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return DA_ERR_INVALID_ARGUMENT;
    case ErrorCode::kIo: return DA_ERR_IO;
    case ErrorCode::kFormat: return DA_ERR_FORMAT;
    case ErrorCode::kUnreachable: return DA_ERR_UNREACHABLE;
    case ErrorCode::kNumeric: return DA_ERR_NUMERIC;
    case ErrorCode::kNotFound: return DA_ERR_NOT_FOUND;
  }
  return DA_ERR_INTERNAL;
}

// Runs body, translating exceptions into status codes and the thread's last error.
template <typename F>
da_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return DA_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return DA_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DA_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::kInvalidArgument, what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

template <typename T>
T* dup_array(const std::vector<T>& v) {
  T* out = static_cast<T*>(std::malloc(std::max<size_t>(1, v.size()) * sizeof(T)));
  if (!out) throw std::bad_alloc();
  if (!v.empty()) std::memcpy(out, v.data(), v.size() * sizeof(T));
  return out;
}

DomainLabel to_domain(da_domain d) {
  const int code = static_cast<int>(d);
  if (!is_valid_domain_code(code)) throw Error(ErrorCode::kInvalidArgument, "invalid domain code " + std::to_string(code));
  return static_cast<DomainLabel>(code);
}

std::string str_or_empty(const char* s) { return s ? std::string(s) : std::string(); }

std::vector<std::string> split_list(const char* s) {
  std::vector<std::string> out;
  if (!s) return out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

AccuracyTable load_table(const char* path) {
  const std::string text = read_text_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && (text[first] == '{' || text[first] == '[')) return AccuracyTable::from_json(text);
  return AccuracyTable::from_csv(text);
}

PartitionOptions to_partition_options(const da_partition_options* opts) {
  PartitionOptions o;
  if (opts) {
    if (opts->chunk_size) o.chunk_size = opts->chunk_size;
    o.threads = opts->threads ? opts->threads : 1;
    o.dataset = str_or_empty(opts->dataset);
    o.collect_ids = opts->ids_prefix != nullptr;
  }
  return o;
}

}  // namespace

extern "C" {

const char* da_version(void) { return DOMAUDIT_VERSION; }

const char* da_last_error(void) { return g_last_error.c_str(); }

const char* da_status_name(da_status status) {
  switch (status) {
    case DA_OK: return "ok";
    case DA_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case DA_ERR_IO: return "io";
    case DA_ERR_FORMAT: return "format";
    case DA_ERR_UNREACHABLE: return "unreachable";
    case DA_ERR_NUMERIC: return "numeric";
    case DA_ERR_NOT_FOUND: return "not_found";
    case DA_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

void da_string_free(char* s) { std::free(s); }
void da_ids_free(uint64_t* ids) { std::free(ids); }
void da_labels_free(da_domain* labels) { std::free(labels); }

da_status da_parse_domain(const char* name, da_domain* out) {
  return guarded([&] {
    require(name && out, "null argument");
    *out = static_cast<da_domain>(parse_domain(name));
  });
}

const char* da_domain_name(da_domain d) { return domain_name(static_cast<DomainLabel>(d)); }

uint64_t da_hash_bytes(const void* data, size_t size) {
  uint64_t h = 0xcbf29ce484222325ULL;
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

da_status da_hash_file(const char* path, uint64_t* out) {
  return guarded([&] {
    require(path && out, "null argument");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, std::string("cannot open ") + path);
    uint64_t h = 0xcbf29ce484222325ULL;
    std::vector<char> buf(1 << 16);
    while (in) {
      in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
      const auto got = static_cast<size_t>(in.gcount());
      for (size_t i = 0; i < got; ++i) {
        h ^= static_cast<unsigned char>(buf[i]);
        h *= 0x100000001b3ULL;
      }
    }
    *out = h;
  });
}

// ---- store ----

da_status da_store_writer_open(const char* path, uint32_t dimension, const char* source_note,
                                      da_store_writer** out) {
  return guarded([&] {
    require(path && out, "null argument");
    auto w = std::make_unique<da_store_writer>();
    w->writer = std::make_unique<StoreWriter>(path, dimension, str_or_empty(source_note));
    *out = w.release();
  });
}

da_status da_store_writer_append(da_store_writer* w, uint64_t id, da_domain label, int32_t class_label,
                                 const float* vector, uint32_t dimension) {
  return guarded([&] {
    require(w && w->writer && vector, "null argument");
    w->writer->append(id, std::span<const float>(vector, dimension), to_domain(label), class_label);
  });
}

da_status da_store_writer_finish(da_store_writer* w) {
  return guarded([&] {
    require(w && w->writer, "null argument");
    w->writer->finish();
  });
}

void da_store_writer_free(da_store_writer* w) { delete w; }

da_status da_store_reader_open(const char* path, da_store_reader** out) {
  return guarded([&] {
    require(path && out, "null argument");
    auto r = std::make_unique<da_store_reader>();
    r->reader = std::make_unique<StoreReader>(path);
    *out = r.release();
  });
}

da_status da_store_reader_info(const da_store_reader* r, uint32_t* dimension, uint64_t* count) {
  return guarded([&] {
    require(r && r->reader, "null argument");
    if (dimension) *dimension = r->reader->dimension();
    if (count) *count = r->reader->count();
  });
}

da_status da_store_reader_next(da_store_reader* r, uint64_t* id, da_domain* label, int32_t* class_label,
                               float* vector, uint32_t capacity, int* has_record) {
  return guarded([&] {
    require(r && r->reader && has_record, "null argument");
    require(!vector || capacity >= r->reader->dimension(), "vector buffer smaller than store dimension");
    RecordView view;
    *has_record = r->reader->next(view) ? 1 : 0;
    if (!*has_record) return;
    if (id) *id = view.id;
    if (label) *label = static_cast<da_domain>(view.domain_label);
    if (class_label) *class_label = view.class_label;
    if (vector) std::memcpy(vector, view.vector.data(), view.vector.size() * sizeof(float));
  });
}

void da_store_reader_free(da_store_reader* r) { delete r; }

da_status da_store_import_tsv(const char* tsv_path, uint32_t dimension, const char* store_path,
                              const char* source_note, uint64_t* count) {
  return guarded([&] {
    require(tsv_path && store_path, "null argument");
    const auto m = import_tsv(tsv_path, dimension, store_path, str_or_empty(source_note));
    if (count) *count = m.count;
  });
}

da_status da_store_manifest(const char* store_path, char** manifest_json) {
  return guarded([&] {
    require(store_path && manifest_json, "null argument");
    StoreReader reader(store_path);
    StoreManifest m;
    m.dimension = reader.dimension();
    RecordView view;
    while (reader.next(view)) {
      ++m.count;
      ++m.label_summary[static_cast<int>(view.domain_label) + 1];
    }
    const auto sidecar = manifest_path(store_path);
    if (std::filesystem::exists(sidecar)) m.source_note = StoreManifest::from_json(read_text_file(sidecar)).source_note;
    *manifest_json = dup_string(m.to_json());
  });
}

da_status da_store_split(const char* store_path, uint64_t n_train, uint64_t n_val, uint64_t n_test, uint64_t seed,
                         const char* out_prefix, char** split_json) {
  return guarded([&] {
    require(store_path && out_prefix, "null argument");
    const SplitAssignment split = split_store(store_path, n_train, n_val, n_test, seed);
    const std::string prefix = out_prefix;
    const std::string note = std::string("split of ") + std::filesystem::path(store_path).filename().string();
    write_subset(store_path, split.train_ids, prefix + ".train.embs", note + " (train)");
    write_subset(store_path, split.val_ids, prefix + ".val.embs", note + " (val)");
    write_subset(store_path, split.test_ids, prefix + ".test.embs", note + " (test)");
    if (split_json) *split_json = dup_string(split.to_json());
  });
}

da_status da_store_write_subset(const char* store_path, const uint64_t* ids, size_t n, const char* out_path) {
  return guarded([&] {
    require(store_path && out_path && (ids || n == 0), "null argument");
    write_subset(store_path, std::span<const uint64_t>(ids, n), out_path);
  });
}

da_status da_store_ids(const char* store_path, uint64_t** ids, da_domain** labels, size_t* n) {
  return guarded([&] {
    require(store_path && ids && n, "null argument");
    StoreReader reader(store_path);
    std::vector<uint64_t> out_ids;
    std::vector<da_domain> out_labels;
    RecordView view;
    while (reader.next(view)) {
      out_ids.push_back(view.id);
      out_labels.push_back(static_cast<da_domain>(view.domain_label));
    }
    *ids = dup_array(out_ids);
    if (labels) *labels = dup_array(out_labels);
    *n = out_ids.size();
  });
}

da_status da_read_id_list(const char* path, uint64_t** ids, size_t* n) {
  return guarded([&] {
    require(path && ids && n, "null argument");
    const auto v = read_id_list(path);
    *ids = dup_array(v);
    *n = v.size();
  });
}

da_status da_write_id_list(const char* path, const uint64_t* ids, size_t n) {
  return guarded([&] {
    require(path && (ids || n == 0), "null argument");
    write_id_list(path, std::span<const uint64_t>(ids, n));
  });
}

// ---- classifiers ----

void da_train_options_default(da_train_options* opts) {
  if (!opts) return;
  const TrainRequest defaults;
  opts->variant = DA_VARIANT_LINEAR;
  opts->model_id = nullptr;
  opts->classes = nullptr;
  opts->n_classes = 0;
  opts->target = DA_DOMAIN_NATURAL;
  opts->epochs = defaults.config.epochs;
  opts->batch_size = defaults.config.batch_size;
  opts->learning_rate = defaults.config.learning_rate;
  opts->weight_decay = defaults.config.weight_decay;
  opts->lr_step_epochs = defaults.config.lr_step_epochs;
  opts->lr_step_factor = defaults.config.lr_step_factor;
  opts->seed = defaults.config.seed;
  opts->k = defaults.k;
  opts->ratio_threshold = defaults.ratio_threshold;
  opts->centroid_scale = defaults.centroid_scale;
}

da_status da_model_train(const char* train_store, const da_train_options* opts, da_model** out) {
  return guarded([&] {
    require(train_store && opts && out, "null argument");
    require(opts->variant >= DA_VARIANT_LINEAR && opts->variant <= DA_VARIANT_KNN, "invalid model variant");
    TrainRequest req;
    req.variant = static_cast<ModelVariant>(opts->variant);
    req.model_id = str_or_empty(opts->model_id);
    for (size_t i = 0; i < opts->n_classes; ++i) req.classes.push_back(to_domain(opts->classes[i]));
    req.target = to_domain(opts->target);
    req.config.epochs = opts->epochs;
    req.config.batch_size = opts->batch_size;
    req.config.learning_rate = opts->learning_rate;
    req.config.weight_decay = opts->weight_decay;
    req.config.lr_step_epochs = opts->lr_step_epochs;
    req.config.lr_step_factor = opts->lr_step_factor;
    req.config.seed = opts->seed;
    req.k = opts->k;
    req.ratio_threshold = opts->ratio_threshold;
    req.centroid_scale = opts->centroid_scale;
    const auto records = read_store(train_store);
    auto m = std::make_unique<da_model>();
    m->model = train_classifier(records, req);
    *out = m.release();
  });
}

da_status da_model_load(const char* path, da_model** out) {
  return guarded([&] {
    require(path && out, "null argument");
    auto m = std::make_unique<da_model>();
    m->model = DomainClassifier::from_json(read_text_file(path));
    *out = m.release();
  });
}

da_status da_model_save(const da_model* m, const char* path) {
  return guarded([&] {
    require(m && path, "null argument");
    write_text_file_atomic(path, m->model.to_json());
  });
}

da_status da_model_to_json(const da_model* m, char** json) {
  return guarded([&] {
    require(m && json, "null argument");
    *json = dup_string(m->model.to_json());
  });
}

da_status da_model_score(const da_model* m, da_domain target, const float* x, uint32_t dimension, double* score) {
  return guarded([&] {
    require(m && x && score, "null argument");
    require(dimension == m->model.dimension(), "vector dimension does not match model");
    *score = m->model.score(to_domain(target), std::span<const float>(x, dimension));
  });
}

void da_model_free(da_model* m) { delete m; }

// ---- calibration ----

da_status da_calibrate(const da_model* m, const char* val_store, da_domain target, double precision,
                       const char* split_path, int k_max, da_calibrated** out) {
  return guarded([&] {
    require(m && val_store && out, "null argument");
    const auto val = read_store(val_store);
    std::unique_ptr<SplitAssignment> split;
    if (split_path) split = std::make_unique<SplitAssignment>(SplitAssignment::from_json(read_text_file(split_path)));
    auto c = std::make_unique<da_calibrated>();
    if (m->model.variant() == ModelVariant::Knn && k_max > 0) {
      c->clf = calibrate_knn(m->model, val, to_domain(target), precision, k_max);
    } else {
      c->clf = calibrate(m->model, val, to_domain(target), precision, split.get());
    }
    *out = c.release();
  });
}

da_status da_calibrated_load(const char* path, da_calibrated** out) {
  return guarded([&] {
    require(path && out, "null argument");
    auto c = std::make_unique<da_calibrated>();
    c->clf = CalibratedClassifier::from_json(read_text_file(path));
    *out = c.release();
  });
}

da_status da_calibrated_save(const da_calibrated* c, const char* path) {
  return guarded([&] {
    require(c && path, "null argument");
    write_text_file_atomic(path, c->clf.to_json());
  });
}

da_status da_calibrated_to_json(const da_calibrated* c, char** json) {
  return guarded([&] {
    require(c && json, "null argument");
    *json = dup_string(c->clf.to_json());
  });
}

da_status da_calibrated_accepts(const da_calibrated* c, const float* x, uint32_t dimension, int* accepted) {
  return guarded([&] {
    require(c && x && accepted, "null argument");
    require(dimension == c->clf.dimension(), "vector dimension does not match classifier");
    *accepted = c->clf.accepts(std::span<const float>(x, dimension)) ? 1 : 0;
  });
}

void da_calibrated_free(da_calibrated* c) { delete c; }

da_status da_select_best(const da_calibrated* const* candidates, size_t n, da_domain target, size_t* index,
                         int* tied) {
  return guarded([&] {
    require(candidates && index, "null argument");
    std::vector<CalibratedClassifier> list;
    for (size_t i = 0; i < n; ++i) {
      require(candidates[i] != nullptr, "null candidate");
      list.push_back(candidates[i]->clf);
    }
    const Selection s = select_best(list, to_domain(target));
    *index = s.index;
    if (tied) *tied = s.tied.size() > 1 ? 1 : 0;
  });
}

da_status da_evaluate(const da_calibrated* c, const char* store_path, char** json) {
  return guarded([&] {
    require(c && store_path && json, "null argument");
    const auto records = read_store(store_path);
    const Evaluation e = evaluate(c->clf, records);
    std::ostringstream out;
    out.precision(17);
    out << "{\n  \"model_id\": \"" << c->clf.model.model_id << "\",\n  \"class\": \"" << domain_name(e.target)
        << "\",\n  \"precision\": " << e.precision << ",\n  \"recall\": " << e.recall << ",\n  \"tp\": " << e.tp
        << ",\n  \"fp\": " << e.fp << ",\n  \"fn\": " << e.fn << ",\n  \"support\": " << e.support
        << ",\n  \"zero_support\": " << (e.zero_support ? "true" : "false") << "\n}\n";
    *json = dup_string(out.str());
  });
}

da_status da_calibration_report(const da_calibrated* const* items, size_t n, int csv, char** out) {
  return guarded([&] {
    require((items || n == 0) && out, "null argument");
    std::vector<CalibrationRow> rows;
    for (size_t i = 0; i < n; ++i) {
      require(items[i] != nullptr, "null classifier");
      rows.push_back(calibration_row(items[i]->clf));
    }
    *out = dup_string(csv ? calibration_report_csv(rows) : calibration_report_json(rows));
  });
}

// ---- partitioner ----

void da_partition_options_default(da_partition_options* opts) {
  if (!opts) return;
  const PartitionOptions defaults;
  opts->chunk_size = defaults.chunk_size;
  opts->threads = defaults.threads;
  opts->dataset = nullptr;
  opts->ids_prefix = nullptr;
}

da_status da_partition(const char* store_path, const da_calibrated* natural_clf, const da_calibrated* rendition_clf,
                       const da_partition_options* opts, char** report_json) {
  return guarded([&] {
    require(store_path && natural_clf && rendition_clf && report_json, "null argument");
    const PartitionResult result = partition_store(store_path, natural_clf->clf, rendition_clf->clf,
                                                   to_partition_options(opts));
    if (opts && opts->ids_prefix) write_partition_ids(result, opts->ids_prefix);
    *report_json = dup_string(result.report.to_json());
  });
}

da_status da_composition_table(const char* const* report_jsons, size_t n, char** table) {
  return guarded([&] {
    require((report_jsons || n == 0) && table, "null argument");
    std::vector<CompositionReport> reports;
    for (size_t i = 0; i < n; ++i) reports.push_back(CompositionReport::from_json(report_jsons[i]));
    *table = dup_string(composition_table(reports));
  });
}

da_status da_composition_sweep(const char* store_path, const char* val_store, const da_model* const* natural_family,
                               size_t n_natural, const da_model* const* rendition_family, size_t n_rendition,
                               const double* levels, size_t n_levels, const da_partition_options* opts,
                               char** sweep_json) {
  return guarded([&] {
    require(store_path && val_store && natural_family && rendition_family && levels && sweep_json, "null argument");
    std::vector<DomainClassifier> nat;
    std::vector<DomainClassifier> rend;
    for (size_t i = 0; i < n_natural; ++i) nat.push_back(natural_family[i]->model);
    for (size_t i = 0; i < n_rendition; ++i) rend.push_back(rendition_family[i]->model);
    const auto val = read_store(val_store);
    PartitionOptions o = to_partition_options(opts);
    o.collect_ids = false;
    const SweepResult r = composition_sweep(store_path, val, nat, rend, std::span<const double>(levels, n_levels), o);
    *sweep_json = dup_string(domaudit::sweep_json(r));
  });
}

da_status da_clean_testset(const char* test_store, const da_calibrated* natural_clf, const da_calibrated* rendition_clf,
                           da_domain intended, const char* source, char** json) {
  return guarded([&] {
    require(test_store && natural_clf && rendition_clf && json, "null argument");
    const auto records = read_store(test_store);
    const CleanTestSet clean =
        clean_testset(records, natural_clf->clf, rendition_clf->clf, to_domain(intended), str_or_empty(source));
    *json = dup_string(clean.to_json());
  });
}

// ---- curation ----

da_status da_build_mix(const da_mix_spec* spec, uint64_t** ids, size_t* n, char** spec_json) {
  return guarded([&] {
    require(spec && ids && n, "null argument");
    require(spec->natural_pool || spec->n_natural_pool == 0, "null natural pool");
    require(spec->rendition_pool || spec->n_rendition_pool == 0, "null rendition pool");
    MixSpec s;
    s.natural_pool.assign(spec->natural_pool, spec->natural_pool + spec->n_natural_pool);
    s.rendition_pool.assign(spec->rendition_pool, spec->rendition_pool + spec->n_rendition_pool);
    s.mode = spec->add ? MixMode::Add : MixMode::Replace;
    s.n_total = spec->add ? spec->n_natural + spec->n_rendition : spec->n_total;
    s.n_rendition = spec->n_rendition;
    s.n_natural = spec->n_natural;
    s.seed = spec->seed;
    const MixOutput mix = build_mix(s);
    *ids = dup_array(mix.ids);
    *n = mix.ids.size();
    if (spec_json) *spec_json = dup_string(s.to_json());
  });
}

da_status da_rendition_count(uint64_t n_total, double rendition_parts, double natural_parts, uint64_t* out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    *out = rendition_count(n_total, MixRatio{rendition_parts, natural_parts});
  });
}

da_status da_subsample_random(const uint64_t* pool, size_t n_pool, uint64_t n, uint64_t seed, uint64_t** ids,
                              size_t* n_out) {
  return guarded([&] {
    require((pool || n_pool == 0) && ids && n_out, "null argument");
    const auto v = subsample_random(std::span<const uint64_t>(pool, n_pool), n, seed);
    *ids = dup_array(v);
    *n_out = v.size();
  });
}

da_status da_subsample_balanced(const uint64_t* pool, const da_domain* labels, size_t n_pool, uint64_t per_class,
                                uint64_t seed, uint64_t** ids, size_t* n_out) {
  return guarded([&] {
    require(((pool && labels) || n_pool == 0) && ids && n_out, "null argument");
    std::vector<LabeledId> items;
    items.reserve(n_pool);
    for (size_t i = 0; i < n_pool; ++i) items.push_back({pool[i], to_domain(labels[i])});
    const auto v = subsample_balanced(items, per_class, seed);
    *ids = dup_array(v);
    *n_out = v.size();
  });
}

// ---- robustness ----

da_status da_relative_accuracy(double acc_treated, double acc_baseline, double* ratio) {
  return guarded([&] {
    require(ratio != nullptr, "null argument");
    *ratio = relative_corrected_ood_accuracy(acc_treated, acc_baseline);
  });
}

da_status da_relative_accuracy_table(const char* table_path, const char* treated, const char* baseline,
                                     const char* test_sets, char** json) {
  return guarded([&] {
    require(table_path && treated && baseline && json, "null argument");
    const AccuracyTable table = load_table(table_path);
    const auto columns = split_list(test_sets);
    const auto rows = relative_accuracy_rows(table, treated, baseline, columns);
    *json = dup_string(relative_accuracy_json(rows, treated, baseline));
  });
}

da_status da_robustness(const char* table_path, const char* groups_path, const char* transform, int clamp,
                        const char* baseline_models, char** report_json, char** plot) {
  return guarded([&] {
    require(table_path && report_json, "null argument");
    const AccuracyTable table = load_table(table_path);
    const DomainGroups groups =
        groups_path ? DomainGroups::from_config(read_text_file(groups_path)) : DomainGroups::defaults();
    FitOptions options;
    if (transform) options.transform = parse_transform(transform);
    options.clamp = clamp != 0;
    const auto baseline = split_list(baseline_models);
    const RobustnessReport report = robustness_report(table, groups, baseline, options);
    *report_json = dup_string(report.to_json());
    if (plot) *plot = dup_string(plot_csv(report.points));
  });
}

// ---- synthlab ----

da_status da_synth(const char* config_text, const char* store_path, char** config_json) {
  return guarded([&] {
    require(config_text && store_path, "null argument");
    const SynthConfig cfg = SynthConfig::from_config(config_text);
    const auto records = gen_two_domain(cfg);
    write_store(store_path, records, cfg.dimension,
                "synthetic two-domain corpus, seed " + std::to_string(cfg.seed));
    if (config_json) *config_json = dup_string(cfg.to_json());
  });
}

da_status da_experiment(const char* store_path, const char* spec_json, const char* provenance_json,
                        char** result_json, char** result_csv) {
  return guarded([&] {
    require(store_path && spec_json && result_json, "null argument");
    const ExperimentSpec spec = ExperimentSpec::from_json(spec_json);
    ExperimentReport report = run_experiment(read_store(store_path), spec, str_or_empty(provenance_json));
    *result_json = dup_string(report.json);
    if (result_csv) *result_csv = dup_string(report.csv);
  });
}

// ---- annotation ----

void da_server_options_default(da_server_options* opts) {
  if (!opts) return;
  std::memset(opts, 0, sizeof(*opts));
  opts->host = "127.0.0.1";
  opts->port = 8080;
  opts->default_annotator = "default";
}

da_status da_server_start(const da_server_options* opts, da_server** out, int* bound_port) {
  return guarded([&] {
    require(opts && opts->store_path && opts->label_dir && out, "null argument");
    auto s = std::make_unique<da_server>();
    s->service = AnnotationService::from_store(opts->store_path, opts->label_dir,
                                               opts->natural_clf ? &opts->natural_clf->clf : nullptr,
                                               opts->rendition_clf ? &opts->rendition_clf->clf : nullptr);
    ServerOptions so;
    if (opts->host) so.host = opts->host;
    so.port = opts->port;
    so.image_dir = str_or_empty(opts->image_dir);
    so.ui_dir = str_or_empty(opts->ui_dir);
    if (opts->default_annotator) so.default_annotator = opts->default_annotator;
    s->server = std::make_unique<AnnotationServer>(*s->service, so);
    const int port = s->server->start();
    if (bound_port) *bound_port = port;
    *out = s.release();
  });
}

da_status da_server_wait(da_server* s) {
  return guarded([&] {
    require(s && s->server, "null argument");
    s->server->wait();
  });
}

da_status da_server_stop(da_server* s) {
  return guarded([&] {
    require(s && s->server, "null argument");
    s->server->stop();
  });
}

void da_server_free(da_server* s) {
  if (!s) return;
  s->server.reset();
  delete s;
}

da_status da_merge_annotations(const char* const* label_files, size_t n, const char* reference, char** json) {
  return guarded([&] {
    require((label_files || n == 0) && reference && json, "null argument");
    std::vector<std::filesystem::path> files;
    for (size_t i = 0; i < n; ++i) files.emplace_back(label_files[i]);
    *json = dup_string(merge_annotations(files, reference).to_json());
  });
}

}  // extern "C"
