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
#pragma once

// Backend for the human labeling workflow: fixed-size batches with
// classifier pre-labels, per-annotator label files, and majority-vote merging.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "domaudit/calibration.hpp"

namespace domaudit {

inline constexpr size_t kBatchSize = 25;

struct LabelRecord {
  uint64_t id = 0;
  DomainLabel label = DomainLabel::Ambiguous;
  std::string annotator;
  // Seconds since the epoch.
  int64_t timestamp = 0;
};

struct BatchItem {
  uint64_t id = 0;
  std::string image;
  DomainLabel prelabel = DomainLabel::Ambiguous;
  std::optional<DomainLabel> current;
};

struct Batch {
  uint64_t offset = 0;
  uint64_t total = 0;
  std::vector<BatchItem> items;

  std::string to_json() const;
};

struct Progress {
  uint64_t labeled = 0;
  uint64_t total = 0;
  std::array<uint64_t, 3> per_class{0, 0, 0};

  std::string to_json() const;
};

// Annotator names end up in file names, so only [A-Za-z0-9_-] is allowed.
bool valid_annotator_name(std::string_view name);

// Label file: {"<id>": {"label": "...", "annotator": "...", "timestamp": n}}.
std::map<uint64_t, LabelRecord> read_label_file(const std::filesystem::path& path);
std::string label_file_json(const std::map<uint64_t, LabelRecord>& labels);

class AnnotationService {
 public:
  // Called after the temporary file is complete and before it is renamed.
  using FaultHook = std::function<void(const std::filesystem::path& temp, const std::filesystem::path& target)>;

  // prelabels may be empty, in which case every item is pre-labeled Ambiguous.
  AnnotationService(std::vector<uint64_t> ids, std::vector<DomainLabel> prelabels, std::filesystem::path label_dir);

  // Corpus ids in store order; pre-labels come from the classifier pair when
  // both are given.
  static std::unique_ptr<AnnotationService> from_store(const std::filesystem::path& store,
                                                       const std::filesystem::path& label_dir,
                                                       const CalibratedClassifier* natural_clf = nullptr,
                                                       const CalibratedClassifier* rendition_clf = nullptr);

  uint64_t size() const { return ids_.size(); }
  bool contains(uint64_t id) const;
  std::filesystem::path label_file(const std::string& annotator) const;

  // Items [offset, offset + 25) in corpus order; empty past the end.
  Batch get_batch(uint64_t offset, const std::string& annotator) const;

  // Validates the whole submission before writing anything. Per (annotator,
  // id) the record with the latest timestamp wins; on a tie the newer
  // submission wins. Returns the number of records written.
  uint64_t submit_labels(std::span<const LabelRecord> records);

  Progress progress(const std::string& annotator) const;

  void set_fault_hook(FaultHook hook) { fault_hook_ = std::move(hook); }

 private:
  std::mutex& writer_lock(const std::string& annotator);
  std::map<uint64_t, LabelRecord> load_labels(const std::string& annotator) const;

  std::vector<uint64_t> ids_;
  std::vector<DomainLabel> prelabels_;
  std::unordered_map<uint64_t, size_t> index_;
  std::filesystem::path label_dir_;
  FaultHook fault_hook_;
  std::mutex locks_guard_;
  std::map<std::string, std::unique_ptr<std::mutex>> locks_;
};

struct MergeResult {
  std::vector<std::string> annotators;
  std::string reference;
  std::map<uint64_t, DomainLabel> merged;
  // Fraction of ids where the merged label equals the reference annotator's.
  double agreement_rate = 0.0;

  std::string to_json() const;
};

// Strict majority per id, Ambiguous without one. All annotators must cover
// the same ids. reference names one of the annotators.
MergeResult merge_labels(const std::vector<std::pair<std::string, std::map<uint64_t, DomainLabel>>>& annotations,
                         const std::string& reference);
// Annotator names are taken from the file stems.
MergeResult merge_annotations(std::span<const std::filesystem::path> label_files, const std::string& reference);

struct ServerOptions {
  std::string host = "127.0.0.1";
  // 0 binds an ephemeral port.
  int port = 8080;
  std::filesystem::path image_dir;
  std::filesystem::path ui_dir;
  std::string default_annotator = "default";
};

// HTTP front end. Routes: GET /api/batch, POST /api/labels, GET /api/progress,
// GET /img/{id}, and the labeling UI under /.
class AnnotationServer {
 public:
  AnnotationServer(AnnotationService& service, ServerOptions options);
  ~AnnotationServer();
  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  // Binds and starts serving on a background thread; returns the bound port.
  int start();
  // Blocks until the server stops.
  void wait();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace domaudit
