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

// Binary embedding store.
//
// Layout (all little-endian):
//   "EMBS" 0x01            5 bytes
//   u32 dimension          4 bytes
//   u64 count              8 bytes
//   count x { u64 id, i8 domain_label, i32 class_label, dimension x f32 }
//
// A JSON manifest {dimension, count, label_summary, source_note} is written
// next to the store as "<path>.manifest.json".

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "domaudit/common.hpp"

namespace domaudit {

inline constexpr char kStoreMagic[4] = {'E', 'M', 'B', 'S'};
inline constexpr uint8_t kStoreVersion = 0x01;
inline constexpr size_t kStoreHeaderBytes = 17;

inline constexpr size_t record_bytes(uint32_t dimension) { return 8 + 1 + 4 + 4 * size_t{dimension}; }

struct EmbeddingRecord {
  uint64_t id = 0;
  std::vector<float> vector;
  DomainLabel domain_label = DomainLabel::Unknown;
  int32_t class_label = -1;

  bool operator==(const EmbeddingRecord&) const = default;
};

// Non-owning view handed out by the streaming reader; valid until the next read.
struct RecordView {
  uint64_t id = 0;
  std::span<const float> vector;
  DomainLabel domain_label = DomainLabel::Unknown;
  int32_t class_label = -1;

  EmbeddingRecord to_record() const { return {id, {vector.begin(), vector.end()}, domain_label, class_label}; }
};

struct StoreManifest {
  uint32_t dimension = 0;
  uint64_t count = 0;
  // Indexed by code + 1: unknown, natural, ambiguous, rendition.
  std::array<uint64_t, 4> label_summary{};
  std::string source_note;

  uint64_t label_count(DomainLabel label) const { return label_summary[static_cast<int>(label) + 1]; }
  std::string to_json() const;
  static StoreManifest from_json(const std::string& text);
};

std::filesystem::path manifest_path(const std::filesystem::path& store);

// Appends records to "<path>.partial" (created exclusively) and renames it
// into place on finish(). An unfinished writer removes its partial file.
class StoreWriter {
 public:
  StoreWriter(std::filesystem::path path, uint32_t dimension, std::string source_note = {});
  ~StoreWriter();
  StoreWriter(const StoreWriter&) = delete;
  StoreWriter& operator=(const StoreWriter&) = delete;

  void append(uint64_t id, std::span<const float> vector, DomainLabel domain_label, int32_t class_label);
  void append(const EmbeddingRecord& record) {
    append(record.id, record.vector, record.domain_label, record.class_label);
  }
  void append(const RecordView& record) {
    append(record.id, record.vector, record.domain_label, record.class_label);
  }
  // Patches the record count, writes the manifest and publishes the file.
  StoreManifest finish();

  uint32_t dimension() const { return manifest_.dimension; }
  uint64_t count() const { return manifest_.count; }

 private:
  std::filesystem::path path_;
  std::filesystem::path partial_;
  std::ofstream out_;
  StoreManifest manifest_;
  std::unordered_set<uint64_t> ids_;
  std::vector<char> buffer_;
  bool finished_ = false;
};

StoreManifest write_store(const std::filesystem::path& path, std::span<const EmbeddingRecord> records,
                          uint32_t dimension, const std::string& source_note = {});

// Sequential reader holding one record of working memory.
class StoreReader {
 public:
  explicit StoreReader(const std::filesystem::path& path);

  uint32_t dimension() const { return dimension_; }
  uint64_t count() const { return count_; }
  uint64_t position() const { return next_index_; }

  // Returns false once all records have been read. The view is valid until
  // the next call.
  bool next(RecordView& out);
  // Reads up to max_records records, replacing the contents of out.
  size_t next_chunk(std::vector<EmbeddingRecord>& out, size_t max_records);

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  uint32_t dimension_ = 0;
  uint64_t count_ = 0;
  uint64_t next_index_ = 0;
  std::vector<char> raw_;
  std::vector<float> vector_;
};

std::vector<EmbeddingRecord> read_store(const std::filesystem::path& path);

// Lines: "<id> <nat|amb|rend|unk> <class> <v1,...,vd>" separated by spaces or
// tabs. Blank lines and lines starting with '#' are skipped. Vectors are
// L2-normalized before they are stored.
StoreManifest import_tsv(const std::filesystem::path& tsv, uint32_t dimension, const std::filesystem::path& out,
                         const std::string& source_note = {});

// Scales v to unit L2 norm; throws on zero or non-finite vectors.
void normalize_in_place(std::span<float> v);

struct SplitAssignment {
  std::vector<uint64_t> train_ids;
  std::vector<uint64_t> val_ids;
  std::vector<uint64_t> test_ids;
  uint64_t seed = 0;

  std::string to_json() const;
  static SplitAssignment from_json(const std::string& text);
};

// Seeded shuffle of the ids in file order, then contiguous slices.
SplitAssignment split_ids(std::vector<uint64_t> ids, uint64_t n_train, uint64_t n_val, uint64_t n_test,
                          uint64_t seed);
SplitAssignment split_store(const std::filesystem::path& store, uint64_t n_train, uint64_t n_val, uint64_t n_test,
                            uint64_t seed);

// Copies the records whose ids are in keep (in store order) into a new store.
StoreManifest write_subset(const std::filesystem::path& store, std::span<const uint64_t> keep,
                           const std::filesystem::path& out, const std::string& source_note = {});

std::string read_text_file(const std::filesystem::path& path);
// Writes to a temporary sibling and renames it over path.
void write_text_file_atomic(const std::filesystem::path& path, const std::string& text);

std::vector<uint64_t> read_id_list(const std::filesystem::path& path);
void write_id_list(const std::filesystem::path& path, std::span<const uint64_t> ids);

}  // namespace domaudit
