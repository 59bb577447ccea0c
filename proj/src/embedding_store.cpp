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
#include "domaudit/embedding_store.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

#include "json.hpp"

namespace domaudit {

using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put_le(char* dst, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::endian::native == std::endian::big) {
    char tmp[sizeof(T)];
    std::memcpy(tmp, &value, sizeof(T));
    for (size_t i = 0; i < sizeof(T); ++i) dst[i] = tmp[sizeof(T) - 1 - i];
  } else {
    std::memcpy(dst, &value, sizeof(T));
  }
}

template <typename T>
T get_le(const char* src) {
  T value;
  if constexpr (std::endian::native == std::endian::big) {
    char tmp[sizeof(T)];
    for (size_t i = 0; i < sizeof(T); ++i) tmp[i] = src[sizeof(T) - 1 - i];
    std::memcpy(&value, tmp, sizeof(T));
  } else {
    std::memcpy(&value, src, sizeof(T));
  }
  return value;
}

json summary_json(const std::array<uint64_t, 4>& s) {
  return json{{"unknown", s[0]}, {"natural", s[1]}, {"ambiguous", s[2]}, {"rendition", s[3]}};
}

}  // namespace

std::string StoreManifest::to_json() const {
  json j{{"dimension", dimension},
         {"count", count},
         {"label_summary", summary_json(label_summary)},
         {"source_note", source_note}};
  return j.dump(2) + "\n";
}

StoreManifest StoreManifest::from_json(const std::string& text) {
  StoreManifest m;
  try {
    const json j = json::parse(text);
    m.dimension = j.at("dimension").get<uint32_t>();
    m.count = j.at("count").get<uint64_t>();
    const json& s = j.at("label_summary");
    m.label_summary = {s.at("unknown").get<uint64_t>(), s.at("natural").get<uint64_t>(),
                       s.at("ambiguous").get<uint64_t>(), s.at("rendition").get<uint64_t>()};
    m.source_note = j.value("source_note", "");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("bad manifest: ") + e.what());
  }
  return m;
}

std::filesystem::path manifest_path(const std::filesystem::path& store) {
  return std::filesystem::path(store.string() + ".manifest.json");
}

StoreWriter::StoreWriter(std::filesystem::path path, uint32_t dimension, std::string source_note)
    : path_(std::move(path)), partial_(path_.string() + ".partial") {
  if (dimension == 0) throw Error(ErrorCode::kInvalidArgument, "store dimension must be positive");
  manifest_.dimension = dimension;
  manifest_.source_note = std::move(source_note);

  // "wx" gives exclusive creation; the stream takes over afterwards.
  std::FILE* probe = std::fopen(partial_.c_str(), "wx");
  if (probe == nullptr) {
    throw Error(ErrorCode::kIo, "cannot create '" + partial_.string() + "' exclusively (does it already exist?)");
  }
  std::fclose(probe);
  out_.open(partial_, std::ios::binary | std::ios::trunc);
  if (!out_) throw Error(ErrorCode::kIo, "cannot open '" + partial_.string() + "' for writing");

  char header[kStoreHeaderBytes];
  std::memcpy(header, kStoreMagic, 4);
  header[4] = static_cast<char>(kStoreVersion);
  put_le<uint32_t>(header + 5, dimension);
  put_le<uint64_t>(header + 9, 0);
  out_.write(header, sizeof(header));
  buffer_.resize(record_bytes(dimension));
}

StoreWriter::~StoreWriter() {
  if (!finished_) {
    out_.close();
    std::error_code ec;
    std::filesystem::remove(partial_, ec);
  }
}

void StoreWriter::append(uint64_t id, std::span<const float> vector, DomainLabel domain_label,
                         int32_t class_label) {
  if (finished_) throw Error(ErrorCode::kInvalidArgument, "append after finish");
  if (vector.size() != manifest_.dimension) {
    throw Error(ErrorCode::kInvalidArgument, "record " + std::to_string(id) + ": vector length " +
                                                 std::to_string(vector.size()) + " != store dimension " +
                                                 std::to_string(manifest_.dimension));
  }
  bool nonzero = false;
  for (float v : vector) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "record " + std::to_string(id) + ": non-finite value");
    nonzero = nonzero || v != 0.0f;
  }
  if (!nonzero) throw Error(ErrorCode::kInvalidArgument, "record " + std::to_string(id) + ": zero vector");
  if (!is_valid_domain_code(static_cast<int>(domain_label))) {
    throw Error(ErrorCode::kInvalidArgument, "record " + std::to_string(id) + ": invalid domain label");
  }
  if (!ids_.insert(id).second) throw Error(ErrorCode::kInvalidArgument, "duplicate id " + std::to_string(id));

  char* p = buffer_.data();
  put_le<uint64_t>(p, id);
  put_le<int8_t>(p + 8, static_cast<int8_t>(domain_label));
  put_le<int32_t>(p + 9, class_label);
  for (size_t i = 0; i < vector.size(); ++i) put_le<float>(p + 13 + 4 * i, vector[i]);
  out_.write(p, static_cast<std::streamsize>(buffer_.size()));
  if (!out_) throw Error(ErrorCode::kIo, "write failed on '" + partial_.string() + "'");

  ++manifest_.count;
  ++manifest_.label_summary[static_cast<int>(domain_label) + 1];
}

StoreManifest StoreWriter::finish() {
  if (finished_) return manifest_;
  char count_le[8];
  put_le<uint64_t>(count_le, manifest_.count);
  out_.seekp(9);
  out_.write(count_le, 8);
  out_.close();
  if (!out_) throw Error(ErrorCode::kIo, "failed to finalize '" + partial_.string() + "'");
  write_text_file_atomic(manifest_path(path_), manifest_.to_json());
  std::error_code ec;
  std::filesystem::rename(partial_, path_, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot rename into '" + path_.string() + "': " + ec.message());
  finished_ = true;
  ids_.clear();
  return manifest_;
}

StoreManifest write_store(const std::filesystem::path& path, std::span<const EmbeddingRecord> records,
                          uint32_t dimension, const std::string& source_note) {
  StoreWriter writer(path, dimension, source_note);
  for (const auto& r : records) writer.append(r);
  return writer.finish();
}

StoreReader::StoreReader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw Error(ErrorCode::kIo, "cannot open store '" + path.string() + "'");
  char header[kStoreHeaderBytes];
  in_.read(header, sizeof(header));
  if (in_.gcount() < 5 || std::memcmp(header, kStoreMagic, 4) != 0) {
    throw Error(ErrorCode::kFormat, "'" + path.string() + "' is not an embedding store (bad magic)");
  }
  if (static_cast<uint8_t>(header[4]) != kStoreVersion) {
    throw Error(ErrorCode::kFormat, "unsupported store version " + std::to_string(static_cast<uint8_t>(header[4])));
  }
  if (in_.gcount() < static_cast<std::streamsize>(kStoreHeaderBytes)) {
    throw Error(ErrorCode::kFormat, "store header truncated");
  }
  dimension_ = get_le<uint32_t>(header + 5);
  count_ = get_le<uint64_t>(header + 9);
  if (dimension_ == 0) throw Error(ErrorCode::kFormat, "store dimension is 0");

  const uint64_t size = std::filesystem::file_size(path);
  const uint64_t rec = record_bytes(dimension_);
  const uint64_t payload = size - kStoreHeaderBytes;
  const uint64_t complete = payload / rec;
  if (complete < count_) {
    throw Error(ErrorCode::kFormat, "store truncated: record " + std::to_string(complete) + " of " +
                                        std::to_string(count_) + " is incomplete (" + std::to_string(size) +
                                        " bytes on disk)");
  }
  if (payload != count_ * rec) {
    throw Error(ErrorCode::kFormat, "store has " + std::to_string(payload - count_ * rec) + " trailing bytes");
  }
  raw_.resize(rec);
  vector_.resize(dimension_);
}

bool StoreReader::next(RecordView& out) {
  if (next_index_ >= count_) return false;
  in_.read(raw_.data(), static_cast<std::streamsize>(raw_.size()));
  if (in_.gcount() != static_cast<std::streamsize>(raw_.size())) {
    throw Error(ErrorCode::kFormat, "store truncated at record " + std::to_string(next_index_));
  }
  const char* p = raw_.data();
  out.id = get_le<uint64_t>(p);
  const int code = get_le<int8_t>(p + 8);
  if (!is_valid_domain_code(code)) {
    throw Error(ErrorCode::kFormat, "record " + std::to_string(next_index_) + ": invalid domain label " +
                                        std::to_string(code));
  }
  out.domain_label = static_cast<DomainLabel>(code);
  out.class_label = get_le<int32_t>(p + 9);
  for (uint32_t i = 0; i < dimension_; ++i) vector_[i] = get_le<float>(p + 13 + 4 * size_t{i});
  out.vector = vector_;
  ++next_index_;
  return true;
}

size_t StoreReader::next_chunk(std::vector<EmbeddingRecord>& out, size_t max_records) {
  out.resize(std::min<uint64_t>(max_records, count_ - next_index_));
  RecordView view;
  for (auto& r : out) {
    next(view);
    r.id = view.id;
    r.domain_label = view.domain_label;
    r.class_label = view.class_label;
    r.vector.assign(view.vector.begin(), view.vector.end());
  }
  return out.size();
}

std::vector<EmbeddingRecord> read_store(const std::filesystem::path& path) {
  StoreReader reader(path);
  std::vector<EmbeddingRecord> records;
  reader.next_chunk(records, reader.count());
  return records;
}

void normalize_in_place(std::span<float> v) {
  const double norm = l2_norm(v);
  if (!std::isfinite(norm)) throw Error(ErrorCode::kInvalidArgument, "non-finite vector");
  if (norm == 0.0) throw Error(ErrorCode::kInvalidArgument, "zero vector");
  for (float& x : v) x = static_cast<float>(x / norm);
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

StoreManifest import_tsv(const std::filesystem::path& tsv, uint32_t dimension, const std::filesystem::path& out,
                         const std::string& source_note) {
  std::ifstream in(tsv);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + tsv.string() + "'");
  StoreWriter writer(out, dimension, source_note.empty() ? "imported from " + tsv.filename().string() : source_note);
  std::string line;
  std::vector<float> vec(dimension);
  uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fail = [&](const std::string& why) {
      return Error(ErrorCode::kFormat, tsv.string() + ":" + std::to_string(line_no) + ": " + why);
    };
    auto fields = split_fields(line);
    if (fields.empty() || fields[0].front() == '#') continue;
    if (fields.size() != 4) throw fail("expected 4 fields, got " + std::to_string(fields.size()));
    uint64_t id;
    int32_t cls;
    if (!parse_number(fields[0], id)) throw fail("bad id '" + std::string(fields[0]) + "'");
    DomainLabel label;
    try {
      label = parse_domain(fields[1]);
    } catch (const Error& e) {
      throw fail(e.what());
    }
    if (!parse_number(fields[2], cls)) throw fail("bad class label '" + std::string(fields[2]) + "'");
    std::string_view values = fields[3];
    size_t n = 0;
    size_t start = 0;
    while (start <= values.size()) {
      size_t comma = values.find(',', start);
      if (comma == std::string_view::npos) comma = values.size();
      if (n >= dimension) throw fail("more than " + std::to_string(dimension) + " floats");
      if (!parse_number(values.substr(start, comma - start), vec[n])) {
        throw fail("bad float '" + std::string(values.substr(start, comma - start)) + "'");
      }
      ++n;
      start = comma + 1;
    }
    if (n != dimension) throw fail("expected " + std::to_string(dimension) + " floats, got " + std::to_string(n));
    try {
      normalize_in_place(vec);
      writer.append(id, vec, label, cls);
    } catch (const Error& e) {
      throw fail(e.what());
    }
  }
  return writer.finish();
}

namespace {

json ids_json(const std::vector<uint64_t>& ids) { return json(ids); }

}  // namespace

std::string SplitAssignment::to_json() const {
  json j{{"seed", seed},
         {"train_ids", ids_json(train_ids)},
         {"val_ids", ids_json(val_ids)},
         {"test_ids", ids_json(test_ids)}};
  return j.dump() + "\n";
}

SplitAssignment SplitAssignment::from_json(const std::string& text) {
  SplitAssignment s;
  try {
    const json j = json::parse(text);
    s.seed = j.at("seed").get<uint64_t>();
    s.train_ids = j.at("train_ids").get<std::vector<uint64_t>>();
    s.val_ids = j.at("val_ids").get<std::vector<uint64_t>>();
    s.test_ids = j.at("test_ids").get<std::vector<uint64_t>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("bad split file: ") + e.what());
  }
  return s;
}

SplitAssignment split_ids(std::vector<uint64_t> ids, uint64_t n_train, uint64_t n_val, uint64_t n_test,
                          uint64_t seed) {
  const uint64_t wanted = n_train + n_val + n_test;
  if (wanted > ids.size() || n_train > ids.size() || n_val > ids.size() || n_test > ids.size()) {
    throw Error(ErrorCode::kInvalidArgument, "requested split sizes (" + std::to_string(n_train) + ", " +
                                                 std::to_string(n_val) + ", " + std::to_string(n_test) +
                                                 ") exceed " + std::to_string(ids.size()) + " records");
  }
  Rng rng(seed);
  rng.shuffle(ids);
  SplitAssignment s;
  s.seed = seed;
  auto it = ids.begin();
  s.train_ids.assign(it, it + static_cast<std::ptrdiff_t>(n_train));
  it += static_cast<std::ptrdiff_t>(n_train);
  s.val_ids.assign(it, it + static_cast<std::ptrdiff_t>(n_val));
  it += static_cast<std::ptrdiff_t>(n_val);
  s.test_ids.assign(it, it + static_cast<std::ptrdiff_t>(n_test));
  return s;
}

SplitAssignment split_store(const std::filesystem::path& store, uint64_t n_train, uint64_t n_val, uint64_t n_test,
                            uint64_t seed) {
  StoreReader reader(store);
  std::vector<uint64_t> ids;
  ids.reserve(reader.count());
  RecordView view;
  while (reader.next(view)) ids.push_back(view.id);
  return split_ids(std::move(ids), n_train, n_val, n_test, seed);
}

StoreManifest write_subset(const std::filesystem::path& store, std::span<const uint64_t> keep,
                           const std::filesystem::path& out, const std::string& source_note) {
  std::unordered_set<uint64_t> wanted(keep.begin(), keep.end());
  StoreReader reader(store);
  StoreWriter writer(out, reader.dimension(), source_note);
  RecordView view;
  while (reader.next(view)) {
    if (wanted.contains(view.id)) writer.append(view);
  }
  if (writer.count() != wanted.size()) {
    throw Error(ErrorCode::kNotFound, std::to_string(wanted.size() - writer.count()) + " requested ids not in '" +
                                          store.string() + "'");
  }
  return writer.finish();
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file_atomic(const std::filesystem::path& path, const std::string& text) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write '" + tmp.string() + "'");
    out << text;
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "write failed on '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot rename into '" + path.string() + "': " + ec.message());
}

std::vector<uint64_t> read_id_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::vector<uint64_t> ids;
  std::string line;
  uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    uint64_t id;
    if (!parse_number(std::string_view(line), id)) {
      throw Error(ErrorCode::kFormat, path.string() + ":" + std::to_string(line_no) + ": bad id '" + line + "'");
    }
    ids.push_back(id);
  }
  return ids;
}

void write_id_list(const std::filesystem::path& path, std::span<const uint64_t> ids) {
  std::string text;
  text.reserve(ids.size() * 8);
  for (uint64_t id : ids) {
    text += std::to_string(id);
    text += '\n';
  }
  write_text_file_atomic(path, text);
}

}  // namespace domaudit
