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
#include "domaudit/annotation.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <thread>

#include "domaudit/partitioner.hpp"
#include "httplib.h"
#include "json.hpp"

namespace domaudit {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

DomainLabel parse_label_value(const json& v) {
  DomainLabel label;
  if (v.is_string()) {
    label = parse_domain(v.get<std::string>());
  } else if (v.is_number_integer()) {
    const int code = v.get<int>();
    if (!is_valid_domain_code(code)) throw Error(ErrorCode::kFormat, "bad label code " + std::to_string(code));
    label = static_cast<DomainLabel>(code);
  } else {
    throw Error(ErrorCode::kFormat, "label must be a string or integer");
  }
  if (label == DomainLabel::Unknown) throw Error(ErrorCode::kFormat, "label must be natural, ambiguous or rendition");
  return label;
}

uint64_t parse_id_key(const std::string& key) {
  uint64_t id = 0;
  auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), id);
  if (ec != std::errc() || ptr != key.data() + key.size()) throw Error(ErrorCode::kFormat, "bad id '" + key + "'");
  return id;
}

}  // namespace

std::string Batch::to_json() const {
  json items_json = json::array();
  for (const auto& it : items) {
    json j{{"id", it.id}, {"image", it.image}, {"prelabel", domain_name(it.prelabel)}};
    j["label"] = it.current ? json(domain_name(*it.current)) : json(nullptr);
    items_json.push_back(std::move(j));
  }
  return json{{"offset", offset}, {"total", total}, {"items", items_json}}.dump();
}

std::string Progress::to_json() const {
  return json{{"labeled", labeled},
              {"total", total},
              {"per_class", {{"natural", per_class[0]}, {"ambiguous", per_class[1]}, {"rendition", per_class[2]}}}}
      .dump();
}

bool valid_annotator_name(std::string_view name) {
  if (name.empty() || name.size() > 64) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
  });
}

std::map<uint64_t, LabelRecord> read_label_file(const fs::path& path) {
  std::map<uint64_t, LabelRecord> out;
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, path.string() + ": invalid label file: " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kFormat, path.string() + ": label file must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    LabelRecord r;
    try {
      r.id = parse_id_key(key);
      r.label = parse_label_value(value.at("label"));
      r.annotator = value.value("annotator", std::string());
      r.timestamp = value.value("timestamp", int64_t{0});
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kFormat, path.string() + ": entry '" + key + "': " + e.what());
    }
    out.emplace(r.id, std::move(r));
  }
  return out;
}

std::string label_file_json(const std::map<uint64_t, LabelRecord>& labels) {
  json j = json::object();
  for (const auto& [id, r] : labels) {
    j[std::to_string(id)] = {{"label", domain_name(r.label)}, {"annotator", r.annotator}, {"timestamp", r.timestamp}};
  }
  return j.dump(1) + "\n";
}

AnnotationService::AnnotationService(std::vector<uint64_t> ids, std::vector<DomainLabel> prelabels, fs::path label_dir)
    : ids_(std::move(ids)), prelabels_(std::move(prelabels)), label_dir_(std::move(label_dir)) {
  if (!prelabels_.empty() && prelabels_.size() != ids_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "prelabel count does not match corpus size");
  }
  if (prelabels_.empty()) prelabels_.assign(ids_.size(), DomainLabel::Ambiguous);
  for (size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate corpus id " + std::to_string(ids_[i]));
    }
  }
  std::error_code ec;
  fs::create_directories(label_dir_, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create label directory " + label_dir_.string() + ": " + ec.message());
}

std::unique_ptr<AnnotationService> AnnotationService::from_store(const fs::path& store, const fs::path& label_dir,
                                                                 const CalibratedClassifier* natural_clf,
                                                                 const CalibratedClassifier* rendition_clf) {
  if ((natural_clf == nullptr) != (rendition_clf == nullptr)) {
    throw Error(ErrorCode::kInvalidArgument, "pre-labeling needs both a natural and a rendition classifier");
  }
  StoreReader reader(store);
  if (natural_clf && (natural_clf->dimension() != reader.dimension() || rendition_clf->dimension() != reader.dimension())) {
    throw Error(ErrorCode::kInvalidArgument, "classifier dimension does not match store dimension " +
                                                 std::to_string(reader.dimension()));
  }
  std::vector<uint64_t> ids;
  std::vector<DomainLabel> prelabels;
  ids.reserve(reader.count());
  RecordView view;
  while (reader.next(view)) {
    ids.push_back(view.id);
    if (natural_clf) prelabels.push_back(assign_domain(natural_clf->accepts(view.vector), rendition_clf->accepts(view.vector)));
  }
  return std::make_unique<AnnotationService>(std::move(ids), std::move(prelabels), label_dir);
}

bool AnnotationService::contains(uint64_t id) const { return index_.count(id) != 0; }

fs::path AnnotationService::label_file(const std::string& annotator) const {
  if (!valid_annotator_name(annotator)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid annotator name '" + annotator + "'");
  }
  return label_dir_ / (annotator + ".json");
}

std::map<uint64_t, LabelRecord> AnnotationService::load_labels(const std::string& annotator) const {
  const fs::path path = label_file(annotator);
  if (!fs::exists(path)) return {};
  return read_label_file(path);
}

Batch AnnotationService::get_batch(uint64_t offset, const std::string& annotator) const {
  Batch batch;
  batch.offset = offset;
  batch.total = ids_.size();
  if (offset >= ids_.size()) return batch;
  const auto labels = load_labels(annotator);
  const uint64_t end = std::min<uint64_t>(ids_.size(), offset + kBatchSize);
  for (uint64_t i = offset; i < end; ++i) {
    BatchItem item;
    item.id = ids_[i];
    item.image = "/img/" + std::to_string(ids_[i]);
    item.prelabel = prelabels_[i];
    if (auto it = labels.find(ids_[i]); it != labels.end()) item.current = it->second.label;
    batch.items.push_back(std::move(item));
  }
  return batch;
}

std::mutex& AnnotationService::writer_lock(const std::string& annotator) {
  std::lock_guard guard(locks_guard_);
  auto& slot = locks_[annotator];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

uint64_t AnnotationService::submit_labels(std::span<const LabelRecord> records) {
  std::map<std::string, std::vector<const LabelRecord*>> by_annotator;
  for (const auto& r : records) {
    if (!contains(r.id)) throw Error(ErrorCode::kNotFound, "unknown id " + std::to_string(r.id) + "; nothing persisted");
    if (r.label == DomainLabel::Unknown || !is_valid_domain_code(static_cast<int>(r.label))) {
      throw Error(ErrorCode::kInvalidArgument, "invalid label for id " + std::to_string(r.id) + "; nothing persisted");
    }
    if (!valid_annotator_name(r.annotator)) {
      throw Error(ErrorCode::kInvalidArgument, "invalid annotator name '" + r.annotator + "'; nothing persisted");
    }
    by_annotator[r.annotator].push_back(&r);
  }
  uint64_t written = 0;
  for (const auto& [annotator, batch] : by_annotator) {
    std::lock_guard guard(writer_lock(annotator));
    auto labels = load_labels(annotator);
    uint64_t changed = 0;
    for (const LabelRecord* r : batch) {
      auto it = labels.find(r->id);
      if (it == labels.end() || r->timestamp >= it->second.timestamp) {
        labels[r->id] = *r;
        ++changed;
      }
    }
    const fs::path target = label_file(annotator);
    fs::path temp = target;
    temp += ".tmp";
    {
      std::ofstream out(temp, std::ios::binary | std::ios::trunc);
      const std::string text = label_file_json(labels);
      out.write(text.data(), static_cast<std::streamsize>(text.size()));
      out.flush();
      if (!out) throw Error(ErrorCode::kIo, "cannot write " + temp.string());
    }
    if (fault_hook_) fault_hook_(temp, target);
    std::error_code ec;
    fs::rename(temp, target, ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot replace " + target.string() + ": " + ec.message());
    written += changed;
  }
  return written;
}

Progress AnnotationService::progress(const std::string& annotator) const {
  Progress p;
  p.total = ids_.size();
  for (const auto& [id, r] : load_labels(annotator)) {
    if (!contains(id)) continue;
    ++p.labeled;
    ++p.per_class[static_cast<size_t>(r.label)];
  }
  return p;
}

std::string MergeResult::to_json() const {
  json labels = json::object();
  std::array<uint64_t, 3> counts{0, 0, 0};
  for (const auto& [id, label] : merged) {
    labels[std::to_string(id)] = domain_name(label);
    ++counts[static_cast<size_t>(label)];
  }
  return json{{"annotators", annotators},
              {"reference", reference},
              {"agreement_rate", agreement_rate},
              {"counts", {{"natural", counts[0]}, {"ambiguous", counts[1]}, {"rendition", counts[2]}}},
              {"labels", labels}}
             .dump(2) +
         "\n";
}

MergeResult merge_labels(const std::vector<std::pair<std::string, std::map<uint64_t, DomainLabel>>>& annotations,
                         const std::string& reference) {
  if (annotations.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "merging needs at least 2 annotators, got " +
                                                 std::to_string(annotations.size()));
  }
  const std::map<uint64_t, DomainLabel>* ref = nullptr;
  MergeResult result;
  result.reference = reference;
  for (const auto& [name, labels] : annotations) {
    result.annotators.push_back(name);
    if (name == reference) ref = &labels;
  }
  if (!ref) throw Error(ErrorCode::kInvalidArgument, "reference annotator '" + reference + "' not among inputs");
  const auto& first = annotations.front().second;
  for (const auto& [name, labels] : annotations) {
    const bool same = labels.size() == first.size() &&
                      std::equal(labels.begin(), labels.end(), first.begin(),
                                 [](const auto& a, const auto& b) { return a.first == b.first; });
    if (!same) {
      throw Error(ErrorCode::kInvalidArgument, "annotator '" + name + "' labeled a different set of ids than '" +
                                                   annotations.front().first + "'");
    }
  }
  uint64_t agree = 0;
  for (const auto& [id, unused] : first) {
    std::array<size_t, 3> votes{0, 0, 0};
    for (const auto& [name, labels] : annotations) ++votes[static_cast<size_t>(labels.at(id))];
    DomainLabel label = DomainLabel::Ambiguous;
    for (DomainLabel d : kKnownDomains) {
      if (2 * votes[static_cast<size_t>(d)] > annotations.size()) label = d;
    }
    result.merged.emplace(id, label);
    if (ref->at(id) == label) ++agree;
  }
  result.agreement_rate = first.empty() ? 1.0 : static_cast<double>(agree) / static_cast<double>(first.size());
  return result;
}

MergeResult merge_annotations(std::span<const fs::path> label_files, const std::string& reference) {
  std::vector<std::pair<std::string, std::map<uint64_t, DomainLabel>>> annotations;
  for (const auto& path : label_files) {
    std::map<uint64_t, DomainLabel> labels;
    for (const auto& [id, r] : read_label_file(path)) labels.emplace(id, r.label);
    annotations.emplace_back(path.stem().string(), std::move(labels));
  }
  return merge_labels(annotations, reference);
}

struct AnnotationServer::Impl {
  AnnotationService& service;
  ServerOptions options;
  httplib::Server server;
  std::thread thread;
  int port = 0;

  Impl(AnnotationService& s, ServerOptions o) : service(s), options(std::move(o)) {}

  std::string annotator_of(const httplib::Request& req) const {
    return req.has_param("annotator") ? req.get_param_value("annotator") : options.default_annotator;
  }

  static void fail(httplib::Response& res, int status, const std::string& message) {
    res.status = status;
    res.set_content(json{{"error", message}}.dump(), "application/json");
  }

  void install_routes();
};

namespace {

const char* image_content_type(const std::string& ext) {
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".png") return "image/png";
  if (ext == ".webp") return "image/webp";
  if (ext == ".gif") return "image/gif";
  return nullptr;
}

constexpr const char* kPlaceholderPage =
    "<!doctype html><html><head><meta charset=\"utf-8\"><title>domaudit labeling</title></head>"
    "<body><p>No labeling UI directory configured. The JSON API is available under /api/.</p></body></html>\n";

int status_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kIo: return 500;
    default: return 400;
  }
}

}  // namespace

void AnnotationServer::Impl::install_routes() {
  server.Get("/api/batch", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      uint64_t offset = 0;
      if (req.has_param("offset")) {
        const std::string v = req.get_param_value("offset");
        auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), offset);
        if (ec != std::errc() || ptr != v.data() + v.size()) return fail(res, 400, "offset must be a non-negative integer");
      }
      res.set_content(service.get_batch(offset, annotator_of(req)).to_json(), "application/json");
    } catch (const Error& e) {
      fail(res, status_for(e), e.what());
    }
  });

  server.Post("/api/labels", [this](const httplib::Request& req, httplib::Response& res) {
    std::vector<LabelRecord> records;
    try {
      const json body = json::parse(req.body);
      if (!body.is_array()) return fail(res, 400, "body must be a JSON array of label records");
      const auto now = std::chrono::duration_cast<std::chrono::seconds>(
                           std::chrono::system_clock::now().time_since_epoch())
                           .count();
      for (const auto& item : body) {
        LabelRecord r;
        r.id = item.at("id").get<uint64_t>();
        r.label = parse_label_value(item.at("label"));
        r.annotator = item.contains("annotator") ? item.at("annotator").get<std::string>() : annotator_of(req);
        r.timestamp = item.contains("timestamp") ? item.at("timestamp").get<int64_t>() : static_cast<int64_t>(now);
        records.push_back(std::move(r));
      }
    } catch (const json::exception& e) {
      return fail(res, 400, std::string("bad label records: ") + e.what());
    } catch (const Error& e) {
      return fail(res, 400, e.what());
    }
    try {
      const uint64_t n = service.submit_labels(records);
      res.set_content(json{{"persisted", n}}.dump(), "application/json");
    } catch (const Error& e) {
      fail(res, status_for(e), e.what());
    }
  });

  server.Get("/api/progress", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      res.set_content(service.progress(annotator_of(req)).to_json(), "application/json");
    } catch (const Error& e) {
      fail(res, status_for(e), e.what());
    }
  });

  server.Get(R"(/img/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    uint64_t parsed = 0;
    auto [ptr, ec] = std::from_chars(id.data(), id.data() + id.size(), parsed);
    if (ec != std::errc() || !service.contains(parsed)) return fail(res, 404, "unknown id " + id);
    if (options.image_dir.empty()) return fail(res, 404, "no image directory configured");
    for (const char* ext : {".jpg", ".jpeg", ".png", ".webp", ".gif"}) {
      const fs::path path = options.image_dir / (id + ext);
      if (!fs::is_regular_file(path)) continue;
      std::ifstream in(path, std::ios::binary);
      std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      res.set_content(std::move(bytes), image_content_type(ext));
      return;
    }
    fail(res, 404, "no image for id " + id);
  });

  if (!options.ui_dir.empty()) {
    if (!server.set_mount_point("/", options.ui_dir.string())) {
      throw Error(ErrorCode::kIo, "cannot serve UI directory " + options.ui_dir.string());
    }
  } else {
    server.Get("/", [](const httplib::Request&, httplib::Response& res) { res.set_content(kPlaceholderPage, "text/html"); });
  }
}

AnnotationServer::AnnotationServer(AnnotationService& service, ServerOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
  if (!impl_->options.image_dir.empty() && !fs::is_directory(impl_->options.image_dir)) {
    throw Error(ErrorCode::kInvalidArgument, "image directory does not exist: " + impl_->options.image_dir.string());
  }
  impl_->install_routes();
}

AnnotationServer::~AnnotationServer() {
  stop();
  wait();
}

int AnnotationServer::start() {
  auto& s = impl_->server;
  if (impl_->options.port == 0) {
    impl_->port = s.bind_to_any_port(impl_->options.host);
  } else {
    impl_->port = s.bind_to_port(impl_->options.host, impl_->options.port) ? impl_->options.port : -1;
  }
  if (impl_->port <= 0) {
    throw Error(ErrorCode::kIo, "cannot bind " + impl_->options.host + ":" + std::to_string(impl_->options.port));
  }
  impl_->thread = std::thread([&s] { s.listen_after_bind(); });
  s.wait_until_ready();
  return impl_->port;
}

void AnnotationServer::wait() {
  if (impl_->thread.joinable()) impl_->thread.join();
}

void AnnotationServer::stop() { impl_->server.stop(); }

}  // namespace domaudit
