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
#include "domaudit/partitioner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace domaudit {

using nlohmann::json;

double CompositionReport::fraction(DomainLabel d) const {
  if (corpus_size == 0) return 0.0;
  return static_cast<double>(count(d)) / static_cast<double>(corpus_size);
}

namespace {

json number_or_inf(double v) { return std::isinf(v) ? json("inf") : json(v); }

double number_from(const json& j) {
  if (j.is_string()) return std::numeric_limits<double>::infinity();
  return j.get<double>();
}

}  // namespace

std::string CompositionReport::to_json() const {
  json j{{"dataset", dataset},
         {"samples", corpus_size},
         {"counts",
          {{"natural", counts[0]}, {"ambiguous", counts[1]}, {"rendition", counts[2]}}},
         {"fractions",
          {{"natural", fraction(DomainLabel::Natural)},
           {"ambiguous", fraction(DomainLabel::Ambiguous)},
           {"rendition", fraction(DomainLabel::Rendition)}}},
         {"natural_classifier",
          {{"model_id", natural_model_id},
           {"threshold", number_or_inf(natural_threshold)},
           {"val_precision", natural_precision}}},
         {"rendition_classifier",
          {{"model_id", rendition_model_id},
           {"threshold", number_or_inf(rendition_threshold)},
           {"val_precision", rendition_precision}}},
         {"precision_level", precision_level}};
  return j.dump(2) + "\n";
}

CompositionReport CompositionReport::from_json(const std::string& text) {
  CompositionReport r;
  try {
    const json j = json::parse(text);
    r.dataset = j.value("dataset", "");
    r.corpus_size = j.at("samples").get<uint64_t>();
    const json& c = j.at("counts");
    r.counts = {c.at("natural").get<uint64_t>(), c.at("ambiguous").get<uint64_t>(), c.at("rendition").get<uint64_t>()};
    const json& n = j.at("natural_classifier");
    const json& d = j.at("rendition_classifier");
    r.natural_model_id = n.value("model_id", "");
    r.natural_threshold = number_from(n.at("threshold"));
    r.natural_precision = n.value("val_precision", 0.0);
    r.rendition_model_id = d.value("model_id", "");
    r.rendition_threshold = number_from(d.at("threshold"));
    r.rendition_precision = d.value("val_precision", 0.0);
    r.precision_level = j.value("precision_level", 0.0);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("bad composition report: ") + e.what());
  }
  return r;
}

std::string composition_table(std::span<const CompositionReport> reports) {
  std::vector<std::array<std::string, 7>> rows;
  rows.push_back({"Dataset", "#Samples", "Natural thr", "Rendition thr", "Natural", "Ambiguous", "Rendition"});
  char buf[64];
  auto pct = [&](double f) {
    std::snprintf(buf, sizeof(buf), "%.2f %%", 100.0 * f);
    return std::string(buf);
  };
  auto thr = [&](double t) {
    std::snprintf(buf, sizeof(buf), "%.4g", t);
    return std::string(buf);
  };
  for (const auto& r : reports) {
    rows.push_back({r.dataset.empty() ? "-" : r.dataset, std::to_string(r.corpus_size), thr(r.natural_threshold),
                    thr(r.rendition_threshold), pct(r.fraction(DomainLabel::Natural)),
                    pct(r.fraction(DomainLabel::Ambiguous)), pct(r.fraction(DomainLabel::Rendition))});
  }
  std::array<size_t, 7> width{};
  for (const auto& row : rows) {
    for (size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t c = 0; c < rows[i].size(); ++c) {
      const auto& cell = rows[i][c];
      const std::string pad(width[c] - cell.size(), ' ');
      // Dataset column left-aligned, numbers right-aligned.
      out += c == 0 ? cell + pad : pad + cell;
      out += c + 1 < rows[i].size() ? "  " : "\n";
    }
    if (i == 0) {
      size_t total = 0;
      for (size_t w : width) total += w;
      out += std::string(total + 2 * (width.size() - 1), '-') + "\n";
    }
  }
  return out;
}

namespace {

void check_classifiers(uint32_t dimension, const CalibratedClassifier& natural_clf,
                       const CalibratedClassifier& rendition_clf) {
  if (natural_clf.dimension() != dimension || rendition_clf.dimension() != dimension) {
    throw Error(ErrorCode::kInvalidArgument, "classifier dimension (" + std::to_string(natural_clf.dimension()) + ", " +
                                                 std::to_string(rendition_clf.dimension()) +
                                                 ") does not match store dimension " + std::to_string(dimension));
  }
}

CompositionReport empty_report(const CalibratedClassifier& natural_clf, const CalibratedClassifier& rendition_clf,
                               const PartitionOptions& options) {
  CompositionReport r;
  r.dataset = options.dataset;
  r.natural_model_id = natural_clf.model.model_id;
  r.rendition_model_id = rendition_clf.model.model_id;
  r.natural_threshold = natural_clf.threshold;
  r.rendition_threshold = rendition_clf.threshold;
  r.natural_precision = natural_clf.achieved_val_precision;
  r.rendition_precision = rendition_clf.achieved_val_precision;
  r.precision_level = natural_clf.target_precision == rendition_clf.target_precision ? natural_clf.target_precision : 0.0;
  return r;
}

// Labels every record of the chunk, splitting the work into contiguous slices.
void classify_chunk(std::span<const EmbeddingRecord> chunk, const CalibratedClassifier& natural_clf,
                    const CalibratedClassifier& rendition_clf, unsigned threads, std::vector<DomainLabel>& out) {
  out.resize(chunk.size());
  auto work = [&](size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      out[i] = assign_domain(natural_clf.accepts(chunk[i].vector), rendition_clf.accepts(chunk[i].vector));
    }
  };
  threads = std::max(1u, threads);
  if (threads == 1 || chunk.size() < 2 * threads) {
    work(0, chunk.size());
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const size_t per = (chunk.size() + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const size_t begin = std::min(chunk.size(), t * per);
    const size_t end = std::min(chunk.size(), begin + per);
    pool.emplace_back([&, t, begin, end] {
      try {
        work(begin, end);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void collect(std::span<const EmbeddingRecord> chunk, const std::vector<DomainLabel>& labels, bool collect_ids,
             PartitionResult& result) {
  for (size_t i = 0; i < chunk.size(); ++i) {
    const DomainLabel d = labels[i];
    ++result.report.counts[static_cast<size_t>(d)];
    if (!collect_ids) continue;
    switch (d) {
      case DomainLabel::Natural: result.natural_ids.push_back(chunk[i].id); break;
      case DomainLabel::Rendition: result.rendition_ids.push_back(chunk[i].id); break;
      default: result.ambiguous_ids.push_back(chunk[i].id); break;
    }
  }
  result.report.corpus_size += chunk.size();
}

}  // namespace

PartitionResult partition_store(const std::filesystem::path& store, const CalibratedClassifier& natural_clf,
                                const CalibratedClassifier& rendition_clf, const PartitionOptions& options) {
  StoreReader reader(store);
  check_classifiers(reader.dimension(), natural_clf, rendition_clf);
  if (options.chunk_size == 0) throw Error(ErrorCode::kInvalidArgument, "chunk_size must be positive");
  PartitionResult result;
  result.report = empty_report(natural_clf, rendition_clf, options);
  std::vector<EmbeddingRecord> chunk;
  std::vector<DomainLabel> labels;
  while (reader.next_chunk(chunk, options.chunk_size) > 0) {
    classify_chunk(chunk, natural_clf, rendition_clf, options.threads, labels);
    collect(chunk, labels, options.collect_ids, result);
  }
  return result;
}

PartitionResult partition_records(std::span<const EmbeddingRecord> records, const CalibratedClassifier& natural_clf,
                                  const CalibratedClassifier& rendition_clf, const PartitionOptions& options) {
  PartitionResult result;
  result.report = empty_report(natural_clf, rendition_clf, options);
  if (records.empty()) return result;
  check_classifiers(static_cast<uint32_t>(records.front().vector.size()), natural_clf, rendition_clf);
  if (options.chunk_size == 0) throw Error(ErrorCode::kInvalidArgument, "chunk_size must be positive");
  std::vector<DomainLabel> labels;
  for (size_t start = 0; start < records.size(); start += options.chunk_size) {
    const auto chunk = records.subspan(start, std::min(options.chunk_size, records.size() - start));
    classify_chunk(chunk, natural_clf, rendition_clf, options.threads, labels);
    collect(chunk, labels, options.collect_ids, result);
  }
  return result;
}

void write_partition_ids(const PartitionResult& result, const std::filesystem::path& prefix) {
  write_id_list(prefix.string() + ".natural.ids", result.natural_ids);
  write_id_list(prefix.string() + ".ambiguous.ids", result.ambiguous_ids);
  write_id_list(prefix.string() + ".rendition.ids", result.rendition_ids);
}

namespace {

// Calibrates every family member and returns the highest-recall one.
CalibratedClassifier best_of(std::span<const DomainClassifier> family, std::span<const EmbeddingRecord> val,
                             DomainLabel target, double level, std::vector<std::string>& failures) {
  std::vector<CalibratedClassifier> ok;
  for (const auto& m : family) {
    try {
      ok.push_back(calibrate(m, val, target, level));
    } catch (const PrecisionUnreachable& e) {
      failures.push_back(m.model_id + ": " + e.what());
    }
  }
  if (ok.empty()) throw Error(ErrorCode::kUnreachable, "");
  return ok[select_best(ok, target).index];
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) out += (i ? "; " : "") + parts[i];
  return out;
}

}  // namespace

SweepResult composition_sweep(const std::filesystem::path& store, std::span<const EmbeddingRecord> val,
                              std::span<const DomainClassifier> natural_family,
                              std::span<const DomainClassifier> rendition_family, std::span<const double> levels,
                              const PartitionOptions& options) {
  if (!levels.empty() && (natural_family.empty() || rendition_family.empty())) {
    throw Error(ErrorCode::kInvalidArgument, "both classifier families need at least one model");
  }
  SweepResult out;
  for (double level : levels) {
    if (!(level > 0.0 && level <= 1.0)) {
      out.skipped.push_back({level, "precision level outside (0, 1]"});
      continue;
    }
    std::vector<std::string> failures;
    try {
      const auto nat = best_of(natural_family, val, DomainLabel::Natural, level, failures);
      const auto rend = best_of(rendition_family, val, DomainLabel::Rendition, level, failures);
      auto result = partition_store(store, nat, rend, PartitionOptions{options.chunk_size, options.threads, false,
                                                                        options.dataset});
      result.report.precision_level = level;
      out.reports.push_back(std::move(result.report));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kUnreachable) throw;
      out.skipped.push_back({level, join(failures)});
    }
  }
  return out;
}

std::string sweep_json(const SweepResult& result) {
  json reports = json::array();
  for (const auto& r : result.reports) reports.push_back(json::parse(r.to_json()));
  json skipped = json::array();
  for (const auto& s : result.skipped) skipped.push_back({{"level", s.level}, {"reason", s.reason}});
  return json{{"reports", reports}, {"skipped", skipped}}.dump(2) + "\n";
}

}  // namespace domaudit
