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

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "domaudit/calibration.hpp"

namespace domaudit {

// Natural only when the natural classifier alone fires, rendition only when
// the rendition classifier alone fires, ambiguous otherwise.
constexpr DomainLabel assign_domain(bool accept_natural, bool accept_rendition) {
  if (accept_natural && !accept_rendition) return DomainLabel::Natural;
  if (!accept_natural && accept_rendition) return DomainLabel::Rendition;
  return DomainLabel::Ambiguous;
}

struct CompositionReport {
  std::string dataset;
  uint64_t corpus_size = 0;
  // natural, ambiguous, rendition
  std::array<uint64_t, 3> counts{};
  std::string natural_model_id;
  std::string rendition_model_id;
  double natural_threshold = 0.0;
  double rendition_threshold = 0.0;
  double natural_precision = 0.0;
  double rendition_precision = 0.0;
  // Validation-precision target the thresholds were derived for (0 when unknown).
  double precision_level = 0.0;

  uint64_t count(DomainLabel d) const { return counts[static_cast<size_t>(d)]; }
  double fraction(DomainLabel d) const;

  std::string to_json() const;
  static CompositionReport from_json(const std::string& text);
};

// Aligned text table with one row per report.
std::string composition_table(std::span<const CompositionReport> reports);

struct PartitionOptions {
  size_t chunk_size = 65536;
  unsigned threads = 1;
  bool collect_ids = true;
  std::string dataset;
};

struct PartitionResult {
  CompositionReport report;
  std::vector<uint64_t> natural_ids;
  std::vector<uint64_t> ambiguous_ids;
  std::vector<uint64_t> rendition_ids;
};

// Single streaming pass; chunks are classified in parallel and merged in file order.
PartitionResult partition_store(const std::filesystem::path& store, const CalibratedClassifier& natural_clf,
                                const CalibratedClassifier& rendition_clf, const PartitionOptions& options = {});

// Same rule over in-memory records.
PartitionResult partition_records(std::span<const EmbeddingRecord> records, const CalibratedClassifier& natural_clf,
                                  const CalibratedClassifier& rendition_clf, const PartitionOptions& options = {});

void write_partition_ids(const PartitionResult& result, const std::filesystem::path& prefix);

struct SkippedLevel {
  double level = 0.0;
  std::string reason;
};

struct SweepResult {
  std::vector<CompositionReport> reports;
  std::vector<SkippedLevel> skipped;
};

// For every precision level: calibrate each family member on val, keep the
// highest-recall member per domain, and partition the store with the pair.
SweepResult composition_sweep(const std::filesystem::path& store, std::span<const EmbeddingRecord> val,
                              std::span<const DomainClassifier> natural_family,
                              std::span<const DomainClassifier> rendition_family, std::span<const double> levels,
                              const PartitionOptions& options = {});

std::string sweep_json(const SweepResult& result);

}  // namespace domaudit
