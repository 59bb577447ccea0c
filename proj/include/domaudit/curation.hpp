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

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "domaudit/calibration.hpp"

namespace domaudit {

// Seeded uniform sample without replacement, in draw order.
std::vector<uint64_t> subsample_random(std::span<const uint64_t> pool, uint64_t n, uint64_t seed);

struct LabeledId {
  uint64_t id = 0;
  DomainLabel label = DomainLabel::Unknown;
};

// per_class ids from each known class present in the pool, grouped in
// natural/ambiguous/rendition order.
std::vector<uint64_t> subsample_balanced(std::span<const LabeledId> pool, uint64_t per_class, uint64_t seed);

enum class MixMode { Replace, Add };

struct MixSpec {
  std::vector<uint64_t> natural_pool;
  std::vector<uint64_t> rendition_pool;
  // Replace: output has n_total ids, n_rendition of them renditions.
  // Add: output has n_natural + n_rendition ids; n_total is derived.
  uint64_t n_total = 0;
  uint64_t n_rendition = 0;
  uint64_t n_natural = 0;
  MixMode mode = MixMode::Replace;
  uint64_t seed = 0;

  uint64_t natural_count() const { return mode == MixMode::Replace ? n_total - n_rendition : n_natural; }
  uint64_t output_size() const { return natural_count() + n_rendition; }

  // Provenance only; pools are summarized by size and fingerprint.
  std::string to_json() const;
};

struct MixOutput {
  std::vector<uint64_t> ids;
  uint64_t n_natural = 0;
  uint64_t n_rendition = 0;
};

// Natural and rendition draws use independent streams of the seed, so mixes
// that differ only in n_rendition share their natural part, and smaller
// rendition draws are prefixes of larger ones. The combined list is shuffled.
MixOutput build_mix(const MixSpec& spec);

// Rendition:natural parts, e.g. {1, 3} for 1:3.
struct MixRatio {
  double rendition = 1.0;
  double natural = 1.0;
};

// n_rendition = round-half-up(n_total * r / (r + n)).
uint64_t rendition_count(uint64_t n_total, MixRatio ratio);

std::vector<MixSpec> ratio_sweep(uint64_t n_total, std::span<const MixRatio> ratios,
                                 std::span<const uint64_t> natural_pool, std::span<const uint64_t> rendition_pool,
                                 uint64_t seed);

struct CleanTestSet {
  std::string source;
  DomainLabel intended = DomainLabel::Natural;
  std::vector<uint64_t> kept_ids;
  uint64_t removed_ambiguous = 0;
  uint64_t removed_opposite = 0;
  std::vector<uint64_t> removed_ids;
  // Distinct non-negative class labels among kept records.
  uint64_t classes_remaining = 0;
  bool empty = false;

  std::string to_json() const;
};

CleanTestSet clean_testset(std::span<const EmbeddingRecord> test, const CalibratedClassifier& natural_clf,
                           const CalibratedClassifier& rendition_clf, DomainLabel intended,
                           const std::string& source = {});

}  // namespace domaudit
