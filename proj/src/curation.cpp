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
#include "domaudit/curation.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include "domaudit/partitioner.hpp"
#include "json.hpp"

namespace domaudit {

using nlohmann::json;

namespace {

// Partial Fisher-Yates: the first n entries of a seeded shuffle.
std::vector<uint64_t> draw(std::span<const uint64_t> pool, uint64_t n, Rng& rng) {
  std::vector<uint64_t> work(pool.begin(), pool.end());
  for (uint64_t i = 0; i < n; ++i) {
    const uint64_t j = i + rng.uniform_index(work.size() - i);
    std::swap(work[i], work[j]);
  }
  work.resize(n);
  return work;
}

constexpr uint64_t kRenditionStream = 0xa5a5a5a5deadbeefULL;
constexpr uint64_t kShuffleStream = 0x5bd1e9955bd1e995ULL;

}  // namespace

std::vector<uint64_t> subsample_random(std::span<const uint64_t> pool, uint64_t n, uint64_t seed) {
  if (n > pool.size()) {
    throw Error(ErrorCode::kInvalidArgument, "cannot sample " + std::to_string(n) + " of " +
                                                 std::to_string(pool.size()) + " ids");
  }
  Rng rng(seed);
  return draw(pool, n, rng);
}

std::vector<uint64_t> subsample_balanced(std::span<const LabeledId> pool, uint64_t per_class, uint64_t seed) {
  std::vector<uint64_t> by_class[3];
  for (const auto& e : pool) {
    if (e.label == DomainLabel::Unknown) continue;
    by_class[static_cast<int>(e.label)].push_back(e.id);
  }
  for (DomainLabel c : kKnownDomains) {
    const auto& members = by_class[static_cast<int>(c)];
    if (!members.empty() && members.size() < per_class) {
      throw Error(ErrorCode::kInvalidArgument, std::string("insufficient support for class '") + domain_name(c) +
                                                   "': " + std::to_string(members.size()) + " < " +
                                                   std::to_string(per_class));
    }
  }
  std::vector<uint64_t> out;
  for (DomainLabel c : kKnownDomains) {
    const auto& members = by_class[static_cast<int>(c)];
    if (members.empty()) continue;
    // Each class gets its own stream so its draw does not depend on the others.
    Rng rng(seed + static_cast<uint64_t>(c) + 1);
    const auto picked = draw(members, per_class, rng);
    out.insert(out.end(), picked.begin(), picked.end());
  }
  return out;
}

std::string MixSpec::to_json() const {
  std::vector<uint64_t> nat(natural_pool);
  std::vector<uint64_t> rend(rendition_pool);
  std::sort(nat.begin(), nat.end());
  std::sort(rend.begin(), rend.end());
  json j{{"mode", mode == MixMode::Replace ? "replace" : "add"},
         {"n_total", output_size()},
         {"n_natural", natural_count()},
         {"n_rendition", n_rendition},
         {"seed", seed},
         {"natural_pool", {{"size", natural_pool.size()}, {"fingerprint", fingerprint_ids(nat)}}},
         {"rendition_pool", {{"size", rendition_pool.size()}, {"fingerprint", fingerprint_ids(rend)}}}};
  return j.dump(2) + "\n";
}

MixOutput build_mix(const MixSpec& spec) {
  if (spec.mode == MixMode::Replace && spec.n_rendition > spec.n_total) {
    throw Error(ErrorCode::kInvalidArgument, "n_rendition exceeds n_total");
  }
  const uint64_t n_nat = spec.natural_count();
  if (n_nat > spec.natural_pool.size()) {
    throw Error(ErrorCode::kInvalidArgument, "natural pool exhausted: need " + std::to_string(n_nat) + ", have " +
                                                 std::to_string(spec.natural_pool.size()));
  }
  if (spec.n_rendition > spec.rendition_pool.size()) {
    throw Error(ErrorCode::kInvalidArgument, "rendition pool exhausted: need " + std::to_string(spec.n_rendition) +
                                                 ", have " + std::to_string(spec.rendition_pool.size()));
  }
  const std::unordered_set<uint64_t> nat_set(spec.natural_pool.begin(), spec.natural_pool.end());
  for (uint64_t id : spec.rendition_pool) {
    if (nat_set.contains(id)) throw Error(ErrorCode::kInvalidArgument, "pools overlap at id " + std::to_string(id));
  }

  Rng nat_rng(spec.seed);
  Rng rend_rng(spec.seed ^ kRenditionStream);
  MixOutput out;
  out.ids = draw(spec.natural_pool, n_nat, nat_rng);
  const auto rend = draw(spec.rendition_pool, spec.n_rendition, rend_rng);
  out.ids.insert(out.ids.end(), rend.begin(), rend.end());
  out.n_natural = n_nat;
  out.n_rendition = spec.n_rendition;
  Rng shuffle_rng(spec.seed ^ kShuffleStream);
  shuffle_rng.shuffle(out.ids);
  return out;
}

uint64_t rendition_count(uint64_t n_total, MixRatio ratio) {
  if (!(ratio.rendition >= 0) || !(ratio.natural >= 0) || ratio.rendition + ratio.natural <= 0 ||
      !std::isfinite(ratio.rendition) || !std::isfinite(ratio.natural)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid mixing ratio");
  }
  const double exact = static_cast<double>(n_total) * ratio.rendition / (ratio.rendition + ratio.natural);
  return std::min<uint64_t>(n_total, static_cast<uint64_t>(std::floor(exact + 0.5)));
}

std::vector<MixSpec> ratio_sweep(uint64_t n_total, std::span<const MixRatio> ratios,
                                 std::span<const uint64_t> natural_pool, std::span<const uint64_t> rendition_pool,
                                 uint64_t seed) {
  std::vector<MixSpec> out;
  for (const auto& r : ratios) {
    MixSpec s;
    s.natural_pool.assign(natural_pool.begin(), natural_pool.end());
    s.rendition_pool.assign(rendition_pool.begin(), rendition_pool.end());
    s.n_total = n_total;
    s.n_rendition = rendition_count(n_total, r);
    s.mode = MixMode::Replace;
    s.seed = seed;
    if (s.n_rendition > rendition_pool.size() || s.natural_count() > natural_pool.size()) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "infeasible ratio %g:%g for n_total %llu", r.rendition, r.natural,
                    static_cast<unsigned long long>(n_total));
      throw Error(ErrorCode::kInvalidArgument, std::string(buf) + " (pools: " + std::to_string(natural_pool.size()) +
                                                   " natural, " + std::to_string(rendition_pool.size()) +
                                                   " rendition)");
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string CleanTestSet::to_json() const {
  json j{{"source", source},
         {"intended", domain_name(intended)},
         {"kept", kept_ids.size()},
         {"removed", {{"ambiguous", removed_ambiguous}, {"opposite", removed_opposite}}},
         {"classes_remaining", classes_remaining},
         {"empty", empty},
         {"kept_ids", kept_ids}};
  return j.dump(2) + "\n";
}

CleanTestSet clean_testset(std::span<const EmbeddingRecord> test, const CalibratedClassifier& natural_clf,
                           const CalibratedClassifier& rendition_clf, DomainLabel intended, const std::string& source) {
  if (intended != DomainLabel::Natural && intended != DomainLabel::Rendition) {
    throw Error(ErrorCode::kInvalidArgument, "intended domain must be natural or rendition");
  }
  CleanTestSet out;
  out.source = source;
  out.intended = intended;
  std::set<int32_t> classes;
  for (const auto& r : test) {
    const DomainLabel d = assign_domain(natural_clf.accepts(r.vector), rendition_clf.accepts(r.vector));
    if (d == intended) {
      out.kept_ids.push_back(r.id);
      if (r.class_label >= 0) classes.insert(r.class_label);
    } else {
      out.removed_ids.push_back(r.id);
      (d == DomainLabel::Ambiguous ? out.removed_ambiguous : out.removed_opposite)++;
    }
  }
  out.classes_remaining = classes.size();
  out.empty = out.kept_ids.empty();
  return out;
}

}  // namespace domaudit
