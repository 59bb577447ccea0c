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

// Desk-scale stand-in for web-scale two-domain training runs: a synthetic
// embedding generator with planted domains and object classes, plus linear
// probe experiments over mixtures built by the curation module.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "domaudit/classifiers.hpp"
#include "domaudit/curation.hpp"
#include "domaudit/embedding_store.hpp"

namespace domaudit {

struct SynthConfig {
  uint32_t dimension = 64;
  uint32_t num_classes = 10;
  // Samples per (domain, class) for natural, ambiguous, rendition.
  std::array<uint32_t, 3> samples_per_cell{100, 100, 100};
  // Minimum pairwise L2 distance between the unit class means.
  double class_separation = 1.0;
  // Length of the shared rendition offset, orthogonal to every class direction.
  double domain_offset = 1.0;
  // Norm of the isotropic within-class noise, per domain.
  double natural_noise = 0.5;
  double rendition_noise = 0.5;
  // Angle (radians) by which each rendition class mean is rotated towards a
  // rendition-only direction; 0 keeps the natural class structure.
  double style_rotation = 1.0;
  // Ambiguous samples are normalize((1 - w) * natural + w * rendition).
  double ambiguous_weight = 0.5;
  uint64_t seed = 0;

  void validate() const;
  // Plain "key = value" lines; unknown keys are errors.
  static SynthConfig from_config(const std::string& text);
  std::string to_json() const;
};

// Ids are assigned 0..N-1 in (domain, class, sample) order. Domain labels are
// the planted ground truth, class labels the object class.
std::vector<EmbeddingRecord> gen_two_domain(const SynthConfig& cfg);

struct SynthPools {
  std::vector<uint64_t> natural;
  std::vector<uint64_t> ambiguous;
  std::vector<uint64_t> rendition;
  std::vector<uint64_t> natural_eval;
  std::vector<uint64_t> rendition_eval;

  // natural + ambiguous + rendition, the analog of an uncurated corpus.
  std::vector<uint64_t> all_training() const;
};

// Holds out eval_fraction of every (domain, class) cell before any pooling.
SynthPools split_pools(std::span<const EmbeddingRecord> records, double eval_fraction, uint64_t seed);

// Indexed view of a corpus used by the experiments.
class ExperimentCorpus {
 public:
  explicit ExperimentCorpus(std::vector<EmbeddingRecord> records);

  const EmbeddingRecord& record(uint64_t id) const;
  const std::vector<EmbeddingRecord>& records() const { return records_; }
  uint32_t dimension() const { return dimension_; }

  // Class-label probe trained on the given ids.
  LinearReadout train_probe(std::span<const uint64_t> ids, const TrainConfig& cfg) const;
  // Fraction of ids whose class label the probe predicts.
  double accuracy(const LinearReadout& probe, std::span<const uint64_t> ids) const;

 private:
  std::vector<EmbeddingRecord> records_;
  std::unordered_map<uint64_t, size_t> index_;
  uint32_t dimension_ = 0;
};

struct ExperimentPoint {
  std::string label;
  uint64_t n_natural = 0;
  uint64_t n_rendition = 0;
  double natural_accuracy = 0.0;
  double rendition_accuracy = 0.0;
  uint64_t seed = 0;

  // Distance from the origin in (natural, rendition) accuracy space.
  double combined() const;
};

struct ExperimentOptions {
  TrainConfig probe;
  unsigned threads = 1;
};

// One probe per spec; points are independent and may run in parallel.
std::vector<ExperimentPoint> run_mix_experiment(const ExperimentCorpus& corpus, const SynthPools& pools,
                                                std::span<const MixSpec> sweep, const ExperimentOptions& options,
                                                std::span<const std::string> labels = {});

// Add-mode specs on a fixed natural budget.
std::vector<MixSpec> additive_sweep(uint64_t natural_budget, std::span<const uint64_t> added,
                                    std::span<const uint64_t> natural_pool, std::span<const uint64_t> rendition_pool,
                                    uint64_t seed);

struct NaturalVsRandomPoint {
  uint64_t size = 0;
  double natural_model_natural_acc = 0.0;
  double natural_model_rendition_acc = 0.0;
  double random_model_natural_acc = 0.0;
  double random_model_rendition_acc = 0.0;
  // natural-trained accuracy / random-trained accuracy, per eval domain.
  double natural_ratio = 0.0;
  double rendition_ratio = 0.0;
};

// For each size, a natural-only probe against a probe on an equally sized
// random subset of the uncurated pool.
std::vector<NaturalVsRandomPoint> run_natural_vs_random(const ExperimentCorpus& corpus, const SynthPools& pools,
                                                        std::span<const uint64_t> sizes,
                                                        const ExperimentOptions& options, uint64_t seed);

std::string experiment_json(std::span<const ExperimentPoint> points, const std::string& provenance_json);
// Long format: point,n_natural,n_rendition,domain,accuracy
std::string experiment_csv(std::span<const ExperimentPoint> points);
// AccuracyTable layout: one row per point, columns natural and rendition.
std::string experiment_table_csv(std::span<const ExperimentPoint> points);

std::string natural_vs_random_json(std::span<const NaturalVsRandomPoint> points, const std::string& provenance_json);
std::string natural_vs_random_csv(std::span<const NaturalVsRandomPoint> points);

enum class ExperimentKind { Ratio, Additive, NaturalVsRandom };

// Sweep description read from JSON, e.g.
// {"kind": "ratio", "n_total": 1600, "ratios": ["0:1", "1:3", "1:1"], "seed": 5}
struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::Ratio;
  double eval_fraction = 0.2;
  uint64_t split_seed = 0;
  uint64_t seed = 0;
  uint64_t n_total = 0;
  std::vector<MixRatio> ratios;
  std::vector<uint64_t> budgets;
  std::vector<uint64_t> added;
  std::vector<uint64_t> sizes;
  TrainConfig probe;
  unsigned threads = 1;

  static ExperimentSpec from_json(const std::string& text);
  std::string to_json() const;
};

struct ExperimentReport {
  std::string json;
  std::string csv;
};

ExperimentReport run_experiment(std::vector<EmbeddingRecord> records, const ExperimentSpec& spec,
                                const std::string& provenance_json = {});

}  // namespace domaudit
