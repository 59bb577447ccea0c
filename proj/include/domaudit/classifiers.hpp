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

// Domain classifier families over frozen, unit-norm embeddings:
//   LinearReadout     multinomial logistic regression trained by mini-batch SGD
//   CentroidModel     softmax over cosine similarity to per-class centroids
//   DensityRatioModel binary readout turned into a reference/shifted density ratio
//   KnnStyleModel     "any of the k nearest neighbours carries the style"

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "domaudit/common.hpp"
#include "domaudit/embedding_store.hpp"

namespace domaudit {

struct TrainConfig {
  int epochs = 50;
  int batch_size = 256;
  double learning_rate = 0.1;
  double weight_decay = 5e-4;
  // The learning rate is multiplied by lr_step_factor every lr_step_epochs.
  int lr_step_epochs = 20;
  double lr_step_factor = 0.1;
  uint64_t seed = 0;

  void validate() const;
};

// Dense row-major feature matrix plus per-row class index.
struct TrainingSet {
  uint32_t dimension = 0;
  std::vector<float> features;
  std::vector<int> targets;

  size_t size() const { return targets.size(); }
  std::span<const float> row(size_t i) const { return {features.data() + i * dimension, dimension}; }
  void add(std::span<const float> x, int target);
};

struct LinearReadout {
  uint32_t dimension = 0;
  // Class codes, one per output row. Domain classifiers use DomainLabel codes
  // (-1 stands for "everything else" in binary readouts); class probes use
  // object-class ids.
  std::vector<int32_t> classes;
  std::vector<double> weights;  // classes.size() x dimension
  std::vector<double> bias;

  size_t num_classes() const { return classes.size(); }
  std::vector<double> logits(std::span<const float> x) const;
  std::vector<double> scores(std::span<const float> x) const;
  int predict_index(std::span<const float> x) const;
  // Row index of a class code, or -1.
  int index_of(int32_t code) const;
};

std::vector<double> softmax(std::span<const double> logits);

// Called after every epoch with the current weights and the mean per-sample
// cross-entropy seen during that epoch.
using EpochObserver = std::function<void(int epoch, const LinearReadout& model, double mean_loss)>;

// Zero bias, weights drawn N(0, 0.01^2) from Rng(cfg.seed).
LinearReadout init_linear_readout(uint32_t dimension, std::vector<int32_t> classes, uint64_t seed);

LinearReadout train_softmax(const TrainingSet& data, std::vector<int32_t> classes, const TrainConfig& cfg,
                            const EpochObserver& observer = {});

// Domain readout over labeled records; every record label must be in classes.
LinearReadout train_linear_readout(std::span<const EmbeddingRecord> train, std::span<const DomainLabel> classes,
                                   const TrainConfig& cfg, const EpochObserver& observer = {});

struct CentroidModel {
  uint32_t dimension = 0;
  std::vector<DomainLabel> classes;
  std::vector<double> centroids;  // classes.size() x dimension, unit rows
  // Cosine similarities are multiplied by scale before the softmax.
  double scale = 1.0;

  std::vector<double> similarities(std::span<const float> x) const;
  std::vector<double> scores(std::span<const float> x) const;
};

CentroidModel train_centroids(std::span<const EmbeddingRecord> train, std::span<const DomainLabel> classes);

struct DensityRatioModel {
  LinearReadout readout;  // classes {reference, -1}
  DomainLabel reference = DomainLabel::Natural;
  double prior_correction = 1.0;  // n_shifted / n_reference
  double ratio_threshold = 0.2;

  double reference_probability(std::span<const float> x) const;
  double ratio(std::span<const float> x) const;
  bool accepts(std::span<const float> x) const { return ratio(x) >= ratio_threshold; }
};

// r = s / (1 - s) * prior_correction; s == 1 maps to +infinity.
double density_ratio_from_probability(double s, double prior_correction);

// Reference = records labeled `reference`, shifted = every other known label.
DensityRatioModel train_density_ratio(std::span<const EmbeddingRecord> train, DomainLabel reference,
                                      const TrainConfig& cfg, double ratio_threshold = 0.2);

struct KnnStyleModel {
  uint32_t dimension = 0;
  std::vector<uint64_t> ids;
  std::vector<DomainLabel> labels;
  std::vector<float> vectors;  // ids.size() x dimension
  int k = 1;
  DomainLabel target_style = DomainLabel::Natural;

  size_t size() const { return ids.size(); }
  std::span<const float> vector(size_t i) const { return {vectors.data() + i * dimension, dimension}; }
  // Database indices of the k most similar records, most similar first; ties
  // in similarity go to the smaller id.
  std::vector<size_t> nearest(std::span<const float> x, size_t k) const;
  // 1-based rank of the first target-style neighbour, or 0 if none is within limit.
  size_t first_target_rank(std::span<const float> x, size_t limit) const;
  bool decide(std::span<const float> x) const;
};

KnnStyleModel make_knn_model(std::span<const EmbeddingRecord> database, int k, DomainLabel target_style);

enum class ModelVariant { Linear, Centroid, DensityRatio, Knn };
const char* variant_name(ModelVariant v);
ModelVariant parse_variant(std::string_view name);

// A trained model plus the provenance needed to reproduce it.
struct DomainClassifier {
  std::string model_id;
  std::variant<LinearReadout, CentroidModel, DensityRatioModel, KnnStyleModel> model;
  TrainConfig config;
  uint64_t train_fingerprint = 0;
  uint64_t train_count = 0;

  ModelVariant variant() const { return static_cast<ModelVariant>(model.index()); }
  uint32_t dimension() const;
  // Per-class scores for linear and centroid models.
  std::vector<double> predict_scores(std::span<const float> x) const;
  // Monotone confidence that x belongs to target: the class probability for
  // linear and centroid models, the density ratio for density-ratio models.
  // Not defined for kNN models, which are calibrated over k instead.
  double score(DomainLabel target, std::span<const float> x) const;
  bool supports(DomainLabel target) const;

  std::string to_json() const;
  static DomainClassifier from_json(const std::string& text);
};

struct TrainRequest {
  ModelVariant variant = ModelVariant::Linear;
  std::string model_id;
  // Classes for linear/centroid models; empty means natural/ambiguous/rendition.
  std::vector<DomainLabel> classes;
  // Reference class (density ratio) or target style (kNN).
  DomainLabel target = DomainLabel::Natural;
  TrainConfig config;
  int k = 10;
  double ratio_threshold = 0.2;
  double centroid_scale = 1.0;
};

DomainClassifier train_classifier(std::span<const EmbeddingRecord> train, const TrainRequest& request);

}  // namespace domaudit
