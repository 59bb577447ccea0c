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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "domaudit/classifiers.hpp"
#include "domaudit/embedding_store.hpp"

namespace domaudit {

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  uint64_t tp = 0;
  uint64_t fp = 0;
  uint64_t fn = 0;
};

// One point per distinct score, sorted by descending threshold. A sample is
// predicted positive at threshold t when its score is >= t.
std::vector<PrPoint> pr_curve(std::span<const double> scores, std::span<const uint8_t> is_positive);

class PrecisionUnreachable : public Error {
 public:
  PrecisionUnreachable(double target, double max_precision);
  double max_precision() const { return max_precision_; }

 private:
  double max_precision_;
};

// Smallest threshold on the curve whose precision is >= target, i.e. the
// highest recall meeting the precision constraint.
PrPoint threshold_for_precision(std::span<const PrPoint> curve, double target);

struct CalibratedClassifier {
  DomainClassifier model;
  DomainLabel target_class = DomainLabel::Natural;
  // Score threshold for score-based models; for kNN models the chosen k is
  // stored in k and threshold holds the same value.
  double threshold = 0.0;
  int k = 0;
  double target_precision = 0.0;
  double achieved_val_precision = 0.0;
  double achieved_val_recall = 0.0;
  uint64_t val_support = 0;
  uint64_t val_accepted = 0;
  uint64_t val_fingerprint = 0;

  uint32_t dimension() const { return model.dimension(); }
  bool accepts(std::span<const float> x) const;

  std::string to_json() const;
  static CalibratedClassifier from_json(const std::string& text);
};

// Validation records with an unknown label are ignored. When a split is given
// the validation ids must all belong to its validation slice and the model
// must have been trained on its training slice.
CalibratedClassifier calibrate(const DomainClassifier& model, std::span<const EmbeddingRecord> val, DomainLabel target,
                               double precision, const SplitAssignment* split = nullptr);

// kNN calibration: largest k in [1, k_max] whose validation precision meets the target.
CalibratedClassifier calibrate_knn(const DomainClassifier& model, std::span<const EmbeddingRecord> val,
                                   DomainLabel target, double precision, int k_max);

struct Selection {
  size_t index = 0;
  // Candidates sharing the winning recall, in registration order.
  std::vector<size_t> tied;
};

Selection select_best(std::span<const CalibratedClassifier> candidates, DomainLabel target);

struct Evaluation {
  DomainLabel target = DomainLabel::Natural;
  double precision = 1.0;
  double recall = 0.0;
  uint64_t tp = 0;
  uint64_t fp = 0;
  uint64_t fn = 0;
  uint64_t support = 0;
  // Nothing was accepted; precision is reported as 1.0 by convention.
  bool zero_support = false;
};

Evaluation evaluate(const CalibratedClassifier& classifier, std::span<const EmbeddingRecord> labeled);

struct CalibrationRow {
  std::string model_id;
  DomainLabel target = DomainLabel::Natural;
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  uint64_t support = 0;
};

CalibrationRow calibration_row(const CalibratedClassifier& c);
std::string calibration_report_json(std::span<const CalibrationRow> rows);
std::string calibration_report_csv(std::span<const CalibrationRow> rows);

}  // namespace domaudit
