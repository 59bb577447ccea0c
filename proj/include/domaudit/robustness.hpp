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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace domaudit {

// Model x test-set accuracy matrix, entries in [0, 1].
class AccuracyTable {
 public:
  AccuracyTable() = default;
  AccuracyTable(std::vector<std::string> models, std::vector<std::string> test_sets);

  // Header row: first cell ignored, then test-set ids. Each following row:
  // model id, then accuracies as decimals in [0, 1] or percentages ("39.58%").
  // Empty cells are missing entries.
  static AccuracyTable from_csv(const std::string& text);
  // {"models": [...], "test_sets": [...], "accuracy": [[...], ...]} or
  // {"<model>": {"<test set>": acc, ...}, ...}
  static AccuracyTable from_json(const std::string& text);

  const std::vector<std::string>& models() const { return models_; }
  const std::vector<std::string>& test_sets() const { return test_sets_; }

  void set(const std::string& model, const std::string& test_set, double accuracy);
  std::optional<double> get(const std::string& model, const std::string& test_set) const;
  double at(const std::string& model, const std::string& test_set) const;
  bool has_test_set(const std::string& test_set) const;

 private:
  size_t model_index(const std::string& model) const;
  size_t test_index(const std::string& test_set) const;

  std::vector<std::string> models_;
  std::vector<std::string> test_sets_;
  std::vector<std::optional<double>> values_;
};

struct DomainGroups {
  std::vector<std::string> natural;
  std::vector<std::string> rendition;
  std::string anchor;

  // ImageNet/DomainNet shift groups with ImageNet-Val as the anchor.
  static DomainGroups defaults();
  // Plain "key = a, b, c" lines with keys natural, rendition, anchor.
  static DomainGroups from_config(const std::string& text);
};

// acc_treated / acc_baseline.
double relative_corrected_ood_accuracy(double acc_treated, double acc_baseline);

// Unweighted mean over the group's columns for one model.
double group_average(const AccuracyTable& table, const std::string& model, std::span<const std::string> group);

enum class AxisTransform { Logit, Probit, Identity };
const char* transform_name(AxisTransform t);
AxisTransform parse_transform(const std::string& name);
double transform_accuracy(AxisTransform t, double acc);
double inverse_transform(AxisTransform t, double value);

struct FitOptions {
  AxisTransform transform = AxisTransform::Logit;
  // Clamp accuracies into [1e-6, 1 - 1e-6] instead of rejecting 0 and 1.
  bool clamp = false;
};

struct RobustnessFit {
  double slope = 0.0;
  double intercept = 0.0;
  AxisTransform transform = AxisTransform::Logit;
  bool clamp = false;
  std::vector<std::string> baseline_models;
  double residual_max = 0.0;

  std::string to_json() const;
};

// Least-squares line through (T(anchor), T(ood)). model_ids, when given, name
// the points in errors and in the fit's provenance.
RobustnessFit fit_baseline(std::span<const double> anchor_accs, std::span<const double> ood_accs,
                           const FitOptions& options = {}, std::span<const std::string> model_ids = {});

struct EffectiveRobustness {
  // T(ood) - (slope * T(anchor) + intercept)
  double transformed = 0.0;
  // ood - T^-1(slope * T(anchor) + intercept)
  double raw = 0.0;
};

EffectiveRobustness effective_robustness(const RobustnessFit& fit, double anchor_acc, double ood_acc);

struct PlotPoint {
  double x = 0.0;
  double y = 0.0;
  std::string group;
  std::string model;
};

std::string plot_csv(std::span<const PlotPoint> points);

struct RelativeAccuracyRow {
  std::string test_set;
  double treated = 0.0;
  double baseline = 0.0;
  double ratio = 0.0;
};

// Per test set where both models have an entry; test_sets empty means all columns.
std::vector<RelativeAccuracyRow> relative_accuracy_rows(const AccuracyTable& table, const std::string& treated,
                                                        const std::string& baseline,
                                                        std::span<const std::string> test_sets = {});
std::string relative_accuracy_json(std::span<const RelativeAccuracyRow> rows, const std::string& treated,
                                   const std::string& baseline);

struct RobustnessReport {
  // One fit per group ("natural", "rendition"), anchor accuracy on x.
  std::map<std::string, RobustnessFit> fits;
  std::vector<PlotPoint> points;
  // model -> group -> effective robustness
  std::map<std::string, std::map<std::string, EffectiveRobustness>> effective;
  std::string anchor;

  std::string to_json() const;
};

// Fits each group average against the anchor over the baseline models (all
// models when empty) and scores every model against those lines.
RobustnessReport robustness_report(const AccuracyTable& table, const DomainGroups& groups,
                                   std::span<const std::string> baseline_models, const FitOptions& options);

}  // namespace domaudit
