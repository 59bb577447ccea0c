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
#include "domaudit/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace domaudit {

using nlohmann::json;

std::vector<PrPoint> pr_curve(std::span<const double> scores, std::span<const uint8_t> is_positive) {
  if (scores.size() != is_positive.size()) {
    throw Error(ErrorCode::kInvalidArgument, "scores and labels differ in length");
  }
  uint64_t total_pos = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i])) throw Error(ErrorCode::kInvalidArgument, "NaN score at index " + std::to_string(i));
    total_pos += is_positive[i] ? 1 : 0;
  }
  if (total_pos == 0) throw Error(ErrorCode::kInvalidArgument, "no positive samples: recall is undefined");

  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return scores[a] > scores[b]; });

  std::vector<PrPoint> curve;
  uint64_t tp = 0;
  uint64_t fp = 0;
  for (size_t i = 0; i < order.size();) {
    const double t = scores[order[i]];
    while (i < order.size() && scores[order[i]] == t) {
      (is_positive[order[i]] ? tp : fp)++;
      ++i;
    }
    PrPoint p;
    p.threshold = t;
    p.tp = tp;
    p.fp = fp;
    p.fn = total_pos - tp;
    p.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    p.recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    curve.push_back(p);
  }
  return curve;
}

namespace {

std::string fmt_double(double v) {
  std::ostringstream ss;
  ss.precision(6);
  ss << v;
  return ss.str();
}

}  // namespace

PrecisionUnreachable::PrecisionUnreachable(double target, double max_precision)
    : Error(ErrorCode::kUnreachable, "precision unreachable: target " + fmt_double(target) +
                                         ", max achievable " + fmt_double(max_precision)),
      max_precision_(max_precision) {}

PrPoint threshold_for_precision(std::span<const PrPoint> curve, double target) {
  if (!(target > 0.0 && target <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "target precision must be in (0, 1]");
  const PrPoint* best = nullptr;
  double max_precision = 0.0;
  for (const auto& p : curve) {
    max_precision = std::max(max_precision, p.precision);
    if (p.precision >= target && (best == nullptr || p.threshold < best->threshold)) best = &p;
  }
  if (best == nullptr) throw PrecisionUnreachable(target, max_precision);
  return *best;
}

bool CalibratedClassifier::accepts(std::span<const float> x) const {
  if (model.variant() == ModelVariant::Knn) {
    return std::get<KnnStyleModel>(model.model).first_target_rank(x, static_cast<size_t>(k)) != 0;
  }
  return model.score(target_class, x) >= threshold;
}

namespace {

uint64_t val_fingerprint(std::span<const EmbeddingRecord> val) {
  std::vector<uint64_t> ids;
  ids.reserve(val.size());
  for (const auto& r : val) ids.push_back(r.id);
  std::sort(ids.begin(), ids.end());
  return fingerprint_ids(ids);
}

void check_split(const DomainClassifier& model, std::span<const EmbeddingRecord> val, const SplitAssignment& split) {
  std::vector<uint64_t> train = split.train_ids;
  std::sort(train.begin(), train.end());
  if (model.train_fingerprint != fingerprint_ids(train)) {
    throw Error(ErrorCode::kInvalidArgument,
                "model '" + model.model_id + "' was not trained on the training slice of this split");
  }
  std::unordered_set<uint64_t> val_ids(split.val_ids.begin(), split.val_ids.end());
  for (const auto& r : val) {
    if (!val_ids.contains(r.id)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "calibration record " + std::to_string(r.id) + " is not in the validation slice");
    }
  }
}

}  // namespace

CalibratedClassifier calibrate(const DomainClassifier& model, std::span<const EmbeddingRecord> val, DomainLabel target,
                               double precision, const SplitAssignment* split) {
  if (split != nullptr) check_split(model, val, *split);
  if (model.variant() == ModelVariant::Knn) {
    const auto& knn = std::get<KnnStyleModel>(model.model);
    return calibrate_knn(model, val, target, precision, static_cast<int>(knn.size()));
  }
  if (!model.supports(target)) {
    throw Error(ErrorCode::kInvalidArgument, "model '" + model.model_id + "' has no class '" + domain_name(target) + "'");
  }
  std::vector<double> scores;
  std::vector<uint8_t> positive;
  for (const auto& r : val) {
    if (r.domain_label == DomainLabel::Unknown) continue;
    scores.push_back(model.score(target, r.vector));
    positive.push_back(r.domain_label == target ? 1 : 0);
  }
  const auto curve = pr_curve(scores, positive);
  const PrPoint p = threshold_for_precision(curve, precision);

  CalibratedClassifier c;
  c.model = model;
  c.target_class = target;
  c.threshold = p.threshold;
  c.target_precision = precision;
  c.achieved_val_precision = p.precision;
  c.achieved_val_recall = p.recall;
  c.val_support = p.tp + p.fn;
  c.val_accepted = p.tp + p.fp;
  c.val_fingerprint = val_fingerprint(val);
  return c;
}

CalibratedClassifier calibrate_knn(const DomainClassifier& model, std::span<const EmbeddingRecord> val,
                                   DomainLabel target, double precision, int k_max) {
  if (!(precision > 0.0 && precision <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "target precision must be in (0, 1]");
  }
  KnnStyleModel knn = std::get<KnnStyleModel>(model.model);
  if (knn.target_style != target) {
    throw Error(ErrorCode::kInvalidArgument, "kNN model '" + model.model_id + "' targets '" +
                                                 domain_name(knn.target_style) + "', not '" + domain_name(target) + "'");
  }
  if (k_max <= 0) throw Error(ErrorCode::kInvalidArgument, "k_max must be positive");
  k_max = std::min<int>(k_max, static_cast<int>(knn.size()));

  // Acceptance at k is "first target neighbour has rank <= k", so one ranked
  // pass per record serves every k.
  std::vector<size_t> rank;
  std::vector<uint8_t> positive;
  uint64_t total_pos = 0;
  for (const auto& r : val) {
    if (r.domain_label == DomainLabel::Unknown) continue;
    rank.push_back(knn.first_target_rank(r.vector, static_cast<size_t>(k_max)));
    positive.push_back(r.domain_label == target ? 1 : 0);
    total_pos += positive.back();
  }
  if (total_pos == 0) throw Error(ErrorCode::kInvalidArgument, "no positive samples: recall is undefined");

  int best_k = 0;
  PrPoint best;
  double max_precision = 0.0;
  for (int k = 1; k <= k_max; ++k) {
    PrPoint p;
    for (size_t i = 0; i < rank.size(); ++i) {
      if (rank[i] != 0 && rank[i] <= static_cast<size_t>(k)) (positive[i] ? p.tp : p.fp)++;
    }
    p.fn = total_pos - p.tp;
    p.precision = p.tp + p.fp == 0 ? 1.0 : static_cast<double>(p.tp) / static_cast<double>(p.tp + p.fp);
    p.recall = static_cast<double>(p.tp) / static_cast<double>(total_pos);
    p.threshold = k;
    max_precision = std::max(max_precision, p.precision);
    if (p.precision >= precision) {
      best_k = k;
      best = p;
    }
  }
  if (best_k == 0) throw PrecisionUnreachable(precision, max_precision);

  CalibratedClassifier c;
  c.model = model;
  std::get<KnnStyleModel>(c.model.model).k = best_k;
  c.target_class = target;
  c.k = best_k;
  c.threshold = best_k;
  c.target_precision = precision;
  c.achieved_val_precision = best.precision;
  c.achieved_val_recall = best.recall;
  c.val_support = total_pos;
  c.val_accepted = best.tp + best.fp;
  c.val_fingerprint = val_fingerprint(val);
  return c;
}

Selection select_best(std::span<const CalibratedClassifier> candidates, DomainLabel target) {
  if (candidates.empty()) throw Error(ErrorCode::kInvalidArgument, "no candidate classifiers");
  for (const auto& c : candidates) {
    if (c.target_class != target) {
      throw Error(ErrorCode::kInvalidArgument, "candidate '" + c.model.model_id + "' is calibrated for '" +
                                                   domain_name(c.target_class) + "'");
    }
    if (c.val_fingerprint != candidates.front().val_fingerprint) {
      throw Error(ErrorCode::kInvalidArgument, "candidates were calibrated on different validation sets");
    }
  }
  Selection s;
  for (size_t i = 1; i < candidates.size(); ++i) {
    if (candidates[i].achieved_val_recall > candidates[s.index].achieved_val_recall) s.index = i;
  }
  for (size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].achieved_val_recall == candidates[s.index].achieved_val_recall) s.tied.push_back(i);
  }
  return s;
}

Evaluation evaluate(const CalibratedClassifier& classifier, std::span<const EmbeddingRecord> labeled) {
  Evaluation e;
  e.target = classifier.target_class;
  for (const auto& r : labeled) {
    if (r.domain_label == DomainLabel::Unknown) continue;
    const bool pos = r.domain_label == classifier.target_class;
    const bool acc = classifier.accepts(r.vector);
    if (pos && acc) ++e.tp;
    if (!pos && acc) ++e.fp;
    if (pos && !acc) ++e.fn;
  }
  e.support = e.tp + e.fn;
  e.zero_support = e.tp + e.fp == 0;
  e.precision = e.zero_support ? 1.0 : static_cast<double>(e.tp) / static_cast<double>(e.tp + e.fp);
  e.recall = e.support == 0 ? 0.0 : static_cast<double>(e.tp) / static_cast<double>(e.support);
  return e;
}

namespace {

json calibrated_json(const CalibratedClassifier& c) {
  return json{{"model_id", c.model.model_id},
              {"class", domain_name(c.target_class)},
              {"threshold", std::isinf(c.threshold) ? json("inf") : json(c.threshold)},
              {"k", c.k},
              {"target_precision", c.target_precision},
              {"precision", c.achieved_val_precision},
              {"recall", c.achieved_val_recall},
              {"support", c.val_support},
              {"accepted", c.val_accepted},
              {"val_fingerprint", c.val_fingerprint},
              {"model", json::parse(c.model.to_json())}};
}

double threshold_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
    throw Error(ErrorCode::kFormat, "bad threshold");
  }
  return j.get<double>();
}

}  // namespace

std::string CalibratedClassifier::to_json() const { return calibrated_json(*this).dump(1) + "\n"; }

CalibratedClassifier CalibratedClassifier::from_json(const std::string& text) {
  CalibratedClassifier c;
  try {
    const json j = json::parse(text);
    c.model = DomainClassifier::from_json(j.at("model").dump());
    c.target_class = parse_domain(j.at("class").get<std::string>());
    c.threshold = threshold_from_json(j.at("threshold"));
    c.k = j.value("k", 0);
    c.target_precision = j.at("target_precision").get<double>();
    c.achieved_val_precision = j.at("precision").get<double>();
    c.achieved_val_recall = j.at("recall").get<double>();
    c.val_support = j.value("support", uint64_t{0});
    c.val_accepted = j.value("accepted", uint64_t{0});
    c.val_fingerprint = j.value("val_fingerprint", uint64_t{0});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("bad calibrated classifier file: ") + e.what());
  }
  if (c.model.variant() == ModelVariant::Knn) {
    if (c.k <= 0) throw Error(ErrorCode::kFormat, "calibrated kNN model without k");
    std::get<KnnStyleModel>(c.model.model).k = c.k;
  }
  return c;
}

CalibrationRow calibration_row(const CalibratedClassifier& c) {
  return {c.model.model_id, c.target_class, c.threshold, c.achieved_val_precision, c.achieved_val_recall,
          c.val_support};
}

std::string calibration_report_json(std::span<const CalibrationRow> rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    arr.push_back({{"model_id", r.model_id},
                   {"class", domain_name(r.target)},
                   {"threshold", std::isinf(r.threshold) ? json("inf") : json(r.threshold)},
                   {"precision", r.precision},
                   {"recall", r.recall},
                   {"support", r.support}});
  }
  return arr.dump(2) + "\n";
}

std::string calibration_report_csv(std::span<const CalibrationRow> rows) {
  std::ostringstream out;
  out.precision(17);
  out << "model_id,class,threshold,precision,recall,support\n";
  for (const auto& r : rows) {
    out << r.model_id << ',' << domain_name(r.target) << ',';
    if (std::isinf(r.threshold)) {
      out << "inf";
    } else {
      out << r.threshold;
    }
    out << ',' << r.precision << ',' << r.recall << ',' << r.support << '\n';
  }
  return out.str();
}

}  // namespace domaudit
