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
#include "domaudit/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

namespace domaudit {

using nlohmann::json;

void TrainConfig::validate() const {
  if (epochs < 0) throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 0");
  if (batch_size <= 0) throw Error(ErrorCode::kInvalidArgument, "batch_size must be positive");
  if (!(learning_rate > 0)) throw Error(ErrorCode::kInvalidArgument, "learning_rate must be positive");
  if (!(weight_decay >= 0)) throw Error(ErrorCode::kInvalidArgument, "weight_decay must be >= 0");
  if (lr_step_epochs <= 0) throw Error(ErrorCode::kInvalidArgument, "lr_step_epochs must be positive");
  if (!(lr_step_factor > 0)) throw Error(ErrorCode::kInvalidArgument, "lr_step_factor must be positive");
}

void TrainingSet::add(std::span<const float> x, int target) {
  if (x.size() != dimension) throw Error(ErrorCode::kInvalidArgument, "training vector has wrong dimension");
  features.insert(features.end(), x.begin(), x.end());
  targets.push_back(target);
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

std::vector<double> LinearReadout::logits(std::span<const float> x) const {
  if (x.size() != dimension) {
    throw Error(ErrorCode::kInvalidArgument, "dimension mismatch: model " + std::to_string(dimension) + ", input " +
                                                 std::to_string(x.size()));
  }
  std::vector<double> out(bias);
  for (size_t c = 0; c < classes.size(); ++c) {
    const double* w = weights.data() + c * dimension;
    double acc = 0.0;
    for (uint32_t j = 0; j < dimension; ++j) acc += w[j] * x[j];
    out[c] += acc;
  }
  return out;
}

std::vector<double> LinearReadout::scores(std::span<const float> x) const { return softmax(logits(x)); }

int LinearReadout::predict_index(std::span<const float> x) const {
  const auto l = logits(x);
  return static_cast<int>(std::max_element(l.begin(), l.end()) - l.begin());
}

int LinearReadout::index_of(int32_t code) const {
  auto it = std::find(classes.begin(), classes.end(), code);
  return it == classes.end() ? -1 : static_cast<int>(it - classes.begin());
}

LinearReadout init_linear_readout(uint32_t dimension, std::vector<int32_t> classes, uint64_t seed) {
  LinearReadout m;
  m.dimension = dimension;
  m.classes = std::move(classes);
  m.weights.resize(m.classes.size() * dimension);
  m.bias.assign(m.classes.size(), 0.0);
  Rng rng(seed);
  for (double& w : m.weights) w = 0.01 * rng.normal();
  return m;
}

LinearReadout train_softmax(const TrainingSet& data, std::vector<int32_t> classes, const TrainConfig& cfg,
                            const EpochObserver& observer) {
  cfg.validate();
  const size_t k = classes.size();
  const uint32_t d = data.dimension;
  if (k < 2) throw Error(ErrorCode::kInvalidArgument, "need at least two classes");
  if (d == 0) throw Error(ErrorCode::kInvalidArgument, "dimension must be positive");
  std::vector<size_t> support(k, 0);
  for (int t : data.targets) {
    if (t < 0 || static_cast<size_t>(t) >= k) throw Error(ErrorCode::kInvalidArgument, "target out of range");
    ++support[t];
  }
  for (size_t c = 0; c < k; ++c) {
    if (support[c] == 0) {
      throw Error(ErrorCode::kInvalidArgument, "empty class " + std::to_string(classes[c]) + " in training data");
    }
  }

  LinearReadout model = init_linear_readout(d, std::move(classes), cfg.seed);
  Rng order_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), size_t{0});

  std::vector<double> grad_w(model.weights.size());
  std::vector<double> grad_b(k);
  std::vector<double> logit(k);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.learning_rate * std::pow(cfg.lr_step_factor, epoch / cfg.lr_step_epochs);
    order_rng.shuffle(order);
    double loss_sum = 0.0;

    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      std::fill(grad_w.begin(), grad_w.end(), 0.0);
      std::fill(grad_b.begin(), grad_b.end(), 0.0);

      for (size_t n = start; n < end; ++n) {
        const size_t i = order[n];
        const float* x = data.features.data() + i * d;
        const int y = data.targets[i];
        for (size_t c = 0; c < k; ++c) {
          const double* w = model.weights.data() + c * d;
          double acc = model.bias[c];
          for (uint32_t j = 0; j < d; ++j) acc += w[j] * x[j];
          logit[c] = acc;
        }
        const double m = *std::max_element(logit.begin(), logit.end());
        double sum = 0.0;
        for (size_t c = 0; c < k; ++c) sum += std::exp(logit[c] - m);
        const double lse = m + std::log(sum);
        loss_sum += lse - logit[y];
        for (size_t c = 0; c < k; ++c) {
          const double g = std::exp(logit[c] - lse) - (static_cast<int>(c) == y ? 1.0 : 0.0);
          double* gw = grad_w.data() + c * d;
          for (uint32_t j = 0; j < d; ++j) gw[j] += g * x[j];
          grad_b[c] += g;
        }
      }

      const double inv = 1.0 / static_cast<double>(end - start);
      for (size_t p = 0; p < model.weights.size(); ++p) {
        model.weights[p] -= lr * (grad_w[p] * inv + cfg.weight_decay * model.weights[p]);
      }
      for (size_t c = 0; c < k; ++c) model.bias[c] -= lr * grad_b[c] * inv;
    }

    const double mean_loss = loss_sum / static_cast<double>(data.size());
    if (!std::isfinite(mean_loss)) {
      throw Error(ErrorCode::kNumeric, "training diverged: non-finite loss at epoch " + std::to_string(epoch));
    }
    if (observer) observer(epoch, model, mean_loss);
  }
  return model;
}

namespace {

std::vector<DomainLabel> default_classes() {
  return {DomainLabel::Natural, DomainLabel::Ambiguous, DomainLabel::Rendition};
}

void check_known(std::span<const DomainLabel> classes) {
  for (DomainLabel c : classes) {
    if (c == DomainLabel::Unknown) throw Error(ErrorCode::kInvalidArgument, "class list contains 'unknown'");
  }
}

}  // namespace

LinearReadout train_linear_readout(std::span<const EmbeddingRecord> train, std::span<const DomainLabel> classes,
                                   const TrainConfig& cfg, const EpochObserver& observer) {
  check_known(classes);
  if (train.empty()) throw Error(ErrorCode::kInvalidArgument, "empty training set");
  TrainingSet data;
  data.dimension = static_cast<uint32_t>(train.front().vector.size());
  std::vector<int32_t> codes;
  for (DomainLabel c : classes) codes.push_back(static_cast<int32_t>(c));
  for (const auto& r : train) {
    auto it = std::find(classes.begin(), classes.end(), r.domain_label);
    if (it == classes.end()) {
      throw Error(ErrorCode::kInvalidArgument, "record " + std::to_string(r.id) + " has label '" +
                                                   domain_name(r.domain_label) + "' outside the class list");
    }
    data.add(r.vector, static_cast<int>(it - classes.begin()));
  }
  for (size_t c = 0; c < classes.size(); ++c) {
    if (std::find(data.targets.begin(), data.targets.end(), static_cast<int>(c)) == data.targets.end()) {
      throw Error(ErrorCode::kInvalidArgument, std::string("empty class '") + domain_name(classes[c]) + "'");
    }
  }
  return train_softmax(data, std::move(codes), cfg, observer);
}

std::vector<double> CentroidModel::similarities(std::span<const float> x) const {
  if (x.size() != dimension) {
    throw Error(ErrorCode::kInvalidArgument, "dimension mismatch: model " + std::to_string(dimension) + ", input " +
                                                 std::to_string(x.size()));
  }
  std::vector<double> out(classes.size());
  for (size_t c = 0; c < classes.size(); ++c) {
    const double* mu = centroids.data() + c * dimension;
    double acc = 0.0;
    for (uint32_t j = 0; j < dimension; ++j) acc += mu[j] * x[j];
    out[c] = acc;
  }
  return out;
}

std::vector<double> CentroidModel::scores(std::span<const float> x) const {
  auto s = similarities(x);
  for (double& v : s) v *= scale;
  return softmax(s);
}

CentroidModel train_centroids(std::span<const EmbeddingRecord> train, std::span<const DomainLabel> classes) {
  check_known(classes);
  if (train.empty()) throw Error(ErrorCode::kInvalidArgument, "empty training set");
  CentroidModel m;
  m.dimension = static_cast<uint32_t>(train.front().vector.size());
  m.classes.assign(classes.begin(), classes.end());
  m.centroids.assign(classes.size() * m.dimension, 0.0);
  std::vector<size_t> support(classes.size(), 0);
  for (const auto& r : train) {
    auto it = std::find(classes.begin(), classes.end(), r.domain_label);
    if (it == classes.end()) continue;
    const size_t c = static_cast<size_t>(it - classes.begin());
    ++support[c];
    for (uint32_t j = 0; j < m.dimension; ++j) m.centroids[c * m.dimension + j] += r.vector[j];
  }
  for (size_t c = 0; c < classes.size(); ++c) {
    if (support[c] == 0) {
      throw Error(ErrorCode::kInvalidArgument, std::string("empty class '") + domain_name(classes[c]) + "'");
    }
    double* mu = m.centroids.data() + c * m.dimension;
    double norm = 0.0;
    for (uint32_t j = 0; j < m.dimension; ++j) norm += mu[j] * mu[j];
    norm = std::sqrt(norm);
    if (norm == 0.0) {
      throw Error(ErrorCode::kNumeric, std::string("centroid of '") + domain_name(classes[c]) + "' is zero");
    }
    for (uint32_t j = 0; j < m.dimension; ++j) mu[j] /= norm;
  }
  return m;
}

double density_ratio_from_probability(double s, double prior_correction) {
  if (s >= 1.0) return std::numeric_limits<double>::infinity();
  return s / (1.0 - s) * prior_correction;
}

double DensityRatioModel::reference_probability(std::span<const float> x) const { return readout.scores(x)[0]; }

double DensityRatioModel::ratio(std::span<const float> x) const {
  return density_ratio_from_probability(reference_probability(x), prior_correction);
}

DensityRatioModel train_density_ratio(std::span<const EmbeddingRecord> train, DomainLabel reference,
                                      const TrainConfig& cfg, double ratio_threshold) {
  if (reference == DomainLabel::Unknown) throw Error(ErrorCode::kInvalidArgument, "reference class is unknown");
  if (!(ratio_threshold > 0)) throw Error(ErrorCode::kInvalidArgument, "ratio_threshold must be positive");
  if (train.empty()) throw Error(ErrorCode::kInvalidArgument, "empty training set");
  TrainingSet data;
  data.dimension = static_cast<uint32_t>(train.front().vector.size());
  size_t n_ref = 0;
  size_t n_shift = 0;
  for (const auto& r : train) {
    if (r.domain_label == DomainLabel::Unknown) continue;
    const bool is_ref = r.domain_label == reference;
    data.add(r.vector, is_ref ? 0 : 1);
    (is_ref ? n_ref : n_shift)++;
  }
  if (n_ref == 0) throw Error(ErrorCode::kInvalidArgument, std::string("empty class '") + domain_name(reference) + "'");
  if (n_shift == 0) throw Error(ErrorCode::kInvalidArgument, "no shifted (non-reference) records");
  DensityRatioModel m;
  m.readout = train_softmax(data, {static_cast<int32_t>(reference), -1}, cfg);
  m.reference = reference;
  m.prior_correction = static_cast<double>(n_shift) / static_cast<double>(n_ref);
  m.ratio_threshold = ratio_threshold;
  return m;
}

std::vector<size_t> KnnStyleModel::nearest(std::span<const float> x, size_t count) const {
  if (x.size() != dimension) {
    throw Error(ErrorCode::kInvalidArgument, "dimension mismatch: model " + std::to_string(dimension) + ", input " +
                                                 std::to_string(x.size()));
  }
  count = std::min(count, size());
  std::vector<double> sim(size());
  for (size_t i = 0; i < size(); ++i) sim[i] = dot(vector(i), x);
  std::vector<size_t> idx(size());
  std::iota(idx.begin(), idx.end(), size_t{0});
  auto closer = [&](size_t a, size_t b) {
    if (sim[a] != sim[b]) return sim[a] > sim[b];
    return ids[a] < ids[b];
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count), idx.end(), closer);
  idx.resize(count);
  return idx;
}

size_t KnnStyleModel::first_target_rank(std::span<const float> x, size_t limit) const {
  const auto idx = nearest(x, limit);
  for (size_t r = 0; r < idx.size(); ++r) {
    if (labels[idx[r]] == target_style) return r + 1;
  }
  return 0;
}

bool KnnStyleModel::decide(std::span<const float> x) const {
  return first_target_rank(x, static_cast<size_t>(k)) != 0;
}

KnnStyleModel make_knn_model(std::span<const EmbeddingRecord> database, int k, DomainLabel target_style) {
  if (database.empty()) throw Error(ErrorCode::kInvalidArgument, "empty kNN database");
  if (k <= 0 || static_cast<size_t>(k) > database.size()) {
    throw Error(ErrorCode::kInvalidArgument, "k must be in [1, " + std::to_string(database.size()) + "]");
  }
  KnnStyleModel m;
  m.dimension = static_cast<uint32_t>(database.front().vector.size());
  m.k = k;
  m.target_style = target_style;
  for (const auto& r : database) {
    if (r.domain_label == DomainLabel::Unknown) {
      throw Error(ErrorCode::kInvalidArgument, "kNN database record " + std::to_string(r.id) + " is unlabeled");
    }
    if (r.vector.size() != m.dimension) throw Error(ErrorCode::kInvalidArgument, "kNN database dimension mismatch");
    m.ids.push_back(r.id);
    m.labels.push_back(r.domain_label);
    m.vectors.insert(m.vectors.end(), r.vector.begin(), r.vector.end());
  }
  return m;
}

const char* variant_name(ModelVariant v) {
  switch (v) {
    case ModelVariant::Linear: return "linear";
    case ModelVariant::Centroid: return "centroid";
    case ModelVariant::DensityRatio: return "density_ratio";
    case ModelVariant::Knn: return "knn";
  }
  return "?";
}

ModelVariant parse_variant(std::string_view name) {
  if (name == "linear" || name == "ft") return ModelVariant::Linear;
  if (name == "centroid" || name == "ce") return ModelVariant::Centroid;
  if (name == "density_ratio" || name == "dr") return ModelVariant::DensityRatio;
  if (name == "knn" || name == "csd") return ModelVariant::Knn;
  throw Error(ErrorCode::kInvalidArgument, "unknown model variant '" + std::string(name) + "'");
}

uint32_t DomainClassifier::dimension() const {
  return std::visit(
      [](const auto& m) -> uint32_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, DensityRatioModel>) {
          return m.readout.dimension;
        } else {
          return m.dimension;
        }
      },
      model);
}

std::vector<double> DomainClassifier::predict_scores(std::span<const float> x) const {
  if (const auto* lin = std::get_if<LinearReadout>(&model)) return lin->scores(x);
  if (const auto* ce = std::get_if<CentroidModel>(&model)) return ce->scores(x);
  if (const auto* dr = std::get_if<DensityRatioModel>(&model)) return dr->readout.scores(x);
  throw Error(ErrorCode::kInvalidArgument, "kNN models do not produce per-class scores");
}

bool DomainClassifier::supports(DomainLabel target) const {
  if (const auto* lin = std::get_if<LinearReadout>(&model)) return lin->index_of(static_cast<int32_t>(target)) >= 0;
  if (const auto* ce = std::get_if<CentroidModel>(&model)) {
    return std::find(ce->classes.begin(), ce->classes.end(), target) != ce->classes.end();
  }
  if (const auto* dr = std::get_if<DensityRatioModel>(&model)) return dr->reference == target;
  return std::get<KnnStyleModel>(model).target_style == target;
}

double DomainClassifier::score(DomainLabel target, std::span<const float> x) const {
  if (!supports(target)) {
    throw Error(ErrorCode::kInvalidArgument, "model '" + model_id + "' has no class '" + domain_name(target) + "'");
  }
  if (const auto* lin = std::get_if<LinearReadout>(&model)) {
    return lin->scores(x)[lin->index_of(static_cast<int32_t>(target))];
  }
  if (const auto* ce = std::get_if<CentroidModel>(&model)) {
    const auto s = ce->scores(x);
    return s[std::find(ce->classes.begin(), ce->classes.end(), target) - ce->classes.begin()];
  }
  if (const auto* dr = std::get_if<DensityRatioModel>(&model)) return dr->ratio(x);
  throw Error(ErrorCode::kInvalidArgument, "kNN models are calibrated over k, not a score threshold");
}

namespace {

json config_json(const TrainConfig& c) {
  return json{{"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"learning_rate", c.learning_rate},
              {"weight_decay", c.weight_decay},
              {"lr_step_epochs", c.lr_step_epochs},
              {"lr_step_factor", c.lr_step_factor},
              {"seed", c.seed}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.lr_step_epochs = j.value("lr_step_epochs", c.lr_step_epochs);
  c.lr_step_factor = j.value("lr_step_factor", c.lr_step_factor);
  c.seed = j.value("seed", c.seed);
  return c;
}

json readout_json(const LinearReadout& m) {
  return json{{"dimension", m.dimension}, {"classes", m.classes}, {"weights", m.weights}, {"bias", m.bias}};
}

LinearReadout readout_from_json(const json& j) {
  LinearReadout m;
  m.dimension = j.at("dimension").get<uint32_t>();
  m.classes = j.at("classes").get<std::vector<int32_t>>();
  m.weights = j.at("weights").get<std::vector<double>>();
  m.bias = j.at("bias").get<std::vector<double>>();
  if (m.weights.size() != m.classes.size() * m.dimension || m.bias.size() != m.classes.size()) {
    throw Error(ErrorCode::kFormat, "linear readout shape mismatch");
  }
  for (double w : m.weights) {
    if (!std::isfinite(w)) throw Error(ErrorCode::kFormat, "non-finite weight");
  }
  return m;
}

std::vector<std::string> label_names(std::span<const DomainLabel> labels) {
  std::vector<std::string> out;
  for (DomainLabel l : labels) out.emplace_back(domain_name(l));
  return out;
}

std::vector<DomainLabel> labels_from_names(const json& j) {
  std::vector<DomainLabel> out;
  for (const auto& s : j) out.push_back(parse_domain(s.get<std::string>()));
  return out;
}

}  // namespace

std::string DomainClassifier::to_json() const {
  json j;
  j["model_id"] = model_id;
  j["variant"] = variant_name(variant());
  j["dimension"] = dimension();
  j["hyperparameters"] = config_json(config);
  j["seed"] = config.seed;
  j["train_fingerprint"] = train_fingerprint;
  j["train_count"] = train_count;
  if (const auto* lin = std::get_if<LinearReadout>(&model)) {
    std::vector<DomainLabel> order;
    for (int32_t c : lin->classes) order.push_back(static_cast<DomainLabel>(c));
    j["class_order"] = label_names(order);
    j["readout"] = readout_json(*lin);
  } else if (const auto* ce = std::get_if<CentroidModel>(&model)) {
    j["class_order"] = label_names(ce->classes);
    j["centroids"] = ce->centroids;
    j["scale"] = ce->scale;
  } else if (const auto* dr = std::get_if<DensityRatioModel>(&model)) {
    j["class_order"] = {domain_name(dr->reference), "shifted"};
    j["reference"] = domain_name(dr->reference);
    j["readout"] = readout_json(dr->readout);
    j["prior_correction"] = dr->prior_correction;
    j["ratio_threshold"] = dr->ratio_threshold;
  } else {
    const auto& knn = std::get<KnnStyleModel>(model);
    j["class_order"] = {domain_name(knn.target_style)};
    j["target_style"] = domain_name(knn.target_style);
    j["k"] = knn.k;
    j["database_ids"] = knn.ids;
    j["database_labels"] = label_names(knn.labels);
    j["database_vectors"] = knn.vectors;
  }
  return j.dump(1) + "\n";
}

DomainClassifier DomainClassifier::from_json(const std::string& text) {
  DomainClassifier c;
  try {
    const json j = json::parse(text);
    c.model_id = j.value("model_id", "");
    c.config = config_from_json(j.value("hyperparameters", json::object()));
    c.train_fingerprint = j.value("train_fingerprint", uint64_t{0});
    c.train_count = j.value("train_count", uint64_t{0});
    const auto variant = parse_variant(j.at("variant").get<std::string>());
    switch (variant) {
      case ModelVariant::Linear:
        c.model = readout_from_json(j.at("readout"));
        break;
      case ModelVariant::Centroid: {
        CentroidModel m;
        m.dimension = j.at("dimension").get<uint32_t>();
        m.classes = labels_from_names(j.at("class_order"));
        m.centroids = j.at("centroids").get<std::vector<double>>();
        m.scale = j.value("scale", 1.0);
        if (m.centroids.size() != m.classes.size() * m.dimension) {
          throw Error(ErrorCode::kFormat, "centroid shape mismatch");
        }
        c.model = std::move(m);
        break;
      }
      case ModelVariant::DensityRatio: {
        DensityRatioModel m;
        m.readout = readout_from_json(j.at("readout"));
        m.reference = parse_domain(j.at("reference").get<std::string>());
        m.prior_correction = j.at("prior_correction").get<double>();
        m.ratio_threshold = j.value("ratio_threshold", 0.2);
        if (!(m.prior_correction > 0) || !(m.ratio_threshold > 0)) {
          throw Error(ErrorCode::kFormat, "density ratio parameters must be positive");
        }
        c.model = std::move(m);
        break;
      }
      case ModelVariant::Knn: {
        KnnStyleModel m;
        m.dimension = j.at("dimension").get<uint32_t>();
        m.k = j.at("k").get<int>();
        m.target_style = parse_domain(j.at("target_style").get<std::string>());
        m.ids = j.at("database_ids").get<std::vector<uint64_t>>();
        m.labels = labels_from_names(j.at("database_labels"));
        m.vectors = j.at("database_vectors").get<std::vector<float>>();
        if (m.labels.size() != m.ids.size() || m.vectors.size() != m.ids.size() * m.dimension) {
          throw Error(ErrorCode::kFormat, "kNN database shape mismatch");
        }
        if (m.k <= 0 || static_cast<size_t>(m.k) > m.ids.size()) throw Error(ErrorCode::kFormat, "kNN k out of range");
        c.model = std::move(m);
        break;
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("bad model file: ") + e.what());
  }
  return c;
}

DomainClassifier train_classifier(std::span<const EmbeddingRecord> train, const TrainRequest& request) {
  DomainClassifier out;
  out.model_id = request.model_id;
  out.config = request.config;
  out.train_count = train.size();
  std::vector<uint64_t> ids;
  ids.reserve(train.size());
  for (const auto& r : train) ids.push_back(r.id);
  std::sort(ids.begin(), ids.end());
  out.train_fingerprint = fingerprint_ids(ids);

  const auto classes = request.classes.empty() ? default_classes() : request.classes;
  switch (request.variant) {
    case ModelVariant::Linear: {
      // Only records whose label is one of the requested classes are used.
      std::vector<EmbeddingRecord> kept;
      for (const auto& r : train) {
        if (std::find(classes.begin(), classes.end(), r.domain_label) != classes.end()) kept.push_back(r);
      }
      out.model = train_linear_readout(kept, classes, request.config);
      break;
    }
    case ModelVariant::Centroid: {
      CentroidModel m = train_centroids(train, classes);
      m.scale = request.centroid_scale;
      out.model = std::move(m);
      break;
    }
    case ModelVariant::DensityRatio:
      out.model = train_density_ratio(train, request.target, request.config, request.ratio_threshold);
      break;
    case ModelVariant::Knn: {
      std::vector<EmbeddingRecord> labeled;
      for (const auto& r : train) {
        if (r.domain_label != DomainLabel::Unknown) labeled.push_back(r);
      }
      out.model = make_knn_model(labeled, request.k, request.target);
      break;
    }
  }
  return out;
}

}  // namespace domaudit
