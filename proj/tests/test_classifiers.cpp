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
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "domaudit/classifiers.hpp"
#include "json.hpp"
#include "test_util.hpp"

using namespace domaudit;

namespace {

// Two well separated blobs per domain label in 4-d.
std::vector<EmbeddingRecord> blobs(uint64_t seed, size_t per_class) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<float> nd(0.0f, 0.05f);
  std::vector<EmbeddingRecord> out;
  const float centers[3][4] = {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}};
  uint64_t id = 0;
  for (int c = 0; c < 3; ++c) {
    for (size_t i = 0; i < per_class; ++i) {
      EmbeddingRecord r;
      r.id = id++;
      r.domain_label = static_cast<DomainLabel>(c);
      r.class_label = 0;
      r.vector.resize(4);
      for (int j = 0; j < 4; ++j) r.vector[j] = centers[c][j] + nd(gen);
      normalize_in_place(r.vector);
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("softmax of (1, 0, 0)") {
  const std::vector<double> logits = {1.0, 0.0, 0.0};
  const auto p = softmax(logits);
  const double z = std::exp(1.0) + 2.0;
  CHECK(p[0] == doctest::Approx(std::exp(1.0) / z).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(1.0 / z).epsilon(1e-12));
  CHECK(p[0] == doctest::Approx(0.5761).epsilon(1e-4));
  CHECK(p[1] == doctest::Approx(0.2119).epsilon(1e-3));
  CHECK(p[1] == p[2]);
}

TEST_CASE("softmax is stable for large logits") {
  const std::vector<double> logits = {1000.0, 0.0, -1000.0};
  const auto p = softmax(logits);
  CHECK(p[0] == doctest::Approx(1.0));
  CHECK(std::isfinite(p[1]));
  CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0));
}

TEST_CASE("one full-batch SGD step matches a hand computation") {
  TrainingSet data;
  data.dimension = 2;
  data.add(std::vector<float>{1.0f, 0.0f}, 0);
  data.add(std::vector<float>{0.0f, 1.0f}, 1);
  data.add(std::vector<float>{0.6f, 0.8f}, 1);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 3;
  cfg.learning_rate = 0.5;
  cfg.weight_decay = 0.01;
  cfg.seed = 9;
  const LinearReadout init = init_linear_readout(2, {10, 20}, cfg.seed);
  const LinearReadout trained = train_softmax(data, {10, 20}, cfg);

  // Independent oracle: average cross-entropy gradient plus L2 on weights only.
  std::vector<double> gw(4, 0.0), gb(2, 0.0);
  for (size_t i = 0; i < data.size(); ++i) {
    const auto x = data.row(i);
    double z[2];
    for (int c = 0; c < 2; ++c) z[c] = init.bias[c] + init.weights[c * 2] * x[0] + init.weights[c * 2 + 1] * x[1];
    const double m = std::max(z[0], z[1]);
    const double s = std::exp(z[0] - m) + std::exp(z[1] - m);
    for (int c = 0; c < 2; ++c) {
      const double g = std::exp(z[c] - m) / s - (data.targets[i] == c ? 1.0 : 0.0);
      gw[c * 2] += g * x[0];
      gw[c * 2 + 1] += g * x[1];
      gb[c] += g;
    }
  }
  for (int p = 0; p < 4; ++p) {
    const double expected = init.weights[p] - 0.5 * (gw[p] / 3.0 + 0.01 * init.weights[p]);
    CHECK(trained.weights[p] == doctest::Approx(expected).epsilon(1e-12));
  }
  for (int c = 0; c < 2; ++c) CHECK(trained.bias[c] == doctest::Approx(init.bias[c] - 0.5 * gb[c] / 3.0).epsilon(1e-12));
}

TEST_CASE("initialization: small gaussian weights, zero bias, seeded") {
  const auto a = init_linear_readout(64, {0, 1, 2}, 4);
  const auto b = init_linear_readout(64, {0, 1, 2}, 4);
  const auto c = init_linear_readout(64, {0, 1, 2}, 5);
  CHECK(a.weights == b.weights);
  CHECK(a.weights != c.weights);
  CHECK(std::all_of(a.bias.begin(), a.bias.end(), [](double v) { return v == 0.0; }));
  double ss = 0.0;
  for (double w : a.weights) ss += w * w;
  const double sd = std::sqrt(ss / static_cast<double>(a.weights.size()));
  CHECK(sd == doctest::Approx(0.01).epsilon(0.15));
}

TEST_CASE("learning-rate schedule steps every lr_step_epochs") {
  TrainingSet data;
  data.dimension = 1;
  data.add(std::vector<float>{1.0f}, 0);
  data.add(std::vector<float>{-1.0f}, 1);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch_size = 2;
  cfg.lr_step_epochs = 2;
  cfg.weight_decay = 0.0;
  std::vector<LinearReadout> snaps;
  train_softmax(data, {0, 1}, cfg, [&](int, const LinearReadout& m, double) { snaps.push_back(m); });
  REQUIRE(snaps.size() == 4);
  // Epochs 2 and 3 move weights an order of magnitude less than epochs 0 and 1
  // would for the same gradient; compare step sizes against the gradient.
  auto step = [&](int e) { return std::abs(snaps[e].weights[0] - snaps[e - 1].weights[0]); };
  CHECK(step(3) < step(1));
  CHECK(step(2) < 0.2 * step(1));
}

TEST_CASE("training separates blobs and is deterministic") {
  const auto train = blobs(1, 80);
  TrainRequest req;
  req.model_id = "ft";
  req.config.seed = 3;
  req.config.batch_size = 32;
  const auto a = train_classifier(train, req);
  const auto b = train_classifier(train, req);
  CHECK(a.to_json() == b.to_json());
  size_t correct = 0;
  for (const auto& r : blobs(2, 30)) {
    const auto s = a.predict_scores(r.vector);
    const auto best = std::max_element(s.begin(), s.end()) - s.begin();
    if (best == static_cast<int>(r.domain_label)) ++correct;
  }
  CHECK(correct == 90);
}

TEST_CASE("loss decreases over training") {
  const auto train = blobs(4, 50);
  std::vector<double> losses;
  TrainConfig cfg;
  cfg.batch_size = 16;
  train_linear_readout(train, std::vector<DomainLabel>(std::begin(kKnownDomains), std::end(kKnownDomains)), cfg,
                       [&](int, const LinearReadout&, double loss) { losses.push_back(loss); });
  REQUIRE(losses.size() == 50);
  CHECK(losses.back() < 0.5 * losses.front());
}

TEST_CASE("non-finite loss is reported with its epoch") {
  TrainingSet data;
  data.dimension = 1;
  data.add(std::vector<float>{1.0f}, 0);
  data.add(std::vector<float>{-1.0f}, 1);
  TrainConfig cfg;
  cfg.learning_rate = 1e308;
  cfg.epochs = 5;
  try {
    train_softmax(data, {0, 1}, cfg);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNumeric);
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("empty class is named") {
  auto train = blobs(1, 10);
  train.erase(std::remove_if(train.begin(), train.end(),
                             [](const EmbeddingRecord& r) { return r.domain_label == DomainLabel::Ambiguous; }),
              train.end());
  TrainRequest req;
  CHECK_THROWS_WITH_AS(train_classifier(train, req), doctest::Contains("empty class 'ambiguous'"), Error);
}

TEST_CASE("density ratio closed form") {
  CHECK(density_ratio_from_probability(0.5, 1.0) == doctest::Approx(1.0));
  CHECK(density_ratio_from_probability(0.2, 2.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(density_ratio_from_probability(1.0 / 6.0, 1.0) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(std::isinf(density_ratio_from_probability(1.0, 1.0)));
  CHECK(density_ratio_from_probability(0.0, 3.0) == 0.0);
}

TEST_CASE("density ratio acceptance boundary at s = 1/6 for threshold 0.2") {
  DensityRatioModel m;
  m.prior_correction = 1.0;
  m.ratio_threshold = 0.2;
  auto accepts_s = [&](double s) { return density_ratio_from_probability(s, m.prior_correction) >= m.ratio_threshold; };
  CHECK_FALSE(accepts_s(1.0 / 6.0 - 1e-9));
  CHECK(accepts_s(1.0 / 6.0 + 1e-9));
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (accepts_s(mid) ? hi : lo) = mid;
  }
  CHECK(std::abs(hi - 1.0 / 6.0) < 1e-12);
}

TEST_CASE("density ratio model scores the reference class") {
  const auto train = blobs(7, 60);
  TrainRequest req;
  req.variant = ModelVariant::DensityRatio;
  req.target = DomainLabel::Natural;
  req.config.batch_size = 16;
  const auto m = train_classifier(train, req);
  const auto& dr = std::get<DensityRatioModel>(m.model);
  CHECK(dr.prior_correction == doctest::Approx(2.0));
  const std::vector<float> nat = {1, 0, 0, 0};
  const std::vector<float> rend = {0, 0, 1, 0};
  CHECK(m.score(DomainLabel::Natural, nat) > m.score(DomainLabel::Natural, rend));
  CHECK(dr.accepts(nat));
  CHECK(m.supports(DomainLabel::Natural));
  CHECK_FALSE(m.supports(DomainLabel::Rendition));
  const auto round = DomainClassifier::from_json(m.to_json());
  CHECK(round.score(DomainLabel::Natural, nat) == m.score(DomainLabel::Natural, nat));
}

TEST_CASE("centroid model: softmax over scaled cosine similarity") {
  std::vector<EmbeddingRecord> train = {{1, {1, 0}, DomainLabel::Natural, 0},
                                        {2, {0, 1}, DomainLabel::Rendition, 0},
                                        {3, {0.6f, 0.8f}, DomainLabel::Rendition, 0}};
  TrainRequest req;
  req.variant = ModelVariant::Centroid;
  req.classes = {DomainLabel::Natural, DomainLabel::Rendition};
  req.centroid_scale = 10.0;
  const auto m = train_classifier(train, req);
  const std::vector<float> x = {1, 0};
  // Rendition centroid is the normalized mean of (0,1) and (0.6,0.8).
  const double cx = 0.3, cy = 0.9, n = std::hypot(cx, cy);
  const double s_nat = 10.0 * 1.0, s_rend = 10.0 * (cx / n);
  const double expected = std::exp(s_nat) / (std::exp(s_nat) + std::exp(s_rend));
  CHECK(m.score(DomainLabel::Natural, x) == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("kNN neighbours match a brute-force full sort, ties by id") {
  std::mt19937_64 gen(21);
  std::vector<EmbeddingRecord> db;
  for (uint64_t i = 0; i < 200; ++i) {
    db.push_back(testutil::random_record(gen, 1000 - i, 5, i % 3 == 0 ? DomainLabel::Rendition : DomainLabel::Natural));
  }
  // Exact duplicates produce ties.
  for (uint64_t i = 0; i < 20; ++i) {
    auto copy = db[i];
    copy.id = 2000 + i;
    copy.domain_label = DomainLabel::Ambiguous;
    db.push_back(copy);
  }
  const auto model = make_knn_model(db, 7, DomainLabel::Rendition);
  for (int q = 0; q < 30; ++q) {
    const auto query = q < 10 ? db[q].vector : testutil::random_record(gen, 0, 5, DomainLabel::Natural).vector;
    std::vector<size_t> order(db.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      double sa = 0, sb = 0;
      for (int j = 0; j < 5; ++j) {
        sa += double(db[a].vector[j]) * query[j];
        sb += double(db[b].vector[j]) * query[j];
      }
      return sa != sb ? sa > sb : db[a].id < db[b].id;
    });
    const auto got = model.nearest(query, 7);
    REQUIRE(got.size() == 7);
    for (size_t r = 0; r < 7; ++r) CHECK(model.ids[got[r]] == db[order[r]].id);
    bool any = false;
    for (size_t r = 0; r < 7; ++r) any = any || db[order[r]].domain_label == DomainLabel::Rendition;
    CHECK(model.decide(query) == any);
  }
}

TEST_CASE("variant names") {
  CHECK(parse_variant("ft") == ModelVariant::Linear);
  CHECK(parse_variant("csd") == ModelVariant::Knn);
  CHECK(parse_variant("density_ratio") == ModelVariant::DensityRatio);
  CHECK(std::string(variant_name(ModelVariant::Centroid)) == "centroid");
  CHECK_THROWS_AS(parse_variant("svm"), Error);
}

TEST_CASE("model JSON round trip preserves predictions") {
  const auto train = blobs(9, 20);
  TrainRequest req;
  req.model_id = "m";
  req.config.epochs = 5;
  const auto m = train_classifier(train, req);
  const auto j = nlohmann::json::parse(m.to_json());
  CHECK(j.at("model_id") == "m");
  CHECK(j.at("variant") == "linear");
  const auto back = DomainClassifier::from_json(m.to_json());
  CHECK(back.to_json() == m.to_json());
  CHECK(back.predict_scores(train[0].vector) == m.predict_scores(train[0].vector));
}
