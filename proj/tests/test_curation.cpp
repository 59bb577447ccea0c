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
#include <numeric>
#include <random>
#include <set>

#include "domaudit/curation.hpp"
#include "json.hpp"

using namespace domaudit;

namespace {

std::vector<uint64_t> iota_ids(uint64_t start, uint64_t n) {
  std::vector<uint64_t> v(n);
  std::iota(v.begin(), v.end(), start);
  return v;
}

size_t count_in(const std::vector<uint64_t>& ids, const std::vector<uint64_t>& pool) {
  const std::set<uint64_t> p(pool.begin(), pool.end());
  return std::count_if(ids.begin(), ids.end(), [&](uint64_t id) { return p.contains(id); });
}

bool distinct(std::vector<uint64_t> v) {
  std::sort(v.begin(), v.end());
  return std::adjacent_find(v.begin(), v.end()) == v.end();
}

// 1-d readout scoring sigmoid(x) for target.
CalibratedClassifier sign_classifier(DomainLabel target, double sign) {
  LinearReadout lr;
  lr.dimension = 1;
  const DomainLabel other = target == DomainLabel::Natural ? DomainLabel::Rendition : DomainLabel::Natural;
  lr.classes = {static_cast<int32_t>(target), static_cast<int32_t>(other)};
  lr.weights = {8.0 * sign, 0.0};
  lr.bias = {0.0, 0.0};
  CalibratedClassifier c;
  c.model.model = lr;
  c.target_class = target;
  c.threshold = 0.9;
  return c;
}

}  // namespace

TEST_CASE("random subsample") {
  const auto pool = iota_ids(0, 10000);
  CHECK(subsample_random(pool, 0, 1).empty());
  const auto all = subsample_random(pool, pool.size(), 1);
  CHECK(std::set<uint64_t>(all.begin(), all.end()) == std::set<uint64_t>(pool.begin(), pool.end()));
  const auto a = subsample_random(pool, 100, 7);
  CHECK(a == subsample_random(pool, 100, 7));
  CHECK(distinct(a));
  int differing = 0;
  for (uint64_t s = 0; s < 100; ++s) differing += subsample_random(pool, 50, 2 * s) != subsample_random(pool, 50, 2 * s + 1);
  CHECK(differing == 100);
  CHECK_THROWS_WITH_AS(subsample_random(pool, 10001, 1), doctest::Contains("cannot sample 10001 of 10000"), Error);
}

TEST_CASE("random subsample is roughly uniform") {
  const auto pool = iota_ids(0, 10);
  std::vector<int> hits(10, 0);
  for (uint64_t s = 0; s < 4000; ++s) {
    for (auto id : subsample_random(pool, 3, s)) ++hits[id];
  }
  // Expected 1200 each; six standard deviations is about 175.
  for (int h : hits) CHECK(std::abs(h - 1200) < 175);
}

TEST_CASE("balanced subsample with class sizes 7268 / 2978 / 2754") {
  std::vector<LabeledId> pool;
  uint64_t id = 0;
  const std::pair<DomainLabel, int> sizes[] = {
      {DomainLabel::Natural, 7268}, {DomainLabel::Ambiguous, 2754}, {DomainLabel::Rendition, 2978}};
  for (auto [label, n] : sizes) {
    for (int i = 0; i < n; ++i) pool.push_back({id++, label});
  }
  const auto ids = subsample_balanced(pool, 2754, 3);
  CHECK(ids.size() == 8262);
  CHECK(distinct(ids));
  std::array<int, 3> per{};
  for (auto x : ids) ++per[static_cast<int>(pool[x].label)];
  CHECK(per == std::array<int, 3>{2754, 2754, 2754});
  CHECK(subsample_balanced(pool, 0, 3).empty());
  CHECK_THROWS_WITH_AS(subsample_balanced(pool, 2755, 3), doctest::Contains("class 'ambiguous'"), Error);
}

TEST_CASE("replace mix: 57 total with 16 renditions") {
  MixSpec s;
  s.natural_pool = iota_ids(0, 100);
  s.rendition_pool = iota_ids(1000, 40);
  s.n_total = 57;
  s.n_rendition = 16;
  s.seed = 11;
  const auto m = build_mix(s);
  CHECK(m.ids.size() == 57);
  CHECK(m.n_natural == 41);
  CHECK(count_in(m.ids, s.natural_pool) == 41);
  CHECK(count_in(m.ids, s.rendition_pool) == 16);
  CHECK(distinct(m.ids));
  CHECK(build_mix(s).ids == m.ids);

  s.n_rendition = 0;
  const auto pure = build_mix(s);
  CHECK(count_in(pure.ids, s.natural_pool) == 57);
}

TEST_CASE("add mix: 100 natural plus 25 renditions") {
  MixSpec s;
  s.natural_pool = iota_ids(0, 100);
  s.rendition_pool = iota_ids(500, 60);
  s.mode = MixMode::Add;
  s.n_natural = 100;
  s.n_rendition = 25;
  s.seed = 2;
  const auto m = build_mix(s);
  CHECK(m.ids.size() == 125);
  CHECK(m.n_natural == 100);
  CHECK(m.n_rendition == 25);
  CHECK(count_in(m.ids, s.rendition_pool) == 25);
  const auto j = nlohmann::json::parse(s.to_json());
  CHECK(j.at("n_total") == 125);
  CHECK(j.at("mode") == "add");
}

TEST_CASE("smaller rendition draws are prefixes of larger ones; natural part shared") {
  MixSpec s;
  s.natural_pool = iota_ids(0, 300);
  s.rendition_pool = iota_ids(1000, 300);
  s.mode = MixMode::Add;
  s.n_natural = 50;
  s.seed = 4;
  std::set<uint64_t> prev_rend;
  std::set<uint64_t> natural;
  for (uint64_t n = 0; n <= 200; n += 25) {
    s.n_rendition = n;
    const auto m = build_mix(s);
    std::set<uint64_t> rend, nat;
    for (auto id : m.ids) (id >= 1000 ? rend : nat).insert(id);
    CHECK(std::includes(rend.begin(), rend.end(), prev_rend.begin(), prev_rend.end()));
    if (n == 0) natural = nat;
    CHECK(nat == natural);
    prev_rend = rend;
  }
}

TEST_CASE("mix composition is exact over random feasible specs") {
  std::mt19937_64 gen(99);
  for (int t = 0; t < 200; ++t) {
    MixSpec s;
    s.natural_pool = iota_ids(0, 1 + gen() % 200);
    s.rendition_pool = iota_ids(10000, 1 + gen() % 200);
    s.seed = gen();
    s.n_rendition = gen() % (s.rendition_pool.size() + 1);
    s.n_total = s.n_rendition + gen() % (s.natural_pool.size() + 1);
    const auto m = build_mix(s);
    CHECK(m.ids.size() == s.n_total);
    CHECK(count_in(m.ids, s.rendition_pool) == s.n_rendition);
    CHECK(distinct(m.ids));
  }
}

TEST_CASE("mix errors") {
  MixSpec s;
  s.natural_pool = iota_ids(0, 10);
  s.rendition_pool = iota_ids(9, 10);
  s.n_total = 5;
  s.n_rendition = 2;
  CHECK_THROWS_WITH_AS(build_mix(s), doctest::Contains("pools overlap at id 9"), Error);
  s.rendition_pool = iota_ids(100, 10);
  s.n_rendition = 6;
  s.n_total = 5;
  CHECK_THROWS_AS(build_mix(s), Error);
  s.n_total = 30;
  CHECK_THROWS_WITH_AS(build_mix(s), doctest::Contains("natural pool exhausted"), Error);
  s.n_total = 20;
  s.n_rendition = 11;
  CHECK_THROWS_WITH_AS(build_mix(s), doctest::Contains("rendition pool exhausted"), Error);
}

TEST_CASE("ratio to count") {
  CHECK(rendition_count(100, {1, 1}) == 50);
  CHECK(rendition_count(100, {1, 3}) == 25);
  CHECK(rendition_count(100, {1, 0}) == 100);
  CHECK(rendition_count(100, {0, 1}) == 0);
  CHECK(rendition_count(3, {1, 1}) == 2);  // 1.5 rounds half up
  CHECK_THROWS_AS(rendition_count(100, {0, 0}), Error);
  CHECK_THROWS_AS(rendition_count(100, {-1, 2}), Error);
  // Realized ratio deviates by less than one sample from the request.
  std::mt19937_64 gen(3);
  for (int t = 0; t < 1000; ++t) {
    const uint64_t n = gen() % 5000;
    const MixRatio r{static_cast<double>(gen() % 9), static_cast<double>(1 + gen() % 9)};
    const double exact = n * r.rendition / (r.rendition + r.natural);
    CHECK(std::abs(static_cast<double>(rendition_count(n, r)) - exact) <= 0.5 + 1e-9);
  }
}

TEST_CASE("ratio sweep") {
  const auto nat = iota_ids(0, 120);
  const auto rend = iota_ids(1000, 120);
  const std::vector<MixRatio> ratios = {{0, 1}, {1, 3}, {1, 1}, {3, 1}, {1, 0}};
  const auto specs = ratio_sweep(100, ratios, nat, rend, 5);
  REQUIRE(specs.size() == 5);
  const uint64_t expected[] = {0, 25, 50, 75, 100};
  for (size_t i = 0; i < 5; ++i) {
    CHECK(specs[i].n_rendition == expected[i]);
    CHECK(specs[i].mode == MixMode::Replace);
    CHECK(build_mix(specs[i]).ids.size() == 100);
  }
  const std::vector<MixRatio> bad = {{1, 0}};
  CHECK_THROWS_WITH_AS(ratio_sweep(200, bad, nat, rend, 5), doctest::Contains("infeasible ratio 1:0"), Error);
}

TEST_CASE("clean test set removes exactly the planted contamination") {
  // Natural records sit at x = +1, renditions at x = -1, ambiguous at 0.
  std::vector<EmbeddingRecord> test;
  for (uint64_t i = 0; i < 200; ++i) {
    float x = 1.0f;
    if (i % 10 == 3) x = -1.0f;
    if (i % 20 == 7) x = 0.0f;
    test.push_back({i, {x}, DomainLabel::Unknown, static_cast<int32_t>(i % 4)});
  }
  const auto nat = sign_classifier(DomainLabel::Natural, 1.0);
  const auto rend = sign_classifier(DomainLabel::Rendition, -1.0);
  const auto clean = clean_testset(test, nat, rend, DomainLabel::Natural, "toy");
  CHECK(clean.removed_opposite == 20);
  CHECK(clean.removed_ambiguous == 10);
  CHECK(clean.kept_ids.size() == 170);
  CHECK(clean.kept_ids.size() + clean.removed_ids.size() == test.size());
  for (auto id : clean.removed_ids) CHECK((id % 10 == 3 || id % 20 == 7));
  CHECK(clean.classes_remaining == 4);
  CHECK_FALSE(clean.empty);

  std::vector<EmbeddingRecord> pure;
  for (const auto& r : test) {
    if (r.vector[0] > 0) pure.push_back(r);
  }
  CHECK(clean_testset(pure, nat, rend, DomainLabel::Natural).removed_ids.empty());
  CHECK(clean_testset(pure, nat, rend, DomainLabel::Rendition).empty);
  CHECK_THROWS_AS(clean_testset(pure, nat, rend, DomainLabel::Ambiguous), Error);
  const auto j = nlohmann::json::parse(clean.to_json());
  CHECK(j.at("removed").at("opposite") == 20);
}
