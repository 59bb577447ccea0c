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
// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "domaudit/annotation.hpp"
#include "domaudit/calibration.hpp"
#include "domaudit/classifiers.hpp"
#include "domaudit/embedding_store.hpp"
#include "domaudit/partitioner.hpp"
#include "domaudit/robustness.hpp"
#include "domaudit/synthlab.hpp"
#include "test_util.hpp"

using namespace domaudit;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

long rss_kib() {
  std::ifstream in("/proc/self/status");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("VmRSS:", 0) == 0) return std::stol(line.substr(6));
  }
  return -1;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c, d);
  return buf;
}

// Noisy regime used by the mixing experiments.
SynthConfig experiment_config(uint64_t seed) {
  SynthConfig c;
  c.samples_per_cell = {300, 100, 300};
  c.natural_noise = 2.0;
  c.rendition_noise = 2.5;
  c.seed = seed;
  return c;
}

ExperimentOptions experiment_options() {
  ExperimentOptions o;
  o.probe.batch_size = 32;
  o.threads = 4;
  return o;
}

constexpr uint64_t kExperimentSeeds[] = {1, 2, 3};

Outcome store_round_trip() {
  testutil::TempDir dir("accept");
  const uint64_t n = 1000000;
  const uint32_t d = 16;
  auto fill = [&](std::mt19937_64& gen, std::vector<float>& v, DomainLabel& l, int32_t& c) {
    std::normal_distribution<float> nd(0.0f, 1.0f);
    for (auto& x : v) x = nd(gen);
    if (std::all_of(v.begin(), v.end(), [](float x) { return x == 0.0f; })) v[0] = 1.0f;
    l = static_cast<DomainLabel>(static_cast<int>(gen() % 4) - 1);
    c = static_cast<int32_t>(gen() % 1000);
  };
  {
    std::mt19937_64 gen(1);
    StoreWriter w(dir / "big.embs", d);
    std::vector<float> v(d);
    DomainLabel l;
    int32_t c;
    for (uint64_t i = 0; i < n; ++i) {
      fill(gen, v, l, c);
      w.append(i * 7 + 3, v, l, c);
    }
    w.finish();
  }
  std::mt19937_64 gen(1);
  StoreReader r(dir / "big.embs");
  RecordView view;
  std::vector<float> v(d);
  DomainLabel l;
  int32_t c;
  uint64_t i = 0;
  bool exact = r.count() == n;
  const long rss_before = rss_kib();
  long rss_peak = rss_before;
  while (r.next(view)) {
    fill(gen, v, l, c);
    exact = exact && view.id == i * 7 + 3 && view.domain_label == l && view.class_label == c &&
            std::memcmp(view.vector.data(), v.data(), d * sizeof(float)) == 0;
    if (i % 100000 == 0) rss_peak = std::max(rss_peak, rss_kib());
    ++i;
  }
  rss_peak = std::max(rss_peak, rss_kib());
  const double file_mib = static_cast<double>(std::filesystem::file_size(dir / "big.embs")) / (1 << 20);
  const double growth_mib = static_cast<double>(rss_peak - rss_before) / 1024.0;
  // Streaming must not hold the corpus: growth far below the file size.
  const bool bounded = growth_mib < 4.0;
  return {exact && i == n && bounded,
          fmt("%.0f records bit-exact, RSS growth %.2f MiB while streaming a %.1f MiB file", double(i), growth_mib,
              file_mib)};
}

Outcome calibration_oracle() {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int mismatches = 0, monotone_violations = 0, instances = 0;
  for (int t = 0; t < 500; ++t) {
    const size_t n = 1 + gen() % 500;
    std::vector<double> s(n);
    std::vector<uint8_t> pos(n);
    const int levels = 2 + static_cast<int>(gen() % 50);
    for (size_t i = 0; i < n; ++i) {
      pos[i] = u(gen) < 0.5;
      s[i] = std::round((0.6 * u(gen) + (pos[i] ? 0.4 * u(gen) : 0.0)) * levels) / levels;
    }
    pos[0] = 1;
    ++instances;
    const auto curve = pr_curve(s, pos);
    double total = 0;
    for (auto p : pos) total += p;
    double prev_recall = 2.0;
    for (double target : {0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.98, 1.0}) {
      // Exhaustive scan over every candidate threshold.
      bool found = false;
      double best_t = 0, best_recall = 0;
      for (double cand : s) {
        double tp = 0, fp = 0;
        for (size_t i = 0; i < n; ++i) {
          if (s[i] >= cand) (pos[i] ? tp : fp) += 1;
        }
        if (tp / (tp + fp) >= target && (!found || cand < best_t)) found = true, best_t = cand, best_recall = tp / total;
      }
      double recall = -1;
      try {
        const auto p = threshold_for_precision(curve, target);
        if (!found || p.threshold != best_t || std::abs(p.recall - best_recall) > 1e-12) ++mismatches;
        recall = p.recall;
      } catch (const PrecisionUnreachable&) {
        if (found) ++mismatches;
      }
      if (recall >= 0) {
        if (recall > prev_recall + 1e-15) ++monotone_violations;
        prev_recall = recall;
      }
    }
  }
  return {mismatches == 0 && monotone_violations == 0,
          fmt("%.0f instances x 8 targets: %.0f mismatches, %.0f monotonicity violations", instances, mismatches,
              monotone_violations)};
}

Outcome density_ratio_boundary() {
  auto accepts = [](double s) { return density_ratio_from_probability(s, 1.0) >= 0.2; };
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (accepts(mid) ? hi : lo) = mid;
  }
  const double err = std::abs(hi - 1.0 / 6.0);
  const bool sides = !accepts(1.0 / 6.0 - 1e-9) && accepts(1.0 / 6.0 + 1e-9);
  return {err <= 1e-9 && sides, fmt("boundary at s = %.15f, |s - 1/6| = %.2e", hi, err)};
}

Outcome knn_oracle() {
  std::mt19937_64 gen(77);
  int disagreements = 0, rank_mismatches = 0, tie_queries = 0;
  for (int db_round = 0; db_round < 10; ++db_round) {
    std::vector<EmbeddingRecord> db;
    for (uint64_t i = 0; i < 900; ++i) {
      db.push_back(testutil::random_record(gen, gen() % 1000000, 8, gen() % 4 == 0 ? DomainLabel::Rendition
                                                                                   : DomainLabel::Natural));
    }
    // Exact duplicates with other labels create similarity ties.
    for (uint64_t i = 0; i < 100; ++i) {
      auto copy = db[i];
      copy.id = 2000000 + gen() % 1000000;
      copy.domain_label = i % 2 ? DomainLabel::Rendition : DomainLabel::Natural;
      db.push_back(copy);
    }
    std::set<uint64_t> unique;
    for (auto& r : db) {
      while (!unique.insert(r.id).second) r.id += 3000000;
    }
    const int k = 1 + static_cast<int>(gen() % 15);
    const auto model = make_knn_model(db, k, DomainLabel::Rendition);
    for (int q = 0; q < 10; ++q) {
      const auto query = q < 4 ? db[gen() % 100].vector : testutil::random_record(gen, 0, 8, DomainLabel::Natural).vector;
      if (q < 4) ++tie_queries;
      std::vector<double> sim(db.size());
      for (size_t i = 0; i < db.size(); ++i) {
        double s = 0;
        for (int j = 0; j < 8; ++j) s += double(db[i].vector[j]) * query[j];
        sim[i] = s;
      }
      std::vector<size_t> order(db.size());
      std::iota(order.begin(), order.end(), size_t{0});
      std::sort(order.begin(), order.end(),
                [&](size_t a, size_t b) { return sim[a] != sim[b] ? sim[a] > sim[b] : db[a].id < db[b].id; });
      bool expected = false;
      size_t expected_rank = 0;
      for (int r = 0; r < k; ++r) {
        if (db[order[r]].domain_label == DomainLabel::Rendition) {
          expected = true;
          if (expected_rank == 0) expected_rank = r + 1;
        }
      }
      if (model.decide(query) != expected) ++disagreements;
      if (model.first_target_rank(query, k) != expected_rank) ++rank_mismatches;
    }
  }
  return {disagreements == 0 && rank_mismatches == 0,
          fmt("100 queries over 1000-point databases (%.0f with exact ties): %.0f decision and %.0f rank mismatches",
              tie_queries, disagreements, rank_mismatches)};
}

Outcome agreement_and_conservation() {
  const bool table = assign_domain(true, false) == DomainLabel::Natural &&
                     assign_domain(false, true) == DomainLabel::Rendition &&
                     assign_domain(true, true) == DomainLabel::Ambiguous &&
                     assign_domain(false, false) == DomainLabel::Ambiguous;
  testutil::TempDir dir("accept");
  std::mt19937_64 gen(5);
  std::vector<EmbeddingRecord> recs;
  for (uint64_t i = 0; i < 100000; ++i) recs.push_back(testutil::random_record(gen, i, 8, DomainLabel::Unknown));
  write_store(dir / "c.embs", recs, 8);
  auto make = [](DomainLabel target, uint32_t axis) {
    LinearReadout lr;
    lr.dimension = 8;
    lr.classes = {static_cast<int32_t>(target), -1};
    lr.weights.assign(16, 0.0);
    lr.weights[axis] = 3.0;
    lr.bias = {0.0, 0.0};
    CalibratedClassifier c;
    c.model.model = lr;
    c.target_class = target;
    c.threshold = 0.5;
    return c;
  };
  const auto nat = make(DomainLabel::Natural, 0);
  const auto rend = make(DomainLabel::Rendition, 1);
  PartitionOptions o;
  o.threads = 4;
  o.chunk_size = 4096;
  const auto res = partition_store(dir / "c.embs", nat, rend, o);
  const uint64_t sum = res.report.counts[0] + res.report.counts[1] + res.report.counts[2];
  std::set<uint64_t> all(res.natural_ids.begin(), res.natural_ids.end());
  all.insert(res.ambiguous_ids.begin(), res.ambiguous_ids.end());
  all.insert(res.rendition_ids.begin(), res.rendition_ids.end());
  const bool conserved = sum == 100000 && all.size() == 100000;
  return {table && conserved,
          std::string("truth table ") + (table ? "ok" : "WRONG") +
              fmt("; 1e5 records -> %.0f natural + %.0f ambiguous + %.0f rendition", double(res.report.counts[0]),
                  double(res.report.counts[1]), double(res.report.counts[2]))};
}

Outcome composition_recovery() {
  double worst = 0.0;
  std::string detail;
  bool ok = true;
  for (uint64_t seed : {1, 2, 3}) {
    SynthConfig cfg;
    cfg.samples_per_cell = {300, 300, 300};
    cfg.seed = seed;
    const auto recs = gen_two_domain(cfg);
    std::vector<uint64_t> ids(recs.size());
    std::iota(ids.begin(), ids.end(), uint64_t{0});
    const auto split = split_ids(ids, recs.size() / 3, recs.size() / 3, recs.size() - 2 * (recs.size() / 3), seed);
    auto pick = [&](const std::vector<uint64_t>& s) {
      std::vector<EmbeddingRecord> out;
      for (auto id : s) out.push_back(recs[id]);
      return out;
    };
    const auto train = pick(split.train_ids), val = pick(split.val_ids), test = pick(split.test_ids);
    TrainRequest req;
    req.model_id = "ft";
    req.config.seed = seed;
    const auto model = train_classifier(train, req);
    const auto nat = calibrate(model, val, DomainLabel::Natural, 0.98);
    const auto rend = calibrate(model, val, DomainLabel::Rendition, 0.98);
    const auto res = partition_records(test, nat, rend);
    std::array<double, 3> truth{};
    for (const auto& r : test) truth[static_cast<int>(r.domain_label)] += 1.0 / test.size();
    for (int d = 0; d < 3; ++d) {
      const double gap = std::abs(res.report.fraction(static_cast<DomainLabel>(d)) - truth[d]);
      worst = std::max(worst, gap);
      ok = ok && gap <= 0.02;
    }
  }
  return {ok, fmt("3 seeds, 2700-record corpora, max |partition - planted| = %.2f pp", 100.0 * worst)};
}

Outcome selection_fixture() {
  auto cand = [](const std::string& id, DomainLabel t, double recall) {
    CalibratedClassifier c;
    c.model.model_id = id;
    c.target_class = t;
    c.achieved_val_precision = 0.98;
    c.achieved_val_recall = recall;
    return c;
  };
  const std::vector<CalibratedClassifier> nat = {cand("FT", DomainLabel::Natural, 0.41),
                                                 cand("DR-R", DomainLabel::Natural, 0.08)};
  const std::vector<CalibratedClassifier> rend = {cand("DR-R", DomainLabel::Rendition, 0.35),
                                                  cand("FT", DomainLabel::Rendition, 0.27)};
  const auto n = nat[select_best(nat, DomainLabel::Natural).index].model.model_id;
  const auto r = rend[select_best(rend, DomainLabel::Rendition).index].model.model_id;
  return {n == "FT" && r == "DR-R", "natural -> " + n + ", rendition -> " + r};
}

Outcome metrics_exactness() {
  const double ratio = relative_corrected_ood_accuracy(0.1781, 0.3958);
  auto logit = [](double p) { return std::log(p / (1 - p)); };
  auto sigmoid = [](double z) { return 1 / (1 + std::exp(-z)); };
  std::vector<double> x, y;
  for (double a : {0.25, 0.4, 0.5, 0.63, 0.77, 0.9}) {
    x.push_back(a);
    y.push_back(sigmoid(0.7 * logit(a) - 0.9));
  }
  const auto fit = fit_baseline(x, y);
  const double er = effective_robustness(fit, 0.55, sigmoid(0.7 * logit(0.55) - 0.9 + 0.25)).transformed;
  const double er_err = std::abs(er - 0.25);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.1, 0.9);
  std::vector<double> bx, by;
  for (int i = 0; i < 50; ++i) bx.push_back(u(gen)), by.push_back(u(gen));
  const auto bfit = fit_baseline(bx, by);
  double mean = 0;
  for (size_t i = 0; i < bx.size(); ++i) mean += effective_robustness(bfit, bx[i], by[i]).transformed;
  mean /= bx.size();
  const bool ok = std::abs(ratio - 0.45) <= 1e-4 && er_err <= 1e-9 && std::abs(mean) < 1e-9;
  return {ok, fmt("17.81/39.58 = %.4f; ER error %.1e; baseline residual mean %.1e", ratio, er_err, mean)};
}

Outcome natural_vs_random() {
  bool ok = true;
  double nat_lo = 9, nat_hi = -9, rend_hi = -9;
  for (uint64_t seed : kExperimentSeeds) {
    const auto recs = gen_two_domain(experiment_config(seed));
    const auto pools = split_pools(recs, 0.2, 7);
    const ExperimentCorpus corpus(recs);
    const std::vector<uint64_t> sizes = {1000, 1500, 2000};
    for (const auto& p : run_natural_vs_random(corpus, pools, sizes, experiment_options(), 3)) {
      nat_lo = std::min(nat_lo, p.natural_ratio);
      nat_hi = std::max(nat_hi, p.natural_ratio);
      rend_hi = std::max(rend_hi, p.rendition_ratio);
      ok = ok && p.natural_ratio >= 0.9 && p.natural_ratio <= 1.1 && p.rendition_ratio < 0.8;
    }
  }
  return {ok, fmt("3 seeds x sizes {1000,1500,2000}: natural ratio in [%.3f, %.3f], rendition ratio <= %.3f", nat_lo,
                  nat_hi, rend_hi)};
}

Outcome mixing_sweeps() {
  bool ok = true;
  std::ostringstream detail;
  for (uint64_t seed : kExperimentSeeds) {
    const auto recs = gen_two_domain(experiment_config(seed));
    const auto pools = split_pools(recs, 0.2, 7);
    const ExperimentCorpus corpus(recs);
    const std::vector<MixRatio> ratios = {{0, 1}, {1, 7}, {1, 3}, {1, 1}, {3, 1}, {7, 1}, {1, 0}};
    const auto specs = ratio_sweep(1600, ratios, pools.natural, pools.rendition, 5);
    const auto pts = run_mix_experiment(corpus, pools, specs, experiment_options());
    const double first = pts.front().combined(), last = pts.back().combined();
    double best_mixed = 0;
    for (size_t i = 1; i + 1 < pts.size(); ++i) best_mixed = std::max(best_mixed, pts[i].combined());
    const bool interior = best_mixed > first && best_mixed > last;

    const std::vector<uint64_t> budgets = {100, 200, 400, 800};
    const std::vector<uint64_t> added = {0, 25, 50, 100, 200};
    std::vector<std::vector<double>> rend_acc;
    for (uint64_t b : budgets) {
      const auto sweep = additive_sweep(b, added, pools.natural, pools.rendition, 9);
      std::vector<double> row;
      for (const auto& p : run_mix_experiment(corpus, pools, sweep, experiment_options())) {
        row.push_back(p.rendition_accuracy);
      }
      rend_acc.push_back(row);
    }
    int violations = 0;
    for (size_t b = 1; b < budgets.size(); ++b) {
      for (size_t a = 0; a < added.size(); ++a) violations += rend_acc[b][a] < rend_acc[b - 1][a];
    }
    ok = ok && interior && violations == 0;
    detail << (seed == kExperimentSeeds[0] ? "" : "; ") << "seed " << seed << ": endpoints "
           << fmt("%.3f/%.3f, best mix %.3f", first, last, best_mixed) << ", additive violations " << violations;
  }
  return {ok, detail.str()};
}

Outcome annotation() {
  testutil::TempDir dir("accept");
  std::vector<uint64_t> ids(103);
  std::iota(ids.begin(), ids.end(), uint64_t{0});
  AnnotationService svc(ids, {}, dir.path());
  size_t max_batch = 0;
  for (uint64_t off = 0; off < 130; ++off) max_batch = std::max(max_batch, svc.get_batch(off, "a").items.size());

  const std::vector<LabelRecord> seed = {{1, DomainLabel::Natural, "a", 1}};
  svc.submit_labels(seed);
  const auto before = testutil::file_bytes(svc.label_file("a"));
  int intact = 0;
  const int crashes = 50;
  std::mt19937_64 gen(9);
  for (int t = 0; t < crashes; ++t) {
    svc.set_fault_hook([](const std::filesystem::path&, const std::filesystem::path&) {
      throw std::runtime_error("crash");
    });
    std::vector<LabelRecord> batch;
    for (int i = 0; i < 25; ++i) batch.push_back({gen() % 103, static_cast<DomainLabel>(gen() % 3), "a", 2 + t});
    try {
      svc.submit_labels(batch);
    } catch (const std::exception&) {
    }
    try {
      read_label_file(svc.label_file("a"));
      intact += testutil::file_bytes(svc.label_file("a")) == before;
    } catch (const Error&) {
    }
  }
  using Ann = std::vector<std::pair<std::string, std::map<uint64_t, DomainLabel>>>;
  const Ann votes = {{"x", {{1, DomainLabel::Natural}}}, {"y", {{1, DomainLabel::Rendition}}},
                     {"z", {{1, DomainLabel::Ambiguous}}}};
  const auto merged = merge_labels(votes, "x").merged.at(1);
  const bool ok = max_batch <= kBatchSize && max_batch == 25 && intact == crashes && merged == DomainLabel::Ambiguous;
  return {ok, fmt("max batch %.0f; label file intact after %.0f/%.0f injected crashes; (N,R,A) -> ", double(max_batch),
                  intact, crashes) +
                  domain_name(merged)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
    double limit_seconds;
  };
  const std::vector<Criterion> criteria = {
      {"store round-trip", store_round_trip, 120},
      {"calibration oracle equivalence", calibration_oracle, 60},
      {"density-ratio boundary", density_ratio_boundary, 60},
      {"kNN oracle equivalence", knn_oracle, 60},
      {"agreement rule and conservation", agreement_and_conservation, 60},
      {"composition recovery", composition_recovery, 300},
      {"selection fixture", selection_fixture, 60},
      {"metrics exactness", metrics_exactness, 60},
      {"natural vs random", natural_vs_random, 600},
      {"mixing sweeps", mixing_sweeps, 600},
      {"annotation server", annotation, 60},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.limit_seconds) {
      o.pass = false;
      o.detail += fmt(" (over the %.0f s limit)", c.limit_seconds);
    }
    std::printf("[%s] %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
