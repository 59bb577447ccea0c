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
#include "domaudit/synthlab.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <exception>
#include <sstream>
#include <thread>

#include "domaudit/robustness.hpp"
#include "json.hpp"

namespace domaudit {

using nlohmann::json;

void SynthConfig::validate() const {
  auto bad = [](const std::string& what) { return Error(ErrorCode::kInvalidArgument, "synth config: " + what); };
  if (dimension == 0) throw bad("dimension must be positive");
  if (num_classes == 0) throw bad("num_classes must be positive");
  if (!(class_separation >= 0)) throw bad("class_separation must be >= 0");
  if (!(domain_offset >= 0)) throw bad("domain_offset must be >= 0");
  if (!(natural_noise >= 0) || !(rendition_noise >= 0)) throw bad("noise scales must be >= 0");
  if (!(style_rotation >= 0)) throw bad("style_rotation must be >= 0");
  if (!(ambiguous_weight >= 0 && ambiguous_weight < 1)) throw bad("ambiguous_weight must be in [0, 1)");
}

namespace {

std::string trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

template <typename T>
T parse_value(const std::string& key, const std::string& value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw Error(ErrorCode::kFormat, "synth config: bad value '" + value + "' for " + key);
  }
  return out;
}

}  // namespace

SynthConfig SynthConfig::from_config(const std::string& text) {
  SynthConfig c;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == '[') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::kFormat, "synth config: bad line '" + t + "'");
    const std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key == "dimension") {
      c.dimension = parse_value<uint32_t>(key, value);
    } else if (key == "num_classes") {
      c.num_classes = parse_value<uint32_t>(key, value);
    } else if (key == "samples_per_cell") {
      c.samples_per_cell.fill(parse_value<uint32_t>(key, value));
    } else if (key == "natural_per_class") {
      c.samples_per_cell[0] = parse_value<uint32_t>(key, value);
    } else if (key == "ambiguous_per_class") {
      c.samples_per_cell[1] = parse_value<uint32_t>(key, value);
    } else if (key == "rendition_per_class") {
      c.samples_per_cell[2] = parse_value<uint32_t>(key, value);
    } else if (key == "class_separation") {
      c.class_separation = parse_value<double>(key, value);
    } else if (key == "domain_offset") {
      c.domain_offset = parse_value<double>(key, value);
    } else if (key == "natural_noise") {
      c.natural_noise = parse_value<double>(key, value);
    } else if (key == "rendition_noise") {
      c.rendition_noise = parse_value<double>(key, value);
    } else if (key == "style_rotation") {
      c.style_rotation = parse_value<double>(key, value);
    } else if (key == "ambiguous_weight") {
      c.ambiguous_weight = parse_value<double>(key, value);
    } else if (key == "seed") {
      c.seed = parse_value<uint64_t>(key, value);
    } else {
      throw Error(ErrorCode::kFormat, "synth config: unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

std::string SynthConfig::to_json() const {
  json j{{"dimension", dimension},
         {"num_classes", num_classes},
         {"natural_per_class", samples_per_cell[0]},
         {"ambiguous_per_class", samples_per_cell[1]},
         {"rendition_per_class", samples_per_cell[2]},
         {"class_separation", class_separation},
         {"domain_offset", domain_offset},
         {"natural_noise", natural_noise},
         {"rendition_noise", rendition_noise},
         {"style_rotation", style_rotation},
         {"ambiguous_weight", ambiguous_weight},
         {"seed", seed},
         {"surrogate", "synthetic two-domain corpus; not derived from real images"}};
  return j.dump(2) + "\n";
}

namespace {

using Vec = std::vector<double>;

Vec gaussian(Rng& rng, uint32_t d) {
  Vec v(d);
  for (double& x : v) x = rng.normal();
  return v;
}

double norm(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void scale(Vec& v, double f) {
  for (double& x : v) x *= f;
}

// Removes the components along an orthonormal basis; returns false if the
// remainder is numerically zero.
bool orthogonalize(Vec& v, const std::vector<Vec>& basis) {
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& b : basis) {
      double p = 0.0;
      for (size_t i = 0; i < v.size(); ++i) p += v[i] * b[i];
      for (size_t i = 0; i < v.size(); ++i) v[i] -= p * b[i];
    }
  }
  const double n = norm(v);
  if (n < 1e-9) return false;
  scale(v, 1.0 / n);
  return true;
}

std::vector<float> to_unit_float(const Vec& v) {
  const double n = norm(v);
  if (n == 0.0) throw Error(ErrorCode::kNumeric, "generated a zero vector");
  std::vector<float> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] / n);
  return out;
}

Vec to_double(const std::vector<float>& v) { return Vec(v.begin(), v.end()); }

}  // namespace

std::vector<EmbeddingRecord> gen_two_domain(const SynthConfig& cfg) {
  cfg.validate();
  const uint32_t d = cfg.dimension;
  const uint32_t C = cfg.num_classes;
  // The largest achievable minimum distance between C unit vectors is that of
  // the regular simplex.
  const double max_sep = C == 1 ? 2.0 : std::sqrt(2.0 * C / (C - 1.0));
  if (cfg.class_separation > max_sep + 1e-12 || (C > d + 1 && cfg.class_separation > std::sqrt(2.0))) {
    throw Error(ErrorCode::kInvalidArgument, "infeasible class separation for " + std::to_string(C) + " classes in " +
                                                 std::to_string(d) + " dimensions");
  }
  if (2 * C + 1 > d) {
    throw Error(ErrorCode::kInvalidArgument, "dimension " + std::to_string(d) + " too small for " +
                                                 std::to_string(C) + " classes (needs >= 2C + 1)");
  }
  Rng rng(cfg.seed);

  std::vector<Vec> means;
  constexpr int kMaxAttempts = 100000;
  for (uint32_t c = 0; c < C; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      Vec v = gaussian(rng, d);
      scale(v, 1.0 / norm(v));
      placed = true;
      for (const auto& m : means) {
        double dist2 = 0.0;
        for (uint32_t i = 0; i < d; ++i) dist2 += (v[i] - m[i]) * (v[i] - m[i]);
        if (std::sqrt(dist2) < cfg.class_separation) {
          placed = false;
          break;
        }
      }
      if (placed) means.push_back(std::move(v));
    }
    if (!placed) {
      throw Error(ErrorCode::kInvalidArgument, "could not place " + std::to_string(C) + " class means with separation " +
                                                   std::to_string(cfg.class_separation));
    }
  }

  // Orthonormal frame: class-mean span, then rendition-only directions, then the offset.
  std::vector<Vec> basis;
  for (const auto& m : means) {
    Vec v = m;
    if (orthogonalize(v, basis)) basis.push_back(std::move(v));
  }
  std::vector<Vec> style_dirs;
  for (uint32_t c = 0; c < C; ++c) {
    Vec v;
    do {
      v = gaussian(rng, d);
    } while (!orthogonalize(v, basis));
    basis.push_back(v);
    style_dirs.push_back(std::move(v));
  }
  Vec offset;
  do {
    offset = gaussian(rng, d);
  } while (!orthogonalize(offset, basis));
  scale(offset, cfg.domain_offset);

  std::vector<Vec> rendition_means;
  const double cs = std::cos(cfg.style_rotation);
  const double sn = std::sin(cfg.style_rotation);
  for (uint32_t c = 0; c < C; ++c) {
    Vec v(d);
    for (uint32_t i = 0; i < d; ++i) v[i] = cs * means[c][i] + sn * style_dirs[c][i];
    rendition_means.push_back(std::move(v));
  }

  const double noise_scale_nat = cfg.natural_noise / std::sqrt(static_cast<double>(d));
  const double noise_scale_rend = cfg.rendition_noise / std::sqrt(static_cast<double>(d));
  auto natural_draw = [&](uint32_t c) {
    Vec v = means[c];
    for (uint32_t i = 0; i < d; ++i) v[i] += noise_scale_nat * rng.normal();
    return to_unit_float(v);
  };
  auto rendition_draw = [&](uint32_t c) {
    Vec v = rendition_means[c];
    for (uint32_t i = 0; i < d; ++i) v[i] += offset[i] + noise_scale_rend * rng.normal();
    return to_unit_float(v);
  };

  std::vector<EmbeddingRecord> out;
  uint64_t next_id = 0;
  for (DomainLabel domain : kKnownDomains) {
    const uint32_t per_cell = cfg.samples_per_cell[static_cast<size_t>(domain)];
    for (uint32_t c = 0; c < C; ++c) {
      for (uint32_t n = 0; n < per_cell; ++n) {
        EmbeddingRecord r;
        r.id = next_id++;
        r.domain_label = domain;
        r.class_label = static_cast<int32_t>(c);
        if (domain == DomainLabel::Natural) {
          r.vector = natural_draw(c);
        } else if (domain == DomainLabel::Rendition) {
          r.vector = rendition_draw(c);
        } else {
          const Vec a = to_double(natural_draw(c));
          const Vec b = to_double(rendition_draw(c));
          Vec mix(d);
          for (uint32_t i = 0; i < d; ++i) mix[i] = (1.0 - cfg.ambiguous_weight) * a[i] + cfg.ambiguous_weight * b[i];
          r.vector = to_unit_float(mix);
        }
        out.push_back(std::move(r));
      }
    }
  }
  return out;
}

std::vector<uint64_t> SynthPools::all_training() const {
  std::vector<uint64_t> out(natural);
  out.insert(out.end(), ambiguous.begin(), ambiguous.end());
  out.insert(out.end(), rendition.begin(), rendition.end());
  return out;
}

SynthPools split_pools(std::span<const EmbeddingRecord> records, double eval_fraction, uint64_t seed) {
  if (!(eval_fraction >= 0 && eval_fraction < 1)) {
    throw Error(ErrorCode::kInvalidArgument, "eval_fraction must be in [0, 1)");
  }
  // Cells keyed by (domain, class), kept in first-appearance order.
  std::vector<std::pair<std::pair<DomainLabel, int32_t>, std::vector<uint64_t>>> cells;
  for (const auto& r : records) {
    if (r.domain_label == DomainLabel::Unknown) continue;
    const auto key = std::make_pair(r.domain_label, r.class_label);
    auto it = std::find_if(cells.begin(), cells.end(), [&](const auto& cell) { return cell.first == key; });
    if (it == cells.end()) {
      cells.push_back({key, {}});
      it = cells.end() - 1;
    }
    it->second.push_back(r.id);
  }
  SynthPools pools;
  Rng rng(seed);
  for (auto& [key, ids] : cells) {
    rng.shuffle(ids);
    const size_t n_eval = static_cast<size_t>(std::floor(eval_fraction * static_cast<double>(ids.size()) + 0.5));
    auto eval_end = ids.begin() + static_cast<std::ptrdiff_t>(n_eval);
    switch (key.first) {
      case DomainLabel::Natural:
        pools.natural_eval.insert(pools.natural_eval.end(), ids.begin(), eval_end);
        pools.natural.insert(pools.natural.end(), eval_end, ids.end());
        break;
      case DomainLabel::Rendition:
        pools.rendition_eval.insert(pools.rendition_eval.end(), ids.begin(), eval_end);
        pools.rendition.insert(pools.rendition.end(), eval_end, ids.end());
        break;
      default:
        // Ambiguous samples are never evaluated; the held-out share is dropped.
        pools.ambiguous.insert(pools.ambiguous.end(), eval_end, ids.end());
        break;
    }
  }
  return pools;
}

ExperimentCorpus::ExperimentCorpus(std::vector<EmbeddingRecord> records) : records_(std::move(records)) {
  if (records_.empty()) throw Error(ErrorCode::kInvalidArgument, "empty experiment corpus");
  dimension_ = static_cast<uint32_t>(records_.front().vector.size());
  for (size_t i = 0; i < records_.size(); ++i) index_.emplace(records_[i].id, i);
}

const EmbeddingRecord& ExperimentCorpus::record(uint64_t id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw Error(ErrorCode::kNotFound, "id " + std::to_string(id) + " not in corpus");
  return records_[it->second];
}

LinearReadout ExperimentCorpus::train_probe(std::span<const uint64_t> ids, const TrainConfig& cfg) const {
  std::vector<int32_t> classes;
  for (uint64_t id : ids) classes.push_back(record(id).class_label);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) throw Error(ErrorCode::kInvalidArgument, "probe training set has fewer than two classes");
  TrainingSet data;
  data.dimension = dimension_;
  for (uint64_t id : ids) {
    const auto& r = record(id);
    data.add(r.vector, static_cast<int>(std::lower_bound(classes.begin(), classes.end(), r.class_label) - classes.begin()));
  }
  return train_softmax(data, std::move(classes), cfg);
}

double ExperimentCorpus::accuracy(const LinearReadout& probe, std::span<const uint64_t> ids) const {
  if (ids.empty()) throw Error(ErrorCode::kInvalidArgument, "empty evaluation split");
  size_t correct = 0;
  for (uint64_t id : ids) {
    const auto& r = record(id);
    if (probe.classes[probe.predict_index(r.vector)] == r.class_label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ids.size());
}

double ExperimentPoint::combined() const { return std::hypot(natural_accuracy, rendition_accuracy); }

namespace {

// Runs job(i) for i in [0, n) on up to `threads` workers; results land in
// caller-owned slots so completion order does not matter.
template <typename Job>
void run_indexed(size_t n, unsigned threads, Job job) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads <= 1) {
    for (size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (size_t i = t; i < n; i += threads) {
        try {
          job(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Training pools, and the pools of any extra specs, must avoid the eval ids.
void check_eval_disjoint(const SynthPools& pools, std::span<const MixSpec> sweep = {}) {
  std::vector<uint64_t> eval(pools.natural_eval);
  eval.insert(eval.end(), pools.rendition_eval.begin(), pools.rendition_eval.end());
  std::sort(eval.begin(), eval.end());
  auto check = [&](std::span<const uint64_t> ids) {
    for (uint64_t id : ids) {
      if (std::binary_search(eval.begin(), eval.end(), id)) {
        throw Error(ErrorCode::kInvalidArgument, "eval split overlaps training pools at id " + std::to_string(id));
      }
    }
  };
  check(pools.all_training());
  for (const auto& spec : sweep) {
    check(spec.natural_pool);
    check(spec.rendition_pool);
  }
}

}  // namespace

std::vector<ExperimentPoint> run_mix_experiment(const ExperimentCorpus& corpus, const SynthPools& pools,
                                                std::span<const MixSpec> sweep, const ExperimentOptions& options,
                                                std::span<const std::string> labels) {
  check_eval_disjoint(pools, sweep);
  std::vector<ExperimentPoint> out(sweep.size());
  run_indexed(sweep.size(), options.threads, [&](size_t i) {
    const MixOutput mix = build_mix(sweep[i]);
    TrainConfig cfg = options.probe;
    const auto probe = corpus.train_probe(mix.ids, cfg);
    ExperimentPoint& p = out[i];
    p.label = i < labels.size() ? labels[i] : "point-" + std::to_string(i);
    p.n_natural = mix.n_natural;
    p.n_rendition = mix.n_rendition;
    p.natural_accuracy = corpus.accuracy(probe, pools.natural_eval);
    p.rendition_accuracy = corpus.accuracy(probe, pools.rendition_eval);
    p.seed = sweep[i].seed;
  });
  return out;
}

std::vector<MixSpec> additive_sweep(uint64_t natural_budget, std::span<const uint64_t> added,
                                    std::span<const uint64_t> natural_pool, std::span<const uint64_t> rendition_pool,
                                    uint64_t seed) {
  std::vector<MixSpec> out;
  for (uint64_t n_rend : added) {
    MixSpec s;
    s.natural_pool.assign(natural_pool.begin(), natural_pool.end());
    s.rendition_pool.assign(rendition_pool.begin(), rendition_pool.end());
    s.mode = MixMode::Add;
    s.n_natural = natural_budget;
    s.n_rendition = n_rend;
    s.n_total = natural_budget + n_rend;
    s.seed = seed;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<NaturalVsRandomPoint> run_natural_vs_random(const ExperimentCorpus& corpus, const SynthPools& pools,
                                                        std::span<const uint64_t> sizes,
                                                        const ExperimentOptions& options, uint64_t seed) {
  check_eval_disjoint(pools);
  const auto uncurated = pools.all_training();
  for (uint64_t n : sizes) {
    if (n > pools.natural.size()) {
      throw Error(ErrorCode::kInvalidArgument, "size " + std::to_string(n) + " exceeds natural pool of " +
                                                   std::to_string(pools.natural.size()));
    }
  }
  std::vector<NaturalVsRandomPoint> out(sizes.size());
  run_indexed(sizes.size(), options.threads, [&](size_t i) {
    const uint64_t n = sizes[i];
    const auto natural_ids = subsample_random(pools.natural, n, seed);
    const auto random_ids = subsample_random(uncurated, n, seed);
    const auto natural_probe = corpus.train_probe(natural_ids, options.probe);
    const auto random_probe = corpus.train_probe(random_ids, options.probe);
    NaturalVsRandomPoint& p = out[i];
    p.size = n;
    p.natural_model_natural_acc = corpus.accuracy(natural_probe, pools.natural_eval);
    p.natural_model_rendition_acc = corpus.accuracy(natural_probe, pools.rendition_eval);
    p.random_model_natural_acc = corpus.accuracy(random_probe, pools.natural_eval);
    p.random_model_rendition_acc = corpus.accuracy(random_probe, pools.rendition_eval);
    p.natural_ratio = relative_corrected_ood_accuracy(p.natural_model_natural_acc, p.random_model_natural_acc);
    p.rendition_ratio = relative_corrected_ood_accuracy(p.natural_model_rendition_acc, p.random_model_rendition_acc);
  });
  return out;
}

std::string experiment_json(std::span<const ExperimentPoint> points, const std::string& provenance_json) {
  json arr = json::array();
  for (const auto& p : points) {
    arr.push_back({{"point", p.label},
                   {"n_natural", p.n_natural},
                   {"n_rendition", p.n_rendition},
                   {"natural_accuracy", p.natural_accuracy},
                   {"rendition_accuracy", p.rendition_accuracy},
                   {"combined", p.combined()},
                   {"seed", p.seed}});
  }
  json j{{"results", arr}};
  if (!provenance_json.empty()) j["provenance"] = json::parse(provenance_json);
  return j.dump(2) + "\n";
}

std::string experiment_csv(std::span<const ExperimentPoint> points) {
  std::ostringstream out;
  out.precision(17);
  out << "point,n_natural,n_rendition,domain,accuracy\n";
  for (const auto& p : points) {
    out << p.label << ',' << p.n_natural << ',' << p.n_rendition << ",natural," << p.natural_accuracy << '\n';
    out << p.label << ',' << p.n_natural << ',' << p.n_rendition << ",rendition," << p.rendition_accuracy << '\n';
  }
  return out.str();
}

std::string experiment_table_csv(std::span<const ExperimentPoint> points) {
  std::ostringstream out;
  out.precision(17);
  out << "model,natural,rendition\n";
  for (const auto& p : points) out << p.label << ',' << p.natural_accuracy << ',' << p.rendition_accuracy << '\n';
  return out.str();
}

std::string natural_vs_random_json(std::span<const NaturalVsRandomPoint> points, const std::string& provenance_json) {
  json arr = json::array();
  for (const auto& p : points) {
    arr.push_back({{"size", p.size},
                   {"natural_model", {{"natural", p.natural_model_natural_acc}, {"rendition", p.natural_model_rendition_acc}}},
                   {"random_model", {{"natural", p.random_model_natural_acc}, {"rendition", p.random_model_rendition_acc}}},
                   {"relative_corrected_ood_accuracy", {{"natural", p.natural_ratio}, {"rendition", p.rendition_ratio}}}});
  }
  json j{{"results", arr}};
  if (!provenance_json.empty()) j["provenance"] = json::parse(provenance_json);
  return j.dump(2) + "\n";
}

std::string natural_vs_random_csv(std::span<const NaturalVsRandomPoint> points) {
  std::ostringstream out;
  out.precision(17);
  out << "size,domain,natural_model_accuracy,random_model_accuracy,ratio\n";
  for (const auto& p : points) {
    out << p.size << ",natural," << p.natural_model_natural_acc << ',' << p.random_model_natural_acc << ','
        << p.natural_ratio << '\n';
    out << p.size << ",rendition," << p.natural_model_rendition_acc << ',' << p.random_model_rendition_acc << ','
        << p.rendition_ratio << '\n';
  }
  return out.str();
}

namespace {

const char* kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Ratio: return "ratio";
    case ExperimentKind::Additive: return "additive";
    case ExperimentKind::NaturalVsRandom: return "natural_vs_random";
  }
  return "?";
}

MixRatio parse_ratio(const json& v) {
  if (v.is_array() && v.size() == 2) return {v[0].get<double>(), v[1].get<double>()};
  if (!v.is_string()) throw Error(ErrorCode::kFormat, "ratio must be \"r:n\" or [r, n]");
  const std::string s = v.get<std::string>();
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw Error(ErrorCode::kFormat, "ratio '" + s + "' is not of the form r:n");
  MixRatio r;
  r.rendition = parse_value<double>("ratio", trim(s.substr(0, colon)));
  r.natural = parse_value<double>("ratio", trim(s.substr(colon + 1)));
  return r;
}

std::string ratio_label(const MixRatio& r) {
  std::ostringstream out;
  out << r.rendition << ':' << r.natural;
  return out.str();
}

}  // namespace

ExperimentSpec ExperimentSpec::from_json(const std::string& text) {
  ExperimentSpec spec;
  try {
    const json j = json::parse(text);
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "ratio") {
      spec.kind = ExperimentKind::Ratio;
    } else if (kind == "additive") {
      spec.kind = ExperimentKind::Additive;
    } else if (kind == "natural_vs_random") {
      spec.kind = ExperimentKind::NaturalVsRandom;
    } else {
      throw Error(ErrorCode::kFormat, "unknown experiment kind '" + kind + "'");
    }
    for (const auto& [key, value] : j.items()) {
      static const char* kKnown[] = {"kind", "eval_fraction", "split_seed", "seed", "n_total", "ratios", "budgets",
                                     "added", "sizes", "probe", "threads"};
      if (std::find_if(std::begin(kKnown), std::end(kKnown), [&](const char* k) { return key == k; }) ==
          std::end(kKnown)) {
        throw Error(ErrorCode::kFormat, "unknown experiment key '" + key + "'");
      }
    }
    spec.eval_fraction = j.value("eval_fraction", spec.eval_fraction);
    spec.split_seed = j.value("split_seed", spec.split_seed);
    spec.seed = j.value("seed", spec.seed);
    spec.n_total = j.value("n_total", spec.n_total);
    if (j.contains("ratios")) {
      for (const auto& r : j.at("ratios")) spec.ratios.push_back(parse_ratio(r));
    }
    spec.budgets = j.value("budgets", spec.budgets);
    spec.added = j.value("added", spec.added);
    spec.sizes = j.value("sizes", spec.sizes);
    spec.threads = j.value("threads", spec.threads);
    if (j.contains("probe")) {
      const json& p = j.at("probe");
      spec.probe.epochs = p.value("epochs", spec.probe.epochs);
      spec.probe.batch_size = p.value("batch_size", spec.probe.batch_size);
      spec.probe.learning_rate = p.value("learning_rate", spec.probe.learning_rate);
      spec.probe.weight_decay = p.value("weight_decay", spec.probe.weight_decay);
      spec.probe.lr_step_epochs = p.value("lr_step_epochs", spec.probe.lr_step_epochs);
      spec.probe.lr_step_factor = p.value("lr_step_factor", spec.probe.lr_step_factor);
      spec.probe.seed = p.value("seed", spec.probe.seed);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("experiment spec: ") + e.what());
  }
  spec.probe.validate();
  switch (spec.kind) {
    case ExperimentKind::Ratio:
      if (spec.n_total == 0 || spec.ratios.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "ratio experiment needs n_total and ratios");
      }
      break;
    case ExperimentKind::Additive:
      if (spec.budgets.empty() || spec.added.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "additive experiment needs budgets and added");
      }
      break;
    case ExperimentKind::NaturalVsRandom:
      if (spec.sizes.empty()) throw Error(ErrorCode::kInvalidArgument, "natural_vs_random experiment needs sizes");
      break;
  }
  return spec;
}

std::string ExperimentSpec::to_json() const {
  json ratios_json = json::array();
  for (const auto& r : ratios) ratios_json.push_back(ratio_label(r));
  json j{{"kind", kind_name(kind)},
         {"eval_fraction", eval_fraction},
         {"split_seed", split_seed},
         {"seed", seed},
         {"n_total", n_total},
         {"ratios", ratios_json},
         {"budgets", budgets},
         {"added", added},
         {"sizes", sizes},
         {"probe",
          {{"epochs", probe.epochs},
           {"batch_size", probe.batch_size},
           {"learning_rate", probe.learning_rate},
           {"weight_decay", probe.weight_decay},
           {"lr_step_epochs", probe.lr_step_epochs},
           {"lr_step_factor", probe.lr_step_factor},
           {"seed", probe.seed}}}};
  return j.dump(2) + "\n";
}

ExperimentReport run_experiment(std::vector<EmbeddingRecord> records, const ExperimentSpec& spec,
                                const std::string& provenance_json) {
  const SynthPools pools = split_pools(records, spec.eval_fraction, spec.split_seed);
  const ExperimentCorpus corpus(std::move(records));
  ExperimentOptions options;
  options.probe = spec.probe;
  options.threads = spec.threads;
  ExperimentReport report;
  if (spec.kind == ExperimentKind::NaturalVsRandom) {
    const auto points = run_natural_vs_random(corpus, pools, spec.sizes, options, spec.seed);
    report.json = natural_vs_random_json(points, provenance_json);
    report.csv = natural_vs_random_csv(points);
    return report;
  }
  std::vector<MixSpec> sweep;
  std::vector<std::string> labels;
  if (spec.kind == ExperimentKind::Ratio) {
    sweep = ratio_sweep(spec.n_total, spec.ratios, pools.natural, pools.rendition, spec.seed);
    for (const auto& r : spec.ratios) labels.push_back(ratio_label(r));
  } else {
    for (uint64_t budget : spec.budgets) {
      auto part = additive_sweep(budget, spec.added, pools.natural, pools.rendition, spec.seed);
      for (uint64_t a : spec.added) labels.push_back(std::to_string(budget) + "+" + std::to_string(a));
      sweep.insert(sweep.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
  }
  const auto points = run_mix_experiment(corpus, pools, sweep, options, labels);
  report.json = experiment_json(points, provenance_json);
  report.csv = experiment_csv(points);
  return report;
}

}  // namespace domaudit
