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
// domaudit command-line front end. Links only the C API.

#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "domaudit/domaudit.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitMethod = 2;

// Library failure carried up to main.
struct Failure {
  da_status status;
  std::string message;
};

// Input validation failure; lists every violation.
struct ConfigFailure {
  std::vector<std::string> violations;
};

void check(da_status s) {
  if (s != DA_OK) throw Failure{s, da_last_error()};
}

// Owns a string returned by the library.
struct LibString {
  char* p = nullptr;
  ~LibString() { da_string_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

struct LibIds {
  uint64_t* p = nullptr;
  size_t n = 0;
  ~LibIds() { da_ids_free(p); }
};

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle(Handle&& o) noexcept : p(o.p) { o.p = nullptr; }
  Handle& operator=(Handle&& o) noexcept {
    std::swap(p, o.p);
    return *this;
  }
  ~Handle() { Free(p); }
};
using Model = Handle<da_model, da_model_free>;
using Calibrated = Handle<da_calibrated, da_calibrated_free>;

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw Failure{DA_ERR_IO, "cannot write " + tmp.string()};
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{DA_ERR_IO, "cannot read " + path.string()};
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

da_domain domain_arg(const std::string& name) {
  da_domain d;
  check(da_parse_domain(name.c_str(), &d));
  return d;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Checks collected per subcommand before any work starts.
class Validator {
 public:
  void file(const std::string& flag, const std::string& path) {
    if (path.empty()) return;
    if (!fs::is_regular_file(path)) violations_.push_back(flag + ": file not found: " + path);
  }
  void files(const std::string& flag, const std::vector<std::string>& paths) {
    for (const auto& p : paths) file(flag, p);
  }
  void dir(const std::string& flag, const std::string& path) {
    if (path.empty()) return;
    if (!fs::is_directory(path)) violations_.push_back(flag + ": directory not found: " + path);
  }
  void require(bool ok, const std::string& message) {
    if (!ok) violations_.push_back(message);
  }
  void finish() const {
    if (!violations_.empty()) throw ConfigFailure{violations_};
  }

 private:
  std::vector<std::string> violations_;
};

// Provenance record written next to every output as "<output>.provenance.json".
class Provenance {
 public:
  Provenance(const CLI::App& sub) : subcommand_(sub.get_name()) {
    for (const CLI::Option* opt : sub.get_options()) {
      if (opt->check_lname("help")) continue;
      const std::string name = opt->get_name();
      std::string value;
      if (opt->count() > 0) {
        for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
      } else {
        value = opt->get_default_str();
      }
      options_[name] = value;
    }
  }

  void input(const std::string& path) {
    uint64_t h = 0;
    check(da_hash_file(path.c_str(), &h));
    inputs_[path] = hex64(h);
  }
  void seed(const std::string& name, uint64_t value) { seeds_[name] = value; }

  // Writes the provenance for all outputs produced so far.
  void finish(const std::vector<std::string>& outputs) const {
    if (outputs.empty()) return;
    const std::string canonical = json(options_).dump();
    json j;
    j["tool"] = "domaudit";
    j["version"] = da_version();
    j["subcommand"] = subcommand_;
    j["options"] = options_;
    j["config_hash"] = hex64(da_hash_bytes(canonical.data(), canonical.size()));
    j["seeds"] = seeds_;
    j["inputs"] = inputs_;
    json outs = json::object();
    for (const auto& o : outputs) {
      uint64_t h = 0;
      check(da_hash_file(o.c_str(), &h));
      outs[o] = hex64(h);
    }
    j["outputs"] = outs;
    write_file(outputs.front() + ".provenance.json", j.dump(2) + "\n");
  }

 private:
  std::string subcommand_;
  std::map<std::string, std::string> options_;
  std::map<std::string, std::string> inputs_;
  std::map<std::string, uint64_t> seeds_;
};

Model load_model(const std::string& path) {
  Model m;
  check(da_model_load(path.c_str(), &m.p));
  return m;
}

Calibrated load_calibrated(const std::string& path) {
  Calibrated c;
  check(da_calibrated_load(path.c_str(), &c.p));
  return c;
}

using Runner = std::function<void()>;

// ---- subcommands ----

void add_ingest(CLI::App& app, std::vector<std::pair<CLI::App*, Runner>>& subs) {
  auto* sub = app.add_subcommand("ingest", "Import text embeddings into a binary store");
  auto o = std::make_shared<std::tuple<std::string, uint32_t, std::string, std::string>>();
  auto& [tsv, dim, out, note] = *o;
  sub->add_option("--tsv", tsv, "Rows: <id> <label> <class> <v1,...,vd>")->required();
  sub->add_option("--dim", dim, "Embedding dimension")->required();
  sub->add_option("--out", out, "Output store")->required();
  sub->add_option("--note", note, "Source note for the manifest");
  subs.emplace_back(sub, [o, sub] {
    auto& [tsv, dim, out, note] = *o;
    Validator v;
    v.file("--tsv", tsv);
    v.require(dim > 0, "--dim: must be positive");
    v.finish();
    Provenance prov(*sub);
    prov.input(tsv);
    uint64_t count = 0;
    check(da_store_import_tsv(tsv.c_str(), dim, out.c_str(), note.empty() ? nullptr : note.c_str(), &count));
    prov.finish({out, out + ".manifest.json"});
    std::cout << "ingested " << count << " records into " << out << "\n";
  });
}

void add_split(CLI::App& app, std::vector<std::pair<CLI::App*, Runner>>& subs) {
  auto* sub = app.add_subcommand("split", "Seeded train/val/test split of a store");
  struct Opts {
    std::string store, prefix;
    uint64_t train = 0, val = 0, test = 0, seed = 0;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--store", o->store)->required();
  sub->add_option("--train", o->train)->required();
  sub->add_option("--val", o->val)->required();
  sub->add_option("--test", o->test)->required();
  sub->add_option("--seed", o->seed)->required();
  sub->add_option("--out-prefix", o->prefix, "Writes <prefix>.split.json and <prefix>.{train,val,test}.embs")->required();
  subs.emplace_back(sub, [o, sub] {
    Validator v;
    v.file("--store", o->store);
    v.finish();
    Provenance prov(*sub);
    prov.input(o->store);
    prov.seed("split", o->seed);
    LibString split;
    check(da_store_split(o->store.c_str(), o->train, o->val, o->test, o->seed, o->prefix.c_str(), &split.p));
    const std::string split_path = o->prefix + ".split.json";
    write_file(split_path, split.str());
    prov.finish({split_path, o->prefix + ".train.embs", o->prefix + ".val.embs", o->prefix + ".test.embs"});
  });
}

void add_train(CLI::App& app, std::vector<std::pair<CLI::App*, Runner>>& subs) {
  auto* sub = app.add_subcommand("train", "Train a domain classifier on a labeled store");
  struct Opts {
    std::string store, variant = "linear", id, classes, target = "natural", out;
    da_train_options t{};
  };
  auto o = std::make_shared<Opts>();
  da_train_options_default(&o->t);
  sub->add_option("--store", o->store)->required();
  sub->add_option("--variant", o->variant, "linear | centroid | density_ratio | knn")->capture_default_str();
  sub->add_option("--id", o->id, "Model id")->required();
  sub->add_option("--classes", o->classes, "Comma-separated classes for linear/centroid models");
  sub->add_option("--target", o->target, "Reference class (density_ratio) or style (knn)")->capture_default_str();
  sub->add_option("--epochs", o->t.epochs)->capture_default_str();
  sub->add_option("--batch-size", o->t.batch_size)->capture_default_str();
  sub->add_option("--lr", o->t.learning_rate)->capture_default_str();
  sub->add_option("--weight-decay", o->t.weight_decay)->capture_default_str();
  sub->add_option("--lr-step-epochs", o->t.lr_step_epochs)->capture_default_str();
  sub->add_option("--lr-step-factor", o->t.lr_step_factor)->capture_default_str();
  sub->add_option("--seed", o->t.seed)->required();
  sub->add_option("--k", o->t.k, "Neighbours for knn models")->capture_default_str();
  sub->add_option("--ratio-threshold", o->t.ratio_threshold)->capture_default_str();
  sub->add_option("--centroid-scale", o->t.centroid_scale)->capture_default_str();
  sub->add_option("--out", o->out)->required();
  subs.emplace_back(sub, [o, sub] {
    Validator v;
    v.file("--store", o->store);
    static const std::map<std::string, da_variant> kVariants = {
        {"linear", DA_VARIANT_LINEAR}, {"ft", DA_VARIANT_LINEAR},        {"centroid", DA_VARIANT_CENTROID},
        {"ce", DA_VARIANT_CENTROID},   {"density_ratio", DA_VARIANT_DENSITY_RATIO}, {"dr", DA_VARIANT_DENSITY_RATIO},
        {"knn", DA_VARIANT_KNN},       {"csd", DA_VARIANT_KNN}};
    const auto it = kVariants.find(o->variant);
    v.require(it != kVariants.end(), "--variant: unknown variant '" + o->variant + "'");
    v.finish();
    std::vector<da_domain> classes;
    for (const auto& c : split_commas(o->classes)) classes.push_back(domain_arg(c));
    da_train_options t = o->t;
    t.variant = it->second;
    t.model_id = o->id.c_str();
    t.classes = classes.empty() ? nullptr : classes.data();
    t.n_classes = classes.size();
    t.target = domain_arg(o->target);
    Provenance prov(*sub);
    prov.input(o->store);
    prov.seed("train", t.seed);
    Model m;
    check(da_model_train(o->store.c_str(), &t, &m.p));
    check(da_model_save(m.p, o->out.c_str()));
    prov.finish({o->out});
  });
}

void add_calibrate(CLI::App& app, std::vector<std::pair<CLI::App*, Runner>>& subs) {
  auto* sub = app.add_subcommand("calibrate", "Pick the threshold meeting a validation precision target");
  struct Opts {
    std::string model, val, cls, split, out;
    double precision = 0.98;
    int k_max = 0;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--model", o->model)->required();
  sub->add_option("--val", o->val, "Labeled validation store")->required();
  sub->add_option("--class", o->cls, "natural | rendition | ambiguous")->required();
  sub->add_option("--precision", o->precision)->capture_default_str();
  sub->add_option("--split", o->split, "Split file; checks the model and validation ids against it");
  sub->add_option("--k-max", o->k_max, "Largest k tried for knn models (0: database size)")->capture_default_str();
  sub->add_option("--out", o->out)->required();
  subs.emplace_back(sub, [o, sub] {
    Validator v;
    v.file("--model", o->model);
    v.file("--val", o->val);
    v.file("--split", o->split);
    v.require(o->precision > 0 && o->precision <= 1, "--precision: must be in (0, 1]");
    v.finish();
    Provenance prov(*sub);
    prov.input(o->model);
    prov.input(o->val);
    if (!o->split.empty()) prov.input(o->split);
    Model m = load_model(o->model);
    Calibrated c;
    check(da_calibrate(m.p, o->val.c_str(), domain_arg(o->cls), o->precision,
                       o->split.empty() ? nullptr : o->split.c_str(), o->k_max, &c.p));
    check(da_calibrated_save(c.p, o->out.c_str()));
    prov.finish({o->out});
  });
}

void add_select(CLI::App& app, std::vector<std::pair<CLI::App*, Runner>>& subs) {
  auto* sub = app.add_subcommand("select", "Choose the highest-recall calibrated classifier for a class");
  struct Opts {
    std::vector<std::string> candidates;
    std::string cls, out, report;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--candidates", o->candidates, "Calibrated classifier files")->required()->delimiter(',');
  sub->add_option("--class", o->cls)->required();
  sub->add_option("--out", o->out, "Selection JSON")->required();
  sub->add_option("--report", o->report, "Also write the calibration table (CSV)");
  subs.emplace_back(sub, [o, sub] {
    Validator v;
    v.files("--candidates", o->candidates);
    v.finish();
    Provenance prov(*sub);
    std::vector<Calibrated> owned;
    std::vector<const da_calibrated*> ptrs;
    for (const auto& path : o->candidates) {
      prov.input(path);
      owned.push_back(load_calibrated(path));
      ptrs.push_back(owned.back().p);
    }
    size_t index = 0;
    int tied = 0;
    check(da_select_best(ptrs.data(), ptrs.size(), domain_arg(o->cls), &index, &tied));
    LibString row_json;
    check(da_calibration_report(&ptrs[index], 1, 0, &row_json.p));
    json j{{"class", o->cls}, {"selected", o->candidates[index]}, {"index", index}, {"tied", tied != 0}};
    j["row"] = json::parse(row_json.str()).at(0);
    write_file(o->out, j.dump(2) + "\n");
    std::vector<std::string> outputs{o->out};
    if (!o->report.empty()) {
      LibString csv;
      check(da_calibration_report(ptrs.data(), ptrs.size(), 1, &csv.p));
      write_file(o->report, csv.str());
      outputs.push_back(o->report);
    }
    prov.finish(outputs);
    std::cout << "selected " << o->candidates[index] << (tied ? " (tied)" : "") << "\n";
  });
}

void add_evaluate(CLI::App& app, std::vector<std::pair<CLI::App*, Runner>>& subs) {
  auto* sub = app.add_subcommand("evaluate", "Precision and recall of a calibrated classifier on a labeled store");
  struct Opts {
    std::string classifier, store, out;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--classifier", o->classifier)->required();
  sub->add_option("--store", o->store)->required();
  sub->add_option("--out", o->out)->required();
  subs.emplace_back(sub, [o, sub] {
    Validator v;
    v.file("--classifier", o->classifier);
    v.file("--store", o->store);
    v.finish();
    Provenance prov(*sub);
    prov.input(o->classifier);
    prov.input(o->store);
    Calibrated c = load_calibrated(o->classifier);
    LibString out;
    check(da_evaluate(c.p, o->store.c_str(), &out.p));
    write_file(o->out, out.str());
    prov.finish({o->out});
  });
}

void add_partition(CLI::App& app, std::vector<std::pair<CLI::App*, Runner>>& subs) {
  auto* sub = app.add_subcommand("partition", "Split a corpus into natural, ambiguous and rendition");
  struct Opts {
    std::string store, natural, rendition, out, ids_prefix, dataset;
    unsigned threads = 1;
    size_t chunk = 65536;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--store", o->store)->required();
  sub->add_option("--natural", o->natural, "Calibrated natural classifier")->required();
  sub->add_option("--rendition", o->rendition, "Calibrated rendition classifier")->required();
  sub->add_option("--out", o->out, "CompositionReport JSON")->required();
  sub->add_option("--ids-prefix", o->ids_prefix, "Write <prefix>.{natural,ambiguous,rendition}.ids");
  sub->add_option("--dataset", o->dataset);
  sub->add_option("--threads", o->threads)->capture_default_str();
  sub->add_option("--chunk-size", o->chunk)->capture_default_str();
  subs.emplace_back(sub, [o, sub] {
    Validator v;
    v.file("--store", o->store);
    v.file("--natural", o->natural);
    v.file("--rendition", o->rendition);
    v.require(o->chunk > 0, "--chunk-size: must be positive");
    v.finish();
    Provenance prov(*sub);
    prov.input(o->store);
    prov.input(o->natural);
    prov.input(o->rendition);
    Calibrated nat = load_calibrated(o->natural);
    Calibrated rend = load_calibrated(o->rendition);
    da_partition_options opts;
    da_partition_options_default(&opts);
    opts.chunk_size = o->chunk;
    opts.threads = o->threads;
    opts.dataset = o->dataset.empty() ? nullptr : o->dataset.c_str();
    opts.ids_prefix = o->ids_prefix.empty() ? nullptr : o->ids_prefix.c_str();
    LibString report;
    check(da_partition(o->store.c_str(), nat.p, rend.p, &opts, &report.p));
    write_file(o->out, report.str());
    std::vector<std::string> outputs{o->out};
    if (!o->ids_prefix.empty()) {
      for (const char* d : {"natural", "ambiguous", "rendition"}) outputs.push_back(o->ids_prefix + "." + d + ".ids");
    }
    prov.finish(outputs);
    const char* docs[] = {report.p};
    LibString table;
    check(da_composition_table(docs, 1, &table.p));
    std::cout << table.str();
  });
}

void add_sweep(CLI::App& app, std::vector<std::pair<CLI::App*, Runner>>& subs) {
  auto* sub = app.add_subcommand("sweep", "Composition at several precision levels");
  struct Opts {
    std::string store, val, out, dataset;
    std::vector<std::string> natural, rendition;
    std::vector<double> levels;
    unsigned threads = 1;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--store", o->store)->required();
  sub->add_option("--val", o->val)->required();
  sub->add_option("--natural-models", o->natural, "Natural classifier family (model files)")->required()->delimiter(',');
  sub->add_option("--rendition-models", o->rendition, "Rendition classifier family (model files)")
      ->required()
      ->delimiter(',');
  sub->add_option("--levels", o->levels, "Precision levels")->required()->delimiter(',');
  sub->add_option("--dataset", o->dataset);
  sub->add_option("--threads", o->threads)->capture_default_str();
  sub->add_option("--out", o->out)->required();
  subs.emplace_back(sub, [o, sub] {
    Validator v;
    v.file("--store", o->store);
    v.file("--val", o->val);
    v.files("--natural-models", o->natural);
    v.files("--rendition-models", o->rendition);
    for (double l : o->levels) v.require(l > 0 && l <= 1, "--levels: " + std::to_string(l) + " not in (0, 1]");
    v.finish();
    Provenance prov(*sub);
    prov.input(o->store);
    prov.input(o->val);
    std::vector<Model> owned;
    std::vector<const da_model*> nat, rend;
    for (const auto& p : o->natural) {
      prov.input(p);
      owned.push_back(load_model(p));
      nat.push_back(owned.back().p);
    }
    for (const auto& p : o->rendition) {
      prov.input(p);
      owned.push_back(load_model(p));
      rend.push_back(owned.back().p);
    }
    da_partition_options opts;
    da_partition_options_default(&opts);
    opts.threads = o->threads;
    opts.dataset = o->dataset.empty() ? nullptr : o->dataset.c_str();
    LibString out;
    check(da_composition_sweep(o->store.c_str(), o->val.c_str(), nat.data(), nat.size(), rend.data(), rend.size(),
                               o->levels.data(), o->levels.size(), &opts, &out.p));
    write_file(o->out, out.str());
    prov.finish({o->out});
  });
}

void add_clean(CLI::App& app, std::vector<std::pair<CLI::App*, Runner>>& subs) {
  auto* sub = app.add_subcommand("clean", "Filter a test split to samples of its intended domain");
  struct Opts {
    std::string store, natural, rendition, intended, source, out, out_store;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--store", o->store, "Test split store")->required();
  sub->add_option("--natural", o->natural)->required();
  sub->add_option("--rendition", o->rendition)->required();
  sub->add_option("--intended", o->intended, "natural | rendition")->required();
  sub->add_option("--source", o->source, "Benchmark name");
  sub->add_option("--out", o->out, "CleanTestSet JSON")->required();
  sub->add_option("--out-store", o->out_store, "Also write the kept records as a store");
  subs.emplace_back(sub, [o, sub] {
    Validator v;
    v.file("--store", o->store);
    v.file("--natural", o->natural);
    v.file("--rendition", o->rendition);
    v.finish();
    Provenance prov(*sub);
    prov.input(o->store);
    prov.input(o->natural);
    prov.input(o->rendition);
    Calibrated nat = load_calibrated(o->natural);
    Calibrated rend = load_calibrated(o->rendition);
    LibString out;
    check(da_clean_testset(o->store.c_str(), nat.p, rend.p, domain_arg(o->intended),
                           o->source.empty() ? nullptr : o->source.c_str(), &out.p));
    write_file(o->out, out.str());
    std::vector<std::string> outputs{o->out};
    if (!o->out_store.empty()) {
      const auto kept = json::parse(out.str()).at("kept_ids").get<std::vector<uint64_t>>();
      check(da_store_write_subset(o->store.c_str(), kept.data(), kept.size(), o->out_store.c_str()));
      outputs.push_back(o->out_store);
    }
    prov.finish(outputs);
  });
}

std::vector<uint64_t> read_ids(const std::string& path) {
  LibIds ids;
  check(da_read_id_list(path.c_str(), &ids.p, &ids.n));
  return {ids.p, ids.p + ids.n};
}

void add_mix(CLI::App& app, std::vector<std::pair<CLI::App*, Runner>>& subs) {
  auto* sub = app.add_subcommand("mix", "Build training subsets: natural/rendition mixes or subsamples");
  struct Opts {
    std::string store, natural_ids, rendition_ids, mode = "replace", ratio, out, out_store;
    uint64_t total = 0, renditions = 0, naturals = 0, seed = 0, per_class = 0, sample = 0;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--store", o->store, "Labeled store; supplies pools when id files are not given");
  sub->add_option("--natural-ids", o->natural_ids, "Natural pool id list");
  sub->add_option("--rendition-ids", o->rendition_ids, "Rendition pool id list");
  sub->add_option("--mode", o->mode, "replace | add")->capture_default_str();
  sub->add_option("--total", o->total, "Output size (replace mode)");
  sub->add_option("--renditions", o->renditions, "Rendition count");
  sub->add_option("--ratio", o->ratio, "Rendition:natural ratio, e.g. 1:3 (replace mode)");
  sub->add_option("--naturals", o->naturals, "Natural count (add mode)");
  sub->add_option("--per-class", o->per_class, "Balanced subsample of the store's labeled classes");
  sub->add_option("--sample", o->sample, "Uniform random subsample of the store");
  sub->add_option("--seed", o->seed)->required();
  sub->add_option("--out", o->out, "Output id list")->required();
  sub->add_option("--out-store", o->out_store, "Also write the selected records from --store");
  subs.emplace_back(sub, [o, sub] {
    Validator v;
    v.file("--store", o->store);
    v.file("--natural-ids", o->natural_ids);
    v.file("--rendition-ids", o->rendition_ids);
    v.require(o->mode == "replace" || o->mode == "add", "--mode: must be replace or add");
    v.require(o->out_store.empty() || !o->store.empty(), "--out-store: requires --store");
    const bool subsample = o->per_class > 0 || o->sample > 0;
    v.require(!(o->per_class > 0 && o->sample > 0), "--per-class and --sample are exclusive");
    if (subsample) {
      v.require(!o->store.empty(), "--store: required for --per-class/--sample");
    } else {
      v.require(!o->store.empty() || (!o->natural_ids.empty() && !o->rendition_ids.empty()),
                "pools: give --store or both --natural-ids and --rendition-ids");
      if (o->mode == "replace") {
        v.require(o->total > 0, "--total: required in replace mode");
        v.require(o->ratio.empty() || sub->get_option("--renditions")->count() == 0,
                  "--ratio and --renditions are exclusive");
      } else {
        v.require(sub->get_option("--naturals")->count() > 0, "--naturals: required in add mode");
        v.require(o->ratio.empty(), "--ratio: only valid in replace mode");
      }
    }
    v.finish();
    Provenance prov(*sub);
    prov.seed("mix", o->seed);
    std::vector<uint64_t> store_ids;
    std::vector<da_domain> store_labels;
    if (!o->store.empty()) {
      prov.input(o->store);
      LibIds ids;
      da_domain* labels = nullptr;
      check(da_store_ids(o->store.c_str(), &ids.p, &labels, &ids.n));
      store_ids.assign(ids.p, ids.p + ids.n);
      store_labels.assign(labels, labels + ids.n);
      da_labels_free(labels);
    }
    LibIds result;
    std::string spec_json;
    if (o->per_class > 0) {
      check(da_subsample_balanced(store_ids.data(), store_labels.data(), store_ids.size(), o->per_class, o->seed,
                                  &result.p, &result.n));
    } else if (o->sample > 0) {
      check(da_subsample_random(store_ids.data(), store_ids.size(), o->sample, o->seed, &result.p, &result.n));
    } else {
      std::vector<uint64_t> nat, rend;
      if (!o->natural_ids.empty()) {
        prov.input(o->natural_ids);
        prov.input(o->rendition_ids);
        nat = read_ids(o->natural_ids);
        rend = read_ids(o->rendition_ids);
      } else {
        for (size_t i = 0; i < store_ids.size(); ++i) {
          if (store_labels[i] == DA_DOMAIN_NATURAL) nat.push_back(store_ids[i]);
          if (store_labels[i] == DA_DOMAIN_RENDITION) rend.push_back(store_ids[i]);
        }
      }
      da_mix_spec spec{};
      spec.natural_pool = nat.data();
      spec.n_natural_pool = nat.size();
      spec.rendition_pool = rend.data();
      spec.n_rendition_pool = rend.size();
      spec.add = o->mode == "add";
      spec.n_total = o->total;
      spec.n_rendition = o->renditions;
      spec.n_natural = o->naturals;
      spec.seed = o->seed;
      if (!o->ratio.empty()) {
        const auto colon = o->ratio.find(':');
        if (colon == std::string::npos) throw ConfigFailure{{"--ratio: expected r:n"}};
        try {
          check(da_rendition_count(o->total, std::stod(o->ratio.substr(0, colon)), std::stod(o->ratio.substr(colon + 1)),
                                   &spec.n_rendition));
        } catch (const std::logic_error&) {
          throw ConfigFailure{{"--ratio: expected r:n with numbers"}};
        }
      }
      LibString sj;
      check(da_build_mix(&spec, &result.p, &result.n, &sj.p));
      spec_json = sj.str();
    }
    check(da_write_id_list(o->out.c_str(), result.p, result.n));
    std::vector<std::string> outputs{o->out};
    if (!spec_json.empty()) {
      write_file(o->out + ".spec.json", spec_json);
      outputs.push_back(o->out + ".spec.json");
    }
    if (!o->out_store.empty()) {
      check(da_store_write_subset(o->store.c_str(), result.p, result.n, o->out_store.c_str()));
      outputs.push_back(o->out_store);
    }
    prov.finish(outputs);
    std::cout << "selected " << result.n << " ids\n";
  });
}

void add_rel_acc(CLI::App& app, std::vector<std::pair<CLI::App*, Runner>>& subs) {
  auto* sub = app.add_subcommand("rel-acc", "Relative corrected OOD accuracy");
  struct Opts {
    std::string table, treated, baseline, test_sets, out;
    double treated_acc = 0, baseline_acc = 0;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--table", o->table, "Accuracy table (CSV or JSON)");
  sub->add_option("--treated", o->treated, "Model trained on the single-domain subset");
  sub->add_option("--baseline", o->baseline, "Model trained on the equally sized mixed subset");
  sub->add_option("--test-sets", o->test_sets, "Comma-separated columns (default: all)");
  sub->add_option("--treated-acc", o->treated_acc, "Direct accuracy value instead of a table");
  sub->add_option("--baseline-acc", o->baseline_acc, "Direct accuracy value instead of a table");
  sub->add_option("--out", o->out, "Output JSON (stdout when omitted)");
  subs.emplace_back(sub, [o, sub] {
    Validator v;
    const bool direct = sub->get_option("--treated-acc")->count() > 0 || sub->get_option("--baseline-acc")->count() > 0;
    if (direct) {
      v.require(sub->get_option("--treated-acc")->count() > 0 && sub->get_option("--baseline-acc")->count() > 0,
                "--treated-acc and --baseline-acc go together");
      v.require(o->table.empty(), "--table: not allowed with direct accuracies");
    } else {
      v.require(!o->table.empty(), "--table: required");
      v.file("--table", o->table);
      v.require(!o->treated.empty() && !o->baseline.empty(), "--treated and --baseline: required with --table");
    }
    v.finish();
    std::string text;
    Provenance prov(*sub);
    if (direct) {
      double ratio = 0;
      check(da_relative_accuracy(o->treated_acc, o->baseline_acc, &ratio));
      text = json{{"treated", o->treated_acc}, {"baseline", o->baseline_acc}, {"ratio", ratio}}.dump(2) + "\n";
    } else {
      prov.input(o->table);
      LibString out;
      check(da_relative_accuracy_table(o->table.c_str(), o->treated.c_str(), o->baseline.c_str(),
                                       o->test_sets.empty() ? nullptr : o->test_sets.c_str(), &out.p));
      text = out.str();
    }
    if (o->out.empty()) {
      std::cout << text;
    } else {
      write_file(o->out, text);
      prov.finish({o->out});
    }
  });
}

void add_robustness(CLI::App& app, std::vector<std::pair<CLI::App*, Runner>>& subs) {
  auto* sub = app.add_subcommand("robustness", "Baseline line fits and effective robustness");
  struct Opts {
    std::string table, groups, transform = "logit", baseline, out, plot;
    bool clamp = false;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--table", o->table, "Accuracy table (CSV or JSON)")->required();
  sub->add_option("--groups", o->groups, "Group definitions (natural/rendition/anchor = ...)");
  sub->add_option("--transform", o->transform, "logit | probit | identity")->capture_default_str();
  sub->add_flag("--clamp", o->clamp, "Clamp accuracies of 0 and 1 instead of failing");
  sub->add_option("--baseline", o->baseline, "Comma-separated baseline models (default: all)");
  sub->add_option("--out", o->out)->required();
  sub->add_option("--plot", o->plot, "Plot-ready CSV (x, y, group, model)");
  subs.emplace_back(sub, [o, sub] {
    Validator v;
    v.file("--table", o->table);
    v.file("--groups", o->groups);
    v.finish();
    Provenance prov(*sub);
    prov.input(o->table);
    if (!o->groups.empty()) prov.input(o->groups);
    LibString report, plot;
    check(da_robustness(o->table.c_str(), o->groups.empty() ? nullptr : o->groups.c_str(), o->transform.c_str(),
                        o->clamp ? 1 : 0, o->baseline.empty() ? nullptr : o->baseline.c_str(), &report.p, &plot.p));
    write_file(o->out, report.str());
    std::vector<std::string> outputs{o->out};
    if (!o->plot.empty()) {
      write_file(o->plot, plot.str());
      outputs.push_back(o->plot);
    }
    prov.finish(outputs);
  });
}

void add_synth(CLI::App& app, std::vector<std::pair<CLI::App*, Runner>>& subs) {
  auto* sub = app.add_subcommand("synth", "Generate a synthetic two-domain corpus");
  struct Opts {
    std::string config, out = "synth.embs";
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--config", o->config, "key = value generator settings")->required();
  sub->add_option("--out", o->out)->capture_default_str();
  subs.emplace_back(sub, [o, sub] {
    Validator v;
    v.file("--config", o->config);
    v.finish();
    Provenance prov(*sub);
    prov.input(o->config);
    LibString cfg;
    check(da_synth(read_file(o->config).c_str(), o->out.c_str(), &cfg.p));
    const auto resolved = json::parse(cfg.str());
    prov.seed("synth", resolved.at("seed").get<uint64_t>());
    write_file(o->out + ".config.json", cfg.str());
    prov.finish({o->out, o->out + ".config.json"});
  });
}

void add_experiment(CLI::App& app, std::vector<std::pair<CLI::App*, Runner>>& subs) {
  auto* sub = app.add_subcommand("experiment", "Probe experiments over mixes of a synthetic corpus");
  struct Opts {
    std::string store = "synth.embs", sweep, out = "experiment.csv", json_out;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--store", o->store, "Corpus from synth")->capture_default_str();
  sub->add_option("--sweep", o->sweep, "Experiment spec JSON")->required();
  sub->add_option("--out", o->out, "Result CSV")->capture_default_str();
  sub->add_option("--json", o->json_out, "Result JSON (default: <out>.json)");
  subs.emplace_back(sub, [o, sub] {
    Validator v;
    v.file("--store", o->store);
    v.file("--sweep", o->sweep);
    v.finish();
    Provenance prov(*sub);
    prov.input(o->store);
    prov.input(o->sweep);
    const std::string spec = read_file(o->sweep);
    const auto spec_json = json::parse(spec, nullptr, false);
    if (spec_json.is_object()) {
      prov.seed("mix", spec_json.value("seed", uint64_t{0}));
      prov.seed("split", spec_json.value("split_seed", uint64_t{0}));
    }
    LibString result, csv;
    check(da_experiment(o->store.c_str(), spec.c_str(), nullptr, &result.p, &csv.p));
    const std::string json_path = o->json_out.empty() ? o->out + ".json" : o->json_out;
    write_file(o->out, csv.str());
    write_file(json_path, result.str());
    prov.finish({o->out, json_path});
  });
}

volatile std::sig_atomic_t g_stop = 0;

void add_serve(CLI::App& app, std::vector<std::pair<CLI::App*, Runner>>& subs) {
  auto* sub = app.add_subcommand("serve", "Run the annotation server until interrupted");
  struct Opts {
    std::string store, labels, images, ui, host = "127.0.0.1", natural, rendition, annotator = "default";
    int port = 8080;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--store", o->store, "Corpus to label")->required();
  sub->add_option("--labels", o->labels, "Label file directory")->required();
  sub->add_option("--images", o->images, "Directory holding <id>.{jpg,png,...}");
  sub->add_option("--ui", o->ui, "Static labeling UI directory");
  sub->add_option("--host", o->host)->capture_default_str();
  sub->add_option("--port", o->port, "0 picks a free port")->capture_default_str();
  sub->add_option("--natural", o->natural, "Calibrated natural classifier for pre-labels");
  sub->add_option("--rendition", o->rendition, "Calibrated rendition classifier for pre-labels");
  sub->add_option("--annotator", o->annotator, "Annotator when requests name none")->capture_default_str();
  subs.emplace_back(sub, [o] {
    Validator v;
    v.file("--store", o->store);
    v.dir("--images", o->images);
    v.dir("--ui", o->ui);
    v.file("--natural", o->natural);
    v.file("--rendition", o->rendition);
    v.require(o->natural.empty() == o->rendition.empty(), "--natural and --rendition go together");
    v.require(o->port >= 0 && o->port < 65536, "--port: out of range");
    v.finish();
    Calibrated nat, rend;
    if (!o->natural.empty()) {
      nat = load_calibrated(o->natural);
      rend = load_calibrated(o->rendition);
    }
    da_server_options opts;
    da_server_options_default(&opts);
    opts.store_path = o->store.c_str();
    opts.label_dir = o->labels.c_str();
    opts.image_dir = o->images.empty() ? nullptr : o->images.c_str();
    opts.ui_dir = o->ui.empty() ? nullptr : o->ui.c_str();
    opts.host = o->host.c_str();
    opts.port = o->port;
    opts.default_annotator = o->annotator.c_str();
    opts.natural_clf = nat.p;
    opts.rendition_clf = rend.p;
    da_server* server = nullptr;
    int port = 0;
    check(da_server_start(&opts, &server, &port));
    std::cout << "listening on http://" << o->host << ":" << port << "/" << std::endl;
    std::signal(SIGINT, [](int) { g_stop = 1; });
    std::signal(SIGTERM, [](int) { g_stop = 1; });
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    da_server_stop(server);
    da_server_wait(server);
    da_server_free(server);
  });
}

void add_merge(CLI::App& app, std::vector<std::pair<CLI::App*, Runner>>& subs) {
  auto* sub = app.add_subcommand("merge", "Majority-vote merge of annotator label files");
  struct Opts {
    std::vector<std::string> labels;
    std::string reference, out;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--labels", o->labels, "Per-annotator label files")->required()->delimiter(',');
  sub->add_option("--reference", o->reference, "Annotator (file stem) to measure agreement against")->required();
  sub->add_option("--out", o->out)->required();
  subs.emplace_back(sub, [o, sub] {
    Validator v;
    v.files("--labels", o->labels);
    v.finish();
    Provenance prov(*sub);
    std::vector<const char*> files;
    for (const auto& l : o->labels) {
      prov.input(l);
      files.push_back(l.c_str());
    }
    LibString out;
    check(da_merge_annotations(files.data(), files.size(), o->reference.c_str(), &out.p));
    write_file(o->out, out.str());
    prov.finish({o->out});
  });
}

int exit_code_for(da_status s) {
  switch (s) {
    case DA_ERR_UNREACHABLE:
    case DA_ERR_NUMERIC:
    case DA_ERR_INTERNAL:
      return kExitMethod;
    default:
      return kExitUsage;
  }
}

void print_error(const std::string& subcommand, const std::string& kind, const std::string& message,
                 const std::vector<std::string>& violations = {}) {
  json j{{"error", kind}, {"subcommand", subcommand}, {"message", message}};
  if (!violations.empty()) j["violations"] = violations;
  std::cerr << j.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"domaudit: domain composition auditing for embedding corpora"};
  app.set_version_flag("--version", std::string(da_version()));
  app.set_config("--run-config", "", "Run configuration (INI key = value, [subcommand] sections)");
  app.require_subcommand(1);
  std::vector<std::pair<CLI::App*, Runner>> subs;
  add_ingest(app, subs);
  add_split(app, subs);
  add_train(app, subs);
  add_calibrate(app, subs);
  add_select(app, subs);
  add_evaluate(app, subs);
  add_partition(app, subs);
  add_sweep(app, subs);
  add_clean(app, subs);
  add_mix(app, subs);
  add_rel_acc(app, subs);
  add_robustness(app, subs);
  add_synth(app, subs);
  add_experiment(app, subs);
  add_serve(app, subs);
  add_merge(app, subs);

  if (argc > 1 && argv[1][0] != '-') {
    bool known = false;
    for (const auto& [sub, run] : subs) known = known || sub->check_name(argv[1]);
    if (!known) {
      print_error(argv[1], "usage", std::string("unknown subcommand '") + argv[1] + "'");
      return kExitUsage;
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error(app.get_subcommands().empty() ? "" : app.get_subcommands().front()->get_name(), "usage", e.what());
    return kExitUsage;
  }

  std::string name;
  try {
    for (auto& [sub, run] : subs) {
      if (sub->parsed()) {
        name = sub->get_name();
        run();
      }
    }
  } catch (const ConfigFailure& e) {
    std::string joined;
    for (const auto& v : e.violations) joined += (joined.empty() ? "" : "; ") + v;
    print_error(name, "config", joined, e.violations);
    return kExitUsage;
  } catch (const Failure& e) {
    print_error(name, da_status_name(e.status), e.message);
    return exit_code_for(e.status);
  } catch (const std::exception& e) {
    print_error(name, "internal", e.what());
    return kExitMethod;
  }
  return kExitOk;
}
