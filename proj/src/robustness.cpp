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
#include "domaudit/robustness.hpp"

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "domaudit/common.hpp"
#include "json.hpp"

namespace domaudit {

using nlohmann::json;

AccuracyTable::AccuracyTable(std::vector<std::string> models, std::vector<std::string> test_sets)
    : models_(std::move(models)), test_sets_(std::move(test_sets)), values_(models_.size() * test_sets_.size()) {}

namespace {

std::string trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      cells.push_back(trim(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

double parse_accuracy(const std::string& cell, const std::string& where) {
  std::string s = cell;
  bool percent = false;
  if (!s.empty() && s.back() == '%') {
    percent = true;
    s = trim(s.substr(0, s.size() - 1));
  }
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kFormat, where + ": bad accuracy '" + cell + "'");
  }
  if (percent) v /= 100.0;
  if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::kFormat, where + ": accuracy " + cell + " outside [0, 1]");
  return v;
}

}  // namespace

AccuracyTable AccuracyTable::from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  if (rows.empty()) throw Error(ErrorCode::kFormat, "empty accuracy table");
  std::vector<std::string> tests(rows[0].begin() + 1, rows[0].end());
  std::vector<std::string> models;
  for (size_t r = 1; r < rows.size(); ++r) models.push_back(rows[r][0]);
  AccuracyTable t(models, tests);
  for (size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() > tests.size() + 1) {
      throw Error(ErrorCode::kFormat, "row " + std::to_string(r + 1) + " has more cells than the header");
    }
    for (size_t c = 1; c < rows[r].size(); ++c) {
      if (rows[r][c].empty()) continue;
      t.set(models[r - 1], tests[c - 1],
            parse_accuracy(rows[r][c], "row " + std::to_string(r + 1) + ", column " + tests[c - 1]));
    }
  }
  return t;
}

AccuracyTable AccuracyTable::from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    auto value_of = [](const json& v, const std::string& where) {
      return v.is_string() ? parse_accuracy(v.get<std::string>(), where) : parse_accuracy(v.dump(), where);
    };
    if (j.contains("models") && j.contains("accuracy")) {
      AccuracyTable t(j.at("models").get<std::vector<std::string>>(), j.at("test_sets").get<std::vector<std::string>>());
      const json& acc = j.at("accuracy");
      if (acc.size() != t.models().size()) throw Error(ErrorCode::kFormat, "accuracy row count mismatch");
      for (size_t r = 0; r < acc.size(); ++r) {
        if (acc[r].size() != t.test_sets().size()) throw Error(ErrorCode::kFormat, "accuracy column count mismatch");
        for (size_t c = 0; c < acc[r].size(); ++c) {
          if (acc[r][c].is_null()) continue;
          t.set(t.models()[r], t.test_sets()[c], value_of(acc[r][c], t.models()[r] + "/" + t.test_sets()[c]));
        }
      }
      return t;
    }
    std::vector<std::string> models;
    std::vector<std::string> tests;
    for (const auto& [model, row] : j.items()) {
      models.push_back(model);
      for (const auto& [test, v] : row.items()) {
        if (std::find(tests.begin(), tests.end(), test) == tests.end()) tests.push_back(test);
      }
    }
    AccuracyTable t(models, tests);
    for (const auto& [model, row] : j.items()) {
      for (const auto& [test, v] : row.items()) t.set(model, test, value_of(v, model + "/" + test));
    }
    return t;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("bad accuracy table: ") + e.what());
  }
}

size_t AccuracyTable::model_index(const std::string& model) const {
  auto it = std::find(models_.begin(), models_.end(), model);
  if (it == models_.end()) throw Error(ErrorCode::kNotFound, "unknown model '" + model + "'");
  return static_cast<size_t>(it - models_.begin());
}

size_t AccuracyTable::test_index(const std::string& test_set) const {
  auto it = std::find(test_sets_.begin(), test_sets_.end(), test_set);
  if (it == test_sets_.end()) throw Error(ErrorCode::kNotFound, "missing column '" + test_set + "'");
  return static_cast<size_t>(it - test_sets_.begin());
}

bool AccuracyTable::has_test_set(const std::string& test_set) const {
  return std::find(test_sets_.begin(), test_sets_.end(), test_set) != test_sets_.end();
}

void AccuracyTable::set(const std::string& model, const std::string& test_set, double accuracy) {
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "accuracy for " + model + "/" + test_set + " outside [0, 1]");
  }
  values_[model_index(model) * test_sets_.size() + test_index(test_set)] = accuracy;
}

std::optional<double> AccuracyTable::get(const std::string& model, const std::string& test_set) const {
  return values_[model_index(model) * test_sets_.size() + test_index(test_set)];
}

double AccuracyTable::at(const std::string& model, const std::string& test_set) const {
  auto v = get(model, test_set);
  if (!v) throw Error(ErrorCode::kNotFound, "no accuracy for " + model + " on '" + test_set + "'");
  return *v;
}

DomainGroups DomainGroups::defaults() {
  return {{"IN-A", "ObjectNet", "IN-V2", "IN-Val", "DN-Real"},
          {"DN-Painting", "DN-Clipart", "DN-Infograph", "DN-Sketch", "DN-Quickdraw", "IN-R", "IN-Sketch"},
          "IN-Val"};
}

DomainGroups DomainGroups::from_config(const std::string& text) {
  DomainGroups g = defaults();
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::kFormat, "bad group line '" + t + "'");
    const std::string key = trim(t.substr(0, eq));
    std::vector<std::string> members;
    for (auto& cell : split_csv_line(t.substr(eq + 1))) {
      if (!cell.empty()) members.push_back(cell);
    }
    if (key == "natural") {
      g.natural = members;
    } else if (key == "rendition") {
      g.rendition = members;
    } else if (key == "anchor") {
      if (members.size() != 1) throw Error(ErrorCode::kFormat, "anchor must name one test set");
      g.anchor = members[0];
    } else {
      throw Error(ErrorCode::kFormat, "unknown group key '" + key + "'");
    }
  }
  return g;
}

double relative_corrected_ood_accuracy(double acc_treated, double acc_baseline) {
  if (!(acc_baseline > 0.0)) throw Error(ErrorCode::kInvalidArgument, "baseline accuracy must be positive");
  return acc_treated / acc_baseline;
}

double group_average(const AccuracyTable& table, const std::string& model, std::span<const std::string> group) {
  if (group.empty()) throw Error(ErrorCode::kInvalidArgument, "empty group");
  double sum = 0.0;
  for (const auto& test : group) sum += table.at(model, test);
  return sum / static_cast<double>(group.size());
}

const char* transform_name(AxisTransform t) {
  switch (t) {
    case AxisTransform::Logit: return "logit";
    case AxisTransform::Probit: return "probit";
    case AxisTransform::Identity: return "identity";
  }
  return "?";
}

AxisTransform parse_transform(const std::string& name) {
  if (name == "logit") return AxisTransform::Logit;
  if (name == "probit") return AxisTransform::Probit;
  if (name == "identity" || name == "raw" || name == "linear") return AxisTransform::Identity;
  throw Error(ErrorCode::kInvalidArgument, "unknown axis transform '" + name + "'");
}

double transform_accuracy(AxisTransform t, double acc) {
  switch (t) {
    case AxisTransform::Logit: return std::log(acc / (1.0 - acc));
    case AxisTransform::Probit: return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * acc);
    case AxisTransform::Identity: return acc;
  }
  return acc;
}

double inverse_transform(AxisTransform t, double value) {
  switch (t) {
    case AxisTransform::Logit: return 1.0 / (1.0 + std::exp(-value));
    case AxisTransform::Probit: return 0.5 * std::erfc(-value / std::numbers::sqrt2);
    case AxisTransform::Identity: return value;
  }
  return value;
}

namespace {

constexpr double kClampEps = 1e-6;

double prepared(double acc, const FitOptions& options, const std::string& who) {
  if (!(acc >= 0.0 && acc <= 1.0)) throw Error(ErrorCode::kInvalidArgument, who + ": accuracy outside [0, 1]");
  if (options.transform != AxisTransform::Identity && (acc == 0.0 || acc == 1.0)) {
    if (!options.clamp) {
      throw Error(ErrorCode::kInvalidArgument,
                  who + ": accuracy of exactly " + (acc == 0.0 ? "0" : "1") + " has no " +
                      transform_name(options.transform) + " value (enable clamping to override)");
    }
    acc = std::clamp(acc, kClampEps, 1.0 - kClampEps);
  }
  return transform_accuracy(options.transform, acc);
}

}  // namespace

RobustnessFit fit_baseline(std::span<const double> anchor_accs, std::span<const double> ood_accs,
                           const FitOptions& options, std::span<const std::string> model_ids) {
  if (anchor_accs.size() != ood_accs.size()) throw Error(ErrorCode::kInvalidArgument, "point lists differ in length");
  if (!model_ids.empty() && model_ids.size() != anchor_accs.size()) {
    throw Error(ErrorCode::kInvalidArgument, "model id list differs in length");
  }
  if (anchor_accs.size() < 2) throw Error(ErrorCode::kInvalidArgument, "need at least two baseline points");
  const size_t n = anchor_accs.size();
  std::vector<double> x(n);
  std::vector<double> y(n);
  for (size_t i = 0; i < n; ++i) {
    const std::string who = model_ids.empty() ? "point " + std::to_string(i) : "model '" + model_ids[i] + "'";
    x[i] = prepared(anchor_accs[i], options, who);
    y[i] = prepared(ood_accs[i], options, who);
  }
  double mx = 0.0;
  double my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::kNumeric, "degenerate fit: all anchor accuracies are equal");
  RobustnessFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.transform = options.transform;
  fit.clamp = options.clamp;
  fit.baseline_models.assign(model_ids.begin(), model_ids.end());
  for (size_t i = 0; i < n; ++i) {
    fit.residual_max = std::max(fit.residual_max, std::abs(y[i] - (fit.slope * x[i] + fit.intercept)));
  }
  return fit;
}

EffectiveRobustness effective_robustness(const RobustnessFit& fit, double anchor_acc, double ood_acc) {
  const FitOptions options{fit.transform, fit.clamp};
  const double x = prepared(anchor_acc, options, "anchor");
  const double y = prepared(ood_acc, options, "ood");
  const double predicted = fit.slope * x + fit.intercept;
  return {y - predicted, ood_acc - inverse_transform(fit.transform, predicted)};
}

std::string RobustnessFit::to_json() const {
  json j{{"slope", slope},
         {"intercept", intercept},
         {"transform", transform_name(transform)},
         {"clamp", clamp},
         {"baseline_models", baseline_models},
         {"residual_max", residual_max}};
  return j.dump(2) + "\n";
}

std::string plot_csv(std::span<const PlotPoint> points) {
  std::ostringstream out;
  out.precision(17);
  out << "x,y,group,model\n";
  for (const auto& p : points) out << p.x << ',' << p.y << ',' << p.group << ',' << p.model << '\n';
  return out.str();
}

std::vector<RelativeAccuracyRow> relative_accuracy_rows(const AccuracyTable& table, const std::string& treated,
                                                        const std::string& baseline,
                                                        std::span<const std::string> test_sets) {
  std::vector<std::string> columns(test_sets.begin(), test_sets.end());
  if (columns.empty()) columns = table.test_sets();
  std::vector<RelativeAccuracyRow> rows;
  for (const auto& test : columns) {
    if (!table.has_test_set(test)) throw Error(ErrorCode::kNotFound, "missing test set '" + test + "'");
    const auto a = table.get(treated, test);
    const auto b = table.get(baseline, test);
    if (!a || !b) continue;
    rows.push_back({test, *a, *b, relative_corrected_ood_accuracy(*a, *b)});
  }
  return rows;
}

std::string relative_accuracy_json(std::span<const RelativeAccuracyRow> rows, const std::string& treated,
                                   const std::string& baseline) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"test_set", r.test_set}, {"treated", r.treated}, {"baseline", r.baseline}, {"ratio", r.ratio}});
  }
  return nlohmann::json{{"treated", treated}, {"baseline", baseline}, {"rows", arr}}.dump(2) + "\n";
}

std::string RobustnessReport::to_json() const {
  nlohmann::json fits_json = nlohmann::json::object();
  for (const auto& [group, fit] : fits) fits_json[group] = nlohmann::json::parse(fit.to_json());
  nlohmann::json er = nlohmann::json::object();
  for (const auto& [model, per_group] : effective) {
    for (const auto& [group, e] : per_group) er[model][group] = {{"transformed", e.transformed}, {"raw", e.raw}};
  }
  return nlohmann::json{{"anchor", anchor}, {"fits", fits_json}, {"effective_robustness", er}}.dump(2) + "\n";
}

RobustnessReport robustness_report(const AccuracyTable& table, const DomainGroups& groups,
                                   std::span<const std::string> baseline_models, const FitOptions& options) {
  if (!table.has_test_set(groups.anchor)) {
    throw Error(ErrorCode::kNotFound, "anchor test set '" + groups.anchor + "' missing from table");
  }
  std::vector<std::string> baseline(baseline_models.begin(), baseline_models.end());
  if (baseline.empty()) baseline = table.models();
  RobustnessReport report;
  report.anchor = groups.anchor;
  const std::pair<const char*, const std::vector<std::string>*> group_list[] = {{"natural", &groups.natural},
                                                                                {"rendition", &groups.rendition}};
  for (const auto& [name, columns] : group_list) {
    if (columns->empty()) continue;
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& m : baseline) {
      xs.push_back(table.at(m, groups.anchor));
      ys.push_back(group_average(table, m, *columns));
    }
    const RobustnessFit fit = fit_baseline(xs, ys, options, baseline);
    for (const auto& m : table.models()) {
      const double x = table.at(m, groups.anchor);
      const double y = group_average(table, m, *columns);
      report.points.push_back({x, y, name, m});
      report.effective[m][name] = effective_robustness(fit, x, y);
    }
    report.fits.emplace(name, fit);
  }
  return report;
}

}  // namespace domaudit
