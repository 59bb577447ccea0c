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

#include <cmath>
#include <random>

#include "domaudit/common.hpp"
#include "domaudit/robustness.hpp"
#include "json.hpp"

using namespace domaudit;

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }
double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

TEST_CASE("relative corrected OOD accuracy") {
  CHECK(relative_corrected_ood_accuracy(0.3, 0.3) == 1.0);
  CHECK(relative_corrected_ood_accuracy(0.1781, 0.3958) == doctest::Approx(0.4500).epsilon(1e-4));
  CHECK(std::abs(relative_corrected_ood_accuracy(0.1781, 0.3958) - 0.45) < 1e-4);
  for (double c : {0.1, 0.5, 2.0}) {
    CHECK(relative_corrected_ood_accuracy(0.2 * c, 0.4 * c) == doctest::Approx(0.5).epsilon(1e-15));
  }
  CHECK_THROWS_AS(relative_corrected_ood_accuracy(0.2, 0.0), Error);
}

TEST_CASE("accuracy table from CSV with percentages and relative rows") {
  const std::string csv =
      "model,clean-natural,clean-rendition\n"
      "LAION-Natural,39.72%,17.81%\n"
      "LAION-Rand-57M,36.99%,39.58%\n"
      "partial,0.5,\n";
  const auto t = AccuracyTable::from_csv(csv);
  CHECK(t.models().size() == 3);
  CHECK(t.at("LAION-Natural", "clean-rendition") == doctest::Approx(0.1781));
  CHECK_FALSE(t.get("partial", "clean-rendition").has_value());
  CHECK_THROWS_WITH_AS(t.at("partial", "clean-rendition"), doctest::Contains("no accuracy"), Error);
  CHECK_THROWS_AS(t.at("nobody", "clean-rendition"), Error);

  const auto rows = relative_accuracy_rows(t, "LAION-Natural", "LAION-Rand-57M");
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].test_set == "clean-rendition");
  CHECK(rows[1].ratio == doctest::Approx(17.81 / 39.58).epsilon(1e-12));
  const auto j = nlohmann::json::parse(relative_accuracy_json(rows, "LAION-Natural", "LAION-Rand-57M"));
  CHECK(j.dump().find("clean-rendition") != std::string::npos);

  CHECK_THROWS_AS(AccuracyTable::from_csv("m,a\nx,140%\n"), Error);
  CHECK_THROWS_AS(AccuracyTable::from_csv("m,a\nx,abc\n"), Error);
  CHECK_THROWS_AS(AccuracyTable::from_csv(""), Error);
}

TEST_CASE("accuracy table from both JSON shapes") {
  const auto a = AccuracyTable::from_json(R"({"models":["m"],"test_sets":["x","y"],"accuracy":[[0.2,0.4]]})");
  const auto b = AccuracyTable::from_json(R"({"m":{"x":0.2,"y":0.4}})");
  CHECK(a.at("m", "y") == b.at("m", "y"));
  CHECK_THROWS_AS(AccuracyTable::from_json(R"({"models":["m"],"test_sets":["x"],"accuracy":[]})"), Error);
}

TEST_CASE("group average") {
  AccuracyTable t({"m"}, {"a", "b", "c"});
  t.set("m", "a", 0.2);
  t.set("m", "b", 0.4);
  t.set("m", "c", 0.6);
  const std::vector<std::string> g = {"a", "b", "c"};
  CHECK(group_average(t, "m", g) == doctest::Approx(0.4).epsilon(1e-15));
  const std::vector<std::string> missing = {"a", "z"};
  CHECK_THROWS_WITH_AS(group_average(t, "m", missing), doctest::Contains("missing column 'z'"), Error);
  CHECK_THROWS_AS(group_average(t, "m", {}), Error);
}

TEST_CASE("default groups and config overrides") {
  const auto d = DomainGroups::defaults();
  CHECK(d.natural == std::vector<std::string>{"IN-A", "ObjectNet", "IN-V2", "IN-Val", "DN-Real"});
  CHECK(d.rendition.size() == 7);
  CHECK(d.rendition[4] == "DN-Quickdraw");
  CHECK(d.anchor == "IN-Val");
  const auto g = DomainGroups::from_config("# groups\nnatural = a, b\nanchor = a\n");
  CHECK(g.natural == std::vector<std::string>{"a", "b"});
  CHECK(g.rendition == d.rendition);
  CHECK_THROWS_AS(DomainGroups::from_config("colour = red\n"), Error);
  CHECK_THROWS_AS(DomainGroups::from_config("anchor = a, b\n"), Error);
}

TEST_CASE("transforms") {
  CHECK(transform_accuracy(AxisTransform::Logit, 0.5) == 0.0);
  CHECK(transform_accuracy(AxisTransform::Logit, 0.8) == doctest::Approx(std::log(4.0)));
  CHECK(transform_accuracy(AxisTransform::Probit, 0.975) == doctest::Approx(1.959964).epsilon(1e-6));
  for (auto t : {AxisTransform::Logit, AxisTransform::Probit, AxisTransform::Identity}) {
    CHECK(inverse_transform(t, transform_accuracy(t, 0.37)) == doctest::Approx(0.37).epsilon(1e-12));
    CHECK(parse_transform(transform_name(t)) == t);
  }
  CHECK_THROWS_AS(parse_transform("tanh"), Error);
}

TEST_CASE("fit recovers a known logit line to 1e-9") {
  const double slope = 0.8, intercept = -0.4;
  std::vector<double> x, y;
  for (double a : {0.3, 0.45, 0.55, 0.7, 0.82, 0.9}) {
    x.push_back(a);
    y.push_back(sigmoid(slope * logit(a) + intercept));
  }
  const auto fit = fit_baseline(x, y);
  CHECK(std::abs(fit.slope - slope) < 1e-9);
  CHECK(std::abs(fit.intercept - intercept) < 1e-9);
  CHECK(fit.residual_max < 1e-9);

  // On-line point scores zero; a +0.5 logit shift scores 0.5.
  CHECK(std::abs(effective_robustness(fit, 0.6, sigmoid(slope * logit(0.6) + intercept)).transformed) < 1e-9);
  const auto er = effective_robustness(fit, 0.6, sigmoid(slope * logit(0.6) + intercept + 0.5));
  CHECK(std::abs(er.transformed - 0.5) < 1e-9);
  const double raw_expected = sigmoid(slope * logit(0.6) + intercept + 0.5) - sigmoid(slope * logit(0.6) + intercept);
  CHECK(er.raw == doctest::Approx(raw_expected).epsilon(1e-12));
  CHECK(effective_robustness(fit, 0.6, 0.5).transformed < effective_robustness(fit, 0.6, 0.51).transformed);
}

TEST_CASE("two-point fit equals the closed form; identity anchor") {
  const std::vector<double> x = {0.5, 0.6};
  const auto fit = fit_baseline(x, x);
  CHECK(fit.slope == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(fit.intercept) < 1e-12);
  const std::vector<double> y = {0.3, 0.55};
  const auto f2 = fit_baseline(x, y);
  const double s = (logit(0.55) - logit(0.3)) / (logit(0.6) - logit(0.5));
  CHECK(f2.slope == doctest::Approx(s).epsilon(1e-12));
  CHECK(f2.intercept == doctest::Approx(logit(0.3) - s * logit(0.5)).epsilon(1e-12));
}

TEST_CASE("baseline residuals average to zero") {
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> u(0.2, 0.9);
  std::vector<double> x, y;
  for (int i = 0; i < 40; ++i) {
    x.push_back(u(gen));
    y.push_back(u(gen));
  }
  const auto fit = fit_baseline(x, y);
  double mean = 0;
  for (size_t i = 0; i < x.size(); ++i) mean += effective_robustness(fit, x[i], y[i]).transformed;
  CHECK(std::abs(mean / x.size()) < 1e-9);
}

TEST_CASE("fit errors and clamping") {
  const std::vector<double> same = {0.4, 0.4};
  const std::vector<double> y = {0.3, 0.35};
  CHECK_THROWS_WITH_AS(fit_baseline(same, y), doctest::Contains("degenerate fit"), Error);
  const std::vector<double> one = {0.4};
  CHECK_THROWS_AS(fit_baseline(one, one), Error);
  const std::vector<double> x = {0.4, 1.0};
  const std::vector<std::string> ids = {"m1", "perfect"};
  CHECK_THROWS_WITH_AS(fit_baseline(x, y, {}, ids), doctest::Contains("perfect"), Error);
  FitOptions clamp;
  clamp.clamp = true;
  const auto f = fit_baseline(x, y, clamp, ids);
  CHECK(std::isfinite(f.slope));
  CHECK(f.clamp);
  const auto j = nlohmann::json::parse(f.to_json());
  CHECK(j.at("transform") == "logit");
  FitOptions ident;
  ident.transform = AxisTransform::Identity;
  CHECK_NOTHROW(fit_baseline(x, y, ident));
}

TEST_CASE("robustness report over groups") {
  // Group averages constructed on known lines against the anchor.
  AccuracyTable t({"b1", "b2", "b3", "treated"}, {"anchor", "n1", "n2", "r1"});
  const double anchors[] = {0.4, 0.55, 0.7, 0.6};
  const std::string names[] = {"b1", "b2", "b3", "treated"};
  for (int i = 0; i < 4; ++i) {
    const double a = anchors[i];
    t.set(names[i], "anchor", a);
    t.set(names[i], "n1", sigmoid(logit(a) - 0.1));
    t.set(names[i], "n2", sigmoid(logit(a) - 0.1));
    t.set(names[i], "r1", sigmoid(0.5 * logit(a) - 1.0 + (i == 3 ? 0.3 : 0.0)));
  }
  DomainGroups g{{"n1", "n2"}, {"r1"}, "anchor"};
  const std::vector<std::string> base = {"b1", "b2", "b3"};
  const auto rep = robustness_report(t, g, base, {});
  CHECK(rep.fits.at("rendition").slope == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(rep.fits.at("natural").intercept == doctest::Approx(-0.1).epsilon(1e-9));
  CHECK(rep.effective.at("treated").at("rendition").transformed == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(std::abs(rep.effective.at("b2").at("rendition").transformed) < 1e-9);
  CHECK(rep.points.size() == 8);
  const auto csv = plot_csv(rep.points);
  CHECK(csv.rfind("x,y,group,model\n", 0) == 0);
  CHECK(nlohmann::json::parse(rep.to_json()).contains("fits"));

  DomainGroups bad{{"n1"}, {"r1"}, "IN-Val"};
  CHECK_THROWS_WITH_AS(robustness_report(t, bad, base, {}), doctest::Contains("anchor test set"), Error);
}
