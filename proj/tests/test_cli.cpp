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
// End-to-end runs of the command-line tool.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <string>
#include <vector>

#include "json.hpp"
#include "test_util.hpp"

#ifndef DOMAUDIT_CLI_PATH
#error "DOMAUDIT_CLI_PATH must name the CLI binary"
#endif
#ifndef DOMAUDIT_CONFIG_DIR
#error "DOMAUDIT_CONFIG_DIR must name tools/configs"
#endif

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

// Runs the CLI inside dir with relative paths so outputs can be compared across dirs.
Run cli(const fs::path& dir, const std::string& args) {
  const std::string cmd = "cd '" + dir.string() + "' && '" + DOMAUDIT_CLI_PATH + "' " + args +
                          " > .stdout 2> .stderr";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = testutil::file_text(dir / ".stdout");
  r.err = testutil::file_text(dir / ".stderr");
  return r;
}

const char* kSmallSynth =
    "dimension = 32\nnum_classes = 4\nnatural_per_class = 80\nambiguous_per_class = 40\nrendition_per_class = 80\n"
    "seed = 2\n";

// synth -> split -> train -> calibrate -> select -> partition -> clean -> mix
void pipeline(const fs::path& dir) {
  std::ofstream(dir / "synth.cfg") << kSmallSynth;
  const std::vector<std::string> steps = {
      "synth --config synth.cfg --out c.embs",
      "split --store c.embs --train 500 --val 200 --test 100 --seed 4 --out-prefix c",
      "train --store c.train.embs --id ft --seed 1 --batch-size 32 --out ft.json",
      "train --store c.train.embs --id dr-n --variant density_ratio --target natural --seed 1 --out drn.json",
      "train --store c.train.embs --id dr-r --variant density_ratio --target rendition --seed 1 --out drr.json",
      "calibrate --model ft.json --val c.val.embs --class natural --precision 0.9 --split c.split.json --out ft-n.json",
      "calibrate --model ft.json --val c.val.embs --class rendition --precision 0.9 --out ft-r.json",
      "calibrate --model drn.json --val c.val.embs --class natural --precision 0.9 --out dr-n.json",
      "calibrate --model drr.json --val c.val.embs --class rendition --precision 0.9 --out dr-r.json",
      "select --candidates ft-n.json,dr-n.json --class natural --out sel-n.json --report sel-n.csv",
      "select --candidates ft-r.json,dr-r.json --class rendition --out sel-r.json",
      "partition --store c.embs --natural ft-n.json --rendition ft-r.json --out report.json --ids-prefix part "
      "--threads 3",
      "clean --store c.test.embs --natural ft-n.json --rendition ft-r.json --intended natural --out clean.json",
      "mix --natural-ids part.natural.ids --rendition-ids part.rendition.ids --total 60 --renditions 20 --seed 3 "
      "--out mix.ids",
      "sweep --store c.embs --val c.val.embs --natural-models ft.json,drn.json --rendition-models ft.json "
      "--levels 0.9,0.95 --out sweep.json",
  };
  for (const auto& s : steps) {
    const Run r = cli(dir, s);
    INFO(s, "\n", r.err);
    REQUIRE(r.code == 0);
  }
}

}  // namespace

TEST_CASE("pipeline outputs are byte-identical across runs") {
  testutil::TempDir a("cli"), b("cli");
  pipeline(a.path());
  pipeline(b.path());
  for (const char* f : {"c.embs", "c.split.json", "ft.json", "ft-n.json", "dr-r.json", "sel-n.json", "sel-n.csv",
                        "report.json", "report.json.provenance.json", "part.natural.ids", "clean.json", "mix.ids",
                        "sweep.json", "ft.json.provenance.json"}) {
    INFO(f);
    REQUIRE(fs::exists(a / f));
    CHECK(testutil::file_bytes(a / f) == testutil::file_bytes(b / f));
  }
  const auto rep = json::parse(testutil::file_text(a / "report.json"));
  const uint64_t n = rep.at("counts").at("natural").get<uint64_t>() + rep.at("counts").at("ambiguous").get<uint64_t>() +
                     rep.at("counts").at("rendition").get<uint64_t>();
  CHECK(n == 4 * (80 + 40 + 80));
  CHECK(testutil::file_text(a / "mix.ids").size() > 0);

  const auto prov = json::parse(testutil::file_text(a / "report.json.provenance.json"));
  CHECK(prov.at("tool") == "domaudit");
  CHECK(prov.at("subcommand") == "partition");
  CHECK(prov.at("inputs").contains("c.embs"));
  CHECK(prov.at("outputs").contains("report.json"));
  CHECK(prov.at("options").at("--threads") == "3");
  CHECK_FALSE(prov.dump().find("time") != std::string::npos);
}

TEST_CASE("exit codes and error lines") {
  testutil::TempDir dir("cli");
  Run r = cli(dir.path(), "bogus");
  CHECK(r.code == 1);
  auto e = json::parse(r.err);
  CHECK(e.at("error") == "usage");
  CHECK(e.at("message").get<std::string>().find("unknown subcommand 'bogus'") != std::string::npos);

  r = cli(dir.path(), "calibrate --model nope.json --val nope.embs --class natural --out x.json");
  CHECK(r.code == 1);
  e = json::parse(r.err);
  CHECK(e.at("error") == "config");
  CHECK(e.at("violations").size() == 2);

  r = cli(dir.path(), "train --store x.embs");
  CHECK(r.code == 1);

  std::ofstream(dir / "synth.cfg") << kSmallSynth;
  REQUIRE(cli(dir.path(), "synth --config synth.cfg --out c.embs").code == 0);
  CHECK(fs::exists(dir / "c.embs.config.json"));
  REQUIRE(cli(dir.path(), "train --store c.embs --id cen --variant centroid --centroid-scale 0 --seed 1 --out m.json")
              .code == 0);
  r = cli(dir.path(), "calibrate --model m.json --val c.embs --class natural --precision 1.0 --out cal.json");
  CHECK(r.code == 2);
  CHECK(json::parse(r.err).at("subcommand") == "calibrate");

  r = cli(dir.path(), "calibrate --model m.json --val c.embs --class natural --precision 1.5 --out cal.json");
  CHECK(r.code == 1);
  CHECK_FALSE(fs::exists(dir / "cal.json"));

  r = cli(dir.path(), "--version");
  CHECK(r.code == 0);
  CHECK(r.out.find("0.") != std::string::npos);
}

TEST_CASE("run configuration file supplies options") {
  testutil::TempDir dir("cli");
  std::ofstream(dir / "synth.cfg") << kSmallSynth;
  std::ofstream(dir / "run.ini") << "[synth]\nconfig = synth.cfg\nout = fromini.embs\n";
  const Run r = cli(dir.path(), "--run-config run.ini synth");
  INFO(r.err);
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "fromini.embs"));
}

TEST_CASE("metrics subcommands") {
  testutil::TempDir dir("cli");
  Run r = cli(dir.path(), "rel-acc --treated-acc 0.1781 --baseline-acc 0.3958");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("0.4499") != std::string::npos);
  std::ofstream(dir / "t.csv") << "model,a,n,r\nm1,0.4,0.35,0.2\nm2,0.6,0.55,0.3\nm3,0.7,0.62,0.4\n";
  std::ofstream(dir / "g.cfg") << "natural = n\nrendition = r\nanchor = a\n";
  r = cli(dir.path(), "robustness --table t.csv --groups g.cfg --out rob.json --plot rob.csv");
  CHECK(r.code == 0);
  CHECK(testutil::file_text(dir / "rob.csv").rfind("x,y,group,model", 0) == 0);
  r = cli(dir.path(), "robustness --table t.csv --out rob.json");
  CHECK(r.code == 1);
  CHECK(json::parse(r.err).at("error") == "not_found");
}

TEST_CASE("synth and experiment reproduce a ratio sweep") {
  testutil::TempDir a("cli"), b("cli");
  for (auto* d : {&a, &b}) {
    const std::string cfg = DOMAUDIT_CONFIG_DIR;
    REQUIRE(cli(d->path(), "synth --config '" + cfg + "/synth.cfg'").code == 0);
    const Run r = cli(d->path(), "experiment --sweep '" + cfg + "/ratios.json'");
    INFO(r.err);
    REQUIRE(r.code == 0);
  }
  CHECK(testutil::file_bytes(a / "experiment.csv") == testutil::file_bytes(b / "experiment.csv"));
  const auto csv = testutil::file_text(a / "experiment.csv");
  CHECK(csv.find("1:1,800,800,rendition,") != std::string::npos);
  CHECK(fs::exists(a / "experiment.csv.json"));
}
