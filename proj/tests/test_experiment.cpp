/* Copyright 2026 The Mechagency Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mechagency/errors.hpp"
#include "mechagency/experiment.hpp"

using namespace mechagency;
namespace fs = std::filesystem;

#ifndef MECHAGENCY_GOLDEN_DIR
#define MECHAGENCY_GOLDEN_DIR "tests/golden"
#endif

namespace {

const char* kCsvFiles[] = {"table1_row.csv", "per_country.csv", "training_curve.csv",
                           "ground_truth_train.csv", "ground_truth_test.csv"};

ExperimentConfig tiny(voting::Mechanism m) {
  ExperimentConfig c;
  c.seed = 7;
  c.mechanism = m;
  c.n_countries = 3;
  c.total_citizens = 60;
  c.n_train = 48;
  c.n_test = 16;
  c.train.hidden = {8, 8};
  c.train.epochs = 3;
  c.baseline_draws = 200;
  c.floor_interventions = 4;
  c.floor_redraws = 10;
  return c;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& p) {
  const auto s = read_file(p);
  return s.substr(0, s.find('\n') + 1);
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("mechagency_test_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("config parsing is strict") {
  const auto c = ExperimentConfig::from_json(
      {{"seed", 3}, {"mechanism", "median"}, {"n_train", 10}, {"hidden", {4, 4}}});
  CHECK(c.seed == 3);
  CHECK(c.mechanism == voting::Mechanism::median);
  CHECK(c.n_train == 10);
  CHECK(c.train.hidden == std::vector<std::size_t>{4, 4});
  const auto back = ExperimentConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());

  for (const auto& bad : {nlohmann::json{{"sed", 3}}, nlohmann::json{{"seed", "three"}},
                          nlohmann::json{{"mechanism", "borda"}}, nlohmann::json::array()}) {
    try {
      ExperimentConfig::from_json(bad);
      FAIL("expected InvalidConfig");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::invalid_config);
    }
  }
}

TEST_CASE("default config reproduces the documented protocol") {
  const ExperimentConfig c;
  CHECK(c.n_countries == 5);
  CHECK(c.total_citizens == 1000);
  CHECK(c.n_train == 1000);
  CHECK(c.n_test == 500);
  CHECK(c.train.epochs == 100);
  CHECK(c.train.batch == 32);
  CHECK(c.train.adam.lr == 1e-3);
  CHECK(c.train.hidden == std::vector<std::size_t>{128, 256, 256, 128});
  CHECK(c.median.damping == 0.3);
  CHECK(c.median.tol == 1e-6);
}

TEST_CASE("sha256 of a known string") {
  const auto dir = scratch("sha");
  fs::create_directories(dir);
  std::ofstream(dir / "abc.txt", std::ios::binary) << "abc";
  CHECK(sha256_file((dir / "abc.txt").string()) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK_THROWS_AS(sha256_file((dir / "missing").string()), Error);
  fs::remove_all(dir);
}

TEST_CASE("artifacts carry the golden CSV headers") {
  const auto dir = scratch("headers");
  run_experiment(tiny(voting::Mechanism::vcg), dir.string(), "test");
  for (const char* f : kCsvFiles) {
    CAPTURE(f);
    CHECK(first_line(dir / f) ==
          read_file(fs::path(MECHAGENCY_GOLDEN_DIR) / "headers" / f));
  }
  CHECK(fs::exists(dir / "report.json"));
  CHECK_FALSE(fs::exists(dir / "manifest.json.tmp"));
  fs::remove_all(dir);
}

TEST_CASE("manifest hashes match the emitted files") {
  const auto dir = scratch("manifest");
  run_experiment(tiny(voting::Mechanism::median), dir.string(), "experiment run");
  const auto m = nlohmann::json::parse(read_file(dir / "manifest.json"));
  CHECK(m.at("command") == "experiment run");
  CHECK(m.at("config").at("mechanism") == "median");
  CHECK(m.at("seeds").size() >= 5);
  for (const auto& [file, hash] : m.at("artifacts").items()) {
    CHECK(sha256_file((dir / file).string()) == hash.get<std::string>());
  }
  CHECK(m.at("wall_seconds").get<double>() >= 0.0);
  fs::remove_all(dir);
}

TEST_CASE("same seed gives byte-identical CSV artifacts for every mechanism") {
  for (auto mech : {voting::Mechanism::vcg, voting::Mechanism::median,
                    voting::Mechanism::dictator}) {
    auto cfg = tiny(mech);
    const auto a = scratch("det_a"), b = scratch("det_b");
    run_experiment(cfg, a.string());
    cfg.threads = 3;
    run_experiment(cfg, b.string());
    for (const char* f : kCsvFiles) {
      CAPTURE(f);
      CHECK(read_file(a / f) == read_file(b / f));
    }
    fs::remove_all(a);
    fs::remove_all(b);
  }
}

TEST_CASE("manifest config replays to identical CSVs") {
  const auto a = scratch("replay_a"), b = scratch("replay_b");
  run_experiment(tiny(voting::Mechanism::vcg), a.string());
  const auto m = nlohmann::json::parse(read_file(a / "manifest.json"));
  run_experiment(ExperimentConfig::from_json(m.at("config")), b.string());
  for (const char* f : kCsvFiles) CHECK(read_file(a / f) == read_file(b / f));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("report fields by mechanism") {
  const auto vcg = run_experiment(tiny(voting::Mechanism::vcg), "").report;
  CHECK(vcg.at("mechanism") == "vcg");
  for (const auto& c : vcg.at("per_country")) {
    CHECK(c.at("mae_delta").get<double>() <= 1e-9);
    CHECK(c.at("mae_alpha").is_number());
  }
  const double improvement = vcg.at("improvement");
  CHECK(improvement == doctest::Approx(1.0 - vcg.at("model_mae").get<double>() /
                                                 vcg.at("baseline_mae").get<double>()));

  const auto median = run_experiment(tiny(voting::Mechanism::median), "").report;
  CHECK(median.at("median").at("max_fixed_point_residual").get<double>() <= 1e-5);
  CHECK(median.at("per_country")[0].at("mae_alpha").is_null());

  const auto dict = run_experiment(tiny(voting::Mechanism::dictator), "").report;
  CHECK(dict.at("delta").at("method") == "plug_in");
  CHECK(dict.at("stochasticity_floor").at("redraws") == 10);
  CHECK(dict.at("stochasticity_floor").at("summed_variance").get<double>() > 0.0);
}

TEST_CASE("baseline does not depend on the network") {
  auto a = tiny(voting::Mechanism::vcg);
  auto b = a;
  b.train.hidden = {4};
  b.train.epochs = 1;
  CHECK(run_experiment(a, "").report.at("baseline_mae") ==
        run_experiment(b, "").report.at("baseline_mae"));
}

TEST_CASE("unwritable output directory is an io error") {
  const auto dir = scratch("blocked");
  std::ofstream(dir.string()) << "file, not a directory";
  try {
    run_experiment(tiny(voting::Mechanism::vcg), (dir / "sub").string());
    FAIL("expected io error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::io);
  }
  fs::remove_all(dir);
}

}  // TEST_SUITE
