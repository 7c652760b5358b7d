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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mechagency/surrogate.hpp"
#include "mechagency/voting.hpp"

namespace mechagency {

struct ExperimentConfig {
  std::uint64_t seed = 0;
  voting::Mechanism mechanism = voting::Mechanism::vcg;
  std::size_t n_countries = 5;
  std::size_t total_citizens = 1000;
  voting::Ranges ranges;
  double lambda_max = voting::kLambdaMax;
  voting::MedianOptions median;
  std::size_t n_train = 1000;
  std::size_t n_test = 500;
  std::size_t delta_interventions = 10;
  surrogate::TrainConfig train;
  std::size_t baseline_draws = 10'000;
  std::size_t floor_interventions = 20;
  std::size_t floor_redraws = 100;
  unsigned threads = 1;

  /// Strict: unknown keys and wrong types raise Error(invalid_config).
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Acceptance thresholds by mechanism.
struct Thresholds {
  static constexpr double kVcgImprovement = 0.90;
  static constexpr double kVcgDeltaMae = 1e-6;
  static constexpr double kVcgModelMae = 0.15;
  static constexpr double kMedianImprovement = 0.80;
  static constexpr double kMedianResidual = 1e-5;
  static constexpr double kDictatorImprovement = 0.20;
};

struct ExperimentResult {
  nlohmann::json report;
  bool verdict = false;
};

/// generate -> estimate -> train -> evaluate. Writes report.json,
/// table1_row.csv, per_country.csv, training_curve.csv,
/// ground_truth_{train,test}.csv and manifest.json into `out_dir` when it
/// is non-empty.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                                const std::string& command = {});

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

}  // namespace mechagency
