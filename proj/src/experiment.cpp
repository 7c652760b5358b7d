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

#include "mechagency/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "mechagency/errors.hpp"

namespace mechagency {

using json = nlohmann::json;
namespace fs = std::filesystem;
using voting::Mechanism;

namespace {

enum Stream : std::uint64_t {
  kPopulation = 1,
  kDelta,
  kTrainInterventions,
  kTestInterventions,
  kTrainTruth,
  kTestTruth,
  kDeltaTruth,
  kInit,
  kShuffle,
  kBaseline,
  kFloor,
};

std::pair<double, double> range_from(const json& j) {
  auto v = j.get<std::vector<double>>();
  if (v.size() != 2) throw Error(ErrorCode::invalid_config, "ranges are [lo, hi] pairs");
  return {v[0], v[1]};
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  static const std::set<std::string> known{
      "seed",          "mechanism",      "n_countries",         "total_citizens",
      "ranges",        "lambda_max",     "damping",             "tol",
      "max_iter",      "n_train",        "n_test",              "delta_interventions",
      "hidden",        "epochs",         "batch_size",          "learning_rate",
      "beta1",         "beta2",          "epsilon",             "input_scale",
      "baseline_draws", "floor_interventions", "floor_redraws"};
  if (!j.is_object()) throw Error(ErrorCode::invalid_config, "config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) {
      throw Error(ErrorCode::invalid_config, fmt::format("unknown config key '{}'", k));
    }
  }
  ExperimentConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    if (j.contains("mechanism")) {
      c.mechanism = voting::parse_mechanism(j.at("mechanism").get<std::string>());
    }
    c.n_countries = j.value("n_countries", c.n_countries);
    c.total_citizens = j.value("total_citizens", c.total_citizens);
    if (j.contains("ranges")) {
      const auto& r = j.at("ranges");
      for (const auto& [k, v] : r.items()) {
        if (k == "a") {
          std::tie(c.ranges.a_lo, c.ranges.a_hi) = range_from(v);
        } else if (k == "b") {
          std::tie(c.ranges.b_lo, c.ranges.b_hi) = range_from(v);
        } else if (k == "d") {
          std::tie(c.ranges.d_lo, c.ranges.d_hi) = range_from(v);
        } else if (k == "size_sigma") {
          c.ranges.size_sigma = v.get<double>();
        } else {
          throw Error(ErrorCode::invalid_config, fmt::format("unknown range '{}'", k));
        }
      }
    }
    c.lambda_max = j.value("lambda_max", c.lambda_max);
    c.median.damping = j.value("damping", c.median.damping);
    c.median.tol = j.value("tol", c.median.tol);
    c.median.max_iter = j.value("max_iter", c.median.max_iter);
    c.n_train = j.value("n_train", c.n_train);
    c.n_test = j.value("n_test", c.n_test);
    c.delta_interventions = j.value("delta_interventions", c.delta_interventions);
    c.train.hidden = j.value("hidden", c.train.hidden);
    c.train.epochs = j.value("epochs", c.train.epochs);
    c.train.batch = j.value("batch_size", c.train.batch);
    c.train.adam.lr = j.value("learning_rate", c.train.adam.lr);
    c.train.adam.beta1 = j.value("beta1", c.train.adam.beta1);
    c.train.adam.beta2 = j.value("beta2", c.train.adam.beta2);
    c.train.adam.eps = j.value("epsilon", c.train.adam.eps);
    c.train.input_scale = j.value("input_scale", c.train.input_scale);
    c.baseline_draws = j.value("baseline_draws", c.baseline_draws);
    c.floor_interventions = j.value("floor_interventions", c.floor_interventions);
    c.floor_redraws = j.value("floor_redraws", c.floor_redraws);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_config, fmt::format("bad config value: {}", e.what()));
  }
  if (c.n_train == 0 || c.n_test == 0 || c.delta_interventions < 2 ||
      c.baseline_draws == 0 || c.floor_redraws == 0 || c.train.epochs == 0 ||
      c.train.batch == 0 || !(c.train.adam.lr > 0)) {
    throw Error(ErrorCode::invalid_config, "sizes, epochs and learning rate must be positive");
  }
  return c;
}

json ExperimentConfig::to_json() const {
  return {{"seed", seed},
          {"mechanism", voting::to_string(mechanism)},
          {"n_countries", n_countries},
          {"total_citizens", total_citizens},
          {"ranges",
           {{"a", {ranges.a_lo, ranges.a_hi}},
            {"b", {ranges.b_lo, ranges.b_hi}},
            {"d", {ranges.d_lo, ranges.d_hi}},
            {"size_sigma", ranges.size_sigma}}},
          {"lambda_max", lambda_max},
          {"damping", median.damping},
          {"tol", median.tol},
          {"max_iter", median.max_iter},
          {"n_train", n_train},
          {"n_test", n_test},
          {"delta_interventions", delta_interventions},
          {"hidden", train.hidden},
          {"epochs", train.epochs},
          {"batch_size", train.batch},
          {"learning_rate", train.adam.lr},
          {"beta1", train.adam.beta1},
          {"beta2", train.adam.beta2},
          {"epsilon", train.adam.eps},
          {"input_scale", train.input_scale},
          {"baseline_draws", baseline_draws},
          {"floor_interventions", floor_interventions},
          {"floor_redraws", floor_redraws}};
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, fmt::format("cannot read '{}'", path));
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 15];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

namespace {

/// Solves every intervention, in parallel when threads > 1. Results keep
/// input order, so the output does not depend on the thread count.
std::vector<voting::NEResult> solve_all(const std::vector<voting::Intervention>& ivs,
                                        const surrogate::GroundTruth& solve,
                                        unsigned threads) {
  std::vector<voting::NEResult> out(ivs.size());
  std::vector<std::exception_ptr> errors(ivs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < ivs.size();) {
      try {
        out[i] = solve(ivs[i], i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(ivs.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

surrogate::GroundTruth truth_solver(const ExperimentConfig& cfg,
                                    const voting::Population& pop,
                                    std::uint64_t stream_seed) {
  switch (cfg.mechanism) {
    case Mechanism::vcg:
      return [&pop](const voting::Intervention& iv, std::size_t) {
        return voting::vcg_ne(pop, iv);
      };
    case Mechanism::median:
      return [&pop, opts = cfg.median](const voting::Intervention& iv, std::size_t) {
        return voting::median_ne(pop, iv, opts);
      };
    case Mechanism::dictator:
      return [&pop, stream_seed](const voting::Intervention& iv, std::size_t i) {
        return voting::random_dictator_ne(pop, iv, voting::derive_seed(stream_seed, i));
      };
  }
  throw Error(ErrorCode::invalid_config, "unknown mechanism");
}

std::string num(double x) { return fmt::format("{:.17g}", x); }

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, fmt::format("cannot write '{}'", p.string()));
  out << content;
  if (!out) throw Error(ErrorCode::io, fmt::format("failed writing '{}'", p.string()));
}

std::string ground_truth_csv(const std::vector<voting::NEResult>& truth) {
  std::string s = "intervention_id,country,q_c,Q_W\n";
  for (std::size_t j = 0; j < truth.size(); ++j) {
    for (std::size_t c = 0; c < truth[j].q.size(); ++c) {
      s += fmt::format("{},{},{},{}\n", j, c, num(truth[j].q[c]), num(truth[j].Q_W));
    }
  }
  return s;
}

json optional_number(const std::optional<double>& x) {
  return x ? json(*x) : json(nullptr);
}

std::string optional_csv(const std::optional<double>& x) { return x ? num(*x) : ""; }

double lower_median_of(std::vector<double> v) {
  auto mid = v.begin() + static_cast<std::ptrdiff_t>((v.size() - 1) / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                                const std::string& command) {
  const auto t0 = std::chrono::steady_clock::now();
  auto seed_for = [&](Stream s) { return voting::derive_seed(cfg.seed, s); };

  if (!out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) {
      throw Error(ErrorCode::io, fmt::format("cannot create output directory '{}'", out_dir));
    }
  }

  // Generate.
  const auto pop = voting::generate_population(seed_for(kPopulation), cfg.n_countries,
                                               cfg.total_citizens, cfg.ranges);
  const std::size_t C = pop.n_countries();
  const auto train_ivs =
      voting::sample_interventions(pop, seed_for(kTrainInterventions), cfg.n_train, cfg.lambda_max);
  const auto test_ivs =
      voting::sample_interventions(pop, seed_for(kTestInterventions), cfg.n_test, cfg.lambda_max);
  const auto train_truth =
      solve_all(train_ivs, truth_solver(cfg, pop, seed_for(kTrainTruth)), cfg.threads);
  const auto test_truth =
      solve_all(test_ivs, truth_solver(cfg, pop, seed_for(kTestTruth)), cfg.threads);

  // Estimate delta.
  const surrogate::DeltaEstimate delta =
      cfg.mechanism == Mechanism::dictator
          ? surrogate::estimate_delta_plug_in(pop)
          : surrogate::estimate_delta_regression(
                pop, truth_solver(cfg, pop, seed_for(kDeltaTruth)), seed_for(kDelta),
                cfg.delta_interventions);
  const Eigen::VectorXd delta_vec =
      Eigen::Map<const Eigen::VectorXd>(delta.delta_hat.data(), static_cast<Eigen::Index>(C));

  // Train.
  surrogate::TrainConfig tc = cfg.train;
  tc.init_seed = seed_for(kInit);
  tc.shuffle_seed = seed_for(kShuffle);
  const auto train_data = surrogate::make_dataset(train_ivs, train_truth, tc.input_scale);
  const auto trained = surrogate::train(train_data, delta_vec, tc);

  // Evaluate.
  const auto test_data = surrogate::make_dataset(test_ivs, test_truth, tc.input_scale);
  const Eigen::MatrixXd alpha_hat = trained.net.forward(test_data.x);
  const Eigen::MatrixXd q_hat = surrogate::equilibrium(alpha_hat, delta_vec);
  if (!q_hat.allFinite()) throw Error(ErrorCode::non_finite, "non-finite test prediction");

  const voting::Intervention zero(pop.total(), 0.0);
  std::vector<double> q0(C, 0.0);
  double max_residual = 0.0;
  long max_iterations = 0;
  switch (cfg.mechanism) {
    case Mechanism::vcg:
      q0 = voting::vcg_ne(pop, zero).q;
      break;
    case Mechanism::median: {
      const auto r = voting::median_ne(pop, zero, cfg.median);
      q0 = r.q;
      max_residual = r.residual;
      max_iterations = r.iterations;
      break;
    }
    case Mechanism::dictator: {
      std::mt19937_64 rng(seed_for(kBaseline));
      for (std::size_t k = 0; k < cfg.baseline_draws; ++k) {
        const auto ne = voting::ne_from_params(
            voting::dictator_params(pop, zero, voting::draw_dictators(pop, rng)));
        for (std::size_t c = 0; c < C; ++c) q0[c] += ne.q[c];
      }
      for (auto& x : q0) x /= static_cast<double>(cfg.baseline_draws);
      break;
    }
  }
  if (cfg.mechanism == Mechanism::median) {
    for (const auto* set : {&train_truth, &test_truth}) {
      for (const auto& r : *set) {
        max_residual = std::max(max_residual, r.residual);
        max_iterations = std::max(max_iterations, r.iterations);
      }
    }
  }

  const auto n_test = static_cast<std::size_t>(test_data.q.cols());
  std::vector<double> mae_q(C, 0.0), base_q(C, 0.0);
  std::vector<std::optional<double>> mae_alpha(C), mae_delta(C);
  for (std::size_t j = 0; j < n_test; ++j) {
    for (std::size_t c = 0; c < C; ++c) {
      const auto jj = static_cast<Eigen::Index>(j);
      const auto cc = static_cast<Eigen::Index>(c);
      mae_q[c] += std::abs(q_hat(cc, jj) - test_data.q(cc, jj));
      base_q[c] += std::abs(q0[c] - test_data.q(cc, jj));
    }
  }
  double model_mae = 0.0, baseline_mae = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    mae_q[c] /= static_cast<double>(n_test);
    base_q[c] /= static_cast<double>(n_test);
    model_mae += mae_q[c];
    baseline_mae += base_q[c];
  }
  const double improvement = 1.0 - model_mae / baseline_mae;

  double max_delta_error = 0.0;
  if (cfg.mechanism == Mechanism::vcg) {
    const auto p0 = voting::vcg_params(pop, zero);
    std::vector<double> alpha_err(C, 0.0);
    for (std::size_t j = 0; j < n_test; ++j) {
      const auto p = voting::vcg_params(pop, test_ivs[j]);
      for (std::size_t c = 0; c < C; ++c) {
        alpha_err[c] += std::abs(alpha_hat(static_cast<Eigen::Index>(c),
                                           static_cast<Eigen::Index>(j)) -
                                 p.alpha[c]);
      }
    }
    for (std::size_t c = 0; c < C; ++c) {
      mae_alpha[c] = alpha_err[c] / static_cast<double>(n_test);
      mae_delta[c] = std::abs(delta.delta_hat[c] - p0.delta[c]);
      max_delta_error = std::max(max_delta_error, *mae_delta[c]);
    }
  }

  json floor = nullptr;
  if (cfg.mechanism == Mechanism::dictator) {
    const std::size_t m = std::min(cfg.floor_interventions, n_test);
    double mad = 0.0, var = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      std::vector<std::vector<double>> draws(C);
      for (std::size_t r = 0; r < cfg.floor_redraws; ++r) {
        const auto ne = voting::random_dictator_ne(
            pop, test_ivs[j], voting::derive_seed(seed_for(kFloor), j * cfg.floor_redraws + r));
        for (std::size_t c = 0; c < C; ++c) draws[c].push_back(ne.q[c]);
      }
      for (const auto& d : draws) {
        const double med = lower_median_of(d);
        double mean = 0.0;
        for (double x : d) mean += x;
        mean /= static_cast<double>(d.size());
        for (double x : d) {
          mad += std::abs(x - med) / static_cast<double>(d.size());
          var += (x - mean) * (x - mean) / static_cast<double>(d.size());
        }
      }
    }
    floor = {{"summed_mean_abs_deviation", mad / static_cast<double>(m)},
             {"summed_variance", var / static_cast<double>(m)},
             {"interventions", m},
             {"redraws", cfg.floor_redraws}};
  }

  // Verdict.
  json checks = json::object();
  switch (cfg.mechanism) {
    case Mechanism::vcg:
      checks["improvement"] = improvement >= Thresholds::kVcgImprovement;
      checks["delta_mae"] = max_delta_error <= Thresholds::kVcgDeltaMae;
      checks["model_mae"] = model_mae <= Thresholds::kVcgModelMae;
      break;
    case Mechanism::median:
      checks["improvement"] = improvement >= Thresholds::kMedianImprovement;
      checks["fixed_point_residual"] = max_residual <= Thresholds::kMedianResidual;
      break;
    case Mechanism::dictator:
      checks["improvement_at_most"] = improvement <= Thresholds::kDictatorImprovement;
      break;
  }
  bool verdict = std::isfinite(improvement);
  for (const auto& [k, v] : checks.items()) verdict = verdict && v.get<bool>();

  json report;
  report["mechanism"] = voting::to_string(cfg.mechanism);
  report["seed"] = cfg.seed;
  report["config"] = cfg.to_json();
  std::vector<std::size_t> sizes;
  for (std::size_t c = 0; c < C; ++c) sizes.push_back(pop.size(c));
  report["population_sizes"] = sizes;
  report["delta"] = {{"method", delta.method == surrogate::DeltaEstimate::Method::regression
                                    ? "regression"
                                    : "plug_in"},
                     {"delta_hat", delta.delta_hat},
                     {"slope_stderr", delta.slope_stderr}};
  report["model_mae"] = model_mae;
  report["baseline_mae"] = baseline_mae;
  report["improvement"] = improvement;
  report["baseline_q"] = q0;
  json per = json::array();
  for (std::size_t c = 0; c < C; ++c) {
    per.push_back({{"country", c},
                   {"citizens", pop.size(c)},
                   {"mae_delta", optional_number(mae_delta[c])},
                   {"mae_alpha", optional_number(mae_alpha[c])},
                   {"mae_q", mae_q[c]},
                   {"baseline_mae_q", base_q[c]}});
  }
  report["per_country"] = per;
  report["training"] = {{"epochs", trained.curve.size()},
                        {"first_epoch_loss", trained.curve.front()},
                        {"final_epoch_loss", trained.curve.back()}};
  if (cfg.mechanism == Mechanism::median) {
    report["median"] = {{"max_fixed_point_residual", max_residual},
                        {"max_iterations", max_iterations}};
  }
  if (cfg.mechanism == Mechanism::vcg) report["max_delta_error"] = max_delta_error;
  report["stochasticity_floor"] = floor;
  report["checks"] = checks;
  report["verdict"] = verdict;

  if (!out_dir.empty()) {
    const fs::path dir(out_dir);
    std::vector<std::string> files;
    auto emit = [&](const std::string& name, const std::string& content) {
      write_file(dir / name, content);
      files.push_back(name);
    };
    emit("report.json", report.dump(2) + "\n");
    emit("table1_row.csv", fmt::format("mechanism,model_mae,baseline_mae,improvement\n{},{},{},{}\n",
                                       voting::to_string(cfg.mechanism), num(model_mae),
                                       num(baseline_mae), num(improvement)));
    std::string pc = "country,citizens,mae_delta,mae_alpha,mae_q,baseline_mae_q\n";
    for (std::size_t c = 0; c < C; ++c) {
      pc += fmt::format("{},{},{},{},{},{}\n", c, pop.size(c), optional_csv(mae_delta[c]),
                        optional_csv(mae_alpha[c]), num(mae_q[c]), num(base_q[c]));
    }
    emit("per_country.csv", pc);
    std::string curve = "epoch,mean_loss\n";
    for (std::size_t e = 0; e < trained.curve.size(); ++e) {
      curve += fmt::format("{},{}\n", e + 1, num(trained.curve[e]));
    }
    emit("training_curve.csv", curve);
    emit("ground_truth_train.csv", ground_truth_csv(train_truth));
    emit("ground_truth_test.csv", ground_truth_csv(test_truth));

    json manifest;
    manifest["command"] = command;
    manifest["config"] = cfg.to_json();
    manifest["threads"] = cfg.threads;
    json seeds = {{"base", cfg.seed}};
    for (auto [name, s] : {std::pair{"population", kPopulation},
                           {"delta", kDelta},
                           {"train_interventions", kTrainInterventions},
                           {"test_interventions", kTestInterventions},
                           {"train_truth", kTrainTruth},
                           {"test_truth", kTestTruth},
                           {"delta_truth", kDeltaTruth},
                           {"init", kInit},
                           {"shuffle", kShuffle},
                           {"baseline", kBaseline},
                           {"floor", kFloor}}) {
      seeds[name] = seed_for(s);
    }
    manifest["seeds"] = seeds;
    json hashes = json::object();
    for (const auto& f : files) hashes[f] = sha256_file((dir / f).string());
    manifest["artifacts"] = hashes;
    manifest["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const fs::path tmp = dir / "manifest.json.tmp";
    write_file(tmp, manifest.dump(2) + "\n");
    fs::rename(tmp, dir / "manifest.json");
  }
  return {std::move(report), verdict};
}

}  // namespace mechagency
