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

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mechagency/mechagency.h"

using nlohmann::json;

namespace {

enum Exit { kVerdictHolds = 0, kVerdictFails = 1, kConfigError = 2, kNonFinite = 3 };

int exit_for(mca_status s) {
  switch (s) {
    case MCA_OK: return kVerdictHolds;
    case MCA_NON_FINITE:
    case MCA_NO_CONVERGENCE: return kNonFinite;
    default: return kConfigError;
  }
}

struct Globals {
  std::uint64_t seed = 0;
  bool seed_set = false;
  unsigned threads = 0;
  bool json_out = false;
};

class Context {
 public:
  explicit Context(const Globals& g) {
    mca_context_create(&ctx_);
    mca_context_set_threads(ctx_, g.threads);
    if (g.seed_set) mca_context_set_seed(ctx_, g.seed);
  }
  ~Context() { mca_context_destroy(ctx_); }
  Context(const Context&) = delete;
  Context& operator=(const Context&) = delete;

  mca_context* get() const { return ctx_; }

  int fail(mca_status s) const {
    std::cerr << "error (" << mca_status_string(s) << "): "
              << mca_context_last_error(ctx_) << "\n";
    return exit_for(s);
  }

 private:
  mca_context* ctx_ = nullptr;
};

const char* pass_fail(bool b) { return b ? "PASS" : "FAIL"; }

std::string compact(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_float()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", j.get<double>());
    return buf;
  }
  return j.dump();
}

// Checked/matched objects print as counts, booleans as PASS/FAIL, other
// objects recurse.
void print_section(const std::string& key, const json& v, int depth = 0) {
  const std::string pad(2 * depth, ' ');
  std::cout << pad << key << ": ";
  if (v.is_boolean()) {
    std::cout << pass_fail(v.get<bool>()) << "\n";
  } else if (v.is_object() && v.contains("checked") && v.contains("matched")) {
    std::cout << pass_fail(v.value("verdict", false)) << " ("
              << v["matched"].get<std::size_t>() << "/" << v["checked"].get<std::size_t>()
              << ")\n";
  } else if (v.is_object() && v.contains("surjective")) {
    std::cout << (v["surjective"].get<bool>() ? "surjective" : "not surjective") << "\n";
  } else if (v.is_object() && v.contains("holds")) {
    std::cout << pass_fail(v["holds"].get<bool>()) << "\n";
  } else if (v.is_object() && v.contains("agrees")) {
    std::cout << (v["agrees"].get<bool>() ? "agrees" : "disagrees") << "\n";
  } else if (v.is_object()) {
    std::cout << "\n";
    for (const auto& [k, sub] : v.items()) {
      if (k == "failures" || k == "variables") continue;
      print_section(k, sub, depth + 1);
    }
  } else {
    std::cout << compact(v) << "\n";
  }
}

void print_example(const std::string& name, const json& j) {
  std::cout << name << "\n";
  if (j.contains("solutions") && j["solutions"].is_array()) {
    std::size_t k = 0;
    for (const auto& s : j["solutions"]) {
      std::cout << "  solution " << ++k << ":";
      for (const auto& [key, v] : s.items()) std::cout << " " << key << "=" << compact(v);
      std::cout << "\n";
    }
  }
  for (const auto& [key, v] : j.items()) {
    if (key == "verdict" || key == "solutions" || key == "example") continue;
    print_section(key, v);
  }
  std::cout << "verdict: " << pass_fail(j.value("verdict", false)) << "\n";
}

void print_experiment(const json& j) {
  std::cout << "mechanism: " << j.value("mechanism", "") << "\n";
  std::cout << "country  citizens  mae_q  baseline_mae_q\n";
  for (const auto& c : j["per_country"]) {
    std::cout << c["country"] << "  " << c["citizens"] << "  " << compact(c["mae_q"])
              << "  " << compact(c["baseline_mae_q"]) << "\n";
  }
  std::cout << "model_mae: " << compact(j["model_mae"]) << "\n"
            << "baseline_mae: " << compact(j["baseline_mae"]) << "\n"
            << "improvement: " << compact(j["improvement"]) << "\n";
  if (j.contains("checks")) {
    for (const auto& [k, v] : j["checks"].items()) print_section("check " + k, v);
  }
  std::cout << "verdict: " << pass_fail(j.value("verdict", false)) << "\n";
}

// Runs `call`, prints the result, and maps the verdict to an exit code.
template <class Call, class Print>
int run(const Globals& g, Call&& call, Print&& print) {
  Context ctx(g);
  mca_result* r = nullptr;
  const mca_status s = call(ctx.get(), &r);
  if (s != MCA_OK) return ctx.fail(s);
  const json j = json::parse(mca_result_json(r));
  const bool verdict = mca_result_verdict(r) != 0;
  mca_result_destroy(r);
  if (g.json_out) {
    std::cout << j.dump(2) << "\n";
  } else {
    print(j);
  }
  return verdict ? kVerdictHolds : kVerdictFails;
}

std::string joined_args(int argc, char** argv) {
  std::string out;
  for (int i = 0; i < argc; ++i) {
    if (i) out += ' ';
    out += argv[i];
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mechanized causal models, agency checks and the voting surrogate."};
  app.require_subcommand(1);
  Globals g;
  app.add_option_function<std::uint64_t>(
         "--seed", [&](const std::uint64_t& s) { g.seed = s; g.seed_set = true; },
         "Seed for every random stream")
      ->type_name("UINT");
  app.add_option("--threads", g.threads, "Worker threads (default: all cores)")
      ->check(CLI::NonNegativeNumber);
  app.add_flag("--json", g.json_out, "Print the machine-readable report");

  int code = kVerdictHolds;

  auto* examples = app.add_subcommand("examples", "Worked examples");
  examples->require_subcommand(1);
  auto* ex_list = examples->add_subcommand("list", "List runnable examples");
  ex_list->callback([&] {
    code = run(g, [](mca_context* c, mca_result** r) { return mca_examples_list(c, r); },
               [](const json& j) { for (const auto& n : j) std::cout << n.get<std::string>() << "\n"; });
  });
  std::string ex_name;
  double ex_grid = -1.0;
  auto* ex_run = examples->add_subcommand("run", "Run one example");
  ex_run->add_option("name", ex_name, "Example name")->required();
  ex_run->add_option("--grid-step", ex_grid, "Grid step for discretized domains")
      ->check(CLI::PositiveNumber);
  ex_run->callback([&] {
    code = run(
        g,
        [&](mca_context* c, mca_result** r) {
          return mca_examples_run(c, ex_name.c_str(), ex_grid, r);
        },
        [&](const json& j) { print_example(ex_name, j); });
  });

  auto* models = app.add_subcommand("models", "Registered models");
  models->require_subcommand(1);
  models->add_subcommand("list", "List model names")->callback([&] {
    code = run(g, [](mca_context* c, mca_result** r) { return mca_models_list(c, r); },
               [](const json& j) { for (const auto& n : j) std::cout << n.get<std::string>() << "\n"; });
  });

  auto* abstraction = app.add_subcommand("abstraction", "Mechanized abstraction checks");
  abstraction->require_subcommand(1);
  std::string low, high, subsets = "default";
  double ab_grid = -1.0;
  auto* ab_check = abstraction->add_subcommand("check", "Check a low/high model pair");
  ab_check->add_option("low", low, "Low-level model")->required();
  ab_check->add_option("high", high, "High-level model")->required();
  ab_check->add_option("--grid-step", ab_grid, "Grid step for discretized domains")
      ->check(CLI::PositiveNumber);
  ab_check->add_option("--subsets", subsets, "Intervened subsets")
      ->check(CLI::IsMember({"default", "all", "full"}));
  ab_check->callback([&] {
    code = run(
        g,
        [&](mca_context* c, mca_result** r) {
          return mca_abstraction_check(c, low.c_str(), high.c_str(), ab_grid,
                                       subsets.c_str(), r);
        },
        [](const json& j) {
          print_section("abstraction", j);
          std::cout << "max_mismatch: " << compact(j["max_mismatch"]) << "\n";
          for (const auto& f : j["failures"]) {
            std::cout << "  " << f["low_intervention"].dump() << ": " << f.value("note", "")
                      << "\n";
          }
        });
  });

  auto* experiment = app.add_subcommand("experiment", "Voting surrogate experiment");
  experiment->require_subcommand(1);
  std::string mechanism, config_path, out_dir;
  auto* exp_run = experiment->add_subcommand("run", "Generate, estimate, train, evaluate");
  exp_run->add_option("--mechanism", mechanism, "vcg, median or dictator");
  exp_run->add_option("--config", config_path, "JSON config file");
  exp_run->add_option("--out", out_dir, "Output directory");
  const std::string command = joined_args(argc, argv);
  exp_run->callback([&] {
    std::string config;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) {
        std::cerr << "error (io): cannot read config '" << config_path << "'\n";
        code = kConfigError;
        return;
      }
      std::stringstream ss;
      ss << in.rdbuf();
      config = ss.str();
    }
    code = run(
        g,
        [&](mca_context* c, mca_result** r) {
          return mca_experiment_run(c, mechanism.c_str(), config.c_str(), out_dir.c_str(),
                                    command.c_str(), r);
        },
        print_experiment);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }
  return code;
}
