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

#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "mechagency/mechagency.h"

#ifndef MECHAGENCY_GOLDEN_DIR
#define MECHAGENCY_GOLDEN_DIR "tests/golden"
#endif

using nlohmann::json;

namespace {

struct Context {
  mca_context* ctx = nullptr;
  Context() { REQUIRE(mca_context_create(&ctx) == MCA_OK); }
  ~Context() { mca_context_destroy(ctx); }
};

json take(mca_result* r) {
  REQUIRE(r != nullptr);
  auto j = json::parse(mca_result_json(r));
  mca_result_destroy(r);
  return j;
}

}  // namespace

TEST_SUITE("c_api") {

TEST_CASE("status strings and version") {
  CHECK(std::strlen(mca_version()) > 0);
  CHECK(std::string(mca_status_string(MCA_OK)) == "ok");
  CHECK(std::string(mca_status_string(MCA_UNKNOWN_EXAMPLE)) == "UnknownExample");
  CHECK(std::string(mca_status_string(MCA_IO)) == "IOError");
  CHECK(std::string(mca_status_string(MCA_INTERNAL)) == "internal");
}

TEST_CASE("null arguments are rejected") {
  CHECK(mca_context_create(nullptr) == MCA_INVALID_ARGUMENT);
  Context c;
  CHECK(mca_examples_run(c.ctx, nullptr, -1, nullptr) == MCA_INVALID_ARGUMENT);
  CHECK(std::strlen(mca_context_last_error(c.ctx)) > 0);
  CHECK(mca_context_last_error(nullptr) != nullptr);
  mca_result_destroy(nullptr);
  mca_model_destroy(nullptr);
  mca_context_destroy(nullptr);
}

TEST_CASE("lists") {
  Context c;
  mca_result* r = nullptr;
  REQUIRE(mca_examples_list(c.ctx, &r) == MCA_OK);
  const auto ex = take(r);
  CHECK(ex.size() == 4);
  REQUIRE(mca_models_list(c.ctx, &r) == MCA_OK);
  CHECK(take(r).size() == 6);
}

TEST_CASE("unknown example sets the status and the message") {
  Context c;
  mca_result* r = nullptr;
  CHECK(mca_examples_run(c.ctx, "nope", -1, &r) == MCA_UNKNOWN_EXAMPLE);
  CHECK(r == nullptr);
  CHECK(std::string(mca_context_last_error(c.ctx)).find("nope") != std::string::npos);
  // A later success clears it.
  REQUIRE(mca_examples_run(c.ctx, "battle-of-sexes", -1, &r) == MCA_OK);
  CHECK(std::string(mca_context_last_error(c.ctx)).empty());
  CHECK(mca_result_verdict(r) == 1);
  mca_result_destroy(r);
}

TEST_CASE("abstraction check verdicts") {
  Context c;
  mca_result* r = nullptr;
  REQUIRE(mca_abstraction_check(c.ctx, "shared-utility-fm-low", "shared-utility-high", -1,
                                "default", &r) == MCA_OK);
  CHECK(mca_result_verdict(r) == 1);
  mca_result_destroy(r);
  REQUIRE(mca_abstraction_check(c.ctx, "shared-utility-br-low", "shared-utility-high", -1,
                                nullptr, &r) == MCA_OK);
  CHECK(mca_result_verdict(r) == 0);
  const auto j = take(r);
  CHECK(j.at("low") == "shared-utility-br-low");
  CHECK(mca_abstraction_check(c.ctx, "battle-of-sexes", "actor-critic-high", -1, nullptr,
                              &r) == MCA_UNKNOWN_EXAMPLE);
  CHECK(mca_abstraction_check(c.ctx, "actor-critic-low", "actor-critic-high", -1, "some",
                              &r) == MCA_INVALID_ARGUMENT);
}

TEST_CASE("model load, solve and serialise") {
  std::ifstream in(std::string(MECHAGENCY_GOLDEN_DIR) + "/copy_model.json");
  std::stringstream ss;
  ss << in.rdbuf();
  Context c;
  mca_model* m = nullptr;
  REQUIRE(mca_model_load_json(c.ctx, ss.str().c_str(), &m) == MCA_OK);

  mca_result* r = nullptr;
  REQUIRE(mca_model_solve(c.ctx, m, nullptr, &r) == MCA_OK);
  CHECK(take(r).at("count") == 2);

  REQUIRE(mca_model_solve(c.ctx, m, R"({"A~": 1})", &r) == MCA_OK);
  const auto j = take(r);
  REQUIRE(j.at("count") == 1);
  const auto& sol = j.at("solutions")[0];
  CHECK(sol.at("mechanisms").at("B~") == 1.0);
  double p_b1 = 0;
  for (const auto& o : sol.at("distribution")) {
    if (o.at("setting").at("B") == 1.0) p_b1 += o.at("p").get<double>();
  }
  CHECK(p_b1 == doctest::Approx(0.75));

  REQUIRE(mca_model_to_json(c.ctx, m, &r) == MCA_OK);
  CHECK(take(r) == json::parse(ss.str()));

  CHECK(mca_model_solve(c.ctx, m, "{not json", &r) == MCA_INVALID_CONFIG);
  CHECK(mca_model_solve(c.ctx, m, R"({"Z~": 1})", &r) != MCA_OK);
  mca_model_destroy(m);

  CHECK(mca_model_load_json(c.ctx, R"({"format": 1})", &m) == MCA_INVALID_CONFIG);
}

TEST_CASE("registry models serialise or report an infinite domain") {
  Context c;
  mca_model* m = nullptr;
  REQUIRE(mca_model_from_registry(c.ctx, "shared-utility-br-low", -1, &m) == MCA_OK);
  mca_result* r = nullptr;
  CHECK(mca_model_to_json(c.ctx, m, &r) == MCA_OK);
  mca_result_destroy(r);
  mca_model_destroy(m);
  CHECK(mca_model_from_registry(c.ctx, "nope", -1, &m) != MCA_OK);
}

TEST_CASE("closed-form equilibrium") {
  Context c;
  const double alpha[] = {1.0, 1.0}, delta[] = {0.5, 0.5};
  double q[2] = {}, total = 0;
  REQUIRE(mca_ne_from_params(c.ctx, 2, alpha, delta, q, &total) == MCA_OK);
  // Q = (sum alpha / 2) / (1 + sum delta) = 0.5, q_c = 0.5 - 0.5 * 0.5.
  CHECK(q[0] == doctest::Approx(0.25));
  CHECK(q[1] == doctest::Approx(0.25));
  CHECK(total == doctest::Approx(0.5));
  CHECK(mca_ne_from_params(c.ctx, 2, nullptr, delta, q, &total) == MCA_INVALID_ARGUMENT);
}

TEST_CASE("experiment config errors map to statuses") {
  Context c;
  mca_result* r = nullptr;
  CHECK(mca_experiment_run(c.ctx, "vcg", R"({"bogus": 1})", nullptr, nullptr, &r) ==
        MCA_INVALID_CONFIG);
  CHECK(mca_experiment_run(c.ctx, "borda", nullptr, nullptr, nullptr, &r) ==
        MCA_INVALID_CONFIG);
  CHECK(mca_experiment_run(c.ctx, nullptr, "[1,", nullptr, nullptr, &r) ==
        MCA_INVALID_CONFIG);
}

TEST_CASE("tiny experiment through the C API honours the context seed") {
  Context c;
  const char* cfg = R"({"n_countries": 3, "total_citizens": 60, "n_train": 32,
                        "n_test": 16, "hidden": [4], "epochs": 2, "baseline_draws": 50})";
  mca_result* r = nullptr;
  REQUIRE(mca_context_set_seed(c.ctx, 11) == MCA_OK);
  REQUIRE(mca_experiment_run(c.ctx, "vcg", cfg, "", nullptr, &r) == MCA_OK);
  const auto j = take(r);
  CHECK(j.at("seed") == 11);
  CHECK(j.at("mechanism") == "vcg");
}

}  // TEST_SUITE
