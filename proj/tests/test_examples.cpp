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

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "mechagency/errors.hpp"
#include "mechagency/examples.hpp"
#include "mechagency/model_json.hpp"

using namespace mechagency;

#ifndef MECHAGENCY_GOLDEN_DIR
#define MECHAGENCY_GOLDEN_DIR "tests/golden"
#endif

namespace {

std::vector<std::pair<double, double>> decisions(const std::vector<Setting>& sols) {
  std::vector<std::pair<double, double>> out;
  for (const auto& s : sols) out.emplace_back(s.at("D1~")[0], s.at("D2~")[0]);
  std::sort(out.begin(), out.end());
  return out;
}

// Two binary objects, B copies A through a noisy channel; mechanisms form a
// copy cycle.
MechanizedSCM golden_model() {
  auto obj = std::make_shared<ParameterizedSCM>();
  ObjectVariable a{"A", "A~", "EA", Domain::finite({"0", "1"}), {},
                   NoiseDistribution::finite({{Value{0}, 0.75}, {Value{1}, 0.25}})};
  a.assignment.structural = [](const Value& th, const Setting&, const Value& e) {
    return Value{std::fmod(th[0] + e[0], 2.0)};
  };
  ObjectVariable b{"B", "B~", "EB", Domain::finite({"0", "1"}), {},
                   NoiseDistribution::singleton()};
  b.assignment.parents = {"A"};
  b.assignment.structural = [](const Value& th, const Setting& pa, const Value&) {
    return Value{th[0] == 1 ? pa.at("A")[0] : 0.0};
  };
  obj->add(a);
  obj->add(b);
  DeterministicSCM mech;
  mech.add_variable("A~", Domain::finite({"0", "1"}));
  mech.add_variable("B~", Domain::finite({"0", "1"}));
  mech.assign("A~", {{"B~"}, [](const Setting& c) { return c.at("B~"); }});
  mech.assign("B~", {{"A~"}, [](const Setting& c) { return c.at("A~"); }});
  return MechanizedSCM(std::move(mech), obj);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("examples") {

TEST_CASE("battle of the sexes has exactly the three equilibria") {
  const auto m = battle_of_sexes();
  const auto sols = solve_enumerate(m.mech_model(), {});
  const auto d = decisions(sols);
  REQUIRE(d.size() == 3);
  CHECK(d[0] == std::pair{0.0, 0.0});
  CHECK(d[1].first == 2.0 / 3.0);
  CHECK(d[1].second == 1.0 / 3.0);
  CHECK(d[2] == std::pair{1.0, 1.0});
}

TEST_CASE("battle of the sexes payoffs") {
  const auto m = battle_of_sexes();
  const auto u1 = UtilityFn::of_variable("U1"), u2 = UtilityFn::of_variable("U2");
  for (const auto& s : solve_enumerate(m.mech_model(), {})) {
    const double p = s.at("D1~")[0], q = s.at("D2~")[0];
    const double e1 = expected_utility(m, s, u1), e2 = expected_utility(m, s, u2);
    CHECK(e1 == doctest::Approx(2 * p * q + (1 - p) * (1 - q)).epsilon(1e-12));
    CHECK(e2 == doctest::Approx(p * q + 2 * (1 - p) * (1 - q)).epsilon(1e-12));
    if (p == 1.0 && q == 1.0) CHECK(e1 == doctest::Approx(2.0));
    if (p == 2.0 / 3.0) {
      CHECK(e1 == doctest::Approx(2.0 / 3.0));
      CHECK(e2 == doctest::Approx(2.0 / 3.0));
    }
  }
}

TEST_CASE("grid cross-check finds the mixed equilibrium within one step") {
  const auto m = battle_of_sexes(0.01);
  const auto d = decisions(battle_of_sexes_grid_solutions(m));
  REQUIRE(d.size() == 3);
  CHECK(std::abs(d[1].first - 2.0 / 3.0) <= 0.01);
  CHECK(std::abs(d[1].second - 1.0 / 3.0) <= 0.01);
}

TEST_CASE("actor-critic action choices agree across levels") {
  const auto p = actor_critic_pair();
  auto act = [&](const Value& s, const Value& r) {
    const auto low = solve_enumerate(p.low->mech_model(), {{"S~", s}, {"R~", r}});
    const auto high = solve_enumerate(p.high->mech_model(), {{"S*~", s}, {"R*~", r}});
    REQUIRE(low.size() == 1);
    REQUIRE(high.size() == 1);
    return std::pair{low[0].at("A~")[0], high[0].at("A*~")[0]};
  };
  CHECK(act({0.1, 0.9}, {0.2, 0.8}) == std::pair{1.0, 1.0});
  CHECK(act({0.4, 0.4}, {0.2, 0.8}) == std::pair{1.0, 1.0});
  CHECK(act({0.9, 0.1}, {0.2, 0.8}) == std::pair{0.0, 0.0});
}

TEST_CASE("registered finite models round-trip through JSON") {
  RegistryOptions o;
  o.grid_step = 0.5;
  std::size_t round_tripped = 0;
  for (const auto& name : model_names()) {
    const auto m = make_model(name, o);
    nlohmann::json j;
    try {
      j = model_to_json(*m);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::non_finite_domain);
      continue;
    }
    const auto back = model_from_json(j);
    CHECK(models_equal(*m, back));
    CHECK(model_to_json(back) == j);
    ++round_tripped;
  }
  CHECK(round_tripped >= 4);
}

TEST_CASE("model JSON matches the golden file") {
  const auto m = golden_model();
  const auto golden =
      nlohmann::json::parse(read_file(std::string(MECHAGENCY_GOLDEN_DIR) + "/copy_model.json"));
  CHECK(model_to_json(m) == golden);
  const auto loaded = model_from_json(golden);
  CHECK(solve_enumerate(loaded.mech_model(), {}).size() == 2);
  const auto d = distribution(induce_scm(loaded, {{"A~", Value{1}}, {"B~", Value{1}}}));
  CHECK(d.probability([](const Setting& v) { return v.at("B")[0] == 1; }) ==
        doctest::Approx(0.75));
}

TEST_CASE("malformed model JSON is a config error") {
  try {
    model_from_json(nlohmann::json{{"format", 1}, {"mechanism_variables", 3}});
    FAIL("expected InvalidConfig");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_config);
  }
}

TEST_CASE("fuzzed cases satisfying the preconditions have no emergent agent") {
  std::mt19937_64 rng(123);
  for (int i = 0; i < 40; ++i) {
    const auto c = random_prop1_case(rng);
    const auto out = evaluate_prop1_case(c);
    CHECK(out.preconditions);
    CHECK(out.abstraction);
    CHECK_FALSE(out.nontrivial);
  }
}

TEST_CASE("dropping the independence precondition exposes agents") {
  std::mt19937_64 rng(321);
  FuzzOptions o;
  o.independent_target = false;
  std::size_t nontrivial = 0, preconditions = 0;
  for (int i = 0; i < 60; ++i) {
    const auto out = evaluate_prop1_case(random_prop1_case(rng, o));
    nontrivial += out.nontrivial;
    preconditions += out.preconditions;
  }
  CHECK(nontrivial > 0);
  CHECK(preconditions < 60);
}

TEST_CASE("registry reports unknown names") {
  CHECK_THROWS_AS(make_model("nope"), Error);
  CHECK_FALSE(make_pair("battle-of-sexes", "actor-critic-high"));
  try {
    run_example("nope");
    FAIL("expected UnknownExample");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unknown_example);
  }
}

TEST_CASE("example reports carry their verdicts") {
  for (const char* name : {"battle-of-sexes", "shared-utility"}) {
    const auto j = run_example(name);
    CHECK(j.at("verdict").get<bool>());
  }
  const auto su = run_example("shared-utility");
  CHECK_FALSE(su.at("best_response").at("at_u").at("matched").get<bool>());
  CHECK(su.at("first_mover").at("at_u").at("matched").get<bool>());
}

}  // TEST_SUITE
