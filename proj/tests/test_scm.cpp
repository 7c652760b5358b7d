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
#include <map>
#include <random>

#include "mechagency/errors.hpp"
#include "mechagency/examples.hpp"
#include "mechagency/scm.hpp"

using namespace mechagency;

namespace {

DeterministicSCM copy_cycle() {
  DeterministicSCM m;
  m.add_variable("A", Domain::finite({"0", "1"}));
  m.add_variable("B", Domain::finite({"0", "1"}));
  m.assign("A", {{"B"}, [](const Setting& c) { return c.at("B"); }});
  m.assign("B", {{"A"}, [](const Setting& c) { return c.at("A"); }});
  return m;
}

DeterministicSCM affine_cycle(double ax, double ay, double by) {
  DeterministicSCM m;
  m.add_variable("x", Domain::real_line());
  m.add_variable("y", Domain::real_line());
  m.assign("x", {{"y"}, [ax](const Setting& c) {
                   return Value{ax * c.at("y")[0]};
                 }});
  m.assign("y", {{"x"}, [ay, by](const Setting& c) {
                   return Value{ay * c.at("x")[0] + by};
                 }});
  return m;
}

// P(v) = prod_i P(v_i | pa_i) with both factors read off the joint table.
double markov_gap(const Distribution& d, const ParameterizedSCM& obj) {
  std::map<Setting, double> marg;
  auto mass = [&](const VarSet& vars, const Setting& v) {
    const Setting key = project(v, vars);
    auto it = marg.find(key);
    if (it != marg.end()) return it->second;
    double p = 0;
    for (const auto& o : d.outcomes()) {
      if (project(o.setting, vars) == key) p += o.p;
    }
    marg.emplace(key, p);
    return p;
  };
  double worst = 0.0;
  for (const auto& o : d.outcomes()) {
    double prod = 1.0;
    for (const auto& var : obj.variables()) {
      VarSet pa(var.assignment.parents.begin(), var.assignment.parents.end());
      VarSet fam = pa;
      fam.insert(var.name);
      prod *= mass(fam, o.setting) / (pa.empty() ? 1.0 : mass(pa, o.setting));
    }
    worst = std::max(worst, std::abs(prod - o.p));
  }
  return worst;
}

}  // namespace

TEST_SUITE("scm") {

TEST_CASE("projection keeps only the target owners") {
  const Setting s{{"X1", Value{4}}, {"X2", Value{5}}};
  CHECK(project(s, {"X1"}) == Setting{{"X1", Value{4}}});
  CHECK(project(Setting{{"X2", Value{5}}}, {"X1"}).empty());
  CHECK(project(Setting{}, {"X1"}).empty());
  CHECK(project(project(s, {"X1"}), {"X1"}) == project(s, {"X1"}));
}

TEST_CASE("intervention overrides a constant mechanism") {
  DeterministicSCM m;
  m.add_variable("X", Domain::finite({"0", "1"}));
  m.assign("X", {{}, [](const Setting&) { return Value{1}; }});
  const auto sols = solve_enumerate(m, {{"X", Value{0}}});
  REQUIRE(sols.size() == 1);
  CHECK(sols[0] == Setting{{"X", Value{0}}});
}

TEST_CASE("copy cycle matches brute force over the joint domain") {
  const auto m = copy_cycle();
  std::vector<Setting> oracle;
  for (double a : {0.0, 1.0}) {
    for (double b : {0.0, 1.0}) {
      if (a == b) oracle.push_back({{"A", Value{a}}, {"B", Value{b}}});
    }
  }
  CHECK(solve_enumerate(m, {}) == oracle);
  const auto pinned = solve_enumerate(m, {{"A", Value{1}}});
  REQUIRE(pinned.size() == 1);
  CHECK(pinned[0].at("B") == Value{1});
}

TEST_CASE("every enumerated solution honours the intervention") {
  const auto m = copy_cycle();
  for (double v : {0.0, 1.0}) {
    for (const auto& s : solve_enumerate(m, {{"B", Value{v}}})) {
      CHECK(s.at("B") == Value{v});
    }
  }
}

TEST_CASE("affine cycle converges to the linear solution") {
  // x = y/2, y = x/2 + 1  =>  x = 2/3, y = 4/3.
  const auto m = affine_cycle(0.5, 0.5, 1.0);
  const auto r = solve_fixed_point(m, {}, {{"x", Value{0}}, {"y", Value{0}}},
                                   {1.0, 1e-10, 10'000});
  CHECK(r.solution.at("x")[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
  CHECK(r.solution.at("y")[0] == doctest::Approx(4.0 / 3.0).epsilon(1e-9));
  CHECK(r.residual <= 1e-10);
}

TEST_CASE("full intervention is returned without iterating") {
  const auto m = affine_cycle(0.5, 0.5, 1.0);
  const Setting y{{"x", Value{3}}, {"y", Value{-1}}};
  const auto r = solve_fixed_point(m, y, {}, {});
  CHECK(r.iterations == 0);
  CHECK(r.solution == y);
}

TEST_CASE("divergent cycle raises NoConvergence") {
  const auto m = affine_cycle(2.0, 2.0, 1.0);
  try {
    solve_fixed_point(m, {}, {{"x", Value{0}}, {"y", Value{0}}}, {1.0, 1e-10, 200});
    FAIL("expected NoConvergence");
  } catch (const NoConvergence& e) {
    CHECK(e.code() == ErrorCode::no_convergence);
    CHECK(e.iterations() == 200);
  }
}

TEST_CASE("fixed point successes lie in the enumerated solution set") {
  DeterministicSCM m;
  m.add_variable("A", Domain::finite({"0", "1", "2"}));
  m.add_variable("B", Domain::finite({"0", "1", "2"}));
  m.assign("A", {{"B"}, [](const Setting& c) { return Value{std::min(2.0, c.at("B")[0] + 1)}; }});
  m.assign("B", {{"A"}, [](const Setting& c) { return c.at("A"); }});
  const auto sols = solve_enumerate(m, {});
  REQUIRE(sols.size() == 1);
  const auto r = solve_fixed_point(m, {}, {{"A", Value{0}}, {"B", Value{0}}}, {});
  CHECK(r.solution == sols[0]);
}

TEST_CASE("non-enumerable branch variables raise NonFiniteDomain") {
  const auto m = affine_cycle(0.5, 0.5, 1.0);
  try {
    solve_enumerate(m, {});
    FAIL("expected NonFiniteDomain");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::non_finite_domain);
  }
}

TEST_CASE("induce_scm requires a complete mechanism setting") {
  const auto m = battle_of_sexes();
  try {
    induce_scm(m, Setting{{"D1~", Value{1}}});
    FAIL("expected IncompleteSolution");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::incomplete_solution);
  }
}

TEST_CASE("deterministic chain puts all mass on one outcome") {
  auto obj = std::make_shared<ParameterizedSCM>();
  ObjectVariable a{"A", "A~", "EA", Domain::finite({"0", "1"}), {}, NoiseDistribution::singleton()};
  a.assignment.structural = [](const Value&, const Setting&, const Value&) { return Value{1}; };
  ObjectVariable b{"B", "B~", "EB", Domain::finite({"0", "1"}), {}, NoiseDistribution::singleton()};
  b.assignment.parents = {"A"};
  b.assignment.structural = [](const Value&, const Setting& pa, const Value&) { return pa.at("A"); };
  obj->add(a);
  obj->add(b);
  const auto d = distribution(InducedSCM{obj, {{"A~", Value{0}}, {"B~", Value{0}}}});
  REQUIRE(d.outcomes().size() == 1);
  CHECK(d.outcomes()[0].p == doctest::Approx(1.0));
  CHECK(d.outcomes()[0].setting == Setting{{"A", Value{1}}, {"B", Value{1}}});
}

TEST_CASE("exact distributions factorize along the object graph") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 20; ++i) {
    const auto c = random_prop1_case(rng);
    const auto& low = *c.pair.low;
    for (const auto& s : solve_enumerate(low.mech_model(), {})) {
      const auto d = distribution(induce_scm(low, s));
      CHECK(d.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(markov_gap(d, low.obj_model()) <= 1e-10);
    }
  }
}

TEST_CASE("sampled distributions approach the exact tables") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 5; ++i) {
    const auto c = random_prop1_case(rng);
    const auto& low = *c.pair.low;
    const auto sols = solve_enumerate(low.mech_model(), {});
    REQUIRE_FALSE(sols.empty());
    const auto induced = induce_scm(low, sols.front());
    const auto exact = distribution(induced);
    const auto sampled = distribution(induced, DistributionMode::sample(100'000, 7 + i));
    CHECK_FALSE(sampled.is_exact());
    CHECK(sampled.sample_count() == 100'000);
    CHECK(total_variation(exact, sampled) < 0.02);
  }
}

TEST_CASE("battle of the sexes has three solution distributions") {
  const auto m = battle_of_sexes();
  CHECK(solution_distributions(m, {}).size() == 3);
  const Setting all{{"D1~", Value{1}}, {"D2~", Value{1}},
                    {"U1~", bos::kPayoff1}, {"U2~", bos::kPayoff2}};
  CHECK(solution_distributions(m, all).size() == 1);
}

TEST_CASE("mixed equilibrium gives P(opera, opera) = 2/9") {
  const auto m = battle_of_sexes();
  const Setting mixed{{"D1~", Value{2.0 / 3.0}}, {"D2~", Value{1.0 / 3.0}},
                      {"U1~", bos::kPayoff1}, {"U2~", bos::kPayoff2}};
  const auto d = distribution(induce_scm(m, mixed));
  const double p = d.probability([](const Setting& v) {
    return v.at("D1")[0] == bos::kOpera && v.at("D2")[0] == bos::kOpera;
  });
  CHECK(p == doctest::Approx(2.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("pure equilibrium induces point masses") {
  const auto m = battle_of_sexes();
  const Setting pure{{"D1~", Value{1}}, {"D2~", Value{1}},
                     {"U1~", bos::kPayoff1}, {"U2~", bos::kPayoff2}};
  const auto d = distribution(induce_scm(m, pure));
  CHECK(d.probability([](const Setting& v) { return v.at("D1")[0] == bos::kOpera; }) ==
        doctest::Approx(1.0));
  CHECK(d.probability([](const Setting& v) { return v.at("D2")[0] == bos::kOpera; }) ==
        doctest::Approx(1.0));
}

TEST_CASE("actor-critic reward given action 1 is 0.74") {
  const auto p = actor_critic_pair();
  const Setting y{{"S~", Value{0.1, 0.9}}, {"R~", Value{0.2, 0.8}}};
  const auto sols = solve_enumerate(p.low->mech_model(), y);
  REQUIRE(sols.size() == 1);
  CHECK(sols[0].at("A~") == Value{1});
  const auto d = distribution(induce_scm(*p.low, sols[0]));
  const double pa = d.probability([](const Setting& v) { return v.at("A")[0] == 1; });
  const double pra = d.probability(
      [](const Setting& v) { return v.at("A")[0] == 1 && v.at("R")[0] == 1; });
  CHECK(pa == doctest::Approx(1.0));
  CHECK(pra / pa == doctest::Approx(0.9 * 0.8 + 0.1 * 0.2).epsilon(1e-12));
}

}  // TEST_SUITE
