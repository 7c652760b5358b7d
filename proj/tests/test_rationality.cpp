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

#include "mechagency/errors.hpp"
#include "mechagency/examples.hpp"
#include "mechagency/rationality.hpp"

using namespace mechagency;

namespace {

Setting bos_setting(double d1, double d2) {
  return {{"D1~", Value{d1}}, {"D2~", Value{d2}},
          {"U1~", bos::kPayoff1}, {"U2~", bos::kPayoff2}};
}

Setting ac_high(Value s, Value r) {
  return {{"S*~", std::move(s)}, {"R*~", std::move(r)}};
}

Setting ac_low_context(Value s, Value r, Value q) {
  return {{"S~", std::move(s)}, {"R~", std::move(r)}, {"Q~", std::move(q)},
          {"W~", Value{1}}, {"Y~", Value{1}}};
}

// E[R | A = a] = s_a r1 + (1 - s_a) r0.
double reward(const Value& s, const Value& r, int a) {
  return s[a] * r[1] + (1 - s[a]) * r[0];
}

}  // namespace

TEST_SUITE("rationality") {

TEST_CASE("expected payoff of player 1 at the mixed equilibrium") {
  const auto m = battle_of_sexes();
  const double p1 = 2.0 / 3.0, p2 = 1.0 / 3.0;
  // Payoff 2 on (O,O), 1 on (F,F).
  const double oracle = 2 * p1 * p2 + 1 * (1 - p1) * (1 - p2);
  CHECK(oracle == doctest::Approx(2.0 / 3.0));
  CHECK(expected_utility(m, bos_setting(p1, p2), UtilityFn::of_variable("U1")) ==
        doctest::Approx(oracle).epsilon(1e-12));
  CHECK(expected_utility(m, bos_setting(p1, p2), UtilityFn::constant(5)) ==
        doctest::Approx(5.0));
}

TEST_CASE("actor-critic expected reward of action 0 is 0.26") {
  const auto p = actor_critic_pair();
  const Value s{0.1, 0.9}, r{0.2, 0.8};
  Setting full = ac_high(s, r);
  full.set("A*~", Value{0});
  CHECK(reward(s, r, 0) == doctest::Approx(0.26));
  CHECK(expected_utility(*p.high, full, UtilityFn::of_variable("R*")) ==
        doctest::Approx(0.26).epsilon(1e-12));
}

TEST_CASE("best response of the high-level actor") {
  const auto p = actor_critic_pair();
  const auto u = UtilityFn::of_variable("R*");
  CHECK(best_response_set(*p.high, "A*~", ac_high({0.1, 0.9}, {0.2, 0.8}), u) ==
        std::vector<Value>{Value{1}});
  CHECK(best_response_set(*p.high, "A*~", ac_high({0.4, 0.4}, {0.2, 0.8}), u) ==
        std::vector<Value>{Value{0}, Value{1}});
  CHECK(best_response_set(*p.high, "A*~", ac_high({0.1, 0.9}, {0.2, 0.8}),
                          UtilityFn::constant(0))
            .size() == 2);
}

TEST_CASE("argmax is invariant under positive affine maps") {
  const auto p = actor_critic_pair();
  const auto u = UtilityFn::of_variable("R*");
  for (const auto& c : {ac_high({0.1, 0.9}, {0.2, 0.8}), ac_high({0.7, 0.3}, {0.5, 0.1}),
                        ac_high({0.5, 0.5}, {0.0, 1.0})}) {
    const auto base = best_response_set(*p.high, "A*~", c, u);
    ExpectationConfig scaled;
    scaled.tie_tol = 3.0 * kTieTolerance;
    CHECK(best_response_set(*p.high, "A*~", c, u.affine(3.0, -7.0), scaled) == base);
  }
}

TEST_CASE("high-level actor is a best-response agent for the reward") {
  const auto p = actor_critic_pair();
  const auto contexts = all_contexts(p.high->mech_model(), "A*~");
  CHECK(contexts.size() == 11u * 11 * 11 * 11);
  const auto check = is_agent(*p.high, "A*~", RationalityRelation::best_response(),
                              UtilityFn::of_variable("R*"), contexts);
  CHECK(check.holds);
  CHECK(check.contexts_checked == contexts.size());
}

TEST_CASE("low-level actor does not maximise the reward") {
  const auto p = actor_critic_pair();
  const Value s{0.1, 0.9}, r{0.9, 0.1}, q{0.0, 1.0};
  // Brute force over the two actions: action 0 earns more reward.
  REQUIRE(reward(s, r, 0) > reward(s, r, 1));
  const std::vector<Setting> contexts{ac_low_context(s, r, q)};
  const auto check = is_agent(*p.low, "A~", RationalityRelation::best_response(),
                              UtilityFn::of_variable("R"), contexts);
  CHECK_FALSE(check.holds);
  REQUIRE(check.counterexample);
  CHECK(*check.counterexample == contexts[0]);
  CHECK(is_agent(*p.low, "A~", RationalityRelation::best_response(),
                 UtilityFn::of_variable("Y"), contexts)
            .holds);
}

TEST_CASE("constant utility makes every mechanism an agent") {
  const auto p = actor_critic_pair();
  for (const auto& target : p.high->mech_model().variables()) {
    const auto contexts = all_contexts(p.high->mech_model(), target);
    CHECK(is_agent(*p.high, target, RationalityRelation::best_response(),
                   UtilityFn::constant(0), contexts)
              .holds);
  }
}

TEST_CASE("agency on a superset of contexts implies it on a subset") {
  const auto p = actor_critic_pair();
  const auto all = all_contexts(p.high->mech_model(), "A*~");
  const std::vector<Setting> some(all.begin(), all.begin() + 500);
  const auto u = UtilityFn::of_variable("R*");
  const auto rel = RationalityRelation::best_response();
  REQUIRE(is_agent(*p.high, "A*~", rel, u, all).holds);
  CHECK(is_agent(*p.high, "A*~", rel, u, some).holds);
}

TEST_CASE("non-trivial agency of the high-level actor") {
  const auto p = actor_critic_pair();
  const std::vector<Setting> contexts{ac_high({0.0, 1.0}, {0.9, 0.1}),
                                      ac_high({0.0, 1.0}, {0.1, 0.9})};
  const auto u = UtilityFn::of_variable("R*");
  const auto check =
      is_nontrivial_agent(*p.high, "A*~", RationalityRelation::best_response(), u, contexts);
  CHECK(check.holds);
  CHECK(check.witness.has_value());

  // S*~ is constant, so its conditional never moves.
  const auto s_contexts = all_contexts(p.high->mech_model(), "S*~");
  CHECK_FALSE(is_nontrivial_agent(*p.high, "S*~", RationalityRelation::best_response(),
                                  UtilityFn::constant(0), s_contexts)
                  .holds);
}

TEST_CASE("first-mover response in the shared-utility model") {
  const auto p = shared_utility_pair(SharedRationality::first_mover);
  const auto u = UtilityFn::of_variable("U");
  const BeliefModel belief{{"D2~"}, {u}};
  for (double d2 : {0.0, 1.0}) {
    const Setting c{{"D2~", Value{d2}}, {"U~", kSharedUtilityTable}};
    CHECK(first_mover_response(*p.low, "D1~", belief, u, c) ==
          std::vector<Value>{Value{1}});
  }
  const Value only_00{1, 0, 0, 0};
  const Setting c{{"D2~", Value{1}}, {"U~", only_00}};
  CHECK(first_mover_response(*p.low, "D1~", belief, u, c) == std::vector<Value>{Value{0}});
}

TEST_CASE("empty belief reduces first mover to best response") {
  const auto p = shared_utility_pair(SharedRationality::first_mover);
  const auto u = UtilityFn::of_variable("U");
  for (const auto& c : all_contexts(p.low->mech_model(), "D1~")) {
    CHECK(first_mover_response(*p.low, "D1~", BeliefModel{}, u, c) ==
          best_response_set(*p.low, "D1~", c, u));
  }
}

TEST_CASE("first mover does at least as well as best response") {
  const auto p = shared_utility_pair(SharedRationality::first_mover);
  const auto u = UtilityFn::of_variable("U");
  const BeliefModel belief{{"D2~"}, {u}};
  const auto& obj = p.low->obj_model();
  const auto& sig = p.low->mech_model().signature();
  for (double d2 : {0.0, 1.0}) {
    const Setting c{{"D2~", Value{d2}}, {"U~", kSharedUtilityTable}};
    const auto fm = first_mover_optimal_settings(obj, sig, "D1~", belief, u, c);
    REQUIRE_FALSE(fm.empty());
    const double fm_eu = expected_utility(obj, fm.front(), u);
    Setting br = c;
    br.set("D1~", best_response_set(*p.low, "D1~", c, u).front());
    CHECK(fm_eu >= expected_utility(obj, br, u) - 1e-12);
    CHECK(fm_eu == doctest::Approx(2.0));
  }
}

TEST_CASE("symmetric payoffs leave two first-mover optima") {
  const auto p = shared_utility_pair(SharedRationality::first_mover);
  const auto u = UtilityFn::of_variable("U");
  const BeliefModel belief{{"D2~"}, {u}};
  const Setting c{{"D2~", Value{0}}, {"U~", Value{1, 0, 0, 1}}};
  const auto fm = first_mover_optimal_settings(p.low->obj_model(),
                                               p.low->mech_model().signature(), "D1~",
                                               belief, u, c);
  CHECK(fm.size() == 2);
  const auto br = shared_utility_pair(SharedRationality::best_response);
  CHECK(solve_enumerate(br.low->mech_model(), {{"U~", Value{1, 0, 0, 1}}}).size() == 2);
}

TEST_CASE("independent mechanisms") {
  const auto bos = battle_of_sexes();
  CHECK(has_independent_mechanism(bos.mech_model(), "U1~"));
  CHECK_FALSE(has_independent_mechanism(bos.mech_model(), "D1~"));
  DeterministicSCM single;
  single.add_variable("X", Domain::finite({"a", "b"}));
  single.assign("X", {{}, [](const Setting&) { return Value{1}; }});
  CHECK(has_independent_mechanism(single, "X"));
}

TEST_CASE("best responses exist in every shared-utility context") {
  const auto p = shared_utility_pair(SharedRationality::best_response);
  const auto u = UtilityFn::of_variable("U");
  for (const auto& c : all_contexts(p.low->mech_model(), "D1~")) {
    CHECK_FALSE(best_response_set(*p.low, "D1~", c, u).empty());
  }
}

}  // TEST_SUITE
