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

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mechagency/scm.hpp"

namespace mechagency {

/// U: dom(V) -> R, reading only `depends_on`.
struct UtilityFn {
  std::string name;
  std::vector<std::string> depends_on;
  std::function<double(const Setting&)> evaluate;

  static UtilityFn constant(double c);
  /// proj_U(v) for a scalar-valued object variable U.
  static UtilityFn of_variable(const std::string& var);
  /// Coordinate `index` of a vector-valued object variable.
  static UtilityFn of_coordinate(const std::string& var, std::size_t index);
  /// a * u + b.
  UtilityFn affine(double a, double b) const;
};

constexpr double kTieTolerance = 1e-9;

struct ExpectationConfig {
  DistributionMode mode;
  double tie_tol = kTieTolerance;
};

double expected_utility(const ParameterizedSCM& obj,
                        const Setting& full_mech_setting, const UtilityFn& u,
                        const DistributionMode& mode = {});
double expected_utility(const MechanizedSCM& m,
                        const Setting& full_mech_setting, const UtilityFn& u,
                        const DistributionMode& mode = {});

/// Values of `target_domain` whose expected utility is within `tie_tol` of
/// the maximum, in domain order.
std::vector<Value> best_response_set(const ParameterizedSCM& obj,
                                     const std::string& target,
                                     const Domain& target_domain,
                                     const Setting& context,
                                     const UtilityFn& u,
                                     const ExpectationConfig& cfg = {});
std::vector<Value> best_response_set(const MechanizedSCM& m,
                                     const std::string& target,
                                     const Setting& context,
                                     const UtilityFn& u,
                                     const ExpectationConfig& cfg = {});

/// Agents believed in by the target and their believed utilities.
struct BeliefModel {
  std::vector<std::string> agents;
  std::vector<UtilityFn> utilities;

  void validate(const std::string& target) const;
};

/// Joint mechanism settings over target and believed agents that maximise
/// the target's expected utility, among those where every believed agent
/// best-responds. Non-believed variables stay at their context values.
/// Throws EmptyResponseSet when no such joint setting exists.
std::vector<Setting> first_mover_optimal_settings(
    const ParameterizedSCM& obj, const Signature& mech_signature,
    const std::string& target, const BeliefModel& belief, const UtilityFn& u,
    const Setting& context, const ExpectationConfig& cfg = {},
    std::size_t limit = 1'000'000);

std::vector<Value> first_mover_response(
    const ParameterizedSCM& obj, const Signature& mech_signature,
    const std::string& target, const BeliefModel& belief, const UtilityFn& u,
    const Setting& context, const ExpectationConfig& cfg = {});
std::vector<Value> first_mover_response(const MechanizedSCM& m,
                                        const std::string& target,
                                        const BeliefModel& belief,
                                        const UtilityFn& u,
                                        const Setting& context,
                                        const ExpectationConfig& cfg = {});

/// A total relation between contexts and responses.
class RationalityRelation {
 public:
  enum class Kind { best_response, first_mover, custom };
  using Predicate = std::function<std::vector<Value>(
      const MechanizedSCM&, const std::string& target, const Setting& context,
      const UtilityFn&)>;

  static RationalityRelation best_response() { return RationalityRelation{}; }
  static RationalityRelation first_mover(BeliefModel belief);
  static RationalityRelation custom(Predicate responses);

  Kind kind() const { return kind_; }
  std::vector<Value> responses(const MechanizedSCM& m,
                               const std::string& target,
                               const Setting& context, const UtilityFn& u,
                               const ExpectationConfig& cfg = {}) const;

 private:
  Kind kind_ = Kind::best_response;
  BeliefModel belief_;
  Predicate custom_;
};

struct AgentCheck {
  bool holds = true;
  std::optional<Setting> counterexample;
  std::size_t contexts_checked = 0;
};

/// F_target(c) in R_target(c) for every supplied context; reports the first
/// violation in iteration order.
AgentCheck is_agent(const MechanizedSCM& m, const std::string& target,
                    const RationalityRelation& r, const UtilityFn& u,
                    std::span<const Setting> contexts,
                    const ExpectationConfig& cfg = {});

struct NontrivialAgentCheck {
  bool holds = false;
  AgentCheck agent;
  /// Two contexts whose induced conditionals P(S | PA_S) differ.
  std::optional<std::pair<Setting, Setting>> witness;
  /// Parent configurations skipped because one side has zero probability.
  std::size_t skipped_configurations = 0;
};

NontrivialAgentCheck is_nontrivial_agent(const MechanizedSCM& m,
                                         const std::string& target,
                                         const RationalityRelation& r,
                                         const UtilityFn& u,
                                         std::span<const Setting> contexts,
                                         const ExpectationConfig& cfg = {});

/// Every context for `target`: the product of the enumerations of all other
/// mechanism variables, in signature order.
std::vector<Setting> all_contexts(const DeterministicSCM& m,
                                  const std::string& target,
                                  std::size_t limit = 10'000'000);

/// True iff F_target is constant over all contexts. Only the declared
/// dependencies are enumerated.
bool has_independent_mechanism(const DeterministicSCM& m,
                               const std::string& target);

/// Conditional table P(S | PA_S) of object variable `var` under an exact
/// distribution: (parent setting, [(value, probability)]).
using ConditionalTable =
    std::vector<std::pair<Setting, std::vector<Outcome>>>;
ConditionalTable conditional_table(const Distribution& d,
                                   const std::string& var,
                                   const std::vector<std::string>& parents);

}  // namespace mechagency
