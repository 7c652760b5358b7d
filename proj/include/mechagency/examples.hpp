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
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mechagency/abstraction.hpp"
#include "mechagency/rationality.hpp"
#include "mechagency/scm.hpp"

namespace mechagency {

/// A low model, its abstraction, and the maps tying them together.
struct ModelPair {
  std::shared_ptr<const MechanizedSCM> low;
  std::shared_ptr<const MechanizedSCM> high;
  AbstractionMaps maps;
  SubsetPolicy policy = SubsetPolicy::all;
  std::vector<std::vector<std::string>> subsets;

  std::vector<Setting> suite(std::size_t limit = 10'000'000) const;
};

// ---------------------------------------------------------------------------
// Battle of the sexes
// ---------------------------------------------------------------------------

namespace bos {
inline constexpr double kOpera = 0.0;
inline constexpr double kFootball = 1.0;
// Payoff tables in input order OO, OF, FO, FF.
inline const Value kPayoff1{2, 0, 0, 1};
inline const Value kPayoff2{1, 0, 0, 2};
}  // namespace bos

/// D1~, D2~ in [0,1] (probability of opera) best-responding in expected
/// payoff; U1~, U2~ fixed payoff tables. grid_step 0 gives the continuous
/// model. The three equilibria are registered analytically for the empty
/// intervention.
MechanizedSCM battle_of_sexes(double grid_step = 0.01);

/// Solutions of the battle-of-sexes mechanism model found by branching on
/// the grid alone.
std::vector<Setting> battle_of_sexes_grid_solutions(const MechanizedSCM& m);

// ---------------------------------------------------------------------------
// Actor-critic
// ---------------------------------------------------------------------------

struct ActorCriticOptions {
  double grid_step = 0.1;
  Value r{0.2, 0.8};
  Value s{0.1, 0.9};
};

ModelPair actor_critic_pair(const ActorCriticOptions& opts = {});

// ---------------------------------------------------------------------------
// Two agents with a shared utility
// ---------------------------------------------------------------------------

enum class SharedRationality { best_response, first_mover };

/// u(d1, d2) = 1{d1=d2=0} + 2 * 1{d1=d2=1}.
inline const Value kSharedUtilityTable{1, 0, 0, 2};

ModelPair shared_utility_pair(SharedRationality r,
                              const Value& default_u = kSharedUtilityTable);

// ---------------------------------------------------------------------------
// Random finite models satisfying the no-emergence preconditions
// ---------------------------------------------------------------------------

struct FuzzCase {
  ModelPair pair;
  std::string high_target;  // mechanism of the abstracted node
  std::vector<UtilityFn> utilities;
};

struct FuzzOptions {
  std::size_t max_objects = 4;
  std::size_t max_domain = 3;
  std::size_t max_mechanism_values = 3;
  /// When false the target group's mechanisms depend on their context.
  bool independent_target = true;
};

FuzzCase random_prop1_case(std::mt19937_64& rng, const FuzzOptions& opts = {});

struct FuzzOutcome {
  bool abstraction = false;
  bool strong = false;
  bool preconditions = false;
  bool nontrivial = false;  // any utility or the permissive relation
  std::size_t agent_utilities = 0;
};

FuzzOutcome evaluate_prop1_case(const FuzzCase& c);

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

struct RegistryOptions {
  double grid_step = -1.0;  // < 0: model default
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Registered mechanized models, by stable name.
std::vector<std::string> model_names();
std::shared_ptr<const MechanizedSCM> make_model(const std::string& name,
                                                const RegistryOptions& opts = {});
/// Known (low, high) pairs; a model paired with itself uses identity maps.
std::optional<ModelPair> make_pair(const std::string& low,
                                   const std::string& high,
                                   const RegistryOptions& opts = {});

/// Runnable examples (`examples run <name>`).
std::vector<std::string> example_names();
/// Runs one example and returns its machine-readable report, which carries
/// a boolean "verdict". Throws Error(unknown_example).
nlohmann::json run_example(const std::string& name,
                           const RegistryOptions& opts = {});

nlohmann::json to_json(const AbstractionReport& r, std::size_t max_failures = 10);
nlohmann::json setting_json(const Setting& s);

}  // namespace mechagency
