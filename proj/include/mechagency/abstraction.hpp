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
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mechagency/rationality.hpp"
#include "mechagency/scm.hpp"

namespace mechagency {

/// Pi: high-level object variable -> disjoint non-empty sets of low-level
/// object variables.
class Alignment {
 public:
  using Map = std::map<std::string, std::vector<std::string>>;

  Alignment() = default;
  explicit Alignment(Map map);

  static Alignment identity(const ParameterizedSCM& obj);

  const Map& map() const { return map_; }
  const std::vector<std::string>& collection(const std::string& high) const;
  /// Pi over mechanism nodes: the low mechanisms governing Pi_{V*}, keyed by
  /// the high mechanism governing V*.
  std::map<std::string, std::vector<std::string>> mechanism_collections(
      const MechanizedSCM& low, const MechanizedSCM& high) const;

 private:
  Map map_;
};

using ValueMap = std::function<Value(const Setting& low_projection)>;

/// tau_{V*} for each high object variable.
struct ValueMapping {
  std::map<std::string, ValueMap> tau;

  static ValueMapping identity(const Alignment& a);
};

/// dom(omega_{V~*}): a finite list / grid, or a membership predicate with
/// an optional sampler.
class DefinedDomain {
 public:
  static DefinedDomain points(std::vector<Setting> pts);
  /// Product of the low mechanism domains (grids included), optionally
  /// filtered.
  static DefinedDomain product(const DeterministicSCM& low,
                               const std::vector<std::string>& vars,
                               std::function<bool(const Setting&)> keep = {});
  static DefinedDomain predicate(
      std::function<bool(const Setting&)> contains,
      std::function<Setting(std::mt19937_64&)> sampler = {});

  bool enumerable() const { return points_.has_value(); }
  const std::vector<Setting>& enumerate() const;
  bool contains(const Setting& s) const;
  bool can_sample() const { return enumerable() || static_cast<bool>(sampler_); }
  Setting sample(std::mt19937_64& rng) const;

 private:
  std::optional<std::vector<Setting>> points_;
  std::function<bool(const Setting&)> contains_;
  std::function<Setting(std::mt19937_64&)> sampler_;
};

struct PartialMap {
  std::function<Value(const Setting& low_collection)> fn;
  DefinedDomain defined;
};

/// omega_{V~*} for each high mechanism variable.
struct InterventionMapping {
  std::map<std::string, PartialMap> omega;

  static InterventionMapping identity(const MechanizedSCM& low,
                                      const Alignment& a,
                                      const MechanizedSCM& high);
};

/// Everything needed to compare a low and a high model.
struct AbstractionMaps {
  Alignment alignment;
  ValueMapping tau;
  InterventionMapping omega;
};

Setting push_tau(const Alignment& a, const ValueMapping& t,
                 const Setting& low_setting);

/// omega(y), or nullopt when some collection lies outside its defined
/// domain. Throws PartialCollection when y covers part of a collection.
std::optional<Setting> push_omega(const MechanizedSCM& low,
                                  const MechanizedSCM& high,
                                  const Alignment& a,
                                  const InterventionMapping& w,
                                  const Setting& low_intervention);

enum class SubsetPolicy { all, full, explicit_list };

/// Suite of low-level interventions: for every chosen subset Y* of high
/// mechanism variables, the product of dom(omega_{V~*}) for V~* in Y*.
std::vector<Setting> intervention_suite(
    const MechanizedSCM& low, const MechanizedSCM& high, const Alignment& a,
    const InterventionMapping& w, SubsetPolicy policy,
    const std::vector<std::vector<std::string>>& subsets = {},
    std::size_t limit = 10'000'000);

struct MatchResult {
  bool matched = false;
  double max_mismatch = 0.0;
  std::string note;
};

/// Set equality of distribution sets under `tol` (max probability gap for
/// exact distributions, total variation when either side is sampled).
MatchResult match_distribution_sets(const std::vector<Distribution>& a,
                                    const std::vector<Distribution>& b,
                                    double tol);

struct AbstractionEntry {
  Setting low_intervention;
  std::optional<Setting> high_intervention;
  std::vector<Distribution> low;   // pushed through tau
  std::vector<Distribution> high;
  bool matched = false;
  double max_mismatch = 0.0;
  std::string note;
};

struct AbstractionReport {
  std::vector<AbstractionEntry> entries;
  bool verdict = true;
  std::size_t matched = 0;
  double tol = 0.0;
  bool sampled = false;
};

struct AbstractionOptions {
  double tol = 1e-9;
  SolverConfig low_solver;
  SolverConfig high_solver;
  unsigned threads = 1;
  /// Keep distribution sets only for failed entries.
  bool keep_matched_distributions = false;
};

/// Checks P_Sol(M; y)(tau(V)) = P_Sol(M*; omega(y))(V*) for every suite
/// element.
AbstractionReport check_abstraction(const MechanizedSCM& low,
                                    const MechanizedSCM& high,
                                    const AbstractionMaps& maps,
                                    const std::vector<Setting>& suite,
                                    const AbstractionOptions& opts = {});

struct StrongCheckMode {
  bool exhaustive = true;
  std::size_t samples = 0;
  std::uint64_t seed = 0;

  static StrongCheckMode sampled(std::size_t n, std::uint64_t seed) {
    return {false, n, seed};
  }
};

struct StrongVariableReport {
  std::string variable;
  std::size_t checked = 0;
  std::size_t covered = 0;
  std::vector<Value> gaps;  // first few uncovered values
  double coverage() const {
    return checked ? static_cast<double>(covered) / static_cast<double>(checked)
                   : 1.0;
  }
};

struct StrongReport {
  bool surjective = true;
  std::vector<StrongVariableReport> variables;
};

/// Surjectivity of each omega_{V~*} onto dom(V~*).
StrongReport check_strong(const InterventionMapping& w,
                          const DeterministicSCM& high,
                          const StrongCheckMode& mode = {});

struct Prop1Report {
  bool tau_injective = false;
  bool independent_mechanisms = false;
  bool conclusion = false;
  std::vector<std::string> dependent_nodes;
};

/// Preconditions under which a high mechanism node cannot be a non-trivial
/// agent: tau injective on the parents of its object variable, and every
/// low mechanism aligned with it has an independent mechanism.
Prop1Report prop1_preconditions(const MechanizedSCM& low,
                                const MechanizedSCM& high,
                                const AbstractionMaps& maps,
                                const std::string& high_target);

}  // namespace mechagency
