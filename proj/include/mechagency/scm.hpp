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
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mechagency/domain.hpp"
#include "mechagency/setting.hpp"

namespace mechagency {

// ---------------------------------------------------------------------------
// Deterministic (possibly cyclic) mechanism model
// ---------------------------------------------------------------------------

/// F_X: reads only `depends_on` from the context it is given.
struct MechanismAssignment {
  std::vector<std::string> depends_on;
  std::function<Value(const Setting& context)> fn;
};

/// Closed-form solution sets registered alongside a model. Returns nullopt
/// for interventions it does not cover.
using AnalyticSolutions =
    std::function<std::optional<std::vector<Setting>>(const Setting&)>;

class DeterministicSCM {
 public:
  DeterministicSCM() = default;
  explicit DeterministicSCM(Signature signature);

  /// Declares a variable and its assignment. The signature entry is added
  /// if absent.
  void assign(const std::string& var, MechanismAssignment assignment);
  void add_variable(const std::string& name, Domain domain);
  void register_analytic_solutions(AnalyticSolutions solutions) {
    analytic_ = std::move(solutions);
  }

  const Signature& signature() const { return signature_; }
  const Domain& domain(const std::string& var) const {
    return signature_.at(var).domain;
  }
  std::vector<std::string> variables() const { return signature_.names(); }
  const MechanismAssignment& assignment(const std::string& var) const;
  bool has_analytic_solutions() const { return static_cast<bool>(analytic_); }
  const AnalyticSolutions& analytic_solutions() const { return analytic_; }

  /// F_var evaluated on `context` (which must cover its dependencies).
  Value evaluate(const std::string& var, const Setting& context) const;

 private:
  Signature signature_;
  std::map<std::string, MechanismAssignment> assignments_;
  AnalyticSolutions analytic_;
};

struct EnumerateOptions {
  bool use_analytic = true;
  double tol = kValueTolerance;
  /// Upper bound on branch points explored before giving up.
  std::size_t max_branches = 50'000'000;
};

/// Sol(M; y): every full setting satisfying all non-intervened equations
/// and agreeing with `intervention`. Canonically ordered, deduplicated.
std::vector<Setting> solve_enumerate(const DeterministicSCM& m,
                                     const Setting& intervention,
                                     const EnumerateOptions& opts = {});

struct FixedPointOptions {
  double damping = 1.0;
  double tol = 1e-10;
  long max_iter = 10'000;
};

struct FixedPointResult {
  Setting solution;
  long iterations = 0;
  double residual = 0.0;
};

/// Damped synchronous (Jacobi) iteration from `init`. Throws NoConvergence.
FixedPointResult solve_fixed_point(const DeterministicSCM& m,
                                   const Setting& intervention,
                                   const Setting& init,
                                   const FixedPointOptions& opts = {});

// ---------------------------------------------------------------------------
// Parameterized object-level model
// ---------------------------------------------------------------------------

using WeightedValues = std::vector<std::pair<Value, double>>;

/// Distribution of one noise variable. Finite support is summed out in exact
/// mode; a sampler alone only supports sample mode.
struct NoiseDistribution {
  WeightedValues support;
  std::function<Value(std::mt19937_64&)> sampler;

  static NoiseDistribution singleton(Value v = Value{0.0});
  static NoiseDistribution finite(WeightedValues support);
  static NoiseDistribution uniform01();

  bool finite_support() const { return !support.empty(); }
  Value draw(std::mt19937_64& rng) const;
};

struct ObjectAssignment {
  std::vector<std::string> parents;
  /// V := f(theta, parents, noise).
  std::function<Value(const Value& theta, const Setting& parents,
                      const Value& noise)>
      structural;
  /// Optional closed form of P(V | theta, parents) with finite support,
  /// used by exact mode in place of summing out the noise.
  std::function<WeightedValues(const Value& theta, const Setting& parents)>
      kernel;
};

struct ObjectVariable {
  std::string name;
  std::string mechanism;
  std::string noise;
  Domain domain;
  ObjectAssignment assignment;
  NoiseDistribution noise_dist;
};

class ParameterizedSCM {
 public:
  void add(ObjectVariable var);

  const std::vector<ObjectVariable>& variables() const { return vars_; }
  const ObjectVariable& at(const std::string& name) const;
  bool contains(const std::string& name) const;
  /// Object variable whose parameter is mechanism `mech`.
  const ObjectVariable& for_mechanism(const std::string& mech) const;
  std::vector<std::string> names() const;
  /// Names in a topological order of the parent graph (validated acyclic).
  const std::vector<std::string>& topological_order() const { return topo_; }

 private:
  void refresh_order();

  std::vector<ObjectVariable> vars_;
  std::vector<std::string> topo_;
};

/// Pair (mechanism model, object model) with one mechanism per object.
class MechanizedSCM {
 public:
  MechanizedSCM() = default;
  MechanizedSCM(DeterministicSCM mech,
                std::shared_ptr<const ParameterizedSCM> obj);

  const DeterministicSCM& mech_model() const { return mech_; }
  const ParameterizedSCM& obj_model() const { return *obj_; }
  std::shared_ptr<const ParameterizedSCM> obj_model_ptr() const { return obj_; }

 private:
  DeterministicSCM mech_;
  std::shared_ptr<const ParameterizedSCM> obj_;
};

/// The object model instantiated at one full mechanism setting.
struct InducedSCM {
  std::shared_ptr<const ParameterizedSCM> model;
  Setting theta;  // keyed by mechanism variable
};

InducedSCM induce_scm(const MechanizedSCM& m, const Setting& mech_solution);
InducedSCM induce_scm(std::shared_ptr<const ParameterizedSCM> model,
                      const Setting& mech_solution);

// ---------------------------------------------------------------------------
// Distributions
// ---------------------------------------------------------------------------

struct Outcome {
  Setting setting;
  double p = 0.0;
};

class Distribution {
 public:
  /// Canonical exact table: near-equal outcomes merged, zero mass dropped,
  /// sorted.
  static Distribution exact(std::vector<Outcome> outcomes);
  static Distribution empirical(const std::vector<Setting>& samples,
                                std::uint64_t seed);

  bool is_exact() const { return exact_; }
  std::size_t sample_count() const { return samples_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<Outcome>& outcomes() const { return outcomes_; }
  double total_mass() const;

  double probability(const std::function<bool(const Setting&)>& event) const;
  double expectation(const std::function<double(const Setting&)>& f) const;
  /// Push-forward through `f`.
  Distribution map(const std::function<Setting(const Setting&)>& f) const;
  Distribution marginal(const VarSet& vars) const;

 private:
  bool exact_ = true;
  std::size_t samples_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<Outcome> outcomes_;
};

/// Largest absolute probability difference over the union of supports.
double max_probability_gap(const Distribution& a, const Distribution& b,
                           double value_tol = kValueTolerance);
double total_variation(const Distribution& a, const Distribution& b,
                       double value_tol = kValueTolerance);

struct DistributionMode {
  bool exact = true;
  std::size_t samples = 100'000;
  std::uint64_t seed = 0;

  static DistributionMode exact_mode() { return {}; }
  static DistributionMode sample(std::size_t n, std::uint64_t seed) {
    return {false, n, seed};
  }
};

/// P_M(V): exact joint table in topological order, or forward samples.
Distribution distribution(const InducedSCM& scm,
                          const DistributionMode& mode = {});

struct SolverConfig {
  enum class Method { enumerate, fixed_point };
  Method method = Method::enumerate;
  EnumerateOptions enumerate;
  FixedPointOptions fixed_point;
  Setting init;  // fixed-point start; unset variables start at lower bound
  DistributionMode mode;
};

/// P_Sol(M; y)(V): one distribution per solution, duplicates collapsed.
std::vector<Distribution> solution_distributions(
    const MechanizedSCM& m, const Setting& intervention,
    const SolverConfig& config = {});

/// Removes distributions equal to an earlier one (values within 1e-9,
/// probabilities within `prob_tol`).
std::vector<Distribution> dedup_distributions(std::vector<Distribution> ds,
                                              double prob_tol = 1e-12);

}  // namespace mechagency
