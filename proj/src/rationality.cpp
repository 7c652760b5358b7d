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

#include "mechagency/rationality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "mechagency/errors.hpp"

namespace mechagency {

UtilityFn UtilityFn::constant(double c) {
  return {fmt::format("constant({:g})", c), {},
          [c](const Setting&) { return c; }};
}

UtilityFn UtilityFn::of_variable(const std::string& var) {
  return {var, {var},
          [var](const Setting& v) { return v.at(var).as_scalar(); }};
}

UtilityFn UtilityFn::of_coordinate(const std::string& var, std::size_t index) {
  return {fmt::format("{}[{}]", var, index), {var},
          [var, index](const Setting& v) { return v.at(var)[index]; }};
}

UtilityFn UtilityFn::affine(double a, double b) const {
  auto inner = evaluate;
  return {fmt::format("{:g}*{}+{:g}", a, name, b), depends_on,
          [inner, a, b](const Setting& v) { return a * inner(v) + b; }};
}

double expected_utility(const ParameterizedSCM& obj,
                        const Setting& full_mech_setting, const UtilityFn& u,
                        const DistributionMode& mode) {
  // Non-owning alias: the induced model only lives for this call.
  std::shared_ptr<const ParameterizedSCM> alias(
      std::shared_ptr<const ParameterizedSCM>{}, &obj);
  Distribution d = distribution(induce_scm(alias, full_mech_setting), mode);
  return d.expectation(u.evaluate);
}

double expected_utility(const MechanizedSCM& m,
                        const Setting& full_mech_setting, const UtilityFn& u,
                        const DistributionMode& mode) {
  return expected_utility(m.obj_model(), full_mech_setting, u, mode);
}

std::vector<Value> best_response_set(const ParameterizedSCM& obj,
                                     const std::string& target,
                                     const Domain& target_domain,
                                     const Setting& context,
                                     const UtilityFn& u,
                                     const ExpectationConfig& cfg) {
  std::vector<Value> candidates = target_domain.enumerate();
  if (candidates.empty()) {
    throw Error(ErrorCode::empty_domain,
                fmt::format("dom({}) is empty", target));
  }
  std::vector<double> eu;
  eu.reserve(candidates.size());
  Setting full = context;
  for (const auto& v : candidates) {
    full.set(target, v);
    eu.push_back(expected_utility(obj, full, u, cfg.mode));
  }
  const double best = *std::max_element(eu.begin(), eu.end());
  std::vector<Value> out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (eu[i] >= best - cfg.tie_tol) out.push_back(candidates[i]);
  }
  return out;
}

std::vector<Value> best_response_set(const MechanizedSCM& m,
                                     const std::string& target,
                                     const Setting& context,
                                     const UtilityFn& u,
                                     const ExpectationConfig& cfg) {
  return best_response_set(m.obj_model(), target,
                           m.mech_model().domain(target), context, u, cfg);
}

void BeliefModel::validate(const std::string& target) const {
  if (agents.size() != utilities.size()) {
    throw Error(ErrorCode::invalid_argument,
                "belief model needs one utility per believed agent");
  }
  std::set<std::string> seen;
  for (const auto& a : agents) {
    if (a == target) {
      throw Error(ErrorCode::invalid_argument,
                  "belief model cannot contain the target itself");
    }
    if (!seen.insert(a).second) {
      throw Error(ErrorCode::invalid_argument,
                  fmt::format("believed agent '{}' listed twice", a));
    }
  }
}

std::vector<Setting> first_mover_optimal_settings(
    const ParameterizedSCM& obj, const Signature& mech_signature,
    const std::string& target, const BeliefModel& belief, const UtilityFn& u,
    const Setting& context, const ExpectationConfig& cfg, std::size_t limit) {
  belief.validate(target);
  std::vector<std::string> free_vars{target};
  free_vars.insert(free_vars.end(), belief.agents.begin(), belief.agents.end());
  std::vector<Setting> joint = enumerate_product(mech_signature, free_vars, limit);

  std::vector<Setting> admissible;
  std::vector<double> eu;
  for (const auto& combo : joint) {
    Setting w = context.merged(combo);
    bool ok = true;
    for (std::size_t i = 0; i < belief.agents.size() && ok; ++i) {
      const auto& agent = belief.agents[i];
      Setting others = w;
      others.erase(agent);
      auto br = best_response_set(obj, agent, mech_signature.at(agent).domain,
                                  others, belief.utilities[i], cfg);
      ok = std::any_of(br.begin(), br.end(), [&](const Value& v) {
        return approx_equal(v, w.at(agent));
      });
    }
    if (!ok) continue;
    eu.push_back(expected_utility(obj, w, u, cfg.mode));
    admissible.push_back(std::move(w));
  }
  if (admissible.empty()) {
    throw Error(ErrorCode::empty_response_set,
                fmt::format("no joint setting lets every believed agent of "
                            "'{}' best-respond",
                            target));
  }
  const double best = *std::max_element(eu.begin(), eu.end());
  std::vector<Setting> out;
  for (std::size_t i = 0; i < admissible.size(); ++i) {
    if (eu[i] >= best - cfg.tie_tol) out.push_back(admissible[i]);
  }
  return out;
}

std::vector<Value> first_mover_response(
    const ParameterizedSCM& obj, const Signature& mech_signature,
    const std::string& target, const BeliefModel& belief, const UtilityFn& u,
    const Setting& context, const ExpectationConfig& cfg) {
  std::vector<Value> out;
  for (const auto& s : first_mover_optimal_settings(obj, mech_signature, target,
                                                    belief, u, context, cfg)) {
    const Value& v = s.at(target);
    bool dup = std::any_of(out.begin(), out.end(),
                           [&](const Value& o) { return approx_equal(o, v); });
    if (!dup) out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Value> first_mover_response(const MechanizedSCM& m,
                                        const std::string& target,
                                        const BeliefModel& belief,
                                        const UtilityFn& u,
                                        const Setting& context,
                                        const ExpectationConfig& cfg) {
  return first_mover_response(m.obj_model(), m.mech_model().signature(), target,
                              belief, u, context, cfg);
}

RationalityRelation RationalityRelation::first_mover(BeliefModel belief) {
  RationalityRelation r;
  r.kind_ = Kind::first_mover;
  r.belief_ = std::move(belief);
  return r;
}

RationalityRelation RationalityRelation::custom(Predicate responses) {
  RationalityRelation r;
  r.kind_ = Kind::custom;
  r.custom_ = std::move(responses);
  return r;
}

std::vector<Value> RationalityRelation::responses(
    const MechanizedSCM& m, const std::string& target, const Setting& context,
    const UtilityFn& u, const ExpectationConfig& cfg) const {
  switch (kind_) {
    case Kind::best_response:
      return best_response_set(m, target, context, u, cfg);
    case Kind::first_mover:
      return first_mover_response(m, target, belief_, u, context, cfg);
    case Kind::custom:
      return custom_(m, target, context, u);
  }
  return {};
}

AgentCheck is_agent(const MechanizedSCM& m, const std::string& target,
                    const RationalityRelation& r, const UtilityFn& u,
                    std::span<const Setting> contexts,
                    const ExpectationConfig& cfg) {
  AgentCheck out;
  for (const auto& c : contexts) {
    ++out.contexts_checked;
    Value chosen = m.mech_model().evaluate(target, c);
    auto allowed = r.responses(m, target, c, u, cfg);
    bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const Value& v) {
      return approx_equal(v, chosen);
    });
    if (!ok) {
      out.holds = false;
      out.counterexample = c;
      return out;
    }
  }
  return out;
}

ConditionalTable conditional_table(const Distribution& d,
                                   const std::string& var,
                                   const std::vector<std::string>& parents) {
  const VarSet pa(parents.begin(), parents.end());
  ConditionalTable table;
  auto find_row = [&](const Setting& s) -> std::vector<Outcome>* {
    for (auto& [k, row] : table) {
      if (approx_equal(k, s)) return &row;
    }
    return nullptr;
  };
  for (const auto& o : d.outcomes()) {
    Setting key = project(o.setting, pa);
    auto* row = find_row(key);
    if (row == nullptr) {
      table.emplace_back(key, std::vector<Outcome>{});
      row = &table.back().second;
    }
    row->push_back({project(o.setting, {var}), o.p});
  }
  for (auto& [k, row] : table) {
    double mass = 0.0;
    for (const auto& o : row) mass += o.p;
    std::vector<Outcome> normalized;
    for (auto& o : row) normalized.push_back({o.setting, o.p / mass});
    row = Distribution::exact(std::move(normalized)).outcomes();
  }
  std::sort(table.begin(), table.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return table;
}

namespace {

struct TableComparison {
  bool differ = false;
  std::size_t skipped = 0;
  bool same_support = true;
};

TableComparison compare_tables(const ConditionalTable& a,
                               const ConditionalTable& b, double tol) {
  TableComparison out;
  for (const auto& [key, row] : a) {
    auto it = std::find_if(b.begin(), b.end(), [&](const auto& e) {
      return approx_equal(e.first, key);
    });
    if (it == b.end()) {
      ++out.skipped;
      out.same_support = false;
      continue;
    }
    if (max_probability_gap(Distribution::exact(row),
                            Distribution::exact(it->second)) > tol) {
      out.differ = true;
    }
  }
  for (const auto& [key, row] : b) {
    bool hit = std::any_of(a.begin(), a.end(), [&](const auto& e) {
      return approx_equal(e.first, key);
    });
    if (!hit) {
      ++out.skipped;
      out.same_support = false;
    }
  }
  return out;
}

}  // namespace

NontrivialAgentCheck is_nontrivial_agent(const MechanizedSCM& m,
                                         const std::string& target,
                                         const RationalityRelation& r,
                                         const UtilityFn& u,
                                         std::span<const Setting> contexts,
                                         const ExpectationConfig& cfg) {
  constexpr double kConditionalTol = 1e-9;
  NontrivialAgentCheck out;
  out.agent = is_agent(m, target, r, u, contexts, cfg);
  if (!out.agent.holds || contexts.empty()) return out;

  const auto& var = m.obj_model().for_mechanism(target);
  std::vector<ConditionalTable> tables;
  tables.reserve(contexts.size());
  for (const auto& c : contexts) {
    Setting full = c;
    full.set(target, m.mech_model().evaluate(target, c));
    Distribution d = distribution(induce_scm(m, full));
    tables.push_back(conditional_table(d, var.name, var.assignment.parents));
  }

  bool all_same_support = true;
  for (std::size_t j = 1; j < tables.size(); ++j) {
    auto cmp = compare_tables(tables[0], tables[j], kConditionalTol);
    out.skipped_configurations += cmp.skipped;
    all_same_support = all_same_support && cmp.same_support;
    if (cmp.differ) {
      out.holds = true;
      out.witness = {contexts[0], contexts[j]};
      return out;
    }
  }
  if (all_same_support) return out;

  // Equality on partial supports is not transitive; fall back to pairs.
  for (std::size_t i = 1; i < tables.size(); ++i) {
    for (std::size_t j = i + 1; j < tables.size(); ++j) {
      auto cmp = compare_tables(tables[i], tables[j], kConditionalTol);
      if (cmp.differ) {
        out.holds = true;
        out.witness = {contexts[i], contexts[j]};
        return out;
      }
    }
  }
  return out;
}

std::vector<Setting> all_contexts(const DeterministicSCM& m,
                                  const std::string& target,
                                  std::size_t limit) {
  std::vector<std::string> others;
  for (const auto& v : m.variables()) {
    if (v != target) others.push_back(v);
  }
  return enumerate_product(m.signature(), others, limit);
}

bool has_independent_mechanism(const DeterministicSCM& m,
                               const std::string& target) {
  const auto& a = m.assignment(target);
  std::vector<std::string> deps = a.depends_on;
  // Lazy odometer over the dependencies with early exit.
  std::vector<std::vector<Value>> axes;
  for (const auto& d : deps) axes.push_back(m.domain(d).enumerate());
  std::vector<std::size_t> idx(axes.size(), 0);
  std::optional<Value> first;
  while (true) {
    Setting c;
    for (std::size_t i = 0; i < axes.size(); ++i) c.set(deps[i], axes[i][idx[i]]);
    Value v = a.fn(c);
    if (!first) {
      first = std::move(v);
    } else if (!approx_equal(*first, v)) {
      return false;
    }
    std::size_t i = axes.size();
    bool done = true;
    while (i > 0) {
      --i;
      if (++idx[i] < axes[i].size()) {
        done = false;
        break;
      }
      idx[i] = 0;
    }
    if (done) return true;
  }
}

}  // namespace mechagency
