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

#include "mechagency/scm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "mechagency/errors.hpp"

namespace mechagency {

// ---------------------------------------------------------------------------
// DeterministicSCM
// ---------------------------------------------------------------------------

DeterministicSCM::DeterministicSCM(Signature signature)
    : signature_(std::move(signature)) {}

void DeterministicSCM::add_variable(const std::string& name, Domain domain) {
  signature_.add(name, Layer::mechanism, std::move(domain));
}

void DeterministicSCM::assign(const std::string& var,
                              MechanismAssignment assignment) {
  if (!signature_.contains(var)) {
    throw Error(ErrorCode::missing_variables,
                fmt::format("assignment for undeclared variable '{}'", var));
  }
  for (const auto& dep : assignment.depends_on) {
    if (dep == var) {
      throw Error(ErrorCode::invalid_argument,
                  fmt::format("'{}' cannot depend on itself", var));
    }
  }
  assignments_[var] = std::move(assignment);
}

const MechanismAssignment& DeterministicSCM::assignment(
    const std::string& var) const {
  auto it = assignments_.find(var);
  if (it == assignments_.end()) {
    throw Error(ErrorCode::missing_variables,
                fmt::format("no assignment for '{}'", var));
  }
  return it->second;
}

Value DeterministicSCM::evaluate(const std::string& var,
                                 const Setting& context) const {
  return assignment(var).fn(context);
}

namespace {

void check_intervention(const DeterministicSCM& m, const Setting& y) {
  for (const auto& [name, v] : y) {
    const auto& dom = m.domain(name);  // throws for unknown variables
    if (!dom.contains(v)) {
      throw Error(ErrorCode::invalid_argument,
                  fmt::format("intervention value {} outside dom({})",
                              format_value(v), name));
    }
  }
}

struct Enumerator {
  const DeterministicSCM& m;
  const Setting& intervention;
  const EnumerateOptions& opts;
  std::vector<std::string> vars;
  std::vector<Setting> found;
  std::size_t branches = 0;

  void search(Setting partial, VarSet branched) {
    // Propagate every variable whose dependencies are all assigned.
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& v : vars) {
        if (partial.contains(v)) continue;
        const auto& a = m.assignment(v);
        bool ready = std::all_of(a.depends_on.begin(), a.depends_on.end(),
                                 [&](const std::string& d) {
                                   return partial.contains(d);
                                 });
        if (ready) {
          partial.set(v, a.fn(partial));
          changed = true;
        }
      }
    }

    if (partial.size() == vars.size()) {
      for (const auto& v : branched) {
        if (!approx_equal(m.evaluate(v, partial), partial.at(v), opts.tol)) {
          return;
        }
      }
      found.push_back(std::move(partial));
      return;
    }

    // Branch on the unassigned variable with the smallest enumeration.
    const std::string* pick = nullptr;
    std::size_t best = std::numeric_limits<std::size_t>::max();
    for (const auto& v : vars) {
      if (partial.contains(v)) continue;
      const auto& dom = m.domain(v);
      if (!dom.enumerable()) continue;
      std::size_t n = dom.cardinality();
      if (n < best) {
        best = n;
        pick = &v;
      }
    }
    if (pick == nullptr) {
      throw Error(ErrorCode::non_finite_domain,
                  "solve_enumerate must branch on a variable whose domain "
                  "is not finite or discretized");
    }
    branched.insert(*pick);
    for (auto& value : m.domain(*pick).enumerate()) {
      if (++branches > opts.max_branches) {
        throw Error(ErrorCode::too_many_settings,
                    "solve_enumerate exceeded its branch budget");
      }
      Setting next = partial;
      next.set(*pick, std::move(value));
      search(std::move(next), branched);
    }
  }
};

}  // namespace

std::vector<Setting> solve_enumerate(const DeterministicSCM& m,
                                     const Setting& intervention,
                                     const EnumerateOptions& opts) {
  check_intervention(m, intervention);
  if (opts.use_analytic && m.has_analytic_solutions()) {
    if (auto sols = m.analytic_solutions()(intervention)) {
      for (const auto& s : *sols) {
        if (!approx_equal(project(s, intervention.variables()), intervention,
                          opts.tol)) {
          throw Error(ErrorCode::invalid_argument,
                      "registered analytic solution ignores the intervention");
        }
      }
      return dedup_settings(std::move(*sols), opts.tol);
    }
  }
  Enumerator e{m, intervention, opts, m.variables(), {}, 0};
  e.search(intervention, {});
  return dedup_settings(std::move(e.found), opts.tol);
}

FixedPointResult solve_fixed_point(const DeterministicSCM& m,
                                   const Setting& intervention,
                                   const Setting& init,
                                   const FixedPointOptions& opts) {
  if (!(opts.damping > 0.0 && opts.damping <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "damping must lie in (0, 1]");
  }
  check_intervention(m, intervention);

  const auto vars = m.variables();
  Setting x;
  for (const auto& v : vars) {
    if (const Value* iv = intervention.find(v)) {
      x.set(v, *iv);
    } else if (const Value* s = init.find(v)) {
      x.set(v, *s);
    } else {
      const auto& dom = m.domain(v);
      Value start;
      switch (dom.kind()) {
        case DomainKind::finite: start = dom.enumerate().front(); break;
        case DomainKind::real_box:
          for (double lo : dom.lower()) {
            start.coords.push_back(std::isfinite(lo) ? lo : 0.0);
          }
          break;
        case DomainKind::function_table:
          start.coords.assign(dom.table_inputs(), 0.0);
          break;
      }
      x.set(v, std::move(start));
    }
  }

  double residual = 0.0;
  for (long it = 0; it <= opts.max_iter; ++it) {
    residual = 0.0;
    Setting next = x;
    for (const auto& v : vars) {
      if (intervention.contains(v)) continue;
      Value fx = m.evaluate(v, x);
      const Value& cur = x.at(v);
      residual = std::max(residual, max_abs_difference(fx, cur));
      if (m.domain(v).kind() == DomainKind::real_box) {
        Value upd = cur;
        for (std::size_t i = 0; i < upd.size(); ++i) {
          upd[i] = cur[i] + opts.damping * (fx[i] - cur[i]);
        }
        next.set(v, std::move(upd));
      } else {
        next.set(v, std::move(fx));
      }
    }
    if (!std::isfinite(residual)) {
      throw NoConvergence("fixed-point iteration diverged", residual, it);
    }
    if (residual <= opts.tol) return {std::move(x), it, residual};
    x = std::move(next);
  }
  throw NoConvergence(
      fmt::format("no convergence after {} iterations (residual {:.3g})",
                  opts.max_iter, residual),
      residual, opts.max_iter);
}

// ---------------------------------------------------------------------------
// Object model
// ---------------------------------------------------------------------------

NoiseDistribution NoiseDistribution::singleton(Value v) {
  return finite({{std::move(v), 1.0}});
}

NoiseDistribution NoiseDistribution::finite(WeightedValues support) {
  double total = 0.0;
  for (const auto& [v, p] : support) {
    if (p < 0.0) {
      throw Error(ErrorCode::invalid_argument, "negative noise probability");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw Error(ErrorCode::invalid_argument,
                fmt::format("noise probabilities sum to {}", total));
  }
  NoiseDistribution n;
  n.support = std::move(support);
  return n;
}

NoiseDistribution NoiseDistribution::uniform01() {
  NoiseDistribution n;
  n.sampler = [](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return Value{u(rng)};
  };
  return n;
}

Value NoiseDistribution::draw(std::mt19937_64& rng) const {
  if (sampler) return sampler(rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double r = u(rng);
  double acc = 0.0;
  for (const auto& [v, p] : support) {
    acc += p;
    if (r < acc) return v;
  }
  return support.back().first;
}

void ParameterizedSCM::add(ObjectVariable var) {
  if (contains(var.name)) {
    throw Error(ErrorCode::invalid_argument,
                fmt::format("duplicate object variable '{}'", var.name));
  }
  for (const auto& p : var.assignment.parents) {
    if (!contains(p)) {
      throw Error(ErrorCode::invalid_argument,
                  fmt::format("parent '{}' of '{}' must be added first", p,
                              var.name));
    }
  }
  for (const auto& other : vars_) {
    if (other.mechanism == var.mechanism) {
      throw Error(ErrorCode::invalid_argument,
                  fmt::format("mechanism '{}' already governs '{}'",
                              var.mechanism, other.name));
    }
  }
  if (!var.assignment.structural && !var.assignment.kernel) {
    throw Error(ErrorCode::invalid_argument,
                fmt::format("'{}' needs a structural assignment or kernel",
                            var.name));
  }
  topo_.push_back(var.name);
  vars_.push_back(std::move(var));
}

const ObjectVariable& ParameterizedSCM::at(const std::string& name) const {
  for (const auto& v : vars_) {
    if (v.name == name) return v;
  }
  throw Error(ErrorCode::missing_variables,
              fmt::format("unknown object variable '{}'", name));
}

bool ParameterizedSCM::contains(const std::string& name) const {
  return std::any_of(vars_.begin(), vars_.end(),
                     [&](const ObjectVariable& v) { return v.name == name; });
}

const ObjectVariable& ParameterizedSCM::for_mechanism(
    const std::string& mech) const {
  for (const auto& v : vars_) {
    if (v.mechanism == mech) return v;
  }
  throw Error(ErrorCode::missing_variables,
              fmt::format("no object variable governed by '{}'", mech));
}

std::vector<std::string> ParameterizedSCM::names() const {
  std::vector<std::string> out;
  for (const auto& v : vars_) out.push_back(v.name);
  return out;
}

MechanizedSCM::MechanizedSCM(DeterministicSCM mech,
                             std::shared_ptr<const ParameterizedSCM> obj)
    : mech_(std::move(mech)), obj_(std::move(obj)) {
  const auto mech_vars = mech_.variables();
  if (mech_vars.size() != obj_->variables().size()) {
    throw Error(ErrorCode::invalid_argument,
                "mechanism and object variables must pair one-to-one");
  }
  for (const auto& ov : obj_->variables()) {
    if (!mech_.signature().contains(ov.mechanism)) {
      throw Error(ErrorCode::invalid_argument,
                  fmt::format("object '{}' names unknown mechanism '{}'",
                              ov.name, ov.mechanism));
    }
    mech_.assignment(ov.mechanism);  // every mechanism must be assigned
  }
}

InducedSCM induce_scm(std::shared_ptr<const ParameterizedSCM> model,
                      const Setting& mech_solution) {
  InducedSCM out;
  for (const auto& ov : model->variables()) {
    const Value* theta = mech_solution.find(ov.mechanism);
    if (theta == nullptr) {
      throw Error(ErrorCode::incomplete_solution,
                  fmt::format("mechanism '{}' unassigned", ov.mechanism));
    }
    out.theta.set(ov.mechanism, *theta);
  }
  out.model = std::move(model);
  return out;
}

InducedSCM induce_scm(const MechanizedSCM& m, const Setting& mech_solution) {
  return induce_scm(m.obj_model_ptr(), mech_solution);
}

// ---------------------------------------------------------------------------
// Distributions
// ---------------------------------------------------------------------------

namespace {

std::vector<Outcome> canonicalize(std::vector<Outcome> outcomes) {
  std::sort(outcomes.begin(), outcomes.end(),
            [](const Outcome& a, const Outcome& b) {
              return a.setting < b.setting;
            });
  std::vector<Outcome> out;
  for (auto& o : outcomes) {
    if (o.p == 0.0) continue;
    if (!out.empty() && approx_equal(out.back().setting, o.setting)) {
      out.back().p += o.p;
    } else {
      out.push_back(std::move(o));
    }
  }
  return out;
}

const Outcome* find_outcome(const std::vector<Outcome>& xs, const Setting& s,
                            double tol) {
  for (const auto& o : xs) {
    if (approx_equal(o.setting, s, tol)) return &o;
  }
  return nullptr;
}

}  // namespace

Distribution Distribution::exact(std::vector<Outcome> outcomes) {
  Distribution d;
  d.outcomes_ = canonicalize(std::move(outcomes));
  return d;
}

Distribution Distribution::empirical(const std::vector<Setting>& samples,
                                     std::uint64_t seed) {
  std::map<Setting, std::size_t> counts;
  for (const auto& s : samples) ++counts[s];
  std::vector<Outcome> outcomes;
  const double n = static_cast<double>(samples.size());
  for (const auto& [s, c] : counts) {
    outcomes.push_back({s, static_cast<double>(c) / n});
  }
  Distribution d;
  d.exact_ = false;
  d.samples_ = samples.size();
  d.seed_ = seed;
  d.outcomes_ = canonicalize(std::move(outcomes));
  return d;
}

double Distribution::total_mass() const {
  double t = 0.0;
  for (const auto& o : outcomes_) t += o.p;
  return t;
}

double Distribution::probability(
    const std::function<bool(const Setting&)>& event) const {
  double t = 0.0;
  for (const auto& o : outcomes_) {
    if (event(o.setting)) t += o.p;
  }
  return t;
}

double Distribution::expectation(
    const std::function<double(const Setting&)>& f) const {
  double t = 0.0;
  for (const auto& o : outcomes_) t += o.p * f(o.setting);
  return t;
}

Distribution Distribution::map(
    const std::function<Setting(const Setting&)>& f) const {
  std::vector<Outcome> mapped;
  mapped.reserve(outcomes_.size());
  for (const auto& o : outcomes_) mapped.push_back({f(o.setting), o.p});
  Distribution d = *this;
  d.outcomes_ = canonicalize(std::move(mapped));
  return d;
}

Distribution Distribution::marginal(const VarSet& vars) const {
  return map([&](const Setting& s) { return project(s, vars); });
}

double max_probability_gap(const Distribution& a, const Distribution& b,
                           double value_tol) {
  double gap = 0.0;
  for (const auto& o : a.outcomes()) {
    const Outcome* m = find_outcome(b.outcomes(), o.setting, value_tol);
    gap = std::max(gap, std::abs(o.p - (m ? m->p : 0.0)));
  }
  for (const auto& o : b.outcomes()) {
    if (!find_outcome(a.outcomes(), o.setting, value_tol)) {
      gap = std::max(gap, o.p);
    }
  }
  return gap;
}

double total_variation(const Distribution& a, const Distribution& b,
                       double value_tol) {
  double sum = 0.0;
  for (const auto& o : a.outcomes()) {
    const Outcome* m = find_outcome(b.outcomes(), o.setting, value_tol);
    sum += std::abs(o.p - (m ? m->p : 0.0));
  }
  for (const auto& o : b.outcomes()) {
    if (!find_outcome(a.outcomes(), o.setting, value_tol)) sum += o.p;
  }
  return 0.5 * sum;
}

namespace {

WeightedValues local_support(const ObjectVariable& var, const Value& theta,
                             const Setting& parents) {
  if (var.assignment.kernel) return var.assignment.kernel(theta, parents);
  if (!var.noise_dist.finite_support()) {
    throw Error(ErrorCode::non_finite_domain,
                fmt::format("exact mode needs finite noise or a closed-form "
                            "kernel for '{}'",
                            var.name));
  }
  WeightedValues out;
  for (const auto& [e, p] : var.noise_dist.support) {
    out.emplace_back(var.assignment.structural(theta, parents, e), p);
  }
  return out;
}

Value draw_value(const ObjectVariable& var, const Value& theta,
                 const Setting& parents, std::mt19937_64& rng) {
  if (var.assignment.structural &&
      (var.noise_dist.sampler || var.noise_dist.finite_support())) {
    return var.assignment.structural(theta, parents, var.noise_dist.draw(rng));
  }
  WeightedValues support = var.assignment.kernel(theta, parents);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double r = u(rng);
  double acc = 0.0;
  for (const auto& [v, p] : support) {
    acc += p;
    if (r < acc) return v;
  }
  return support.back().first;
}

VarSet to_set(const std::vector<std::string>& xs) {
  return VarSet(xs.begin(), xs.end());
}

}  // namespace

Distribution distribution(const InducedSCM& scm, const DistributionMode& mode) {
  const auto& model = *scm.model;
  if (mode.exact) {
    std::vector<Outcome> partial{{Setting{}, 1.0}};
    for (const auto& name : model.topological_order()) {
      const auto& var = model.at(name);
      const Value& theta = scm.theta.at(var.mechanism);
      const VarSet parents = to_set(var.assignment.parents);
      std::vector<Outcome> next;
      for (const auto& o : partial) {
        for (auto& [v, q] : local_support(var, theta, project(o.setting, parents))) {
          if (q <= 0.0) continue;
          Setting s = o.setting;
          s.set(name, std::move(v));
          next.push_back({std::move(s), o.p * q});
        }
      }
      partial = std::move(next);
    }
    return Distribution::exact(std::move(partial));
  }

  if (mode.samples == 0) {
    throw Error(ErrorCode::invalid_argument, "sample mode needs n >= 1");
  }
  std::mt19937_64 rng(mode.seed);
  std::vector<Setting> samples;
  samples.reserve(mode.samples);
  for (std::size_t i = 0; i < mode.samples; ++i) {
    Setting s;
    for (const auto& name : model.topological_order()) {
      const auto& var = model.at(name);
      s.set(name, draw_value(var, scm.theta.at(var.mechanism),
                             project(s, to_set(var.assignment.parents)), rng));
    }
    samples.push_back(std::move(s));
  }
  return Distribution::empirical(samples, mode.seed);
}

std::vector<Distribution> dedup_distributions(std::vector<Distribution> ds,
                                              double prob_tol) {
  std::vector<Distribution> out;
  for (auto& d : ds) {
    bool dup = std::any_of(out.begin(), out.end(), [&](const Distribution& o) {
      return max_probability_gap(o, d) <= prob_tol;
    });
    if (!dup) out.push_back(std::move(d));
  }
  return out;
}

std::vector<Distribution> solution_distributions(const MechanizedSCM& m,
                                                 const Setting& intervention,
                                                 const SolverConfig& config) {
  std::vector<Setting> sols;
  if (config.method == SolverConfig::Method::enumerate) {
    sols = solve_enumerate(m.mech_model(), intervention, config.enumerate);
  } else {
    sols.push_back(solve_fixed_point(m.mech_model(), intervention, config.init,
                                     config.fixed_point)
                       .solution);
  }
  std::vector<Distribution> ds;
  ds.reserve(sols.size());
  for (const auto& s : sols) {
    ds.push_back(distribution(induce_scm(m, s), config.mode));
  }
  return dedup_distributions(std::move(ds));
}

}  // namespace mechagency
