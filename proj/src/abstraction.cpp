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

#include "mechagency/abstraction.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "mechagency/errors.hpp"

namespace mechagency {

Alignment::Alignment(Map map) : map_(std::move(map)) {
  std::set<std::string> seen;
  for (const auto& [high, lows] : map_) {
    if (lows.empty()) {
      throw Error(ErrorCode::invalid_argument,
                  fmt::format("alignment of '{}' is empty", high));
    }
    for (const auto& l : lows) {
      if (!seen.insert(l).second) {
        throw Error(ErrorCode::invalid_argument,
                    fmt::format("low variable '{}' aligned twice", l));
      }
    }
  }
}

Alignment Alignment::identity(const ParameterizedSCM& obj) {
  Map m;
  for (const auto& v : obj.variables()) m[v.name] = {v.name};
  return Alignment(std::move(m));
}

const std::vector<std::string>& Alignment::collection(
    const std::string& high) const {
  auto it = map_.find(high);
  if (it == map_.end()) {
    throw Error(ErrorCode::missing_variables,
                fmt::format("'{}' has no alignment", high));
  }
  return it->second;
}

std::map<std::string, std::vector<std::string>>
Alignment::mechanism_collections(const MechanizedSCM& low,
                                 const MechanizedSCM& high) const {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& [hv, lows] : map_) {
    auto& coll = out[high.obj_model().at(hv).mechanism];
    for (const auto& l : lows) coll.push_back(low.obj_model().at(l).mechanism);
  }
  return out;
}

namespace {

Value concat(const Setting& s, const std::vector<std::string>& order) {
  Value out;
  for (const auto& v : order) {
    const auto& x = s.at(v);
    out.coords.insert(out.coords.end(), x.coords.begin(), x.coords.end());
  }
  return out;
}

}  // namespace

ValueMapping ValueMapping::identity(const Alignment& a) {
  ValueMapping t;
  for (const auto& [high, lows] : a.map()) {
    t.tau[high] = [lows](const Setting& s) { return concat(s, lows); };
  }
  return t;
}

DefinedDomain DefinedDomain::points(std::vector<Setting> pts) {
  DefinedDomain d;
  d.points_ = std::move(pts);
  return d;
}

DefinedDomain DefinedDomain::product(const DeterministicSCM& low,
                                     const std::vector<std::string>& vars,
                                     std::function<bool(const Setting&)> keep) {
  std::vector<Setting> pts = enumerate_product(low.signature(), vars);
  if (keep) {
    std::erase_if(pts, [&](const Setting& s) { return !keep(s); });
  }
  return points(std::move(pts));
}

DefinedDomain DefinedDomain::predicate(
    std::function<bool(const Setting&)> contains,
    std::function<Setting(std::mt19937_64&)> sampler) {
  DefinedDomain d;
  d.contains_ = std::move(contains);
  d.sampler_ = std::move(sampler);
  return d;
}

const std::vector<Setting>& DefinedDomain::enumerate() const {
  if (!points_) {
    throw Error(ErrorCode::non_finite_domain,
                "intervention mapping domain is not enumerable");
  }
  return *points_;
}

bool DefinedDomain::contains(const Setting& s) const {
  if (contains_) return contains_(s);
  if (!points_) return false;
  return std::any_of(points_->begin(), points_->end(),
                     [&](const Setting& p) { return approx_equal(p, s); });
}

Setting DefinedDomain::sample(std::mt19937_64& rng) const {
  if (points_) {
    std::uniform_int_distribution<std::size_t> pick(0, points_->size() - 1);
    return (*points_)[pick(rng)];
  }
  if (!sampler_) {
    throw Error(ErrorCode::non_finite_domain,
                "intervention mapping domain has no sampler");
  }
  return sampler_(rng);
}

InterventionMapping InterventionMapping::identity(const MechanizedSCM& low,
                                                  const Alignment& a,
                                                  const MechanizedSCM& high) {
  InterventionMapping w;
  for (const auto& [hm, lows] : a.mechanism_collections(low, high)) {
    bool enumerable = std::all_of(lows.begin(), lows.end(), [&](const auto& l) {
      return low.mech_model().domain(l).enumerable();
    });
    PartialMap pm;
    pm.fn = [lows](const Setting& s) { return concat(s, lows); };
    pm.defined = enumerable
                     ? DefinedDomain::product(low.mech_model(), lows)
                     : DefinedDomain::predicate([](const Setting&) { return true; });
    w.omega[hm] = std::move(pm);
  }
  return w;
}

Setting push_tau(const Alignment& a, const ValueMapping& t,
                 const Setting& low_setting) {
  Setting out;
  for (const auto& [high, lows] : a.map()) {
    Setting proj = project(low_setting, VarSet(lows.begin(), lows.end()));
    if (proj.size() != lows.size()) {
      throw Error(ErrorCode::missing_variables,
                  fmt::format("low setting misses part of the collection of "
                              "'{}'",
                              high));
    }
    auto it = t.tau.find(high);
    if (it == t.tau.end()) {
      throw Error(ErrorCode::missing_variables,
                  fmt::format("no value mapping for '{}'", high));
    }
    out.set(high, it->second(proj));
  }
  return out;
}

std::optional<Setting> push_omega(const MechanizedSCM& low,
                                  const MechanizedSCM& high,
                                  const Alignment& a,
                                  const InterventionMapping& w,
                                  const Setting& low_intervention) {
  const auto collections = a.mechanism_collections(low, high);
  std::set<std::string> touched;
  for (const auto& [var, v] : low_intervention) {
    bool found = false;
    for (const auto& [hm, lows] : collections) {
      if (std::find(lows.begin(), lows.end(), var) != lows.end()) {
        touched.insert(hm);
        found = true;
        break;
      }
    }
    if (!found) {
      throw Error(ErrorCode::partial_collection,
                  fmt::format("'{}' belongs to no aligned collection", var));
    }
  }
  Setting out;
  for (const auto& hm : touched) {
    const auto& lows = collections.at(hm);
    Setting proj = project(low_intervention, VarSet(lows.begin(), lows.end()));
    if (proj.size() != lows.size()) {
      throw Error(ErrorCode::partial_collection,
                  fmt::format("intervention covers only part of the "
                              "collection of '{}'",
                              hm));
    }
    auto it = w.omega.find(hm);
    if (it == w.omega.end() || !it->second.defined.contains(proj)) {
      return std::nullopt;
    }
    out.set(hm, it->second.fn(proj));
  }
  return out;
}

std::vector<Setting> intervention_suite(
    const MechanizedSCM& low, const MechanizedSCM& high, const Alignment& a,
    const InterventionMapping& w, SubsetPolicy policy,
    const std::vector<std::vector<std::string>>& subsets, std::size_t limit) {
  (void)low;
  (void)high;
  (void)a;
  std::vector<std::string> vars;
  for (const auto& [hm, pm] : w.omega) vars.push_back(hm);

  std::vector<std::vector<std::string>> chosen;
  switch (policy) {
    case SubsetPolicy::all:
      for (std::size_t mask = 0; mask < (std::size_t{1} << vars.size()); ++mask) {
        std::vector<std::string> s;
        for (std::size_t i = 0; i < vars.size(); ++i) {
          if (mask & (std::size_t{1} << i)) s.push_back(vars[i]);
        }
        chosen.push_back(std::move(s));
      }
      break;
    case SubsetPolicy::full:
      chosen.push_back(vars);
      break;
    case SubsetPolicy::explicit_list:
      chosen = subsets;
      break;
  }

  std::vector<Setting> suite;
  for (const auto& subset : chosen) {
    std::vector<Setting> partial{Setting{}};
    for (const auto& hm : subset) {
      auto it = w.omega.find(hm);
      if (it == w.omega.end()) {
        throw Error(ErrorCode::missing_variables,
                    fmt::format("no intervention mapping for '{}'", hm));
      }
      const auto& pts = it->second.defined.enumerate();
      std::vector<Setting> next;
      next.reserve(partial.size() * pts.size());
      for (const auto& p : partial) {
        for (const auto& q : pts) next.push_back(p.merged(q));
      }
      partial = std::move(next);
      if (suite.size() + partial.size() > limit) {
        throw Error(ErrorCode::too_many_settings,
                    "intervention suite exceeds its size limit");
      }
    }
    suite.insert(suite.end(), partial.begin(), partial.end());
  }
  return suite;
}

namespace {

double distance(const Distribution& a, const Distribution& b, bool sampled) {
  return sampled ? total_variation(a, b) : max_probability_gap(a, b);
}

std::vector<const Distribution*> collapse(const std::vector<Distribution>& ds,
                                          double tol, bool sampled) {
  std::vector<const Distribution*> out;
  for (const auto& d : ds) {
    bool dup = std::any_of(out.begin(), out.end(), [&](const Distribution* o) {
      return distance(*o, d, sampled) <= tol;
    });
    if (!dup) out.push_back(&d);
  }
  return out;
}

}  // namespace

MatchResult match_distribution_sets(const std::vector<Distribution>& a,
                                    const std::vector<Distribution>& b,
                                    double tol) {
  auto any_sampled = [](const std::vector<Distribution>& ds) {
    return std::any_of(ds.begin(), ds.end(),
                       [](const Distribution& d) { return !d.is_exact(); });
  };
  const bool sampled = any_sampled(a) || any_sampled(b);
  auto ca = collapse(a, tol, sampled);
  auto cb = collapse(b, tol, sampled);

  MatchResult r;
  // Directed nearest distances both ways (Hausdorff), symmetric in a and b.
  auto directed = [&](const auto& from, const auto& to) {
    double worst = 0.0;
    for (const Distribution* x : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const Distribution* y : to) {
        best = std::min(best, distance(*x, *y, sampled));
      }
      worst = std::max(worst, best);
    }
    return worst;
  };
  if (ca.empty() || cb.empty()) {
    r.max_mismatch = (ca.empty() && cb.empty()) ? 0.0 : 1.0;
  } else {
    r.max_mismatch = std::max(directed(ca, cb), directed(cb, ca));
  }
  if (ca.size() != cb.size()) {
    r.matched = false;
    r.note = fmt::format("different cardinalities: {} vs {}", ca.size(),
                         cb.size());
    return r;
  }
  r.matched = r.max_mismatch <= tol;
  if (!r.matched) {
    r.note = fmt::format("max mismatch {:.3g} exceeds {:.3g}", r.max_mismatch,
                         tol);
  }
  return r;
}

AbstractionReport check_abstraction(const MechanizedSCM& low,
                                    const MechanizedSCM& high,
                                    const AbstractionMaps& maps,
                                    const std::vector<Setting>& suite,
                                    const AbstractionOptions& opts) {
  AbstractionReport report;
  report.tol = opts.tol;
  report.sampled = !opts.low_solver.mode.exact || !opts.high_solver.mode.exact;
  report.entries.resize(suite.size());

  auto run_one = [&](std::size_t i) {
    AbstractionEntry& e = report.entries[i];
    e.low_intervention = suite[i];
    e.high_intervention =
        push_omega(low, high, maps.alignment, maps.omega, suite[i]);
    if (!e.high_intervention) {
      e.matched = false;
      e.max_mismatch = 1.0;
      e.note = "omega undefined on this intervention";
      return;
    }
    auto low_ds = solution_distributions(low, suite[i], opts.low_solver);
    for (auto& d : low_ds) {
      d = d.map([&](const Setting& s) {
        return push_tau(maps.alignment, maps.tau, s);
      });
    }
    e.low = dedup_distributions(std::move(low_ds));
    e.high = solution_distributions(high, *e.high_intervention,
                                    opts.high_solver);
    MatchResult m = match_distribution_sets(e.low, e.high, opts.tol);
    e.matched = m.matched;
    e.max_mismatch = m.max_mismatch;
    e.note = m.note;
    if (e.matched && !opts.keep_matched_distributions) {
      e.low.clear();
      e.high.clear();
    }
  };

  const unsigned threads = std::max(1u, opts.threads);
  if (threads == 1 || suite.size() < 2) {
    for (std::size_t i = 0; i < suite.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(suite.size());
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < suite.size();) {
          try {
            run_one(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& err : errors) {
      if (err) std::rethrow_exception(err);
    }
  }

  for (const auto& e : report.entries) {
    if (e.matched) ++report.matched;
  }
  report.verdict = report.matched == report.entries.size();
  return report;
}

namespace {

bool covered(const std::vector<Value>& sorted_images, const Value& v,
             double tol) {
  // Images sorted lexicographically; scan the band of matching first coords.
  Value lo = v;
  if (!lo.coords.empty()) lo.coords[0] -= tol;
  for (std::size_t i = 1; i < lo.size(); ++i) {
    lo.coords[i] = -std::numeric_limits<double>::infinity();
  }
  auto it = std::lower_bound(sorted_images.begin(), sorted_images.end(), lo);
  for (; it != sorted_images.end(); ++it) {
    if (!it->coords.empty() && !v.coords.empty() &&
        it->coords[0] > v.coords[0] + tol) {
      break;
    }
    if (approx_equal(*it, v, tol)) return true;
  }
  return false;
}

}  // namespace

StrongReport check_strong(const InterventionMapping& w,
                          const DeterministicSCM& high,
                          const StrongCheckMode& mode) {
  constexpr std::size_t kMaxGaps = 5;
  StrongReport report;
  std::mt19937_64 rng(mode.seed);
  for (const auto& [hm, pm] : w.omega) {
    const Domain& dom = high.domain(hm);
    StrongVariableReport vr;
    vr.variable = hm;

    std::vector<Value> images;
    if (pm.defined.enumerable()) {
      for (const auto& p : pm.defined.enumerate()) images.push_back(pm.fn(p));
    } else if (pm.defined.can_sample() && !mode.exhaustive) {
      for (std::size_t i = 0; i < std::max<std::size_t>(mode.samples, 1); ++i) {
        images.push_back(pm.fn(pm.defined.sample(rng)));
      }
    } else {
      throw Error(ErrorCode::non_finite_domain,
                  fmt::format("cannot enumerate dom(omega_{})", hm));
    }
    std::sort(images.begin(), images.end());

    std::vector<Value> targets;
    if (mode.exhaustive) {
      targets = dom.enumerate();  // throws NonFiniteDomain without a grid
    } else {
      for (std::size_t i = 0; i < mode.samples; ++i) targets.push_back(dom.sample(rng));
    }
    const double tol =
        dom.grid_step() > 0.0 && !mode.exhaustive ? dom.grid_step() / 2 : kValueTolerance;
    for (const auto& t : targets) {
      ++vr.checked;
      if (covered(images, t, tol)) {
        ++vr.covered;
      } else if (vr.gaps.size() < kMaxGaps) {
        vr.gaps.push_back(t);
      }
    }
    if (vr.covered != vr.checked) report.surjective = false;
    report.variables.push_back(std::move(vr));
  }
  return report;
}

Prop1Report prop1_preconditions(const MechanizedSCM& low,
                                const MechanizedSCM& high,
                                const AbstractionMaps& maps,
                                const std::string& high_target) {
  Prop1Report r;
  const auto& target_obj = high.obj_model().for_mechanism(high_target);

  // (i) tau restricted to the parents of the target object.
  std::vector<std::string> low_vars;
  for (const auto& p : target_obj.assignment.parents) {
    for (const auto& l : maps.alignment.collection(p)) low_vars.push_back(l);
  }
  Signature low_obj_sig;
  for (const auto& l : low_vars) {
    low_obj_sig.add(l, Layer::object, low.obj_model().at(l).domain);
  }
  std::vector<std::pair<Setting, Setting>> images;
  for (const auto& s : enumerate_product(low_obj_sig, low_vars)) {
    Setting img;
    for (const auto& p : target_obj.assignment.parents) {
      const auto& coll = maps.alignment.collection(p);
      img.set(p, maps.tau.tau.at(p)(project(s, VarSet(coll.begin(), coll.end()))));
    }
    images.emplace_back(std::move(img), s);
  }
  std::sort(images.begin(), images.end());
  r.tau_injective = true;
  for (std::size_t i = 1; i < images.size(); ++i) {
    if (approx_equal(images[i - 1].first, images[i].first) &&
        !approx_equal(images[i - 1].second, images[i].second)) {
      r.tau_injective = false;
      break;
    }
  }

  // (ii) independent mechanisms on the aligned low mechanism nodes.
  const auto collections = maps.alignment.mechanism_collections(low, high);
  r.independent_mechanisms = true;
  for (const auto& lm : collections.at(high_target)) {
    if (!has_independent_mechanism(low.mech_model(), lm)) {
      r.independent_mechanisms = false;
      r.dependent_nodes.push_back(lm);
    }
  }
  r.conclusion = r.tau_injective && r.independent_mechanisms;
  return r;
}

}  // namespace mechagency
