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

#include "mechagency/examples.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "mechagency/errors.hpp"

namespace mechagency {

using json = nlohmann::json;

std::vector<Setting> ModelPair::suite(std::size_t limit) const {
  return intervention_suite(*low, *high, maps.alignment, maps.omega, policy,
                            subsets, limit);
}

namespace {

Domain binary() { return Domain::finite({"0", "1"}); }

Domain payoff_values() {
  return Domain::finite_values({Value{0}, Value{1}, Value{2}});
}

Domain box2(double step) { return Domain::real_box({0, 0}, {1, 1}, step); }

MechanismAssignment constant(Value v) {
  return {{}, [v = std::move(v)](const Setting&) { return v; }};
}

WeightedValues bernoulli(double p1) { return {{Value{0}, 1.0 - p1}, {Value{1}, p1}}; }

std::size_t idx(double x) { return static_cast<std::size_t>(std::lround(x)); }

json value_json(const Value& v) {
  if (v.size() == 1) return v[0];
  return v.coords;
}

}  // namespace

json setting_json(const Setting& s) {
  json out = json::object();
  for (const auto& [k, v] : s) out[k] = value_json(v);
  return out;
}

// ---------------------------------------------------------------------------
// Battle of the sexes
// ---------------------------------------------------------------------------

namespace {

/// Best response of one player in mixed strategies. Own and opponent
/// tables are indexed (d1, d2) with 0 = opera.
MechanismAssignment bos_decision(bool first, const std::string& opp,
                                 const std::string& own_table,
                                 const std::string& opp_table,
                                 const Domain& dom) {
  const double window = dom.grid_step() > 0 ? dom.grid_step() / 2 : kTieTolerance;
  return {{opp, own_table, opp_table}, [=](const Setting& c) {
            const double q = c.at(opp).as_scalar();
            const Value& u = c.at(own_table);
            const Value& v = c.at(opp_table);
            auto at = [first](const Value& t, int own, int oth) {
              return first ? t[2 * own + oth] : t[2 * oth + own];
            };
            // Slope of own expected payoff in own probability of opera.
            const double a = at(u, 0, 0) - at(u, 1, 0) - at(u, 0, 1) + at(u, 1, 1);
            const double g = (at(u, 0, 1) - at(u, 1, 1)) + q * a;
            bool tie = std::abs(g) <= kTieTolerance;
            if (!tie && a != 0.0) {
              const double q0 = (at(u, 1, 1) - at(u, 0, 1)) / a;
              tie = std::abs(q - q0) <= window;
            }
            if (!tie) return Value{g > 0 ? 1.0 : 0.0};
            // Indifferent: play the mix that leaves the opponent indifferent.
            const double b = at(v, 0, 0) - at(v, 0, 1) - at(v, 1, 0) + at(v, 1, 1);
            if (b == 0.0) return Value{1.0};
            const double p = (at(v, 1, 1) - at(v, 1, 0)) / b;
            if (p < 0.0 || p > 1.0) return Value{g >= 0 ? 1.0 : 0.0};
            return dom.snap(Value{p});
          }};
}

ObjectVariable bos_decision_object(const std::string& name) {
  ObjectVariable v;
  v.name = name;
  v.mechanism = name + "~";
  v.noise = "E" + name;
  v.domain = Domain::finite({"O", "F"});
  v.noise_dist = NoiseDistribution::uniform01();
  v.assignment.structural = [](const Value& theta, const Setting&, const Value& e) {
    return Value{e[0] <= theta[0] ? bos::kOpera : bos::kFootball};
  };
  v.assignment.kernel = [](const Value& theta, const Setting&) {
    return WeightedValues{{Value{bos::kOpera}, theta[0]},
                          {Value{bos::kFootball}, 1.0 - theta[0]}};
  };
  return v;
}

ObjectVariable bos_payoff_object(const std::string& name) {
  ObjectVariable v;
  v.name = name;
  v.mechanism = name + "~";
  v.noise = "E" + name;
  v.domain = payoff_values();
  v.noise_dist = NoiseDistribution::singleton();
  v.assignment.parents = {"D1", "D2"};
  v.assignment.structural = [](const Value& theta, const Setting& pa, const Value&) {
    return Value{theta[2 * idx(pa.at("D1")[0]) + idx(pa.at("D2")[0])]};
  };
  return v;
}

}  // namespace

MechanizedSCM battle_of_sexes(double grid_step) {
  auto obj = std::make_shared<ParameterizedSCM>();
  obj->add(bos_decision_object("D1"));
  obj->add(bos_decision_object("D2"));
  obj->add(bos_payoff_object("U1"));
  obj->add(bos_payoff_object("U2"));

  const Domain d = grid_step > 0 ? Domain::unit_interval(grid_step)
                                 : Domain::real_box({0}, {1});
  const Domain table = Domain::function_table(4, {0, 1, 2});
  DeterministicSCM mech;
  mech.add_variable("D1~", d);
  mech.add_variable("D2~", d);
  mech.add_variable("U1~", table);
  mech.add_variable("U2~", table);
  mech.assign("U1~", constant(bos::kPayoff1));
  mech.assign("U2~", constant(bos::kPayoff2));
  mech.assign("D1~", bos_decision(true, "D2~", "U1~", "U2~", d));
  mech.assign("D2~", bos_decision(false, "D1~", "U2~", "U1~", d));
  mech.register_analytic_solutions(
      [](const Setting& y) -> std::optional<std::vector<Setting>> {
        if (!y.empty()) return std::nullopt;
        std::vector<Setting> out;
        for (auto [p, q] : {std::pair{1.0, 1.0}, {0.0, 0.0}, {2.0 / 3.0, 1.0 / 3.0}}) {
          out.push_back(Setting{{"D1~", Value{p}},
                                {"D2~", Value{q}},
                                {"U1~", bos::kPayoff1},
                                {"U2~", bos::kPayoff2}});
        }
        return out;
      });
  return MechanizedSCM(std::move(mech), std::move(obj));
}

std::vector<Setting> battle_of_sexes_grid_solutions(const MechanizedSCM& m) {
  EnumerateOptions opts;
  opts.use_analytic = false;
  return solve_enumerate(m.mech_model(), {}, opts);
}

// ---------------------------------------------------------------------------
// Actor-critic
// ---------------------------------------------------------------------------

namespace {

ObjectVariable object(std::string name, std::string mechanism, Domain dom,
                      std::vector<std::string> parents) {
  ObjectVariable v;
  v.mechanism = std::move(mechanism);
  v.noise = "E" + name;
  v.name = std::move(name);
  v.domain = std::move(dom);
  v.noise_dist = NoiseDistribution::singleton();
  v.assignment.parents = std::move(parents);
  return v;
}

/// A := theta; S ~ Bern(s[A]); R ~ Bern(r[S]), the part shared by both
/// levels.
void add_action_state_reward(ParameterizedSCM& obj, const std::string& a,
                             const std::string& s, const std::string& r,
                             const std::string& suffix) {
  auto act = object(a, a + suffix, binary(), {});
  act.assignment.structural = [](const Value& th, const Setting&, const Value&) {
    return th;
  };
  obj.add(std::move(act));

  auto st = object(s, s + suffix, binary(), {a});
  st.assignment.kernel = [a](const Value& th, const Setting& pa) {
    return bernoulli(th[idx(pa.at(a)[0])]);
  };
  obj.add(std::move(st));

  auto rw = object(r, r + suffix, binary(), {s});
  rw.assignment.kernel = [s](const Value& th, const Setting& pa) {
    return bernoulli(th[idx(pa.at(s)[0])]);
  };
  obj.add(std::move(rw));
}

}  // namespace

ModelPair actor_critic_pair(const ActorCriticOptions& opts) {
  const Domain grid = box2(opts.grid_step);

  auto low_obj = std::make_shared<ParameterizedSCM>();
  add_action_state_reward(*low_obj, "A", "S", "R", "~");
  {
    auto q = object("Q", "Q~", box2(0.0), {});
    q.assignment.structural = [](const Value& th, const Setting&, const Value&) {
      return th;
    };
    low_obj->add(std::move(q));
    auto y = object("Y", "Y~", Domain::real_box({0}, {1}), {"Q", "A"});
    y.assignment.structural = [](const Value&, const Setting& pa, const Value&) {
      return Value{pa.at("Q")[idx(pa.at("A")[0])]};
    };
    low_obj->add(std::move(y));
    auto w = object("W", "W~", Domain::real_box({-1}, {0}), {"R", "Y"});
    w.assignment.structural = [](const Value&, const Setting& pa, const Value&) {
      const double d = pa.at("R")[0] - pa.at("Y")[0];
      return Value{-d * d};
    };
    low_obj->add(std::move(w));
  }

  DeterministicSCM low_mech;
  low_mech.add_variable("R~", grid);
  low_mech.add_variable("W~", Domain::finite_values({Value{1}}));
  low_mech.add_variable("Y~", Domain::finite_values({Value{1}}));
  low_mech.add_variable("S~", grid);
  low_mech.add_variable("Q~", box2(0.0));
  low_mech.add_variable("A~", binary());
  low_mech.assign("R~", constant(opts.r));
  low_mech.assign("W~", constant(Value{1}));
  low_mech.assign("Y~", constant(Value{1}));
  low_mech.assign("S~", constant(opts.s));
  low_mech.assign("Q~", {{"R~", "S~"}, [](const Setting& c) {
                           const Value& r = c.at("R~");
                           const Value& s = c.at("S~");
                           return Value{r[0] * (1 - s[0]) + r[1] * s[0],
                                        r[0] * (1 - s[1]) + r[1] * s[1]};
                         }});
  low_mech.assign("A~", {{"Q~"}, [](const Setting& c) {
                           const Value& q = c.at("Q~");
                           return Value{q[0] <= q[1] ? 1.0 : 0.0};
                         }});

  auto high_obj = std::make_shared<ParameterizedSCM>();
  add_action_state_reward(*high_obj, "A*", "S*", "R*", "~");

  DeterministicSCM high_mech;
  high_mech.add_variable("R*~", grid);
  high_mech.add_variable("S*~", grid);
  high_mech.add_variable("A*~", binary());
  high_mech.assign("R*~", constant(opts.r));
  high_mech.assign("S*~", constant(opts.s));
  high_mech.assign("A*~", {{"R*~", "S*~"}, [](const Setting& c) {
                            const Value& r = c.at("R*~");
                            const Value& s = c.at("S*~");
                            const double v0 = s[0] * r[1] + (1 - s[0]) * r[0];
                            const double v1 = s[1] * r[1] + (1 - s[1]) * r[0];
                            return Value{v0 <= v1 ? 1.0 : 0.0};
                          }});

  ModelPair p;
  p.low = std::make_shared<MechanizedSCM>(std::move(low_mech), low_obj);
  p.high = std::make_shared<MechanizedSCM>(std::move(high_mech), high_obj);
  p.maps.alignment = Alignment({{"A*", {"A"}}, {"S*", {"S"}}, {"R*", {"R"}}});
  p.maps.tau = ValueMapping::identity(p.maps.alignment);
  p.maps.omega = InterventionMapping::identity(*p.low, p.maps.alignment, *p.high);
  p.policy = SubsetPolicy::explicit_list;
  p.subsets = {{"S*~", "R*~"}};
  return p;
}

// ---------------------------------------------------------------------------
// Shared utility
// ---------------------------------------------------------------------------

namespace {

bool unique_argmax(const Value& table) {
  const double m = *std::max_element(table.coords.begin(), table.coords.end());
  return std::count(table.coords.begin(), table.coords.end(), m) == 1;
}

MechanismAssignment first_of(std::vector<std::string> deps,
                             std::function<std::vector<Value>(const Setting&)> f) {
  return {std::move(deps), [f = std::move(f)](const Setting& c) {
            auto r = f(c);
            if (r.empty()) {
              throw Error(ErrorCode::empty_response_set, "no response");
            }
            return r.front();
          }};
}

}  // namespace

ModelPair shared_utility_pair(SharedRationality rationality, const Value& default_u) {
  const Domain table = Domain::function_table(4, {0, 1, 2});

  auto low_obj = std::make_shared<ParameterizedSCM>();
  for (const char* d : {"D1", "D2"}) {
    auto v = object(d, std::string(d) + "~", binary(), {});
    v.assignment.structural = [](const Value& th, const Setting&, const Value&) {
      return th;
    };
    low_obj->add(std::move(v));
  }
  {
    auto u = object("U", "U~", payoff_values(), {"D1", "D2"});
    u.assignment.structural = [](const Value& th, const Setting& pa, const Value&) {
      return Value{th[2 * idx(pa.at("D1")[0]) + idx(pa.at("D2")[0])]};
    };
    low_obj->add(std::move(u));
  }

  Signature low_sig;
  low_sig.add("D1~", Layer::mechanism, binary());
  low_sig.add("D2~", Layer::mechanism, binary());
  low_sig.add("U~", Layer::mechanism, table);
  DeterministicSCM low_mech(low_sig);
  low_mech.assign("U~", constant(default_u));
  const UtilityFn u = UtilityFn::of_variable("U");
  for (auto [self, other] : {std::pair{"D1~", "D2~"}, {"D2~", "D1~"}}) {
    const std::string target = self;
    if (rationality == SharedRationality::best_response) {
      low_mech.assign(target, first_of({other, "U~"}, [=](const Setting& c) {
                        return best_response_set(*low_obj, target, binary(), c, u);
                      }));
    } else {
      BeliefModel belief{{other}, {u}};
      low_mech.assign(target, first_of({other, "U~"}, [=](const Setting& c) {
                        return first_mover_response(*low_obj, low_sig, target,
                                                    belief, u, c);
                      }));
    }
  }

  std::vector<Value> joint{Value{0, 0}, Value{0, 1}, Value{1, 0}, Value{1, 1}};
  const Domain joint_dom = Domain::finite_values(joint, {"00", "01", "10", "11"});
  std::vector<Value> generic;
  for (const auto& t : table.enumerate()) {
    if (unique_argmax(t)) generic.push_back(t);
  }
  const Domain high_table = Domain::finite_values(generic);

  auto high_obj = std::make_shared<ParameterizedSCM>();
  {
    auto d = object("D*", "D*~", joint_dom, {});
    d.assignment.structural = [](const Value& th, const Setting&, const Value&) {
      return th;
    };
    high_obj->add(std::move(d));
    auto uh = object("U*", "U*~", payoff_values(), {"D*"});
    uh.assignment.structural = [](const Value& th, const Setting& pa, const Value&) {
      const Value& dv = pa.at("D*");
      return Value{th[2 * idx(dv[0]) + idx(dv[1])]};
    };
    high_obj->add(std::move(uh));
  }
  DeterministicSCM high_mech;
  high_mech.add_variable("D*~", joint_dom);
  high_mech.add_variable("U*~", high_table);
  high_mech.assign("U*~", constant(default_u));
  const UtilityFn uh = UtilityFn::of_variable("U*");
  high_mech.assign("D*~", first_of({"U*~"}, [=](const Setting& c) {
                     return best_response_set(*high_obj, "D*~", joint_dom, c, uh);
                   }));

  ModelPair p;
  p.low = std::make_shared<MechanizedSCM>(std::move(low_mech), low_obj);
  p.high = std::make_shared<MechanizedSCM>(std::move(high_mech), high_obj);
  p.maps.alignment = Alignment({{"D*", {"D1", "D2"}}, {"U*", {"U"}}});
  p.maps.tau = ValueMapping::identity(p.maps.alignment);
  p.maps.omega = InterventionMapping::identity(*p.low, p.maps.alignment, *p.high);
  p.maps.omega.omega.at("U*~").defined = DefinedDomain::product(
      p.low->mech_model(), {"U~"},
      [](const Setting& s) { return unique_argmax(s.at("U~")); });
  p.policy = SubsetPolicy::all;
  return p;
}

// ---------------------------------------------------------------------------
// Random models for the no-emergence property
// ---------------------------------------------------------------------------

namespace {

struct FuzzSpec {
  std::size_t n = 0;
  std::vector<std::size_t> dom;       // object domain sizes
  std::vector<std::size_t> mech_dom;  // mechanism domain sizes
  std::vector<std::vector<std::size_t>> parents;
  // cpt[i][k][config] -> distribution over dom[i]
  std::vector<std::vector<std::vector<std::vector<double>>>> cpt;
  std::vector<std::vector<std::size_t>> mech_deps;
  std::vector<std::vector<std::size_t>> mech_table;  // indexed by dep config
  std::vector<std::pair<std::size_t, std::size_t>> groups;  // [begin, end)
  std::size_t target_group = 0;
};

std::string xname(std::size_t i) { return fmt::format("X{}", i); }
std::string mname(std::size_t i) { return fmt::format("X{}~", i); }
std::string gname(std::size_t g) { return fmt::format("G{}", g); }
std::string gmname(std::size_t g) { return fmt::format("G{}~", g); }

std::size_t mixed_radix(const std::vector<std::size_t>& digits,
                        const std::vector<std::size_t>& radix) {
  std::size_t k = 0;
  for (std::size_t i = 0; i < digits.size(); ++i) k = k * radix[i] + digits[i];
  return k;
}

std::size_t product_of(const std::vector<std::size_t>& v) {
  return std::accumulate(v.begin(), v.end(), std::size_t{1}, std::multiplies<>());
}

std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t k) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(k);
  if (u(rng) < 0.25) {  // deterministic row
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    p[pick(rng)] = 1.0;
    return p;
  }
  double total = 0;
  for (auto& x : p) total += (x = u(rng) + 0.05);
  for (auto& x : p) x /= total;
  return p;
}

std::size_t group_of(const FuzzSpec& s, std::size_t i) {
  for (std::size_t g = 0; g < s.groups.size(); ++g) {
    if (i >= s.groups[g].first && i < s.groups[g].second) return g;
  }
  throw Error(ErrorCode::invalid_argument, "variable outside every group");
}

FuzzSpec random_spec(std::mt19937_64& rng, const FuzzOptions& o) {
  FuzzSpec s;
  auto uint = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  std::bernoulli_distribution coin(0.5);
  s.n = uint(2, std::max<std::size_t>(2, o.max_objects));
  s.dom.resize(s.n);
  s.mech_dom.resize(s.n);
  s.parents.resize(s.n);
  s.cpt.resize(s.n);
  for (std::size_t i = 0; i < s.n; ++i) {
    s.dom[i] = uint(2, std::max<std::size_t>(2, o.max_domain));
    s.mech_dom[i] = uint(2, std::max<std::size_t>(2, o.max_mechanism_values));
    for (std::size_t j = 0; j < i; ++j) {
      if (coin(rng)) s.parents[i].push_back(j);
    }
    std::vector<std::size_t> radix;
    for (auto p : s.parents[i]) radix.push_back(s.dom[p]);
    const std::size_t configs = product_of(radix);
    s.cpt[i].resize(s.mech_dom[i]);
    for (auto& rows : s.cpt[i]) {
      for (std::size_t c = 0; c < configs; ++c) rows.push_back(random_simplex(rng, s.dom[i]));
    }
  }

  std::size_t begin = 0;
  for (std::size_t i = 1; i <= s.n; ++i) {
    if (i == s.n || coin(rng)) {
      s.groups.emplace_back(begin, i);
      begin = i;
    }
  }
  s.target_group = uint(0, s.groups.size() - 1);
  const auto [tb, te] = s.groups[s.target_group];

  s.mech_deps.resize(s.n);
  s.mech_table.resize(s.n);
  std::bernoulli_distribution depend(0.4);
  for (std::size_t i = 0; i < s.n; ++i) {
    const bool in_target = i >= tb && i < te;
    // Dependencies stay outside the own group so group mechanisms never
    // read themselves.
    auto outside = [&](std::size_t j) { return group_of(s, j) != group_of(s, i); };
    if (!in_target || !o.independent_target) {
      for (std::size_t j = 0; j < s.n && s.mech_deps[i].size() < 2; ++j) {
        if (outside(j) && depend(rng)) s.mech_deps[i].push_back(j);
      }
      for (std::size_t j = 0; in_target && s.mech_deps[i].empty() && j < s.n; ++j) {
        if (outside(j)) s.mech_deps[i].push_back(j);
      }
    }
    std::vector<std::size_t> radix;
    for (auto d : s.mech_deps[i]) radix.push_back(s.mech_dom[d]);
    for (std::size_t c = 0; c < product_of(radix); ++c) {
      s.mech_table[i].push_back(uint(0, s.mech_dom[i] - 1));
    }
  }
  return s;
}

Domain index_domain(std::size_t k, const std::string& prefix) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < k; ++i) labels.push_back(fmt::format("{}{}", prefix, i));
  return Domain::finite(labels);
}

/// All tuples of the given radices, last fastest.
std::vector<Value> tuples(const std::vector<std::size_t>& radix) {
  std::vector<Value> out{Value{}};
  for (auto r : radix) {
    std::vector<Value> next;
    for (const auto& t : out) {
      for (std::size_t k = 0; k < r; ++k) {
        Value v = t;
        v.coords.push_back(static_cast<double>(k));
        next.push_back(std::move(v));
      }
    }
    out = std::move(next);
  }
  return out;
}

std::size_t low_mech_value(const FuzzSpec& s, std::size_t i,
                           const std::vector<std::size_t>& mech_values) {
  std::vector<std::size_t> digits, radix;
  for (auto d : s.mech_deps[i]) {
    digits.push_back(mech_values[d]);
    radix.push_back(s.mech_dom[d]);
  }
  return s.mech_table[i][mixed_radix(digits, radix)];
}

double cpt_prob(const FuzzSpec& s, std::size_t i, std::size_t theta,
                const std::vector<std::size_t>& obj_values, std::size_t x) {
  std::vector<std::size_t> digits, radix;
  for (auto p : s.parents[i]) {
    digits.push_back(obj_values[p]);
    radix.push_back(s.dom[p]);
  }
  return s.cpt[i][theta][mixed_radix(digits, radix)][x];
}

std::shared_ptr<MechanizedSCM> fuzz_low(std::shared_ptr<const FuzzSpec> sp) {
  const FuzzSpec& s = *sp;
  auto obj = std::make_shared<ParameterizedSCM>();
  for (std::size_t i = 0; i < s.n; ++i) {
    ObjectVariable v;
    v.name = xname(i);
    v.mechanism = mname(i);
    v.noise = "E" + v.name;
    v.domain = index_domain(s.dom[i], "x");
    v.noise_dist = NoiseDistribution::singleton();
    for (auto p : s.parents[i]) v.assignment.parents.push_back(xname(p));
    v.assignment.kernel = [sp, i](const Value& th, const Setting& pa) {
      std::vector<std::size_t> vals(sp->n, 0);
      for (auto p : sp->parents[i]) vals[p] = idx(pa.at(xname(p))[0]);
      WeightedValues out;
      for (std::size_t x = 0; x < sp->dom[i]; ++x) {
        out.emplace_back(Value{static_cast<double>(x)},
                         cpt_prob(*sp, i, idx(th[0]), vals, x));
      }
      return out;
    };
    obj->add(std::move(v));
  }
  DeterministicSCM mech;
  for (std::size_t i = 0; i < s.n; ++i) mech.add_variable(mname(i), index_domain(s.mech_dom[i], "k"));
  for (std::size_t i = 0; i < s.n; ++i) {
    MechanismAssignment a;
    for (auto d : s.mech_deps[i]) a.depends_on.push_back(mname(d));
    a.fn = [sp, i](const Setting& c) {
      std::vector<std::size_t> vals(sp->n, 0);
      for (auto d : sp->mech_deps[i]) vals[d] = idx(c.at(mname(d))[0]);
      return Value{static_cast<double>(low_mech_value(*sp, i, vals))};
    };
    mech.assign(mname(i), std::move(a));
  }
  return std::make_shared<MechanizedSCM>(std::move(mech), std::move(obj));
}

std::shared_ptr<MechanizedSCM> fuzz_high(std::shared_ptr<const FuzzSpec> sp) {
  const FuzzSpec& s = *sp;
  auto obj = std::make_shared<ParameterizedSCM>();
  DeterministicSCM mech;
  for (std::size_t g = 0; g < s.groups.size(); ++g) {
    const auto [b, e] = s.groups[g];
    std::vector<std::size_t> obj_radix(s.dom.begin() + b, s.dom.begin() + e);
    std::vector<std::size_t> mech_radix(s.mech_dom.begin() + b, s.mech_dom.begin() + e);

    std::set<std::size_t> parent_groups;
    for (std::size_t i = b; i < e; ++i) {
      for (auto p : s.parents[i]) {
        if (p < b) parent_groups.insert(group_of(s, p));
      }
    }
    ObjectVariable v;
    v.name = gname(g);
    v.mechanism = gmname(g);
    v.noise = "E" + v.name;
    v.domain = Domain::finite_values(tuples(obj_radix));
    v.noise_dist = NoiseDistribution::singleton();
    for (auto pg : parent_groups) v.assignment.parents.push_back(gname(pg));
    const auto candidates = tuples(obj_radix);
    v.assignment.kernel = [sp, b, e, candidates](const Value& th, const Setting& pa) {
      std::vector<std::size_t> vals(sp->n, 0);
      for (const auto& [name, value] : pa) {
        const std::size_t pg = std::stoul(name.substr(1));
        const auto [pb, pe] = sp->groups[pg];
        for (std::size_t i = pb; i < pe; ++i) vals[i] = idx(value[i - pb]);
      }
      WeightedValues out;
      for (const auto& t : candidates) {
        double p = 1.0;
        for (std::size_t i = b; i < e && p > 0.0; ++i) {
          vals[i] = idx(t[i - b]);
          p *= cpt_prob(*sp, i, idx(th[i - b]), vals, vals[i]);
        }
        out.emplace_back(t, p);
      }
      return out;
    };
    obj->add(std::move(v));
    mech.add_variable(gmname(g), Domain::finite_values(tuples(mech_radix)));
  }

  for (std::size_t g = 0; g < s.groups.size(); ++g) {
    const auto [b, e] = s.groups[g];
    std::set<std::size_t> dep_groups;
    for (std::size_t i = b; i < e; ++i) {
      for (auto d : s.mech_deps[i]) dep_groups.insert(group_of(s, d));
    }
    MechanismAssignment a;
    for (auto dg : dep_groups) a.depends_on.push_back(gmname(dg));
    a.fn = [sp, b, e](const Setting& c) {
      std::vector<std::size_t> vals(sp->n, 0);
      for (const auto& [name, value] : c) {
        const std::size_t dg = std::stoul(name.substr(1));
        const auto [db, de] = sp->groups[dg];
        for (std::size_t i = db; i < de; ++i) vals[i] = idx(value[i - db]);
      }
      Value out;
      for (std::size_t i = b; i < e; ++i) {
        out.coords.push_back(static_cast<double>(low_mech_value(*sp, i, vals)));
      }
      return out;
    };
    mech.assign(gmname(g), std::move(a));
  }
  return std::make_shared<MechanizedSCM>(std::move(mech), std::move(obj));
}

}  // namespace

FuzzCase random_prop1_case(std::mt19937_64& rng, const FuzzOptions& opts) {
  auto sp = std::make_shared<const FuzzSpec>(random_spec(rng, opts));
  FuzzCase c;
  c.pair.low = fuzz_low(sp);
  c.pair.high = fuzz_high(sp);
  Alignment::Map am;
  for (std::size_t g = 0; g < sp->groups.size(); ++g) {
    for (std::size_t i = sp->groups[g].first; i < sp->groups[g].second; ++i) {
      am[gname(g)].push_back(xname(i));
    }
  }
  c.pair.maps.alignment = Alignment(std::move(am));
  c.pair.maps.tau = ValueMapping::identity(c.pair.maps.alignment);
  c.pair.maps.omega =
      InterventionMapping::identity(*c.pair.low, c.pair.maps.alignment, *c.pair.high);
  c.pair.policy = SubsetPolicy::explicit_list;
  std::vector<std::string> mechs;
  for (std::size_t g = 0; g < sp->groups.size(); ++g) mechs.push_back(gmname(g));
  c.pair.subsets.push_back({});
  for (std::size_t i = 0; i < mechs.size(); ++i) {
    c.pair.subsets.push_back({mechs[i]});
    for (std::size_t j = i + 1; j < mechs.size(); ++j) {
      c.pair.subsets.push_back({mechs[i], mechs[j]});
    }
  }
  c.high_target = gmname(sp->target_group);

  c.utilities.push_back(UtilityFn::constant(0.0));
  for (std::size_t g = 0; g < sp->groups.size(); ++g) {
    c.utilities.push_back(UtilityFn::of_coordinate(gname(g), 0));
  }
  // A random linear utility over every high coordinate.
  std::uniform_real_distribution<double> w(-1.0, 1.0);
  std::vector<std::pair<std::string, std::vector<double>>> weights;
  for (std::size_t g = 0; g < sp->groups.size(); ++g) {
    std::vector<double> ws;
    for (std::size_t i = sp->groups[g].first; i < sp->groups[g].second; ++i) ws.push_back(w(rng));
    weights.emplace_back(gname(g), std::move(ws));
  }
  UtilityFn lin;
  lin.name = "linear";
  for (const auto& [n, ws] : weights) lin.depends_on.push_back(n);
  lin.evaluate = [weights](const Setting& s) {
    double total = 0;
    for (const auto& [n, ws] : weights) {
      const Value& v = s.at(n);
      for (std::size_t i = 0; i < ws.size(); ++i) total += ws[i] * v[i];
    }
    return total;
  };
  c.utilities.push_back(std::move(lin));
  return c;
}

FuzzOutcome evaluate_prop1_case(const FuzzCase& c) {
  FuzzOutcome out;
  const auto& low = *c.pair.low;
  const auto& high = *c.pair.high;
  out.abstraction = check_abstraction(low, high, c.pair.maps, c.pair.suite()).verdict;
  out.strong = check_strong(c.pair.maps.omega, high.mech_model()).surjective;
  out.preconditions =
      prop1_preconditions(low, high, c.pair.maps, c.high_target).conclusion;

  const auto contexts = all_contexts(high.mech_model(), c.high_target);
  for (const auto& u : c.utilities) {
    auto r = is_nontrivial_agent(high, c.high_target,
                                 RationalityRelation::best_response(), u, contexts);
    if (r.agent.holds) ++out.agent_utilities;
    out.nontrivial = out.nontrivial || r.holds;
  }
  // Accepting exactly what the mechanism does makes every node an agent, so
  // only the conditional comparison remains.
  auto permissive = RationalityRelation::custom(
      [](const MechanizedSCM& m, const std::string& t, const Setting& ctx,
         const UtilityFn&) {
        return std::vector<Value>{m.mech_model().evaluate(t, ctx)};
      });
  out.nontrivial =
      out.nontrivial ||
      is_nontrivial_agent(high, c.high_target, permissive, c.utilities.front(), contexts)
          .holds;
  return out;
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

namespace {

double grid_or(const RegistryOptions& o, double fallback) {
  return o.grid_step >= 0 ? o.grid_step : fallback;
}

ActorCriticOptions ac_options(const RegistryOptions& o) {
  ActorCriticOptions a;
  a.grid_step = grid_or(o, a.grid_step);
  return a;
}

}  // namespace

std::vector<std::string> model_names() {
  return {"battle-of-sexes",       "actor-critic-low",      "actor-critic-high",
          "shared-utility-br-low", "shared-utility-fm-low", "shared-utility-high"};
}

std::shared_ptr<const MechanizedSCM> make_model(const std::string& name,
                                                const RegistryOptions& opts) {
  if (name == "battle-of-sexes") {
    return std::make_shared<MechanizedSCM>(battle_of_sexes(grid_or(opts, 0.01)));
  }
  if (name == "actor-critic-low") return actor_critic_pair(ac_options(opts)).low;
  if (name == "actor-critic-high") return actor_critic_pair(ac_options(opts)).high;
  if (name == "shared-utility-br-low") {
    return shared_utility_pair(SharedRationality::best_response).low;
  }
  if (name == "shared-utility-fm-low") {
    return shared_utility_pair(SharedRationality::first_mover).low;
  }
  if (name == "shared-utility-high") {
    return shared_utility_pair(SharedRationality::best_response).high;
  }
  throw Error(ErrorCode::unknown_example, fmt::format("unknown model '{}'", name));
}

std::optional<ModelPair> make_pair(const std::string& low, const std::string& high,
                                   const RegistryOptions& opts) {
  if (low == "actor-critic-low" && high == "actor-critic-high") {
    return actor_critic_pair(ac_options(opts));
  }
  if (high == "shared-utility-high") {
    if (low == "shared-utility-br-low") {
      return shared_utility_pair(SharedRationality::best_response);
    }
    if (low == "shared-utility-fm-low") {
      return shared_utility_pair(SharedRationality::first_mover);
    }
  }
  if (low != high) return std::nullopt;
  ModelPair p;
  p.low = make_model(low, opts);
  p.high = make_model(high, opts);
  p.maps.alignment = Alignment::identity(p.low->obj_model());
  p.maps.tau = ValueMapping::identity(p.maps.alignment);
  p.maps.omega = InterventionMapping::identity(*p.low, p.maps.alignment, *p.high);
  p.policy = SubsetPolicy::explicit_list;
  p.subsets.push_back({});
  for (const auto& [hm, pm] : p.maps.omega.omega) p.subsets.push_back({hm});
  return p;
}

std::vector<std::string> example_names() {
  return {"battle-of-sexes", "actor-critic", "shared-utility", "prop1-fuzz"};
}

json to_json(const AbstractionReport& r, std::size_t max_failures) {
  json out;
  out["verdict"] = r.verdict;
  out["checked"] = r.entries.size();
  out["matched"] = r.matched;
  out["tol"] = r.tol;
  out["sampled"] = r.sampled;
  double worst = 0.0;
  json failures = json::array();
  for (const auto& e : r.entries) {
    worst = std::max(worst, e.max_mismatch);
    if (e.matched || failures.size() >= max_failures) continue;
    json f;
    f["low_intervention"] = setting_json(e.low_intervention);
    f["high_intervention"] =
        e.high_intervention ? setting_json(*e.high_intervention) : json(nullptr);
    f["low_distributions"] = e.low.size();
    f["high_distributions"] = e.high.size();
    f["max_mismatch"] = e.max_mismatch;
    f["note"] = e.note;
    failures.push_back(std::move(f));
  }
  out["max_mismatch"] = worst;
  out["failures"] = std::move(failures);
  return out;
}

namespace {

json strong_json(const StrongReport& s) {
  json out;
  out["surjective"] = s.surjective;
  json vars = json::array();
  for (const auto& v : s.variables) {
    json gaps = json::array();
    for (const auto& g : v.gaps) gaps.push_back(value_json(g));
    vars.push_back({{"variable", v.variable},
                    {"checked", v.checked},
                    {"covered", v.covered},
                    {"coverage", v.coverage()},
                    {"gaps", gaps}});
  }
  out["variables"] = std::move(vars);
  return out;
}

json run_battle_of_sexes(const RegistryOptions& o) {
  const double step = grid_or(o, 0.01);
  const MechanizedSCM m = battle_of_sexes(step);
  const auto sols = solve_enumerate(m.mech_model(), {});
  const UtilityFn u1 = UtilityFn::of_variable("U1");
  const UtilityFn u2 = UtilityFn::of_variable("U2");

  json out;
  out["example"] = "battle-of-sexes";
  out["grid_step"] = step;
  json list = json::array();
  bool all_nash = true;
  for (const auto& s : sols) {
    const double e1 = expected_utility(m, s, u1);
    const double e2 = expected_utility(m, s, u2);
    // Expected payoffs are bilinear, so pure deviations suffice.
    bool nash = true;
    for (auto [var, u, e] : {std::tuple{"D1~", &u1, e1}, {"D2~", &u2, e2}}) {
      for (double dev : {0.0, 1.0}) {
        Setting d = s;
        d.set(var, Value{dev});
        nash = nash && expected_utility(m, d, *u) <= e + kTieTolerance;
      }
    }
    all_nash = all_nash && nash;
    const double p_oo = distribution(induce_scm(m, s)).probability([](const Setting& v) {
      return v.at("D1")[0] == bos::kOpera && v.at("D2")[0] == bos::kOpera;
    });
    list.push_back({{"D1~", s.at("D1~")[0]},
                    {"D2~", s.at("D2~")[0]},
                    {"expected_payoffs", {e1, e2}},
                    {"p_opera_opera", p_oo},
                    {"nash", nash}});
  }
  out["solutions"] = list;
  out["count"] = sols.size();
  out["all_nash"] = all_nash;

  json grid = json::object();
  if (step > 0) {
    const auto gs = battle_of_sexes_grid_solutions(m);
    auto near = [&](const Setting& a, const std::vector<Setting>& set) {
      return std::any_of(set.begin(), set.end(), [&](const Setting& b) {
        return std::abs(a.at("D1~")[0] - b.at("D1~")[0]) <= step + 1e-12 &&
               std::abs(a.at("D2~")[0] - b.at("D2~")[0]) <= step + 1e-12;
      });
    };
    bool agree = gs.size() == sols.size();
    for (const auto& s : sols) agree = agree && near(s, gs);
    for (const auto& g : gs) agree = agree && near(g, sols);
    json gl = json::array();
    for (const auto& g : gs) gl.push_back({g.at("D1~")[0], g.at("D2~")[0]});
    grid = {{"solutions", gl}, {"agrees", agree}};
    out["grid_cross_check"] = grid;
    out["verdict"] = sols.size() == 3 && all_nash && agree;
  } else {
    out["verdict"] = sols.size() == 3 && all_nash;
  }
  return out;
}

json run_actor_critic(const RegistryOptions& o) {
  const ModelPair p = actor_critic_pair(ac_options(o));
  json out;
  out["example"] = "actor-critic";
  out["grid_step"] = grid_or(o, 0.1);

  const auto low_sols = solve_enumerate(p.low->mech_model(), {});
  const auto high_sols = solve_enumerate(p.high->mech_model(), {});
  if (low_sols.size() == 1 && high_sols.size() == 1) {
    out["default_solution"] = {
        {"Q~", low_sols[0].at("Q~").coords},
        {"A~", low_sols[0].at("A~")[0]},
        {"A*~", high_sols[0].at("A*~")[0]}};
  }

  AbstractionOptions ao;
  ao.threads = o.threads;
  const auto report = check_abstraction(*p.low, *p.high, p.maps, p.suite(), ao);
  out["abstraction"] = to_json(report);
  const auto strong = check_strong(p.maps.omega, p.high->mech_model());
  out["strong"] = strong_json(strong);

  const auto contexts = all_contexts(p.high->mech_model(), "A*~");
  const auto agent = is_agent(*p.high, "A*~", RationalityRelation::best_response(),
                              UtilityFn::of_variable("R*"), contexts);
  out["agent"] = {{"target", "A*~"},
                  {"utility", "R*"},
                  {"holds", agent.holds},
                  {"contexts", agent.contexts_checked},
                  {"counterexample", agent.counterexample
                                         ? setting_json(*agent.counterexample)
                                         : json(nullptr)}};
  out["verdict"] = report.verdict && strong.surjective && agent.holds;
  return out;
}

json run_shared_utility(const RegistryOptions& o) {
  json out;
  out["example"] = "shared-utility";
  out["u"] = kSharedUtilityTable.coords;
  bool verdict = true;
  for (auto r : {SharedRationality::best_response, SharedRationality::first_mover}) {
    const ModelPair p = shared_utility_pair(r);
    const std::string key = r == SharedRationality::best_response ? "best_response"
                                                                  : "first_mover";
    AbstractionOptions ao;
    ao.threads = o.threads;
    ao.keep_matched_distributions = true;
    const Setting y{{"U~", kSharedUtilityTable}};
    const auto at_u = check_abstraction(*p.low, *p.high, p.maps, {y}, ao);
    const auto& e = at_u.entries.front();
    const auto suite = check_abstraction(*p.low, *p.high, p.maps, p.suite(), ao);
    const auto strong = check_strong(p.maps.omega, p.high->mech_model());
    out[key] = {{"at_u",
                 {{"matched", e.matched},
                  {"low_distributions", e.low.size()},
                  {"high_distributions", e.high.size()},
                  {"note", e.note}}},
                {"abstraction", to_json(suite)},
                {"strong", strong_json(strong)}};
    if (r == SharedRationality::best_response) {
      verdict = verdict && !e.matched && e.low.size() == 2 && e.high.size() == 1;
    } else {
      verdict = verdict && e.matched && suite.verdict && strong.surjective;
    }
  }
  out["verdict"] = verdict;
  return out;
}

json run_prop1_fuzz(const RegistryOptions& o, std::size_t cases) {
  std::mt19937_64 rng(o.seed);
  std::size_t abstraction = 0, strong = 0, pre = 0, trivial = 0;
  for (std::size_t i = 0; i < cases; ++i) {
    const FuzzCase c = random_prop1_case(rng);
    const FuzzOutcome r = evaluate_prop1_case(c);
    abstraction += r.abstraction;
    strong += r.strong;
    pre += r.preconditions;
    trivial += !r.nontrivial;
  }
  return {{"example", "prop1-fuzz"},
          {"seed", o.seed},
          {"cases", cases},
          {"abstraction_pass", abstraction},
          {"strong_pass", strong},
          {"preconditions_hold", pre},
          {"nontrivial_agent_false", trivial},
          {"verdict", abstraction == cases && strong == cases && pre == cases &&
                          trivial == cases}};
}

}  // namespace

json run_example(const std::string& name, const RegistryOptions& opts) {
  if (name == "battle-of-sexes") return run_battle_of_sexes(opts);
  if (name == "actor-critic") return run_actor_critic(opts);
  if (name == "shared-utility") return run_shared_utility(opts);
  if (name == "prop1-fuzz") return run_prop1_fuzz(opts, 200);
  throw Error(ErrorCode::unknown_example, fmt::format("unknown example '{}'", name));
}

}  // namespace mechagency
