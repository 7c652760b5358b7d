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

#include "mechagency/model_json.hpp"

#include <map>
#include <memory>

#include <fmt/format.h>

#include "mechagency/errors.hpp"

namespace mechagency {

using json = nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json value_json(const Value& v) { return v.coords; }

Value value_from(const json& j) { return Value(j.get<std::vector<double>>()); }

const char* kind_name(DomainKind k) {
  switch (k) {
    case DomainKind::finite: return "finite";
    case DomainKind::real_box: return "real_box";
    case DomainKind::function_table: return "function_table";
  }
  return "?";
}

/// P(V | theta, pa) with duplicate values merged, in first-seen order.
WeightedValues local_kernel(const ObjectVariable& v, const Value& theta,
                            const Setting& parents) {
  WeightedValues raw;
  if (v.assignment.kernel) {
    raw = v.assignment.kernel(theta, parents);
  } else if (v.noise_dist.finite_support()) {
    for (const auto& [e, p] : v.noise_dist.support) {
      raw.emplace_back(v.assignment.structural(theta, parents, e), p);
    }
  } else {
    throw Error(ErrorCode::non_finite_domain,
                fmt::format("'{}' has continuous noise and no kernel", v.name));
  }
  WeightedValues out;
  for (auto& [val, p] : raw) {
    if (p <= 0.0) continue;
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const auto& o) { return approx_equal(o.first, val); });
    if (it == out.end()) {
      out.emplace_back(std::move(val), p);
    } else {
      it->second += p;
    }
  }
  return out;
}

void check_size(std::size_t n, std::size_t limit, const std::string& what) {
  if (n > limit) {
    throw Error(ErrorCode::too_many_settings,
                fmt::format("table for '{}' exceeds {} entries", what, limit));
  }
}

}  // namespace

json domain_to_json(const Domain& d) {
  json j;
  j["kind"] = kind_name(d.kind());
  switch (d.kind()) {
    case DomainKind::finite: {
      json vals = json::array();
      for (const auto& v : d.enumerate()) vals.push_back(value_json(v));
      j["values"] = std::move(vals);
      j["labels"] = d.labels();
      break;
    }
    case DomainKind::real_box:
      j["lower"] = d.lower();
      j["upper"] = d.upper();
      j["grid_step"] = d.grid_step();
      break;
    case DomainKind::function_table:
      j["inputs"] = d.table_inputs();
      j["codomain"] = d.codomain();
      break;
  }
  return j;
}

Domain domain_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "finite") {
    std::vector<Value> vals;
    for (const auto& v : j.at("values")) vals.push_back(value_from(v));
    return Domain::finite_values(std::move(vals),
                                 j.value("labels", std::vector<std::string>{}));
  }
  if (kind == "real_box") {
    return Domain::real_box(j.at("lower").get<std::vector<double>>(),
                            j.at("upper").get<std::vector<double>>(),
                            j.value("grid_step", 0.0));
  }
  if (kind == "function_table") {
    return Domain::function_table(j.at("inputs").get<std::size_t>(),
                                  j.value("codomain", std::vector<double>{}));
  }
  throw Error(ErrorCode::invalid_config, fmt::format("unknown domain kind '{}'", kind));
}

json model_to_json(const MechanizedSCM& m, std::size_t max_entries) {
  const auto& mech = m.mech_model();
  const auto& obj = m.obj_model();
  json out;
  out["format"] = kFormatVersion;

  json mvars = json::array();
  for (const auto& var : mech.signature().variables()) {
    const auto& a = mech.assignment(var.name);
    std::size_t n = 1;
    for (const auto& d : a.depends_on) n *= mech.domain(d).cardinality();
    check_size(n, max_entries, var.name);
    json table = json::array();
    for (const auto& ctx : enumerate_product(mech.signature(), a.depends_on)) {
      json inputs = json::array();
      for (const auto& d : a.depends_on) inputs.push_back(value_json(ctx.at(d)));
      table.push_back({{"context", std::move(inputs)},
                       {"value", value_json(a.fn(ctx))}});
    }
    mvars.push_back({{"name", var.name},
                     {"domain", domain_to_json(var.domain)},
                     {"depends_on", a.depends_on},
                     {"table", std::move(table)}});
  }
  out["mechanism_variables"] = std::move(mvars);

  json ovars = json::array();
  for (const auto& v : obj.variables()) {
    Signature sig;
    sig.add(v.mechanism, Layer::mechanism, mech.domain(v.mechanism));
    std::vector<std::string> keys{v.mechanism};
    for (const auto& p : v.assignment.parents) {
      sig.add(p, Layer::object, obj.at(p).domain);
      keys.push_back(p);
    }
    std::size_t n = 1;
    for (const auto& var : sig.variables()) n *= var.domain.cardinality();
    check_size(n, max_entries, v.name);
    json kernel = json::array();
    for (const auto& s : enumerate_product(sig, keys)) {
      Setting pa = s;
      pa.erase(v.mechanism);
      json parents = json::array();
      for (const auto& p : v.assignment.parents) parents.push_back(value_json(s.at(p)));
      json support = json::array();
      for (const auto& [val, p] : local_kernel(v, s.at(v.mechanism), pa)) {
        support.push_back({value_json(val), p});
      }
      kernel.push_back({{"theta", value_json(s.at(v.mechanism))},
                        {"parents", std::move(parents)},
                        {"support", std::move(support)}});
    }
    ovars.push_back({{"name", v.name},
                     {"mechanism", v.mechanism},
                     {"noise", v.noise},
                     {"domain", domain_to_json(v.domain)},
                     {"parents", v.assignment.parents},
                     {"kernel", std::move(kernel)}});
  }
  out["object_variables"] = std::move(ovars);
  return out;
}

MechanizedSCM model_from_json(const json& j) {
  try {
    if (j.at("format").get<int>() != kFormatVersion) {
      throw Error(ErrorCode::invalid_config, "unsupported model format version");
    }
    DeterministicSCM mech;
    for (const auto& mv : j.at("mechanism_variables")) {
      mech.add_variable(mv.at("name").get<std::string>(), domain_from_json(mv.at("domain")));
    }
    for (const auto& mv : j.at("mechanism_variables")) {
      auto deps = mv.at("depends_on").get<std::vector<std::string>>();
      auto table = std::make_shared<std::map<std::vector<Value>, Value>>();
      for (const auto& row : mv.at("table")) {
        std::vector<Value> key;
        for (const auto& c : row.at("context")) key.push_back(value_from(c));
        (*table)[std::move(key)] = value_from(row.at("value"));
      }
      const std::string name = mv.at("name").get<std::string>();
      mech.assign(name, {deps, [deps, table, name](const Setting& ctx) {
                           std::vector<Value> key;
                           for (const auto& d : deps) key.push_back(ctx.at(d));
                           auto it = table->find(key);
                           if (it == table->end()) {
                             throw Error(ErrorCode::missing_variables,
                                         fmt::format("context outside the table of '{}'",
                                                     name));
                           }
                           return it->second;
                         }});
    }

    auto obj = std::make_shared<ParameterizedSCM>();
    for (const auto& ov : j.at("object_variables")) {
      ObjectVariable v;
      v.name = ov.at("name").get<std::string>();
      v.mechanism = ov.at("mechanism").get<std::string>();
      v.noise = ov.at("noise").get<std::string>();
      v.domain = domain_from_json(ov.at("domain"));
      v.noise_dist = NoiseDistribution::singleton();
      v.assignment.parents = ov.at("parents").get<std::vector<std::string>>();
      using Key = std::pair<Value, std::vector<Value>>;
      auto table = std::make_shared<std::map<Key, WeightedValues>>();
      for (const auto& row : ov.at("kernel")) {
        std::vector<Value> pa;
        for (const auto& p : row.at("parents")) pa.push_back(value_from(p));
        WeightedValues support;
        for (const auto& s : row.at("support")) {
          support.emplace_back(value_from(s.at(0)), s.at(1).get<double>());
        }
        (*table)[{value_from(row.at("theta")), std::move(pa)}] = std::move(support);
      }
      const auto parents = v.assignment.parents;
      const std::string name = v.name;
      v.assignment.kernel = [parents, table, name](const Value& theta, const Setting& pa) {
        std::vector<Value> key;
        for (const auto& p : parents) key.push_back(pa.at(p));
        auto it = table->find({theta, key});
        if (it == table->end()) {
          throw Error(ErrorCode::missing_variables,
                      fmt::format("parameter outside the kernel table of '{}'", name));
        }
        return it->second;
      };
      obj->add(std::move(v));
    }
    return MechanizedSCM(std::move(mech), std::move(obj));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_config, fmt::format("malformed model: {}", e.what()));
  }
}

bool models_equal(const MechanizedSCM& a, const MechanizedSCM& b) {
  return model_to_json(a) == model_to_json(b);
}

}  // namespace mechagency
