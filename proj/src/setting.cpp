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

#include "mechagency/setting.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "mechagency/errors.hpp"

namespace mechagency {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::non_finite_domain: return "NonFiniteDomain";
    case ErrorCode::no_convergence: return "NoConvergence";
    case ErrorCode::incomplete_solution: return "IncompleteSolution";
    case ErrorCode::empty_domain: return "EmptyDomain";
    case ErrorCode::empty_response_set: return "EmptyResponseSet";
    case ErrorCode::missing_variables: return "MissingVariables";
    case ErrorCode::partial_collection: return "PartialCollection";
    case ErrorCode::too_many_settings: return "TooManySettings";
    case ErrorCode::negative_preference: return "NegativePreference";
    case ErrorCode::invalid_config: return "InvalidConfig";
    case ErrorCode::degenerate_design: return "DegenerateDesign";
    case ErrorCode::shape_mismatch: return "ShapeMismatch";
    case ErrorCode::non_finite: return "NonFinite";
    case ErrorCode::unknown_example: return "UnknownExample";
    case ErrorCode::io: return "IOError";
  }
  return "Unknown";
}

double Value::as_scalar() const {
  if (coords.size() != 1) {
    throw Error(ErrorCode::shape_mismatch,
                fmt::format("expected scalar value, got {} coordinates",
                            coords.size()));
  }
  return coords[0];
}

bool approx_equal(const Value& a, const Value& b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(std::abs(a[i] - b[i]) <= tol)) return false;
  }
  return true;
}

double max_abs_difference(const Value& a, const Value& b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

std::string format_value(const Value& v) {
  if (v.size() == 1) return fmt::format("{:.6g}", v[0]);
  std::string out = "(";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += fmt::format("{:.6g}", v[i]);
  }
  return out + ")";
}

const Value* Setting::find(const std::string& var) const {
  auto it = values_.find(var);
  return it == values_.end() ? nullptr : &it->second;
}

const Value& Setting::at(const std::string& var) const {
  auto it = values_.find(var);
  if (it == values_.end()) {
    throw Error(ErrorCode::missing_variables,
                fmt::format("setting has no value for '{}'", var));
  }
  return it->second;
}

VarSet Setting::variables() const {
  VarSet out;
  for (const auto& [k, v] : values_) out.insert(k);
  return out;
}

Setting Setting::merged(const Setting& other) const {
  Setting out = *this;
  for (const auto& [k, v] : other.values_) out.values_[k] = v;
  return out;
}

Setting project(const Setting& s, const VarSet& target) {
  Setting out;
  for (const auto& [k, v] : s) {
    if (target.count(k)) out.set(k, v);
  }
  return out;
}

bool approx_equal(const Setting& a, const Setting& b, double tol) {
  if (a.size() != b.size()) return false;
  auto ia = a.begin();
  auto ib = b.begin();
  for (; ia != a.end(); ++ia, ++ib) {
    if (ia->first != ib->first) return false;
    if (!approx_equal(ia->second, ib->second, tol)) return false;
  }
  return true;
}

std::string format_setting(const Setting& s) {
  std::string out = "{";
  bool first = true;
  for (const auto& [k, v] : s) {
    if (!first) out += ", ";
    first = false;
    out += k + "=" + format_value(v);
  }
  return out + "}";
}

std::vector<Setting> dedup_settings(std::vector<Setting> settings,
                                    double tol) {
  std::vector<Setting> out;
  for (auto& s : settings) {
    bool dup = std::any_of(out.begin(), out.end(), [&](const Setting& o) {
      return approx_equal(o, s, tol);
    });
    if (!dup) out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace mechagency
