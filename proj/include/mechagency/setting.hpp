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
#include <initializer_list>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace mechagency {

/// A value of one variable. Every domain kind is encoded as a coordinate
/// vector: finite symbols by their index, real boxes by their coordinates,
/// function tables by their entries in row-major input order.
struct Value {
  std::vector<double> coords;

  Value() = default;
  Value(std::initializer_list<double> c) : coords(c) {}
  explicit Value(std::vector<double> c) : coords(std::move(c)) {}

  static Value scalar(double x) { return Value{x}; }

  std::size_t size() const { return coords.size(); }
  double operator[](std::size_t i) const { return coords[i]; }
  double& operator[](std::size_t i) { return coords[i]; }
  double as_scalar() const;

  friend bool operator==(const Value&, const Value&) = default;
  friend auto operator<=>(const Value& a, const Value& b) {
    return a.coords <=> b.coords;
  }
};

constexpr double kValueTolerance = 1e-9;

bool approx_equal(const Value& a, const Value& b,
                  double tol = kValueTolerance);
double max_abs_difference(const Value& a, const Value& b);
std::string format_value(const Value& v);

using VarSet = std::set<std::string>;

/// Partial assignment of values to variables. Values are keyed by their
/// owning variable, so two settings are equal iff they agree as sets of
/// tagged values.
class Setting {
 public:
  using Map = std::map<std::string, Value>;

  Setting() = default;
  Setting(std::initializer_list<std::pair<const std::string, Value>> init)
      : values_(init) {}
  explicit Setting(Map values) : values_(std::move(values)) {}

  void set(const std::string& var, Value v) { values_[var] = std::move(v); }
  void erase(const std::string& var) { values_.erase(var); }

  bool contains(const std::string& var) const {
    return values_.count(var) != 0;
  }
  const Value* find(const std::string& var) const;
  const Value& at(const std::string& var) const;

  bool empty() const { return values_.empty(); }
  std::size_t size() const { return values_.size(); }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }
  const Map& values() const { return values_; }
  VarSet variables() const;

  /// Union of both settings; `other` wins on shared variables.
  Setting merged(const Setting& other) const;

  friend bool operator==(const Setting&, const Setting&) = default;
  friend auto operator<=>(const Setting& a, const Setting& b) {
    return a.values_ <=> b.values_;
  }

 private:
  Map values_;
};

/// The tagged values of `s` whose owner is in `target`.
Setting project(const Setting& s, const VarSet& target);

bool approx_equal(const Setting& a, const Setting& b,
                  double tol = kValueTolerance);
std::string format_setting(const Setting& s);

/// Removes near-duplicates (coordinatewise within `tol`), keeping the first
/// occurrence, then sorts canonically.
std::vector<Setting> dedup_settings(std::vector<Setting> settings,
                                    double tol = kValueTolerance);

}  // namespace mechagency
