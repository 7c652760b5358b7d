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
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mechagency/setting.hpp"

namespace mechagency {

enum class DomainKind { finite, real_box, function_table };

/// Range of one variable.
///
/// Real boxes may carry a uniform grid (`grid_step > 0`), which makes them
/// enumerable. Function tables are enumerable when a finite codomain is
/// given.
class Domain {
 public:
  static Domain finite(std::vector<std::string> symbols);
  static Domain finite_values(std::vector<Value> values,
                              std::vector<std::string> labels = {});
  static Domain real_box(std::vector<double> lower, std::vector<double> upper,
                         double grid_step = 0.0);
  static Domain unit_interval(double grid_step = 0.01) {
    return real_box({0.0}, {1.0}, grid_step);
  }
  static Domain real_line(std::size_t dim = 1);
  static Domain function_table(std::size_t inputs,
                               std::vector<double> codomain = {});

  DomainKind kind() const { return kind_; }
  std::size_t dimension() const;
  double grid_step() const { return grid_step_; }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<double>& codomain() const { return codomain_; }
  std::size_t table_inputs() const { return inputs_; }

  bool enumerable() const;
  /// Number of points `enumerate()` yields; throws if not enumerable.
  std::size_t cardinality() const;
  /// All points (finite list, grid points, or codomain^inputs tables).
  /// Throws Error(non_finite_domain) otherwise.
  std::vector<Value> enumerate() const;
  bool contains(const Value& v, double tol = kValueTolerance) const;
  /// Nearest point of the grid / finite list; identity for continuous.
  Value snap(const Value& v) const;
  Value sample(std::mt19937_64& rng) const;
  std::string label(const Value& v) const;

  /// Same domain with a different grid step (real boxes only).
  Domain with_grid(double step) const;

  friend bool operator==(const Domain&, const Domain&) = default;

 private:
  DomainKind kind_ = DomainKind::finite;
  std::vector<Value> values_;
  std::vector<std::string> labels_;
  std::vector<double> lower_, upper_;
  double grid_step_ = 0.0;
  std::size_t inputs_ = 0;
  std::vector<double> codomain_;
};

enum class Layer { object, mechanism, noise };

const char* to_string(Layer layer);

struct Variable {
  std::string name;
  Layer layer = Layer::mechanism;
  Domain domain;

  friend bool operator==(const Variable&, const Variable&) = default;
};

/// Ordered list of uniquely named variables with their ranges.
class Signature {
 public:
  Signature() = default;

  void add(std::string name, Layer layer, Domain domain);
  bool contains(const std::string& name) const;
  const Variable& at(const std::string& name) const;
  const std::vector<Variable>& variables() const { return vars_; }
  std::vector<std::string> names() const;
  std::size_t size() const { return vars_.size(); }

  friend bool operator==(const Signature&, const Signature&) = default;

 private:
  std::vector<Variable> vars_;
};

/// Cartesian product of the enumerations of `vars` (names looked up in
/// `sig`), in the order given. Throws TooManySettings above `limit`.
std::vector<Setting> enumerate_product(const Signature& sig,
                                       const std::vector<std::string>& vars,
                                       std::size_t limit = 10'000'000);

}  // namespace mechagency
