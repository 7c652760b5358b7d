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

#include "mechagency/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "mechagency/errors.hpp"

namespace mechagency {

namespace {

std::size_t grid_points(double lo, double hi, double step) {
  return static_cast<std::size_t>(std::llround((hi - lo) / step)) + 1;
}

double grid_coord(double lo, double hi, std::size_t k, std::size_t n) {
  if (n == 1) return lo;
  if (k + 1 == n) return hi;
  return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
}

}  // namespace

Domain Domain::finite(std::vector<std::string> symbols) {
  if (symbols.empty()) {
    throw Error(ErrorCode::empty_domain, "finite domain must be non-empty");
  }
  Domain d;
  d.kind_ = DomainKind::finite;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    d.values_.push_back(Value{static_cast<double>(i)});
  }
  d.labels_ = std::move(symbols);
  return d;
}

Domain Domain::finite_values(std::vector<Value> values,
                             std::vector<std::string> labels) {
  if (values.empty()) {
    throw Error(ErrorCode::empty_domain, "finite domain must be non-empty");
  }
  if (!labels.empty() && labels.size() != values.size()) {
    throw Error(ErrorCode::invalid_argument, "label count mismatch");
  }
  Domain d;
  d.kind_ = DomainKind::finite;
  d.values_ = std::move(values);
  d.labels_ = std::move(labels);
  return d;
}

Domain Domain::real_box(std::vector<double> lower, std::vector<double> upper,
                        double grid_step) {
  if (lower.size() != upper.size() || lower.empty()) {
    throw Error(ErrorCode::invalid_argument, "real box bounds mismatch");
  }
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!(lower[i] <= upper[i])) {
      throw Error(ErrorCode::invalid_argument,
                  "real box requires lower <= upper coordinatewise");
    }
  }
  if (grid_step < 0.0) {
    throw Error(ErrorCode::invalid_argument, "grid step must be >= 0");
  }
  Domain d;
  d.kind_ = DomainKind::real_box;
  d.lower_ = std::move(lower);
  d.upper_ = std::move(upper);
  d.grid_step_ = grid_step;
  if (grid_step > 0.0) {
    for (std::size_t i = 0; i < d.lower_.size(); ++i) {
      if (!std::isfinite(d.lower_[i]) || !std::isfinite(d.upper_[i])) {
        throw Error(ErrorCode::invalid_argument,
                    "grid requires bounded coordinates");
      }
    }
  }
  return d;
}

Domain Domain::real_line(std::size_t dim) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return real_box(std::vector<double>(dim, -inf), std::vector<double>(dim, inf));
}

Domain Domain::function_table(std::size_t inputs,
                              std::vector<double> codomain) {
  if (inputs == 0) {
    throw Error(ErrorCode::invalid_argument,
                "function table needs at least one input");
  }
  Domain d;
  d.kind_ = DomainKind::function_table;
  d.inputs_ = inputs;
  std::sort(codomain.begin(), codomain.end());
  codomain.erase(std::unique(codomain.begin(), codomain.end()),
                 codomain.end());
  d.codomain_ = std::move(codomain);
  return d;
}

std::size_t Domain::dimension() const {
  switch (kind_) {
    case DomainKind::finite: return values_.front().size();
    case DomainKind::real_box: return lower_.size();
    case DomainKind::function_table: return inputs_;
  }
  return 0;
}

bool Domain::enumerable() const {
  switch (kind_) {
    case DomainKind::finite: return true;
    case DomainKind::real_box: return grid_step_ > 0.0;
    case DomainKind::function_table: return !codomain_.empty();
  }
  return false;
}

std::size_t Domain::cardinality() const {
  if (!enumerable()) {
    throw Error(ErrorCode::non_finite_domain, "domain is not enumerable");
  }
  std::size_t n = 1;
  switch (kind_) {
    case DomainKind::finite: return values_.size();
    case DomainKind::real_box:
      for (std::size_t i = 0; i < lower_.size(); ++i) {
        n *= grid_points(lower_[i], upper_[i], grid_step_);
      }
      return n;
    case DomainKind::function_table:
      for (std::size_t i = 0; i < inputs_; ++i) n *= codomain_.size();
      return n;
  }
  return n;
}

std::vector<Value> Domain::enumerate() const {
  if (!enumerable()) {
    throw Error(ErrorCode::non_finite_domain,
                "cannot enumerate a continuous domain without a grid");
  }
  if (kind_ == DomainKind::finite) return values_;

  std::vector<std::size_t> radix;
  std::vector<std::vector<double>> axis;
  if (kind_ == DomainKind::real_box) {
    for (std::size_t i = 0; i < lower_.size(); ++i) {
      std::size_t n = grid_points(lower_[i], upper_[i], grid_step_);
      std::vector<double> pts(n);
      for (std::size_t k = 0; k < n; ++k) {
        pts[k] = grid_coord(lower_[i], upper_[i], k, n);
      }
      axis.push_back(std::move(pts));
    }
  } else {
    for (std::size_t i = 0; i < inputs_; ++i) axis.push_back(codomain_);
  }

  std::vector<Value> out;
  out.reserve(cardinality());
  std::vector<std::size_t> idx(axis.size(), 0);
  while (true) {
    Value v;
    v.coords.resize(axis.size());
    for (std::size_t i = 0; i < axis.size(); ++i) v[i] = axis[i][idx[i]];
    out.push_back(std::move(v));
    // odometer, last coordinate fastest
    std::size_t i = axis.size();
    while (i > 0) {
      --i;
      if (++idx[i] < axis[i].size()) break;
      idx[i] = 0;
      if (i == 0) return out;
    }
    if (axis.empty()) return out;
  }
}

bool Domain::contains(const Value& v, double tol) const {
  switch (kind_) {
    case DomainKind::finite:
      return std::any_of(values_.begin(), values_.end(),
                         [&](const Value& x) { return approx_equal(x, v, tol); });
    case DomainKind::real_box:
      if (v.size() != lower_.size()) return false;
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!(v[i] >= lower_[i] - tol && v[i] <= upper_[i] + tol)) return false;
      }
      return true;
    case DomainKind::function_table:
      if (v.size() != inputs_) return false;
      if (codomain_.empty()) return true;
      for (double x : v.coords) {
        bool hit = std::any_of(codomain_.begin(), codomain_.end(),
                               [&](double c) { return std::abs(c - x) <= tol; });
        if (!hit) return false;
      }
      return true;
  }
  return false;
}

Value Domain::snap(const Value& v) const {
  switch (kind_) {
    case DomainKind::finite: {
      const Value* best = &values_.front();
      double bd = max_abs_difference(*best, v);
      for (const auto& x : values_) {
        double d = max_abs_difference(x, v);
        if (d < bd) {
          bd = d;
          best = &x;
        }
      }
      return *best;
    }
    case DomainKind::real_box: {
      Value out = v;
      for (std::size_t i = 0; i < out.size() && i < lower_.size(); ++i) {
        double x = std::clamp(out[i], lower_[i], upper_[i]);
        if (grid_step_ > 0.0) {
          std::size_t n = grid_points(lower_[i], upper_[i], grid_step_);
          double k = std::round((x - lower_[i]) / (upper_[i] - lower_[i]) *
                                static_cast<double>(n - 1));
          x = grid_coord(lower_[i], upper_[i], static_cast<std::size_t>(k), n);
        }
        out[i] = x;
      }
      return out;
    }
    case DomainKind::function_table: {
      if (codomain_.empty()) return v;
      Value out = v;
      for (double& x : out.coords) {
        auto best = std::min_element(
            codomain_.begin(), codomain_.end(), [&](double a, double b) {
              return std::abs(a - x) < std::abs(b - x);
            });
        x = *best;
      }
      return out;
    }
  }
  return v;
}

Value Domain::sample(std::mt19937_64& rng) const {
  if (enumerable()) {
    // Uniform over the enumeration without materializing it.
    if (kind_ == DomainKind::finite) {
      std::uniform_int_distribution<std::size_t> pick(0, values_.size() - 1);
      return values_[pick(rng)];
    }
    Value v;
    if (kind_ == DomainKind::real_box) {
      for (std::size_t i = 0; i < lower_.size(); ++i) {
        std::size_t n = grid_points(lower_[i], upper_[i], grid_step_);
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        v.coords.push_back(grid_coord(lower_[i], upper_[i], pick(rng), n));
      }
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, codomain_.size() - 1);
      for (std::size_t i = 0; i < inputs_; ++i) {
        v.coords.push_back(codomain_[pick(rng)]);
      }
    }
    return v;
  }
  if (kind_ == DomainKind::real_box) {
    Value v;
    for (std::size_t i = 0; i < lower_.size(); ++i) {
      if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i])) {
        throw Error(ErrorCode::non_finite_domain,
                    "cannot sample an unbounded coordinate");
      }
      std::uniform_real_distribution<double> u(lower_[i], upper_[i]);
      v.coords.push_back(u(rng));
    }
    return v;
  }
  throw Error(ErrorCode::non_finite_domain,
              "cannot sample a function table without codomain");
}

std::string Domain::label(const Value& v) const {
  if (kind_ == DomainKind::finite && !labels_.empty()) {
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (approx_equal(values_[i], v)) return labels_[i];
    }
  }
  return format_value(v);
}

Domain Domain::with_grid(double step) const {
  if (kind_ != DomainKind::real_box) {
    throw Error(ErrorCode::invalid_argument, "only real boxes carry grids");
  }
  return real_box(lower_, upper_, step);
}

const char* to_string(Layer layer) {
  switch (layer) {
    case Layer::object: return "object";
    case Layer::mechanism: return "mechanism";
    case Layer::noise: return "noise";
  }
  return "?";
}

void Signature::add(std::string name, Layer layer, Domain domain) {
  if (contains(name)) {
    throw Error(ErrorCode::invalid_argument,
                fmt::format("duplicate variable '{}'", name));
  }
  vars_.push_back(Variable{std::move(name), layer, std::move(domain)});
}

bool Signature::contains(const std::string& name) const {
  return std::any_of(vars_.begin(), vars_.end(),
                     [&](const Variable& v) { return v.name == name; });
}

const Variable& Signature::at(const std::string& name) const {
  for (const auto& v : vars_) {
    if (v.name == name) return v;
  }
  throw Error(ErrorCode::missing_variables,
              fmt::format("unknown variable '{}'", name));
}

std::vector<std::string> Signature::names() const {
  std::vector<std::string> out;
  for (const auto& v : vars_) out.push_back(v.name);
  return out;
}

std::vector<Setting> enumerate_product(const Signature& sig,
                                       const std::vector<std::string>& vars,
                                       std::size_t limit) {
  std::vector<std::vector<Value>> axes;
  std::size_t total = 1;
  for (const auto& name : vars) {
    axes.push_back(sig.at(name).domain.enumerate());
    total *= axes.back().size();
    if (total > limit) {
      throw Error(ErrorCode::too_many_settings,
                  fmt::format("product over {} variables exceeds {} settings",
                              vars.size(), limit));
    }
  }
  std::vector<Setting> out;
  out.reserve(total);
  std::vector<std::size_t> idx(axes.size(), 0);
  while (true) {
    Setting s;
    for (std::size_t i = 0; i < axes.size(); ++i) s.set(vars[i], axes[i][idx[i]]);
    out.push_back(std::move(s));
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
    if (done) return out;
  }
}

}  // namespace mechagency
