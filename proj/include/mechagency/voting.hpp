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
#include <random>
#include <string>
#include <vector>

namespace mechagency::voting {

/// Sampling ranges for citizen parameters. b is divided by the country
/// size and d by the number of countries.
struct Ranges {
  double a_lo = 0.35, a_hi = 0.65;
  double b_lo = 7.0, b_hi = 13.0;
  double d_lo = 0.05, d_hi = 0.15;
  /// Log-normal population sizes: underlying normal N(0, size_sigma).
  double size_sigma = 0.5;
};

/// Utility a*q_c - b*q_c^2 - d*Q_W^2.
struct Citizen {
  double a = 0.0, b = 1.0, d = 0.0;
};

struct Population {
  std::vector<std::vector<Citizen>> countries;

  std::size_t n_countries() const { return countries.size(); }
  std::size_t total() const;
  std::size_t size(std::size_t c) const { return countries[c].size(); }
  /// Index of the first citizen of each country in a flat intervention.
  std::vector<std::size_t> offsets() const;
};

Population generate_population(std::uint64_t seed, std::size_t n_countries = 5,
                               std::size_t total_citizens = 1000,
                               const Ranges& ranges = {});

/// Per-citizen lambda, countries in order.
using Intervention = std::vector<double>;

struct CountryParams {
  std::vector<double> alpha;
  std::vector<double> delta;
};

struct NEResult {
  std::vector<double> q;
  double Q_W = 0.0;
  long iterations = 0;
  double residual = 0.0;
  std::vector<std::size_t> dictators;
};

enum class Mechanism { vcg, median, dictator };

Mechanism parse_mechanism(const std::string& s);
const char* to_string(Mechanism m);

/// Q_W = (sum(alpha)/2) / (1 + sum(delta)), q_c = alpha_c/2 - delta_c*Q_W.
NEResult ne_from_params(const CountryParams& p);

/// Country utility divided by B_c: alpha*q_c - q_c^2 - delta*Q_W^2.
double country_utility(const CountryParams& p, std::size_t c,
                       const std::vector<double>& q);

/// alpha_c = sum(a - lambda)/sum(b), delta_c = sum(d)/sum(b).
CountryParams vcg_params(const Population& pop, const Intervention& iv);
NEResult vcg_ne(const Population& pop, const Intervention& iv);

struct MedianOptions {
  double damping = 0.3;
  double tol = 1e-6;
  long max_iter = 1'000'000;
};

/// Each citizen's optimal q_c given Q_{-c}, reduced to the lower median per
/// country.
std::vector<double> median_targets(const Population& pop, const Intervention& iv,
                                   const std::vector<double>& q);
NEResult median_ne(const Population& pop, const Intervention& iv,
                   const MedianOptions& opts = {});
/// max_c |median target - q_c|.
double median_residual(const Population& pop, const Intervention& iv,
                       const std::vector<double>& q);

std::vector<std::size_t> draw_dictators(const Population& pop, std::mt19937_64& rng);
CountryParams dictator_params(const Population& pop, const Intervention& iv,
                              const std::vector<std::size_t>& dictators);
NEResult random_dictator_ne(const Population& pop, const Intervention& iv,
                            std::uint64_t seed);

inline constexpr double kLambdaMax = 0.1;

std::vector<Intervention> sample_interventions(const Population& pop,
                                               std::uint64_t seed, std::size_t n,
                                               double lambda_max = kLambdaMax);
/// As sample_interventions, with country c's block zeroed.
std::vector<Intervention> zero_on_country_interventions(
    const Population& pop, std::size_t c, std::uint64_t seed, std::size_t n = 10,
    double lambda_max = kLambdaMax);

/// Independent stream seed from a base seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace mechagency::voting
