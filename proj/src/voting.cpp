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

#include "mechagency/voting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "mechagency/errors.hpp"

namespace mechagency::voting {

std::size_t Population::total() const {
  std::size_t n = 0;
  for (const auto& c : countries) n += c.size();
  return n;
}

std::vector<std::size_t> Population::offsets() const {
  std::vector<std::size_t> out;
  std::size_t at = 0;
  for (const auto& c : countries) {
    out.push_back(at);
    at += c.size();
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

std::vector<std::size_t> population_sizes(std::mt19937_64& rng, std::size_t n,
                                          std::size_t total, double sigma) {
  std::lognormal_distribution<double> ln(0.0, sigma);
  std::vector<double> w(n);
  for (auto& x : w) x = ln(rng);
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);

  std::vector<std::size_t> sizes(n);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double share = w[i] / sum * static_cast<double>(total);
    sizes[i] = static_cast<std::size_t>(std::floor(share));
    assigned += sizes[i];
    remainders.emplace_back(share - std::floor(share), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) {
    ++sizes[remainders[k % n].second];
  }
  for (auto& s : sizes) {
    if (s > 0) continue;
    auto largest = std::max_element(sizes.begin(), sizes.end());
    --*largest;
    s = 1;
  }
  return sizes;
}

double lower_median(std::vector<double>& v) {
  auto mid = v.begin() + static_cast<std::ptrdiff_t>((v.size() - 1) / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

void check_intervention(const Population& pop, const Intervention& iv) {
  if (iv.size() != pop.total()) {
    throw Error(ErrorCode::shape_mismatch,
                fmt::format("intervention has {} entries for {} citizens", iv.size(),
                            pop.total()));
  }
  std::size_t k = 0;
  for (const auto& country : pop.countries) {
    for (const auto& cit : country) {
      if (cit.a - iv[k] < 0.0) {
        throw Error(ErrorCode::negative_preference,
                    fmt::format("a - lambda < 0 for citizen {}", k));
      }
      ++k;
    }
  }
}

double beta_draw(std::mt19937_64& rng, double mean, double concentration) {
  if (mean <= 0.0) return 0.0;
  if (mean >= 1.0) return 1.0;
  std::gamma_distribution<double> gx(mean * concentration, 1.0);
  std::gamma_distribution<double> gy((1.0 - mean) * concentration, 1.0);
  const double x = gx(rng);
  const double y = gy(rng);
  return x + y > 0.0 ? x / (x + y) : mean;
}

std::vector<Intervention> sample_impl(const Population& pop, std::uint64_t seed,
                                      std::size_t n, double lambda_max,
                                      std::ptrdiff_t zero_country) {
  constexpr double kConcentration = 10.0;
  if (n == 0) throw Error(ErrorCode::invalid_config, "need at least one intervention");
  if (!(lambda_max > 0.0) || lambda_max > kLambdaMax) {
    throw Error(ErrorCode::invalid_config,
                fmt::format("lambda_max {} puts the Beta mean outside [0, 1]", lambda_max));
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mean_dist(0.0, lambda_max);
  std::vector<Intervention> out;
  out.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    Intervention iv;
    iv.reserve(pop.total());
    for (std::size_t c = 0; c < pop.n_countries(); ++c) {
      const double lambda_c = mean_dist(rng);
      const double mean = lambda_c / kLambdaMax;
      for (std::size_t i = 0; i < pop.size(c); ++i) {
        const double x = beta_draw(rng, mean, kConcentration) * kLambdaMax;
        iv.push_back(static_cast<std::ptrdiff_t>(c) == zero_country ? 0.0 : x);
      }
    }
    out.push_back(std::move(iv));
  }
  return out;
}

}  // namespace

Population generate_population(std::uint64_t seed, std::size_t n_countries,
                               std::size_t total_citizens, const Ranges& r) {
  if (n_countries == 0 || total_citizens < n_countries) {
    throw Error(ErrorCode::invalid_config,
                fmt::format("cannot split {} citizens into {} countries",
                            total_citizens, n_countries));
  }
  if (!(r.a_lo <= r.a_hi && r.b_lo <= r.b_hi && r.d_lo <= r.d_hi) || r.a_lo < 0 ||
      r.b_lo <= 0 || r.d_lo < 0 || r.size_sigma < 0) {
    throw Error(ErrorCode::invalid_config, "invalid citizen parameter ranges");
  }
  std::mt19937_64 rng(seed);
  const auto sizes = population_sizes(rng, n_countries, total_citizens, r.size_sigma);
  Population pop;
  const double C = static_cast<double>(n_countries);
  for (std::size_t c = 0; c < n_countries; ++c) {
    const double N = static_cast<double>(sizes[c]);
    std::uniform_real_distribution<double> ua(r.a_lo, r.a_hi);
    std::uniform_real_distribution<double> ub(r.b_lo / N, r.b_hi / N);
    std::uniform_real_distribution<double> ud(r.d_lo / C, r.d_hi / C);
    std::vector<Citizen> citizens(sizes[c]);
    for (auto& cit : citizens) {
      cit.a = ua(rng);
      cit.b = ub(rng);
      cit.d = ud(rng);
    }
    pop.countries.push_back(std::move(citizens));
  }
  return pop;
}

Mechanism parse_mechanism(const std::string& s) {
  if (s == "vcg") return Mechanism::vcg;
  if (s == "median") return Mechanism::median;
  if (s == "dictator" || s == "random-dictator") return Mechanism::dictator;
  throw Error(ErrorCode::invalid_config, fmt::format("unknown mechanism '{}'", s));
}

const char* to_string(Mechanism m) {
  switch (m) {
    case Mechanism::vcg: return "vcg";
    case Mechanism::median: return "median";
    case Mechanism::dictator: return "dictator";
  }
  return "?";
}

NEResult ne_from_params(const CountryParams& p) {
  if (p.alpha.size() != p.delta.size()) {
    throw Error(ErrorCode::shape_mismatch, "alpha and delta differ in length");
  }
  const double sa = std::accumulate(p.alpha.begin(), p.alpha.end(), 0.0);
  const double sd = std::accumulate(p.delta.begin(), p.delta.end(), 0.0);
  NEResult r;
  const double Q = 0.5 * sa / (1.0 + sd);
  r.q.resize(p.alpha.size());
  for (std::size_t c = 0; c < p.alpha.size(); ++c) {
    r.q[c] = p.alpha[c] / 2.0 - p.delta[c] * Q;
  }
  // Summing the q_c keeps Q_W = sum(q) exact in floating point.
  r.Q_W = std::accumulate(r.q.begin(), r.q.end(), 0.0);
  return r;
}

double country_utility(const CountryParams& p, std::size_t c,
                       const std::vector<double>& q) {
  const double Q = std::accumulate(q.begin(), q.end(), 0.0);
  return p.alpha[c] * q[c] - q[c] * q[c] - p.delta[c] * Q * Q;
}

CountryParams vcg_params(const Population& pop, const Intervention& iv) {
  check_intervention(pop, iv);
  CountryParams p;
  std::size_t k = 0;
  for (const auto& country : pop.countries) {
    double A = 0, B = 0, D = 0;
    for (const auto& cit : country) {
      A += cit.a - iv[k++];
      B += cit.b;
      D += cit.d;
    }
    p.alpha.push_back(A / B);
    p.delta.push_back(D / B);
  }
  return p;
}

NEResult vcg_ne(const Population& pop, const Intervention& iv) {
  return ne_from_params(vcg_params(pop, iv));
}

std::vector<double> median_targets(const Population& pop, const Intervention& iv,
                                   const std::vector<double>& q) {
  const double Q = std::accumulate(q.begin(), q.end(), 0.0);
  std::vector<double> targets(pop.n_countries());
  std::vector<double> votes;
  std::size_t k = 0;
  for (std::size_t c = 0; c < pop.n_countries(); ++c) {
    const double Q_other = Q - q[c];
    votes.clear();
    for (const auto& cit : pop.countries[c]) {
      votes.push_back((cit.a - iv[k++] - 2.0 * cit.d * Q_other) /
                      (2.0 * (cit.b + cit.d)));
    }
    targets[c] = lower_median(votes);
  }
  return targets;
}

double median_residual(const Population& pop, const Intervention& iv,
                       const std::vector<double>& q) {
  const auto t = median_targets(pop, iv, q);
  double r = 0.0;
  for (std::size_t c = 0; c < q.size(); ++c) r = std::max(r, std::abs(t[c] - q[c]));
  return r;
}

NEResult median_ne(const Population& pop, const Intervention& iv,
                   const MedianOptions& opts) {
  check_intervention(pop, iv);
  if (!(opts.damping > 0.0 && opts.damping <= 1.0) || !(opts.tol > 0.0)) {
    throw Error(ErrorCode::invalid_config, "median damping must be in (0, 1], tol > 0");
  }
  NEResult r;
  r.q.assign(pop.n_countries(), 0.0);
  double step = 0.0;
  for (long it = 1; it <= opts.max_iter; ++it) {
    const auto t = median_targets(pop, iv, r.q);
    double sq = 0.0;
    for (std::size_t c = 0; c < r.q.size(); ++c) {
      const double delta = opts.damping * (t[c] - r.q[c]);
      r.q[c] += delta;
      sq += delta * delta;
    }
    step = std::sqrt(sq);
    if (!std::isfinite(step)) {
      throw NoConvergence("median iteration diverged", step, it);
    }
    if (step <= opts.tol) {
      r.iterations = it;
      r.residual = median_residual(pop, iv, r.q);
      r.Q_W = std::accumulate(r.q.begin(), r.q.end(), 0.0);
      return r;
    }
  }
  throw NoConvergence("median iteration did not converge", step, opts.max_iter);
}

std::vector<std::size_t> draw_dictators(const Population& pop, std::mt19937_64& rng) {
  std::vector<std::size_t> out;
  for (const auto& country : pop.countries) {
    std::uniform_int_distribution<std::size_t> pick(0, country.size() - 1);
    out.push_back(pick(rng));
  }
  return out;
}

CountryParams dictator_params(const Population& pop, const Intervention& iv,
                              const std::vector<std::size_t>& dictators) {
  check_intervention(pop, iv);
  const auto off = pop.offsets();
  CountryParams p;
  for (std::size_t c = 0; c < pop.n_countries(); ++c) {
    const Citizen& cit = pop.countries[c].at(dictators.at(c));
    p.alpha.push_back((cit.a - iv[off[c] + dictators[c]]) / cit.b);
    p.delta.push_back(cit.d / cit.b);
  }
  return p;
}

NEResult random_dictator_ne(const Population& pop, const Intervention& iv,
                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto dictators = draw_dictators(pop, rng);
  NEResult r = ne_from_params(dictator_params(pop, iv, dictators));
  r.dictators = std::move(dictators);
  return r;
}

std::vector<Intervention> sample_interventions(const Population& pop,
                                               std::uint64_t seed, std::size_t n,
                                               double lambda_max) {
  return sample_impl(pop, seed, n, lambda_max, -1);
}

std::vector<Intervention> zero_on_country_interventions(const Population& pop,
                                                        std::size_t c,
                                                        std::uint64_t seed,
                                                        std::size_t n,
                                                        double lambda_max) {
  if (c >= pop.n_countries()) {
    throw Error(ErrorCode::invalid_config, fmt::format("no country {}", c));
  }
  return sample_impl(pop, seed, n, lambda_max, static_cast<std::ptrdiff_t>(c));
}

}  // namespace mechagency::voting
