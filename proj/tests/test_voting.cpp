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

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "mechagency/errors.hpp"
#include "mechagency/voting.hpp"

using namespace mechagency;
using namespace mechagency::voting;

namespace {

// Maximiser of a concave function on [lo, hi].
template <class F>
double golden_section(F f, double lo, double hi, double tol = 1e-10) {
  const double g = (std::sqrt(5.0) - 1) / 2;
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return (a + b) / 2;
}

CountryParams random_params(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> ua(0.0, 20.0), ud(0.0, 1.0);
  CountryParams p;
  for (std::size_t c = 0; c < n; ++c) {
    p.alpha.push_back(ua(rng));
    p.delta.push_back(ud(rng));
  }
  return p;
}

Population one_citizen_each(std::vector<Citizen> cs) {
  Population p;
  for (auto& c : cs) p.countries.push_back({c});
  return p;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_SUITE("voting") {

TEST_CASE("closed-form equilibrium on hand examples") {
  const auto one = ne_from_params({{1.0}, {0.0}});
  CHECK(one.Q_W == doctest::Approx(0.5));
  CHECK(one.q[0] == doctest::Approx(0.5));
  const auto two = ne_from_params({{1.0, 1.0}, {0.5, 0.5}});
  CHECK(two.Q_W == doctest::Approx(0.5));
  CHECK(two.q[0] == doctest::Approx(0.25));
  CHECK(two.q[1] == doctest::Approx(0.25));
  CHECK(sum(two.q) == doctest::Approx(two.Q_W));
}

TEST_CASE("equilibrium quantities are best responses") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 100; ++t) {
    const auto p = random_params(rng, 1 + rng() % 6);
    const auto ne = ne_from_params(p);
    CHECK(std::abs(sum(ne.q) - ne.Q_W) <= 1e-12);
    for (std::size_t c = 0; c < p.alpha.size(); ++c) {
      auto q = ne.q;
      auto u = [&](double x) {
        q[c] = x;
        return country_utility(p, c, q);
      };
      const double best = u(ne.q[c]);
      CHECK(u(ne.q[c] + 1e-3) <= best);
      CHECK(u(ne.q[c] - 1e-3) <= best);
      CHECK(std::abs(golden_section(u, ne.q[c] - 50, ne.q[c] + 50) - ne.q[c]) <= 1e-6);
    }
  }
}

TEST_CASE("population generation") {
  const auto a = generate_population(4);
  const auto b = generate_population(4);
  CHECK(a.n_countries() == 5);
  CHECK(a.total() == 1000);
  std::size_t total = 0;
  for (std::size_t c = 0; c < a.n_countries(); ++c) {
    const double n = static_cast<double>(a.size(c));
    total += a.size(c);
    for (std::size_t i = 0; i < a.size(c); ++i) {
      const auto& x = a.countries[c][i];
      CHECK(x.a >= 0.35);
      CHECK(x.a <= 0.65);
      CHECK(x.b >= 7.0 / n);
      CHECK(x.b <= 13.0 / n);
      CHECK(x.d >= 0.05 / 5);
      CHECK(x.d <= 0.15 / 5);
      CHECK(x.a == b.countries[c][i].a);
    }
  }
  CHECK(total == 1000);
  CHECK(generate_population(5).countries[0][0].a != a.countries[0][0].a);
  CHECK_THROWS_AS(generate_population(0, 6, 5), Error);
}

TEST_CASE("country sizes are dispersed") {
  std::size_t distinct = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto p = generate_population(s);
    std::size_t lo = p.total(), hi = 0;
    for (std::size_t c = 0; c < p.n_countries(); ++c) {
      lo = std::min(lo, p.size(c));
      hi = std::max(hi, p.size(c));
    }
    distinct += hi > lo;
  }
  CHECK(distinct == 10);
}

TEST_CASE("vcg aggregates citizen coefficients") {
  Population pop;
  pop.countries = {{{0.5, 2.0, 0.1}, {0.3, 1.0, 0.2}}, {{0.5, 2.0, 0.1}, {0.3, 1.0, 0.2}}};
  const Intervention zero(4, 0.0);
  const auto ne = vcg_ne(pop, zero);
  const auto direct = ne_from_params({{0.8 / 3.0, 0.8 / 3.0}, {0.1, 0.1}});
  CHECK(ne.q[0] == doctest::Approx(direct.q[0]).epsilon(1e-14));
  CHECK(ne.Q_W == doctest::Approx(direct.Q_W).epsilon(1e-14));
  CHECK_THROWS_AS(vcg_ne(pop, Intervention{0.6, 0, 0, 0}), Error);
  CHECK_THROWS_AS(vcg_ne(pop, Intervention{0, 0}), Error);
}

TEST_CASE("raising lambda never raises total pollution under vcg") {
  const auto pop = generate_population(2);
  const auto ivs = sample_interventions(pop, 9, 20);
  std::mt19937_64 rng(1);
  for (const auto& iv : ivs) {
    auto bumped = iv;
    const std::size_t k = rng() % iv.size();
    bumped[k] = std::min(0.1, bumped[k] + 0.05);
    const auto a = vcg_ne(pop, iv), b = vcg_ne(pop, bumped);
    CHECK(b.Q_W <= a.Q_W + 1e-15);
    std::size_t c = 0;
    while (pop.offsets()[c] + pop.size(c) <= k) ++c;
    CHECK(vcg_params(pop, bumped).alpha[c] <= vcg_params(pop, iv).alpha[c]);
  }
}

TEST_CASE("single-citizen countries make all mechanisms coincide") {
  const auto pop = one_citizen_each({{0.5, 8.0, 0.02}, {0.4, 10.0, 0.01}, {0.6, 12.0, 0.03}});
  const Intervention iv{0.01, 0.05, 0.0};
  const auto v = vcg_ne(pop, iv);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto d = random_dictator_ne(pop, iv, s);
    for (std::size_t c = 0; c < 3; ++c) CHECK(d.q[c] == doctest::Approx(v.q[c]).epsilon(1e-14));
  }
  const auto m = median_ne(pop, iv, {0.3, 1e-12, 100'000});
  for (std::size_t c = 0; c < 3; ++c) CHECK(m.q[c] == doctest::Approx(v.q[c]).epsilon(1e-9));
}

TEST_CASE("median with d = 0 settles on the private optimum") {
  const auto pop = one_citizen_each({{0.5, 8.0, 0.0}, {0.4, 10.0, 0.0}});
  const Intervention iv{0.1, 0.0};
  const auto m = median_ne(pop, iv);
  CHECK(m.q[0] == doctest::Approx(0.4 / 16.0).epsilon(1e-5));
  CHECK(m.q[1] == doctest::Approx(0.4 / 20.0).epsilon(1e-5));
}

TEST_CASE("median solutions are fixed points") {
  const auto pop = generate_population(3);
  for (const auto& iv : sample_interventions(pop, 4, 5)) {
    const auto m = median_ne(pop, iv);
    CHECK(std::abs(sum(m.q) - m.Q_W) <= 1e-12);
    CHECK(median_residual(pop, iv, m.q) <= 10 * 1e-6);
  }
}

TEST_CASE("identical citizens make median match vcg") {
  Population pop;
  pop.countries = {std::vector<Citizen>(4, {0.5, 2.0, 0.01}),
                   std::vector<Citizen>(7, {0.4, 1.5, 0.02})};
  const Intervention iv(11, 0.02);
  const auto m = median_ne(pop, iv, {0.3, 1e-9, 1'000'000});
  const auto v = vcg_ne(pop, iv);
  for (std::size_t c = 0; c < 2; ++c) CHECK(std::abs(m.q[c] - v.q[c]) <= 1e-5);
}

TEST_CASE("median uses the lower median") {
  Population pop;
  pop.countries = {{{0.2, 1.0, 0.0}, {0.4, 1.0, 0.0}}};
  const auto t = median_targets(pop, Intervention{0, 0}, {0.0});
  CHECK(t[0] == doctest::Approx(0.2 / 2.0));
}

TEST_CASE("median reports non-convergence") {
  const auto pop = generate_population(3);
  const auto iv = sample_interventions(pop, 4, 1)[0];
  CHECK_THROWS_AS(median_ne(pop, iv, {0.3, 1e-14, 3}), NoConvergence);
}

TEST_CASE("random dictator is seeded and draws valid indices") {
  const auto pop = generate_population(1);
  const auto iv = sample_interventions(pop, 2, 1)[0];
  const auto a = random_dictator_ne(pop, iv, 77), b = random_dictator_ne(pop, iv, 77);
  CHECK(a.q == b.q);
  CHECK(a.dictators == b.dictators);
  for (std::size_t c = 0; c < pop.n_countries(); ++c) CHECK(a.dictators[c] < pop.size(c));
  CHECK(std::abs(sum(a.q) - a.Q_W) <= 1e-12);
}

TEST_CASE("intervention sampling follows the scaled Beta law") {
  const auto pop = generate_population(6);
  CHECK_THROWS_AS(sample_interventions(pop, 0, 0), Error);
  const auto one = sample_interventions(pop, 0, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].size() == pop.total());

  // Country means are U(0, 0.1); given the mean m' = 10 lambda_c the citizen
  // values are 0.1 * Beta with variance m'(1 - m')/11. Averaging over
  // m' ~ U(0, 1) gives a within-country variance of 0.01 / 66.
  const auto ivs = sample_interventions(pop, 1, 3000);
  const auto off = pop.offsets();
  double mean_sum = 0, within = 0;
  std::size_t within_n = 0;
  for (const auto& iv : ivs) {
    for (double x : iv) {
      CHECK(x >= 0.0);
      CHECK(x <= 0.1);
    }
    for (std::size_t c = 0; c < pop.n_countries(); ++c) {
      const double n = static_cast<double>(pop.size(c));
      double m = 0;
      for (std::size_t i = 0; i < pop.size(c); ++i) m += iv[off[c] + i];
      m /= n;
      mean_sum += m;
      for (std::size_t i = 0; i < pop.size(c); ++i) {
        within += (iv[off[c] + i] - m) * (iv[off[c] + i] - m);
      }
      within_n += pop.size(c) - 1;
    }
  }
  const double grand = mean_sum / (3000.0 * pop.n_countries());
  CHECK(std::abs(grand - 0.05) <= 0.003);
  CHECK(within / static_cast<double>(within_n) == doctest::Approx(0.01 / 66).epsilon(0.03));
}

TEST_CASE("zero-on-country interventions") {
  const auto pop = generate_population(8);
  const auto off = pop.offsets();
  const auto ivs = zero_on_country_interventions(pop, 2, 5);
  CHECK(ivs.size() == 10);
  for (const auto& iv : ivs) {
    for (std::size_t c = 0; c < pop.n_countries(); ++c) {
      for (std::size_t i = 0; i < pop.size(c); ++i) {
        const double x = iv[off[c] + i];
        if (c == 2) {
          CHECK(x == 0.0);
        } else {
          CHECK(x <= 0.1);
        }
      }
    }
  }
  CHECK(zero_on_country_interventions(pop, 2, 6) != ivs);
  CHECK_THROWS_AS(zero_on_country_interventions(pop, 5, 5), Error);
}

TEST_CASE("mechanism names") {
  CHECK(parse_mechanism("vcg") == Mechanism::vcg);
  CHECK(parse_mechanism("median") == Mechanism::median);
  CHECK(parse_mechanism("dictator") == Mechanism::dictator);
  CHECK(parse_mechanism("random-dictator") == Mechanism::dictator);
  CHECK_THROWS_AS(parse_mechanism("borda"), Error);
  CHECK(std::string(to_string(Mechanism::median)) == "median");
}

TEST_CASE("derived seeds separate streams") {
  CHECK(derive_seed(0, 1) != derive_seed(0, 2));
  CHECK(derive_seed(0, 1) != derive_seed(1, 1));
  CHECK(derive_seed(5, 3) == derive_seed(5, 3));
}

}  // TEST_SUITE
