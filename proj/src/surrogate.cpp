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

#include "mechagency/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "mechagency/errors.hpp"

namespace mechagency::surrogate {

Mlp Mlp::glorot(const std::vector<std::size_t>& widths, std::uint64_t seed) {
  Mlp net = zeros(widths);
  std::mt19937_64 rng(seed);
  for (auto& w : net.W) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> u(-limit, limit);
    // Row-major fill so the draw order does not depend on storage order.
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = u(rng);
    }
  }
  return net;
}

Mlp Mlp::zeros(const std::vector<std::size_t>& widths) {
  if (widths.size() < 2) {
    throw Error(ErrorCode::invalid_config, "network needs input and output widths");
  }
  Mlp net;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    if (widths[l] == 0 || widths[l + 1] == 0) {
      throw Error(ErrorCode::invalid_config, "layer widths must be positive");
    }
    const auto out = static_cast<Eigen::Index>(widths[l + 1]);
    const auto in = static_cast<Eigen::Index>(widths[l]);
    net.W.push_back(Eigen::MatrixXd::Zero(out, in));
    net.b.push_back(Eigen::VectorXd::Zero(out));
  }
  return net;
}

std::vector<std::size_t> Mlp::widths() const {
  std::vector<std::size_t> out;
  if (W.empty()) return out;
  out.push_back(static_cast<std::size_t>(W.front().cols()));
  for (const auto& w : W) out.push_back(static_cast<std::size_t>(w.rows()));
  return out;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < W.size(); ++l) {
    n += static_cast<std::size_t>(W[l].size() + b[l].size());
  }
  return n;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  if (W.empty() || x.rows() != W.front().cols()) {
    throw Error(ErrorCode::shape_mismatch,
                fmt::format("network expects {} inputs, got {}",
                            W.empty() ? 0 : W.front().cols(), x.rows()));
  }
  Eigen::MatrixXd h = x;
  for (std::size_t l = 0; l < W.size(); ++l) {
    Eigen::MatrixXd z = (W[l] * h).colwise() + b[l];
    h = l + 1 < W.size() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
  }
  return h;
}

std::vector<double> Mlp::parameters() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  for (std::size_t l = 0; l < W.size(); ++l) {
    p.insert(p.end(), W[l].data(), W[l].data() + W[l].size());
    p.insert(p.end(), b[l].data(), b[l].data() + b[l].size());
  }
  return p;
}

void Mlp::set_parameters(const std::vector<double>& p) {
  if (p.size() != parameter_count()) {
    throw Error(ErrorCode::shape_mismatch, "parameter vector has the wrong length");
  }
  std::size_t k = 0;
  for (std::size_t l = 0; l < W.size(); ++l) {
    std::copy_n(p.begin() + static_cast<std::ptrdiff_t>(k), W[l].size(), W[l].data());
    k += static_cast<std::size_t>(W[l].size());
    std::copy_n(p.begin() + static_cast<std::ptrdiff_t>(k), b[l].size(), b[l].data());
    k += static_cast<std::size_t>(b[l].size());
  }
}

std::vector<double> Gradients::flatten() const {
  std::vector<double> p;
  for (std::size_t l = 0; l < dW.size(); ++l) {
    p.insert(p.end(), dW[l].data(), dW[l].data() + dW[l].size());
    p.insert(p.end(), db[l].data(), db[l].data() + db[l].size());
  }
  return p;
}

Eigen::MatrixXd equilibrium(const Eigen::MatrixXd& alpha, const Eigen::VectorXd& delta) {
  const double K = 1.0 + delta.sum();
  const Eigen::RowVectorXd Q = 0.5 * alpha.colwise().sum() / K;
  return 0.5 * alpha - delta * Q;
}

double loss_and_gradient(const Mlp& net, const Eigen::MatrixXd& x,
                         const Eigen::MatrixXd& q, const Eigen::VectorXd& delta,
                         Gradients* grad) {
  const std::size_t L = net.layers();
  if (L == 0 || x.rows() != net.W.front().cols() || q.rows() != net.W.back().rows() ||
      q.cols() != x.cols() || delta.size() != q.rows()) {
    throw Error(ErrorCode::shape_mismatch, "batch does not fit the network");
  }
  // Forward, keeping pre-activations for the backward pass.
  std::vector<Eigen::MatrixXd> acts{x};
  std::vector<Eigen::MatrixXd> pre;
  for (std::size_t l = 0; l < L; ++l) {
    pre.push_back((net.W[l] * acts.back()).colwise() + net.b[l]);
    acts.push_back(l + 1 < L ? Eigen::MatrixXd(pre.back().cwiseMax(0.0)) : pre.back());
  }
  const Eigen::MatrixXd& alpha = acts.back();
  if (!alpha.allFinite()) throw Error(ErrorCode::non_finite, "non-finite activation");

  const Eigen::MatrixXd e = equilibrium(alpha, delta) - q;
  const double loss = e.squaredNorm();
  if (!grad) return loss;

  // dL/dalpha_k = e_k - (sum_c e_c delta_c) / K, per column.
  const double K = 1.0 + delta.sum();
  const Eigen::RowVectorXd ed = delta.transpose() * e;
  Eigen::MatrixXd g = e.rowwise() - ed / K;

  grad->dW.assign(L, {});
  grad->db.assign(L, {});
  for (std::size_t l = L; l-- > 0;) {
    if (l + 1 < L) g = g.cwiseProduct((pre[l].array() > 0.0).cast<double>().matrix());
    grad->dW[l] = g * acts[l].transpose();
    grad->db[l] = g.rowwise().sum();
    if (l > 0) g = net.W[l].transpose() * g;
  }
  for (std::size_t l = 0; l < L; ++l) {
    if (!grad->dW[l].allFinite() || !grad->db[l].allFinite()) {
      throw Error(ErrorCode::non_finite, "non-finite gradient");
    }
  }
  return loss;
}

Adam::Adam(const Mlp& net, AdamConfig cfg) : cfg_(cfg) {
  for (std::size_t l = 0; l < net.layers(); ++l) {
    mW_.push_back(Eigen::MatrixXd::Zero(net.W[l].rows(), net.W[l].cols()));
    vW_.push_back(mW_.back());
    mb_.push_back(Eigen::VectorXd::Zero(net.b[l].size()));
    vb_.push_back(mb_.back());
  }
}

void Adam::step(Mlp& net, const Gradients& g) {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * grad;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
    param.array() -=
        cfg_.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg_.eps);
  };
  for (std::size_t l = 0; l < net.layers(); ++l) {
    update(net.W[l], g.dW[l], mW_[l], vW_[l]);
    update(net.b[l], g.db[l], mb_[l], vb_[l]);
  }
}

OlsFit ols(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::degenerate_design, "regression needs at least two points");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx / n < 1e-12) {
    throw Error(ErrorCode::degenerate_design,
                fmt::format("regressor variance {:.3g} below 1e-12", sxx / n));
  }
  OlsFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (x.size() > 2) {
    double rss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      rss += r * r;
    }
    f.slope_stderr = std::sqrt(rss / (n - 2.0) / sxx);
  }
  return f;
}

DeltaEstimate estimate_delta_regression(const voting::Population& pop,
                                        const GroundTruth& solve, std::uint64_t seed,
                                        std::size_t n) {
  DeltaEstimate d;
  d.method = DeltaEstimate::Method::regression;
  for (std::size_t c = 0; c < pop.n_countries(); ++c) {
    const auto ivs =
        voting::zero_on_country_interventions(pop, c, voting::derive_seed(seed, c), n);
    std::vector<double> xs, ys;
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t j = 0; j < ivs.size(); ++j) {
      const auto ne = solve(ivs[j], c * n + j);
      xs.push_back(ne.Q_W);
      ys.push_back(ne.q[c]);
      pairs.emplace_back(ne.q[c], ne.Q_W);
    }
    const OlsFit f = ols(xs, ys);
    d.delta_hat.push_back(-f.slope);
    d.slope_stderr.push_back(f.slope_stderr);
    d.pairs.push_back(std::move(pairs));
  }
  return d;
}

DeltaEstimate estimate_delta_plug_in(const voting::Population& pop) {
  DeltaEstimate d;
  d.method = DeltaEstimate::Method::plug_in;
  for (const auto& country : pop.countries) {
    double s = 0;
    for (const auto& cit : country) s += cit.d / cit.b;
    d.delta_hat.push_back(s / static_cast<double>(country.size()));
    d.slope_stderr.push_back(0.0);
    d.pairs.emplace_back();
  }
  return d;
}

Dataset make_dataset(const std::vector<voting::Intervention>& ivs,
                     const std::vector<voting::NEResult>& truth, double input_scale) {
  if (ivs.empty() || ivs.size() != truth.size()) {
    throw Error(ErrorCode::shape_mismatch, "interventions and ground truth differ");
  }
  Dataset d;
  const auto n = static_cast<Eigen::Index>(ivs.size());
  d.x.resize(static_cast<Eigen::Index>(ivs.front().size()), n);
  d.q.resize(static_cast<Eigen::Index>(truth.front().q.size()), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& iv = ivs[static_cast<std::size_t>(j)];
    const auto& q = truth[static_cast<std::size_t>(j)].q;
    for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
      d.x(i, j) = input_scale * iv[static_cast<std::size_t>(i)];
    }
    for (Eigen::Index c = 0; c < d.q.rows(); ++c) d.q(c, j) = q[static_cast<std::size_t>(c)];
  }
  return d;
}

TrainResult train(const Dataset& data, const Eigen::VectorXd& delta,
                  const TrainConfig& cfg) {
  if (cfg.batch == 0 || cfg.epochs == 0) {
    throw Error(ErrorCode::invalid_config, "batch size and epochs must be positive");
  }
  std::vector<std::size_t> widths{static_cast<std::size_t>(data.x.rows())};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(static_cast<std::size_t>(data.q.rows()));

  TrainResult r;
  r.net = Mlp::glorot(widths, cfg.init_seed);
  Adam opt(r.net, cfg.adam);
  std::mt19937_64 rng(cfg.shuffle_seed);
  const auto n = static_cast<std::size_t>(data.x.cols());
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);

  Gradients g;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch) {
      const std::size_t m = std::min(cfg.batch, n - start);
      Eigen::MatrixXd xb(data.x.rows(), static_cast<Eigen::Index>(m));
      Eigen::MatrixXd qb(data.q.rows(), static_cast<Eigen::Index>(m));
      for (std::size_t k = 0; k < m; ++k) {
        xb.col(static_cast<Eigen::Index>(k)) = data.x.col(order[start + k]);
        qb.col(static_cast<Eigen::Index>(k)) = data.q.col(order[start + k]);
      }
      try {
        total += loss_and_gradient(r.net, xb, qb, delta, &g);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::non_finite) throw;
        throw Error(ErrorCode::non_finite,
                    fmt::format("{} in epoch {}", e.what(), epoch + 1));
      }
      opt.step(r.net, g);
    }
    r.curve.push_back(total / static_cast<double>(n));
  }
  return r;
}

}  // namespace mechagency::surrogate
