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
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mechagency/voting.hpp"

namespace mechagency::surrogate {

/// Fully connected network, ReLU on hidden layers and identity output.
/// Column-major batches: inputs are (in x batch).
class Mlp {
 public:
  Mlp() = default;
  /// Glorot-uniform weights, zero biases.
  static Mlp glorot(const std::vector<std::size_t>& widths, std::uint64_t seed);
  static Mlp zeros(const std::vector<std::size_t>& widths);

  std::vector<std::size_t> widths() const;
  std::size_t layers() const { return W.size(); }
  std::size_t parameter_count() const;

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;

  std::vector<double> parameters() const;
  void set_parameters(const std::vector<double>& p);

  std::vector<Eigen::MatrixXd> W;
  std::vector<Eigen::VectorXd> b;
};

struct Gradients {
  std::vector<Eigen::MatrixXd> dW;
  std::vector<Eigen::VectorXd> db;

  std::vector<double> flatten() const;
};

/// q_hat from (alpha_hat, delta_hat) through the closed-form equilibrium,
/// column by column.
Eigen::MatrixXd equilibrium(const Eigen::MatrixXd& alpha, const Eigen::VectorXd& delta);

/// Loss = sum over batch and countries of (q_hat - q)^2, with q_hat the
/// equilibrium of (net(x), delta). Fills `grad` when given. Throws
/// Error(non_finite) on a non-finite activation or gradient.
double loss_and_gradient(const Mlp& net, const Eigen::MatrixXd& x,
                         const Eigen::MatrixXd& q, const Eigen::VectorXd& delta,
                         Gradients* grad);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(const Mlp& net, AdamConfig cfg);
  void step(Mlp& net, const Gradients& g);

 private:
  AdamConfig cfg_;
  long t_ = 0;
  std::vector<Eigen::MatrixXd> mW_, vW_;
  std::vector<Eigen::VectorXd> mb_, vb_;
};

struct DeltaEstimate {
  enum class Method { regression, plug_in };
  Method method = Method::regression;
  std::vector<double> delta_hat;
  std::vector<double> slope_stderr;
  /// Per country: the (q_c, Q_W) pairs of the regression.
  std::vector<std::vector<std::pair<double, double>>> pairs;
};

struct OlsFit {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_stderr = 0.0;
};

/// y = intercept + slope * x. Throws DegenerateDesign when var(x) < 1e-12.
OlsFit ols(const std::vector<double>& x, const std::vector<double>& y);

/// NE solver used to produce ground truth for one intervention.
using GroundTruth = std::function<voting::NEResult(const voting::Intervention&,
                                                   std::size_t index)>;

/// Regression of q_c on Q_W over `n` interventions zeroing country c.
DeltaEstimate estimate_delta_regression(const voting::Population& pop,
                                        const GroundTruth& solve,
                                        std::uint64_t seed, std::size_t n = 10);
/// Citizen mean of d/b per country.
DeltaEstimate estimate_delta_plug_in(const voting::Population& pop);

struct TrainConfig {
  std::vector<std::size_t> hidden{128, 256, 256, 128};
  std::size_t epochs = 100;
  std::size_t batch = 32;
  AdamConfig adam;
  double input_scale = 10.0;
  std::uint64_t init_seed = 0;
  std::uint64_t shuffle_seed = 0;
};

struct Dataset {
  Eigen::MatrixXd x;  // scaled lambda, (citizens x samples)
  Eigen::MatrixXd q;  // ground truth, (countries x samples)
};

Dataset make_dataset(const std::vector<voting::Intervention>& ivs,
                     const std::vector<voting::NEResult>& truth, double input_scale);

struct TrainResult {
  Mlp net;
  std::vector<double> curve;  // mean per-sample loss per epoch
};

TrainResult train(const Dataset& data, const Eigen::VectorXd& delta,
                  const TrainConfig& cfg);

}  // namespace mechagency::surrogate
