/*
 * Copyright 2026 The pdzdpg Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "pdzdpg/rng.hpp"
#include "pdzdpg/smoothing.hpp"
#include "pdzdpg/systems.hpp"

namespace pdzdpg {

/// A model-based oracle failed (bracketing, non-finite iterate).
class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Clairvoyant AWGN allocation p_i(h) = max(0, w_i / nu - v_i / h_i).
struct WaterfillSolution {
  double dual_level = 0;  // nu
  Eigen::VectorXd weights;
  Eigen::VectorXd noise;
  double achieved_budget = 0;      // E{sum p} at nu
  McEstimate<double> sumrate{0, 0};  // E{sum w_i log(1 + h_i p_i / v_i)}
  int bisection_steps = 0;

  Eigen::VectorXd allocate(const Eigen::VectorXd& h) const;
};

/// Per-state waterfilling at a fixed dual level.
Eigen::VectorXd waterfill_allocation(const Eigen::VectorXd& weights, const Eigen::VectorXd& noise,
                                     const Eigen::VectorXd& h, double nu);

/// Bisection on nu so that the sample mean of sum p over `channels`
/// (one column per draw) equals p_max within tol * p_max.
WaterfillSolution waterfill_from_samples(const ServiceSpec& spec, const Eigen::MatrixXd& channels, double tol);

/// Same, with n_mc channel draws from `dist` held fixed across bisection steps.
WaterfillSolution waterfill_clairvoyant(const ServiceSpec& spec, const ChannelDist& dist, std::int64_t n_mc,
                                        double tol, Rng& rng);

/// WMMSE iterate for the single-receiver interference model.
struct WmmseIterate {
  Eigen::VectorXd amplitudes;    // transmit power = amplitude^2
  Eigen::VectorXd receivers;     // scalar MMSE receivers
  Eigen::VectorXd mse_weights;
  double objective = 0;          // weighted sumrate at `amplitudes`
  int iterations = 0;

  Eigen::VectorXd powers() const { return amplitudes.cwiseAbs2(); }
};

/// Called after every outer iteration with the current iterate.
using WmmseObserver = std::function<void(const WmmseIterate&)>;

/// WMMSE for one channel realization under the instantaneous budget
/// sum p <= p_max, run until the objective improves by less than `tol`.
WmmseIterate wmmse_instant(const ServiceSpec& spec, const Eigen::VectorXd& h, int max_iters = 1000,
                           double tol = 1e-10, const WmmseObserver& observer = {});

/// Mean WMMSE weighted sumrate over n_mc channel draws.
McEstimate<double> wmmse_ergodic(const ServiceSpec& spec, const ChannelDist& dist, std::int64_t n_mc, Rng& rng,
                                 int max_iters = 1000, double tol = 1e-10);

}  // namespace pdzdpg
