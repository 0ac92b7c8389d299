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

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pdzdpg/rng.hpp"
#include "pdzdpg/smoothing.hpp"

namespace pdzdpg {

enum class ChannelKind { exponential_iid };

/// i.i.d. fading gains H_i ~ Exp(rate).
struct ChannelDist {
  ChannelKind kind = ChannelKind::exponential_iid;
  double rate = 0.5;
  int dim = 1;

  double mean() const { return 1.0 / rate; }

  void validate() const {
    if (!(rate > 0)) throw std::invalid_argument("channel rate must be positive");
    if (dim < 1) throw std::invalid_argument("channel dimension must be positive");
  }
};

Eigen::VectorXd sample_channel(const ChannelDist& dist, Rng& rng);

enum class ServiceKind { awgn, mai };

struct ServiceSpec {
  ServiceKind kind = ServiceKind::awgn;
  Eigen::VectorXd weights;  // positive, sums to 1
  Eigen::VectorXd noise;    // positive
  double p_max = 20.0;
  int n_users = 1;

  /// Rate constraints (one per user) plus the total-power constraint.
  int n_constraints() const { return n_users + 1; }

  void validate() const;
};

/// Uniform draws normalized to sum to one.
Eigen::VectorXd random_user_weights(int n_users, Rng& rng);

/// log(1 + h_i p_i / v_i), in nats.
template <typename DH, typename DP, typename DV>
Eigen::VectorXd awgn_rates(const Eigen::MatrixBase<DH>& h, const Eigen::MatrixBase<DP>& p,
                           const Eigen::MatrixBase<DV>& v) {
  if (h.size() != p.size() || h.size() != v.size())
    throw std::invalid_argument("awgn_rates: length mismatch");
  if ((v.array() <= 0).any()) throw std::invalid_argument("awgn_rates: noise must be positive");
  return (h.array() * p.array() / v.array()).log1p().matrix();
}

/// log(1 + h_i p_i / (v_i + sum_{j != i} h_j p_j)): all users share one receiver.
template <typename DH, typename DP, typename DV>
Eigen::VectorXd mai_rates(const Eigen::MatrixBase<DH>& h, const Eigen::MatrixBase<DP>& p,
                          const Eigen::MatrixBase<DV>& v) {
  if (h.size() != p.size() || h.size() != v.size())
    throw std::invalid_argument("mai_rates: length mismatch");
  if ((v.array() <= 0).any()) throw std::invalid_argument("mai_rates: noise must be positive");
  const Eigen::ArrayXd rx = h.array() * p.array();
  const double total = rx.sum();
  // total - rx can round slightly negative when one user dominates
  const Eigen::ArrayXd interference = (total - rx).max(0.0);
  return (rx / (v.array() + interference)).log1p().matrix();
}

enum class ConstraintSign { service_ge_x, budget_ge_usage };

struct ConstraintDescriptor {
  bool couples_x;
  ConstraintSign sign;
};

using ConstraintLayout = std::vector<ConstraintDescriptor>;

/// N_S rate constraints followed by the single power constraint.
ConstraintLayout constraint_layout(const ServiceSpec& spec);

/// Instantaneous service vector f(p, h) = [rates; p_max - sum(p)]. This is
/// the one black-box "probe" of the system.
Eigen::VectorXd service_vector(const ServiceSpec& spec, const Eigen::VectorXd& h,
                               const Eigen::VectorXd& p);

struct ServiceEvaluation {
  Eigen::VectorXd f;
  Eigen::VectorXd residuals;  // f - [x; 0] - slack
};

ServiceEvaluation service_and_constraints(const ServiceSpec& spec, const Eigen::VectorXd& h,
                                          const Eigen::VectorXd& p, const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& slack);

/// Constraint residuals from an already-probed service vector.
Eigen::VectorXd constraint_residuals(const Eigen::VectorXd& f, const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& slack);

/// Action box [0, p_max]^{N_S}.
BoxSet<double> action_set(const ServiceSpec& spec);

}  // namespace pdzdpg
