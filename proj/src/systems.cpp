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

#include "pdzdpg/systems.hpp"

#include <cmath>
#include <limits>

namespace pdzdpg {

Eigen::VectorXd sample_channel(const ChannelDist& dist, Rng& rng) {
  Eigen::VectorXd h(dist.dim);
  for (int i = 0; i < dist.dim; ++i) {
    // exponential_distribution can return exactly 0 with tiny probability
    double v = rng.exponential(dist.rate);
    h[i] = v > 0 ? v : std::numeric_limits<double>::min();
  }
  return h;
}

void ServiceSpec::validate() const {
  if (n_users < 1) throw std::invalid_argument("n_users must be positive");
  if (weights.size() != n_users || noise.size() != n_users)
    throw std::invalid_argument("weights and noise must have one entry per user");
  if ((weights.array() <= 0).any()) throw std::invalid_argument("user weights must be positive");
  if (std::abs(weights.sum() - 1.0) > 1e-12) throw std::invalid_argument("user weights must sum to 1");
  if ((noise.array() <= 0).any()) throw std::invalid_argument("noise powers must be positive");
  if (!(p_max > 0)) throw std::invalid_argument("p_max must be positive");
}

Eigen::VectorXd random_user_weights(int n_users, Rng& rng) {
  Eigen::VectorXd w(n_users);
  for (int i = 0; i < n_users; ++i) {
    double u = rng.uniform();
    while (u <= 0) u = rng.uniform();
    w[i] = u;
  }
  return w / w.sum();
}

ConstraintLayout constraint_layout(const ServiceSpec& spec) {
  ConstraintLayout layout(spec.n_users, ConstraintDescriptor{true, ConstraintSign::service_ge_x});
  layout.push_back({false, ConstraintSign::budget_ge_usage});
  return layout;
}

Eigen::VectorXd service_vector(const ServiceSpec& spec, const Eigen::VectorXd& h,
                               const Eigen::VectorXd& p) {
  if (h.size() != spec.n_users || p.size() != spec.n_users)
    throw std::invalid_argument("service_vector: expected " + std::to_string(spec.n_users) + " users");
  Eigen::VectorXd f(spec.n_constraints());
  f.head(spec.n_users) = spec.kind == ServiceKind::awgn ? awgn_rates(h, p, spec.noise)
                                                        : mai_rates(h, p, spec.noise);
  f[spec.n_users] = spec.p_max - p.sum();
  return f;
}

Eigen::VectorXd constraint_residuals(const Eigen::VectorXd& f, const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& slack) {
  if (x.size() + 1 != f.size() || slack.size() != f.size())
    throw std::invalid_argument("constraint_residuals: dimension mismatch");
  Eigen::VectorXd r = f - slack;
  r.head(x.size()) -= x;
  return r;
}

ServiceEvaluation service_and_constraints(const ServiceSpec& spec, const Eigen::VectorXd& h,
                                          const Eigen::VectorXd& p, const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& slack) {
  Eigen::VectorXd f = service_vector(spec, h, p);
  Eigen::VectorXd r = constraint_residuals(f, x, slack);
  return {std::move(f), std::move(r)};
}

BoxSet<double> action_set(const ServiceSpec& spec) {
  return BoxSet<double>::uniform(spec.n_users, 0.0, spec.p_max);
}

}  // namespace pdzdpg
