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

#include "pdzdpg/baselines.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace pdzdpg {

Eigen::VectorXd waterfill_allocation(const Eigen::VectorXd& weights, const Eigen::VectorXd& noise,
                                     const Eigen::VectorXd& h, double nu) {
  return (weights.array() / nu - noise.array() / h.array()).max(0.0).matrix();
}

Eigen::VectorXd WaterfillSolution::allocate(const Eigen::VectorXd& h) const {
  return waterfill_allocation(weights, noise, h, dual_level);
}

namespace {

McEstimate<double> mean_and_stderr(const Eigen::ArrayXd& samples) {
  const double n = double(samples.size());
  const double mean = samples.mean();
  if (samples.size() < 2) return {mean, 0.0};
  const double var = (samples - mean).square().sum() / (n - 1);
  return {mean, std::sqrt(var / n)};
}

}  // namespace

WaterfillSolution waterfill_from_samples(const ServiceSpec& spec, const Eigen::MatrixXd& channels, double tol) {
  spec.validate();
  if (spec.kind != ServiceKind::awgn) throw std::invalid_argument("waterfilling applies to the AWGN model only");
  if (channels.rows() != spec.n_users || channels.cols() < 1)
    throw std::invalid_argument("waterfill: channel samples must be n_users x n_mc");
  if (!(tol > 0)) throw std::invalid_argument("waterfill: tol must be positive");

  // v_i / h_i per draw; the allocation is max(0, w_i / nu - v_i / h_i).
  const Eigen::ArrayXXd inv_snr = (1.0 / channels.array()).colwise() * spec.noise.array();
  const double n_mc = double(channels.cols());
  auto budget = [&](double nu) {
    const Eigen::ArrayXd level = spec.weights.array() / nu;
    double total = 0;
    for (Eigen::Index k = 0; k < inv_snr.cols(); ++k) total += (level - inv_snr.col(k)).max(0.0).sum();
    return total / n_mc;
  };

  const double target = spec.p_max;
  double lo = 1e-8;
  if (budget(lo) < target) {
    std::ostringstream msg;
    msg << "waterfill: budget at nu=" << lo << " is " << budget(lo) << " < p_max=" << target;
    throw OracleError(msg.str());
  }
  double hi = 1.0;
  while (budget(hi) >= target) {
    hi *= 2.0;
    if (hi > 1e300) throw OracleError("waterfill: could not bracket the dual level from above");
  }

  WaterfillSolution sol;
  sol.weights = spec.weights;
  sol.noise = spec.noise;
  double nu = std::sqrt(lo * hi);
  double b = budget(nu);
  int steps = 0;
  while (std::abs(b - target) > tol * target && steps < 500) {
    (b > target ? lo : hi) = nu;
    // geometric midpoint while the bracket spans orders of magnitude
    nu = hi / lo > 4.0 ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    b = budget(nu);
    ++steps;
  }
  if (std::abs(b - target) > tol * target) throw OracleError("waterfill: bisection did not reach tolerance");
  sol.dual_level = nu;
  sol.achieved_budget = b;
  sol.bisection_steps = steps;

  Eigen::ArrayXd rates(channels.cols());
  for (Eigen::Index k = 0; k < channels.cols(); ++k) {
    const Eigen::VectorXd h = channels.col(k);
    rates[k] = spec.weights.dot(awgn_rates(h, sol.allocate(h), spec.noise));
  }
  sol.sumrate = mean_and_stderr(rates);
  return sol;
}

WaterfillSolution waterfill_clairvoyant(const ServiceSpec& spec, const ChannelDist& dist, std::int64_t n_mc,
                                        double tol, Rng& rng) {
  dist.validate();
  if (dist.dim != spec.n_users) throw std::invalid_argument("waterfill: channel dimension must equal n_users");
  if (n_mc < 1) throw std::invalid_argument("waterfill: n_mc must be positive");
  Eigen::MatrixXd channels(spec.n_users, n_mc);
  for (std::int64_t k = 0; k < n_mc; ++k) channels.col(k) = sample_channel(dist, rng);
  return waterfill_from_samples(spec, channels, tol);
}

namespace {

struct WmmseSystem {
  const Eigen::ArrayXd& alpha;  // user weights
  const Eigen::ArrayXd& noise;
  Eigen::ArrayXd gain;          // amplitude gain sqrt(h)
  Eigen::ArrayXd h;

  double weighted_sumrate(const Eigen::ArrayXd& b) const {
    const Eigen::ArrayXd p = b.square();
    return (alpha * mai_rates(h.matrix(), p.matrix(), noise.matrix()).array()).sum();
  }
};

/// Minimizes the weighted MSE over amplitudes subject to sum b^2 <= p_max.
Eigen::ArrayXd amplitude_update(const WmmseSystem& sys, const Eigen::ArrayXd& u, const Eigen::ArrayXd& w,
                                double p_max) {
  const double c = (sys.alpha * w * u.square()).sum();
  const Eigen::ArrayXd num = sys.alpha * w * u * sys.gain;
  const Eigen::ArrayXd den = sys.h * c;
  auto amplitudes = [&](double mu) { return Eigen::ArrayXd(num / (mu + den)); };
  auto power = [&](double mu) { return amplitudes(mu).square().sum(); };

  if ((den > 0).all() && power(0.0) <= p_max) return amplitudes(0.0);
  double lo = 0.0, hi = 1.0;
  while (power(hi) > p_max) {
    hi *= 2.0;
    if (hi > 1e300) throw OracleError("wmmse: multiplier bracket overflow");
  }
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (power(mid) > p_max ? lo : hi) = mid;
  }
  return amplitudes(hi);  // feasible end of the bracket
}

}  // namespace

WmmseIterate wmmse_instant(const ServiceSpec& spec, const Eigen::VectorXd& h, int max_iters, double tol,
                           const WmmseObserver& observer) {
  spec.validate();
  if (h.size() != spec.n_users) throw std::invalid_argument("wmmse: channel length mismatch");
  if ((h.array() <= 0).any()) throw std::invalid_argument("wmmse: channel gains must be positive");
  if (max_iters < 1) throw std::invalid_argument("wmmse: max_iters must be positive");

  const Eigen::ArrayXd alpha = spec.weights.array();
  const Eigen::ArrayXd noise = spec.noise.array();
  const WmmseSystem sys{alpha, noise, h.array().sqrt(), h.array()};

  WmmseIterate it;
  Eigen::ArrayXd b = Eigen::ArrayXd::Constant(spec.n_users, std::sqrt(spec.p_max / spec.n_users));
  it.amplitudes = b.matrix();
  it.objective = sys.weighted_sumrate(b);
  it.receivers = Eigen::VectorXd::Zero(spec.n_users);
  it.mse_weights = Eigen::VectorXd::Ones(spec.n_users);
  if (observer) observer(it);

  for (int k = 0; k < max_iters; ++k) {
    const double received = (sys.h * b.square()).sum();
    const Eigen::ArrayXd u = sys.gain * b / (noise + received);
    const Eigen::ArrayXd w = 1.0 / (1.0 - u * sys.gain * b);
    b = amplitude_update(sys, u, w, spec.p_max);

    const double prev = it.objective;
    it.amplitudes = b.matrix();
    it.receivers = u.matrix();
    it.mse_weights = w.matrix();
    it.objective = sys.weighted_sumrate(b);
    it.iterations = k + 1;
    if (!std::isfinite(it.objective) || !b.allFinite() || !w.allFinite())
      throw OracleError("wmmse: non-finite iterate at outer iteration " + std::to_string(k + 1));
    if (observer) observer(it);
    if (it.objective - prev < tol) break;
  }
  return it;
}

McEstimate<double> wmmse_ergodic(const ServiceSpec& spec, const ChannelDist& dist, std::int64_t n_mc, Rng& rng,
                                 int max_iters, double tol) {
  dist.validate();
  if (n_mc < 1) throw std::invalid_argument("wmmse_ergodic: n_mc must be positive");
  Eigen::ArrayXd values(n_mc);
  for (std::int64_t k = 0; k < n_mc; ++k)
    values[k] = wmmse_instant(spec, sample_channel(dist, rng), max_iters, tol).objective;
  return mean_and_stderr(values);
}

}  // namespace pdzdpg
