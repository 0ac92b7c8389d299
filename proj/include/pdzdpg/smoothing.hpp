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
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "pdzdpg/rng.hpp"

namespace pdzdpg {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Gaussian smoothing radii for the state (x) and action spaces.
template <typename Scalar>
struct SmoothingParams {
  Scalar mu_S = Scalar(0.1);
  Scalar mu_R = Scalar(0.1);

  void validate() const {
    if (!(mu_S >= 0) || !(mu_R >= 0))
      throw std::invalid_argument("smoothing radii must be nonnegative");
  }
};

/// Axis-aligned closed box, possibly unbounded per coordinate.
template <typename Scalar>
class BoxSet {
 public:
  BoxSet(Vec<Scalar> lower, Vec<Scalar> upper)
      : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() != upper_.size())
      throw std::invalid_argument("BoxSet: bound dimensions differ");
    if ((lower_.array() > upper_.array()).any())
      throw std::invalid_argument("BoxSet: lower bound exceeds upper bound");
  }

  static BoxSet uniform(Eigen::Index dim, Scalar lo, Scalar hi) {
    return BoxSet(Vec<Scalar>::Constant(dim, lo), Vec<Scalar>::Constant(dim, hi));
  }
  static BoxSet nonnegative(Eigen::Index dim) {
    return uniform(dim, Scalar(0), std::numeric_limits<Scalar>::infinity());
  }
  static BoxSet unbounded(Eigen::Index dim) {
    return uniform(dim, -std::numeric_limits<Scalar>::infinity(),
                   std::numeric_limits<Scalar>::infinity());
  }

  Eigen::Index dim() const { return lower_.size(); }
  const Vec<Scalar>& lower() const { return lower_; }
  const Vec<Scalar>& upper() const { return upper_; }

  template <typename Derived>
  bool contains(const Eigen::MatrixBase<Derived>& v) const {
    return v.size() == dim() && (v.array() >= lower_.array()).all() &&
           (v.array() <= upper_.array()).all();
  }

 private:
  Vec<Scalar> lower_;
  Vec<Scalar> upper_;
};

/// Monte-Carlo estimate with its standard error.
template <typename Scalar>
struct McEstimate {
  Scalar value;
  Scalar std_error;
};

template <typename Scalar>
struct McGradient {
  Vec<Scalar> value;
  Vec<Scalar> std_error;
};

/// `dim` i.i.d. standard normal draws, in order.
template <typename Scalar = double>
Vec<Scalar> sample_gaussian(Eigen::Index dim, Rng& rng) {
  if (dim < 1) throw std::invalid_argument("sample_gaussian: dim must be >= 1");
  Vec<Scalar> u(dim);
  for (Eigen::Index i = 0; i < dim; ++i) u[i] = static_cast<Scalar>(rng.normal());
  return u;
}

/// Euclidean projection onto a box (coordinatewise clamp).
template <typename Derived>
Vec<typename Derived::Scalar> project_box(const Eigen::MatrixBase<Derived>& v,
                                          const BoxSet<typename Derived::Scalar>& set) {
  if (v.size() != set.dim())
    throw std::invalid_argument("project_box: dimension mismatch (" +
                                std::to_string(v.size()) + " vs " +
                                std::to_string(set.dim()) + ")");
  return v.derived().cwiseMax(set.lower()).cwiseMin(set.upper());
}

/// Two-point finite difference (perturbed - base) / mu, coordinatewise.
template <typename DerivedA, typename DerivedB>
Vec<typename DerivedA::Scalar> finite_diff(const Eigen::MatrixBase<DerivedA>& base,
                                           const Eigen::MatrixBase<DerivedB>& perturbed,
                                           typename DerivedA::Scalar mu) {
  if (!(mu > 0)) throw std::invalid_argument("finite_diff: mu must be positive");
  if (base.size() != perturbed.size())
    throw std::invalid_argument("finite_diff: length mismatch");
  return (perturbed - base) / mu;
}

namespace detail {

template <typename Scalar>
void require_mc_args(Scalar mu, long n_samples) {
  if (!(mu > 0)) throw std::invalid_argument("smoothing radius must be positive");
  if (n_samples < 2) throw std::invalid_argument("need at least two Monte-Carlo samples");
}

}  // namespace detail

enum class McSampling {
  plain,
  antithetic,  // each sample averages the draws at +U and -U
};

/// Monte-Carlo estimate of E{ fn(P(x + mu U)) }, U ~ N(0, I), P the box
/// projection. Test-support oracle; the learner never calls it.
template <typename Scalar, typename Fn>
McEstimate<Scalar> smoothed_value_mc(Fn&& fn, const Vec<Scalar>& x, const BoxSet<Scalar>& set,
                                     Scalar mu, long n_samples, Rng& rng,
                                     McSampling sampling = McSampling::plain) {
  detail::require_mc_args(mu, n_samples);
  // Welford accumulation
  Scalar mean = 0, m2 = 0;
  for (long k = 0; k < n_samples; ++k) {
    const Vec<Scalar> u = sample_gaussian<Scalar>(x.size(), rng);
    Scalar y = fn(project_box(x + mu * u, set));
    if (sampling == McSampling::antithetic) y = (y + fn(project_box(x - mu * u, set))) / Scalar(2);
    const Scalar d = y - mean;
    mean += d / Scalar(k + 1);
    m2 += d * (y - mean);
  }
  const Scalar var = m2 / Scalar(n_samples - 1);
  return {mean, std::sqrt(var / Scalar(n_samples))};
}

/// Monte-Carlo average of the one-sample products Delta * U, where
/// Delta = (fn(P(x + mu U)) - fn(x)) / mu. Converges to the gradient of the
/// smoothed function.
template <typename Scalar, typename Fn>
McGradient<Scalar> smoothed_grad_mc(Fn&& fn, const Vec<Scalar>& x, const BoxSet<Scalar>& set,
                                    Scalar mu, long n_samples, Rng& rng) {
  detail::require_mc_args(mu, n_samples);
  const Scalar base = fn(x);
  Vec<Scalar> mean = Vec<Scalar>::Zero(x.size());
  Vec<Scalar> m2 = Vec<Scalar>::Zero(x.size());
  for (long k = 0; k < n_samples; ++k) {
    const Vec<Scalar> u = sample_gaussian<Scalar>(x.size(), rng);
    const Scalar delta = (fn(project_box(x + mu * u, set)) - base) / mu;
    const Vec<Scalar> y = delta * u;
    const Vec<Scalar> d = y - mean;
    mean += d / Scalar(k + 1);
    m2.array() += d.array() * (y - mean).array();
  }
  Vec<Scalar> se = (m2 / Scalar(n_samples - 1) / Scalar(n_samples)).cwiseSqrt();
  return {std::move(mean), std::move(se)};
}

}  // namespace pdzdpg
