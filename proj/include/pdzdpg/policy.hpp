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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pdzdpg/smoothing.hpp"

namespace pdzdpg {

enum class HiddenActivation { relu };
enum class OutputActivation { sigmoid_scaled };

/// Fully connected network shape: input, hidden..., output.
struct MlpSpec {
  std::vector<int> layer_sizes;
  HiddenActivation hidden_activation = HiddenActivation::relu;
  OutputActivation output_activation = OutputActivation::sigmoid_scaled;
  double output_scale = 1.0;

  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  int n_affine() const { return static_cast<int>(layer_sizes.size()) - 1; }

  Eigen::Index param_count() const {
    Eigen::Index n = 0;
    for (int l = 0; l < n_affine(); ++l)
      n += Eigen::Index(layer_sizes[l + 1]) * layer_sizes[l] + layer_sizes[l + 1];
    return n;
  }

  void validate() const {
    if (layer_sizes.size() < 3)
      throw std::invalid_argument("MlpSpec: need input, at least one hidden, and output layer");
    for (int s : layer_sizes)
      if (s < 1) throw std::invalid_argument("MlpSpec: layer sizes must be positive");
    if (!(output_scale > 0)) throw std::invalid_argument("MlpSpec: output_scale must be positive");
  }

  bool operator==(const MlpSpec&) const = default;
};

/// One network of a composite policy: reads h[inputs], writes a[outputs].
struct SubPolicy {
  MlpSpec spec;
  std::vector<int> inputs;
  std::vector<int> outputs;

  bool operator==(const SubPolicy&) const = default;
};

/// Flat parameter layout of a (possibly composite) MLP policy.
///
/// Sub-policies are stored in order; within each, layers in order, each
/// layer's weight matrix row-major (rows = fan-out) followed by its biases.
class PolicyLayout {
 public:
  struct LayerBlock {
    Eigen::Index weights;  // flat offset of W (row-major, rows x cols)
    Eigen::Index biases;   // flat offset of b
    int rows;
    int cols;
  };

  PolicyLayout(std::vector<SubPolicy> subs, int input_dim, int output_dim)
      : subs_(std::move(subs)), input_dim_(input_dim), output_dim_(output_dim) {
    if (subs_.empty()) throw std::invalid_argument("PolicyLayout: no sub-policies");
    if (input_dim_ < 1 || output_dim_ < 1)
      throw std::invalid_argument("PolicyLayout: dimensions must be positive");
    std::vector<int> written(output_dim_, 0);
    Eigen::Index offset = 0;
    for (const auto& sub : subs_) {
      sub.spec.validate();
      if (static_cast<int>(sub.inputs.size()) != sub.spec.input_dim() ||
          static_cast<int>(sub.outputs.size()) != sub.spec.output_dim())
        throw std::invalid_argument("PolicyLayout: selector sizes disagree with network shape");
      for (int i : sub.inputs)
        if (i < 0 || i >= input_dim_) throw std::invalid_argument("PolicyLayout: input index out of range");
      for (int o : sub.outputs) {
        if (o < 0 || o >= output_dim_) throw std::invalid_argument("PolicyLayout: output index out of range");
        ++written[o];
      }
      sub_offsets_.push_back(offset);
      std::vector<LayerBlock> blocks;
      for (int l = 0; l < sub.spec.n_affine(); ++l) {
        const int rows = sub.spec.layer_sizes[l + 1];
        const int cols = sub.spec.layer_sizes[l];
        LayerBlock b{offset, offset + Eigen::Index(rows) * cols, rows, cols};
        offset = b.biases + rows;
        blocks.push_back(b);
      }
      layers_.push_back(std::move(blocks));
    }
    for (int w : written)
      if (w != 1) throw std::invalid_argument("PolicyLayout: outputs must partition the action vector");
    param_count_ = offset;
  }

  /// A single network reading the whole channel vector.
  static PolicyLayout global(const MlpSpec& spec) {
    SubPolicy sub{spec, iota(spec.input_dim()), iota(spec.output_dim())};
    return PolicyLayout({std::move(sub)}, spec.input_dim(), spec.output_dim());
  }

  /// `n_users` independent copies of a 1-...-1 network; copy i maps h[i] to a[i].
  static PolicyLayout per_user(const MlpSpec& spec, int n_users) {
    if (spec.layer_sizes.empty() || spec.input_dim() != 1 || spec.output_dim() != 1)
      throw std::invalid_argument("per_user: each network must be single-input single-output");
    std::vector<SubPolicy> subs;
    for (int i = 0; i < n_users; ++i) subs.push_back(SubPolicy{spec, {i}, {i}});
    return PolicyLayout(std::move(subs), n_users, n_users);
  }

  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }
  Eigen::Index param_count() const { return param_count_; }
  const std::vector<SubPolicy>& sub_policies() const { return subs_; }
  Eigen::Index sub_offset(std::size_t k) const { return sub_offsets_.at(k); }
  Eigen::Index sub_param_count(std::size_t k) const { return subs_.at(k).spec.param_count(); }
  const std::vector<LayerBlock>& layers(std::size_t k) const { return layers_.at(k); }

  bool operator==(const PolicyLayout& o) const {
    return subs_ == o.subs_ && input_dim_ == o.input_dim_ && output_dim_ == o.output_dim_;
  }

 private:
  static std::vector<int> iota(int n) {
    std::vector<int> v(n);
    for (int i = 0; i < n; ++i) v[i] = i;
    return v;
  }

  std::vector<SubPolicy> subs_;
  int input_dim_;
  int output_dim_;
  Eigen::Index param_count_ = 0;
  std::vector<Eigen::Index> sub_offsets_;
  std::vector<std::vector<LayerBlock>> layers_;
};

/// Flat parameter vector bound to an immutable layout.
template <typename Scalar>
class PolicyParams {
 public:
  PolicyParams(std::shared_ptr<const PolicyLayout> layout, Vec<Scalar> theta)
      : layout_(std::move(layout)), theta_(std::move(theta)) {
    if (!layout_) throw std::invalid_argument("PolicyParams: null layout");
    if (theta_.size() != layout_->param_count())
      throw std::invalid_argument("PolicyParams: expected " + std::to_string(layout_->param_count()) +
                                  " parameters, got " + std::to_string(theta_.size()));
  }

  const PolicyLayout& layout() const { return *layout_; }
  const std::shared_ptr<const PolicyLayout>& layout_ptr() const { return layout_; }
  Eigen::Index size() const { return theta_.size(); }

  const Vec<Scalar>& theta() const { return theta_; }
  /// Mutable view for in-place updates; the length must not change.
  Vec<Scalar>& theta() { return theta_; }

 private:
  std::shared_ptr<const PolicyLayout> layout_;
  Vec<Scalar> theta_;
};

using Policy = PolicyParams<double>;

enum class InitScheme { zeros, constant };

template <typename Scalar = double>
PolicyParams<Scalar> init_params(std::shared_ptr<const PolicyLayout> layout,
                                 InitScheme scheme = InitScheme::zeros, Scalar value = 0) {
  const Eigen::Index n = layout->param_count();
  Vec<Scalar> theta = scheme == InitScheme::zeros ? Vec<Scalar>::Zero(n)
                                                  : Vec<Scalar>::Constant(n, value);
  return PolicyParams<Scalar>(std::move(layout), std::move(theta));
}

/// Work counters for forward/backward passes.
struct OpCounter {
  std::int64_t forward_sweeps = 0;
  std::int64_t backward_sweeps = 0;
  std::int64_t mult_adds = 0;
};

namespace detail {

template <typename Scalar>
Scalar stable_sigmoid(Scalar z) {
  const Scalar e = std::exp(-std::abs(z));
  return z >= 0 ? Scalar(1) / (Scalar(1) + e) : e / (Scalar(1) + e);
}

template <typename Scalar>
using RowMajorMap = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

/// Per-sub-network activations kept for the backward sweep.
template <typename Scalar>
struct Tape {
  std::vector<Vec<Scalar>> activations;  // a_0 (input) ... a_{L-1} (last hidden)
  std::vector<Vec<Scalar>> pre;          // z_1 ... z_L
};

template <typename Scalar, typename Derived>
Vec<Scalar> gather(const Eigen::MatrixBase<Derived>& h, const std::vector<int>& idx) {
  Vec<Scalar> out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[Eigen::Index(i)] = h[idx[i]];
  return out;
}

template <typename Scalar>
Vec<Scalar> sub_forward(const Vec<Scalar>& theta, const PolicyLayout& layout, std::size_t k,
                        Vec<Scalar> a, Tape<Scalar>* tape, OpCounter* ops) {
  const auto& blocks = layout.layers(k);
  const auto& spec = layout.sub_policies()[k].spec;
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    const auto& b = blocks[l];
    RowMajorMap<Scalar> W(theta.data() + b.weights, b.rows, b.cols);
    Eigen::Map<const Vec<Scalar>> bias(theta.data() + b.biases, b.rows);
    Vec<Scalar> z = W * a + bias;
    if (ops) ops->mult_adds += Eigen::Index(b.rows) * b.cols;
    if (tape) {
      tape->activations.push_back(std::move(a));
      tape->pre.push_back(z);
    }
    if (l + 1 < blocks.size()) {
      a = z.cwiseMax(Scalar(0));
    } else {
      const Scalar scale = static_cast<Scalar>(spec.output_scale);
      // Saturated sigmoids round to the bounds; keep the output strictly inside.
      const Scalar lo = std::numeric_limits<Scalar>::denorm_min();
      const Scalar hi = std::nextafter(scale, Scalar(0));
      a = z.unaryExpr([&](Scalar v) { return std::clamp(scale * stable_sigmoid(v), lo, hi); });
    }
  }
  return a;
}

}  // namespace detail

/// Action phi(h, theta).
template <typename Scalar, typename Derived>
Vec<Scalar> forward(const PolicyParams<Scalar>& params, const Eigen::MatrixBase<Derived>& h,
                    OpCounter* ops = nullptr) {
  const PolicyLayout& layout = params.layout();
  if (h.size() != layout.input_dim())
    throw std::invalid_argument("forward: channel vector has length " + std::to_string(h.size()) +
                                ", policy expects " + std::to_string(layout.input_dim()));
  Vec<Scalar> action(layout.output_dim());
  for (std::size_t k = 0; k < layout.sub_policies().size(); ++k) {
    const auto& sub = layout.sub_policies()[k];
    const Vec<Scalar> out = detail::sub_forward<Scalar>(params.theta(), layout, k,
                                                        detail::gather<Scalar>(h, sub.inputs), nullptr, ops);
    for (std::size_t j = 0; j < sub.outputs.size(); ++j) action[sub.outputs[j]] = out[Eigen::Index(j)];
  }
  if (ops) ++ops->forward_sweeps;
  return action;
}

/// Reverse-mode vector-Jacobian product (d phi / d theta)^T cotangent.
///
/// One forward sweep and one backward sweep over every sub-network. The ReLU
/// derivative at exactly zero is taken as zero.
template <typename Scalar, typename DerivedH, typename DerivedC>
Vec<Scalar> vjp(const PolicyParams<Scalar>& params, const Eigen::MatrixBase<DerivedH>& h,
                const Eigen::MatrixBase<DerivedC>& cotangent, OpCounter* ops = nullptr) {
  const PolicyLayout& layout = params.layout();
  if (h.size() != layout.input_dim())
    throw std::invalid_argument("vjp: channel vector length mismatch");
  if (cotangent.size() != layout.output_dim())
    throw std::invalid_argument("vjp: cotangent length mismatch");

  const Vec<Scalar>& theta = params.theta();
  Vec<Scalar> grad = Vec<Scalar>::Zero(theta.size());
  for (std::size_t k = 0; k < layout.sub_policies().size(); ++k) {
    const auto& sub = layout.sub_policies()[k];
    const auto& blocks = layout.layers(k);
    detail::Tape<Scalar> tape;
    detail::sub_forward<Scalar>(theta, layout, k, detail::gather<Scalar>(h, sub.inputs), &tape, ops);

    const Scalar scale = static_cast<Scalar>(sub.spec.output_scale);
    const Vec<Scalar>& z_out = tape.pre.back();
    Vec<Scalar> delta(z_out.size());
    for (Eigen::Index j = 0; j < z_out.size(); ++j) {
      const Scalar s = detail::stable_sigmoid(z_out[j]);
      delta[j] = static_cast<Scalar>(cotangent[sub.outputs[std::size_t(j)]]) * scale * s * (Scalar(1) - s);
    }

    for (std::size_t l = blocks.size(); l-- > 0;) {
      const auto& b = blocks[l];
      Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> gW(
          grad.data() + b.weights, b.rows, b.cols);
      gW.noalias() = delta * tape.activations[l].transpose();
      grad.segment(b.biases, b.rows) = delta;
      if (ops) ops->mult_adds += Eigen::Index(b.rows) * b.cols;
      if (l == 0) break;
      detail::RowMajorMap<Scalar> W(theta.data() + b.weights, b.rows, b.cols);
      Vec<Scalar> back = W.transpose() * delta;
      if (ops) ops->mult_adds += Eigen::Index(b.rows) * b.cols;
      const Vec<Scalar>& z_prev = tape.pre[l - 1];
      delta = (z_prev.array() > Scalar(0)).select(back, Scalar(0));
    }
  }
  if (ops) {
    ++ops->forward_sweeps;
    ++ops->backward_sweeps;
  }
  return grad;
}

/// theta + mu * u on the same layout.
template <typename Scalar, typename Derived>
PolicyParams<Scalar> perturb_params(const PolicyParams<Scalar>& params, Scalar mu,
                                    const Eigen::MatrixBase<Derived>& u) {
  if (u.size() != params.size()) throw std::invalid_argument("perturb_params: length mismatch");
  return PolicyParams<Scalar>(params.layout_ptr(), params.theta() + mu * u);
}

}  // namespace pdzdpg
