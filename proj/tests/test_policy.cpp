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

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "pdzdpg/checkpoint.hpp"
#include "pdzdpg/policy.hpp"
#include "pdzdpg/verify.hpp"

using namespace pdzdpg;
using Eigen::VectorXd;

namespace {

MlpSpec mlp(std::vector<int> sizes, double scale = 20.0) {
  return MlpSpec{std::move(sizes), HiddenActivation::relu, OutputActivation::sigmoid_scaled, scale};
}

std::shared_ptr<const PolicyLayout> global(std::vector<int> sizes) {
  return std::make_shared<const PolicyLayout>(PolicyLayout::global(mlp(std::move(sizes))));
}

// Independent reference for a 1-2-1 network.
double reference_121(const VectorXd& t, double h, double scale) {
  const double z1 = std::max(0.0, t[0] * h + t[2]);
  const double z2 = std::max(0.0, t[1] * h + t[3]);
  const double z = t[4] * z1 + t[5] * z2 + t[6];
  return scale / (1.0 + std::exp(-z));
}

}  // namespace

TEST_CASE("parameter counts of the shipped architectures") {
  CHECK(mlp({1, 8, 4, 1}).param_count() == 57);
  CHECK(PolicyLayout::per_user(mlp({1, 8, 4, 1}), 10).param_count() == 570);
  CHECK(PolicyLayout::global(mlp({10, 64, 32, 10})).param_count() == 3114);
  CHECK(PolicyLayout::global(mlp({5, 512, 256, 5})).param_count() == 135685);
}

TEST_CASE("flat layout is weights row-major then biases, layer by layer") {
  const auto layout = global({2, 3, 1});
  const auto& blocks = layout->layers(0);
  REQUIRE(blocks.size() == 2);
  CHECK(blocks[0].weights == 0);
  CHECK(blocks[0].biases == 6);
  CHECK(blocks[1].weights == 9);
  CHECK(blocks[1].biases == 12);
  CHECK(layout->param_count() == 13);

  // W1 = [[1,0],[0,1],[1,1]] selects features; only the third hidden unit feeds the output.
  VectorXd t = VectorXd::Zero(13);
  t.head(6) << 1, 0, 0, 1, 1, 1;
  t[11] = 1.0;
  const Policy p(layout, t);
  const VectorXd a = forward(p, (VectorXd(2) << 0.5, 0.25).finished());
  CHECK(a[0] == doctest::Approx(20.0 / (1.0 + std::exp(-0.75))));
}

TEST_CASE("zero parameters give half the output scale") {
  const auto layout = std::make_shared<const PolicyLayout>(PolicyLayout::per_user(mlp({1, 8, 4, 1}), 3));
  const VectorXd a = forward(init_params<double>(layout), (VectorXd(3) << 0.1, 2, 7).finished());
  for (int i = 0; i < 3; ++i) CHECK(a[i] == 10.0);
}

TEST_CASE("zero parameters leave only the output biases with a gradient") {
  const auto layout = global({3, 4, 2, 3});
  const Policy p = init_params<double>(layout);
  const VectorXd g = vjp(p, VectorXd::Constant(3, 1.5), VectorXd::Ones(3));
  const auto& last = layout->layers(0).back();
  CHECK(g.head(last.biases).isZero(0));
  CHECK(g.tail(3).cwiseAbs().minCoeff() > 0);
}

TEST_CASE("forward matches a hand-written 1-2-1 network") {
  const auto layout = global({1, 2, 1});
  VectorXd t(7);
  t << 0.8, 0.5, 0.1, -0.2, 0.6, -0.9, 0.3;
  const Policy p(layout, t);
  for (double h : {0.05, 0.3, 1.0, 4.0}) {
    CHECK(forward(p, VectorXd::Constant(1, h))[0] == doctest::Approx(reference_121(t, h, 20.0)).epsilon(1e-14));
  }
}

TEST_CASE("vjp of a 1-2-1 network matches central differences of the reference") {
  const auto layout = global({1, 2, 1});
  VectorXd t(7);
  t << 0.8, 0.5, 0.1, -0.2, 0.6, -0.9, 0.3;
  const Policy p(layout, t);
  const double h = 1.3, c = -0.7, eps = 1e-6;
  const VectorXd g = vjp(p, VectorXd::Constant(1, h), VectorXd::Constant(1, c));
  for (int j = 0; j < 7; ++j) {
    VectorXd tp = t, tm = t;
    tp[j] += eps;
    tm[j] -= eps;
    const double fd = c * (reference_121(tp, h, 20.0) - reference_121(tm, h, 20.0)) / (2 * eps);
    CHECK(g[j] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("outputs stay strictly inside the action range under saturation") {
  const auto layout = global({1, 2, 1});
  VectorXd t = VectorXd::Zero(7);
  for (double bias : {-1e4, 1e4}) {
    t[6] = bias;
    const double a = forward(Policy(layout, t), VectorXd::Constant(1, 1.0))[0];
    CHECK(a > 0.0);
    CHECK(a < 20.0);
  }
}

TEST_CASE("per-user composite routes user i's channel to output i") {
  const auto layout = std::make_shared<const PolicyLayout>(PolicyLayout::per_user(mlp({1, 2, 1}), 2));
  VectorXd t = VectorXd::Zero(14);
  t << 0.8, 0.5, 0.1, -0.2, 0.6, -0.9, 0.3,  //
      1.0, 1.0, 0.0, 0.0, 1.0, 1.0, -1.0;
  const VectorXd a = forward(Policy(layout, t), (VectorXd(2) << 2.0, 0.5).finished());
  CHECK(a[0] == doctest::Approx(reference_121(t.head(7), 2.0, 20.0)));
  CHECK(a[1] == doctest::Approx(reference_121(t.tail(7), 0.5, 20.0)));
}

TEST_CASE("layout validation") {
  CHECK_THROWS_AS(PolicyLayout::per_user(mlp({2, 4, 1}), 3), std::invalid_argument);
  CHECK_THROWS_AS(mlp({3, 3}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(mlp({1, 2, 1}, 0.0).validate(), std::invalid_argument);
  SubPolicy s{mlp({1, 2, 1}), {0}, {0}};
  CHECK_THROWS_AS(PolicyLayout({s, s}, 1, 1), std::invalid_argument);  // output written twice
  CHECK_THROWS_AS(PolicyLayout({s}, 1, 2), std::invalid_argument);     // output 1 never written
  CHECK_THROWS_AS(Policy(global({1, 2, 1}), VectorXd::Zero(3)), std::invalid_argument);
}

TEST_CASE("forward and vjp reject mismatched lengths") {
  const Policy p = init_params<double>(global({2, 3, 2}));
  CHECK_THROWS_AS(forward(p, VectorXd::Zero(3)), std::invalid_argument);
  CHECK_THROWS_AS(vjp(p, VectorXd::Zero(2), VectorXd::Zero(3)), std::invalid_argument);
}

TEST_CASE("float instantiation agrees with double") {
  const auto layout = global({2, 4, 2});
  Rng rng(3);
  const VectorXd t = 0.5 * sample_gaussian(layout->param_count(), rng);
  const Eigen::Vector2d h(0.7, 1.9);
  const VectorXd ad = forward(Policy(layout, t), h);
  const Eigen::VectorXf af = forward(PolicyParams<float>(layout, t.cast<float>()), h.cast<float>());
  CHECK((ad.cast<float>() - af).norm() < 1e-4f);
}

TEST_CASE("op counter tracks sweeps and multiply-adds") {
  const Policy p = init_params<double>(global({3, 5, 2}));
  OpCounter ops;
  forward(p, VectorXd::Ones(3), &ops);
  CHECK(ops.forward_sweeps == 1);
  CHECK(ops.mult_adds == 3 * 5 + 5 * 2);
  vjp(p, VectorXd::Ones(3), VectorXd::Ones(2), &ops);
  CHECK(ops.forward_sweeps == 2);
  CHECK(ops.backward_sweeps == 1);
}

TEST_CASE("parameter perturbation keeps the layout") {
  const Policy p = init_params<double>(global({1, 2, 1}));
  const Policy q = perturb_params(p, 0.5, VectorXd::Ones(7));
  CHECK(q.theta() == VectorXd::Constant(7, 0.5));
  CHECK(&q.layout() == &p.layout());
  CHECK_THROWS_AS(perturb_params(p, 0.5, VectorXd::Ones(6)), std::invalid_argument);
}

TEST_CASE("checkpoint round trip is exact") {
  const auto layout = std::make_shared<const PolicyLayout>(PolicyLayout::per_user(mlp({1, 8, 4, 1}), 3));
  Rng rng(21);
  const Policy p(layout, sample_gaussian(layout->param_count(), rng));
  std::stringstream ss;
  write_checkpoint(ss, p);
  const Policy q = read_checkpoint(ss);
  CHECK(q.layout() == p.layout());
  CHECK(q.theta() == p.theta());
}

TEST_CASE("corrupt checkpoints are rejected") {
  std::stringstream bad("{\"format\":\"other\"}\n");
  CHECK_THROWS(read_checkpoint(bad));
  const Policy p = init_params<double>(global({1, 2, 1}));
  std::stringstream ss;
  write_checkpoint(ss, p);
  std::string bytes = ss.str();
  bytes.resize(bytes.size() - 3);
  std::stringstream truncated(bytes);
  CHECK_THROWS(read_checkpoint(truncated));
}

TEST_CASE("property: vjp matches finite differences on random nets") {
  const CheckResult r = check_vjp_gradient(default_vjp(), 20);
  INFO(r.detail);
  CHECK(r.passed);
}

TEST_CASE("property: composite gradient is block diagonal") {
  const CheckResult r = check_composite_block_diagonal(default_vjp());
  INFO(r.detail);
  CHECK(r.passed);
}

TEST_CASE("property: one vjp costs one forward and one backward sweep") {
  const CheckResult r = check_vjp_cost();
  INFO(r.detail);
  CHECK(r.passed);
}

TEST_CASE("a corrupted vjp is caught by name") {
  const VjpFn broken = [](const Policy& p, const VectorXd& h, const VectorXd& c) -> VectorXd {
    VectorXd g = vjp(p, h, c);
    g[0] += 1e-3;
    return g;
  };
  const CheckResult r = check_vjp_gradient(broken, 5);
  CHECK_FALSE(r.passed);
  CHECK(r.name == "vjp_gradient");
}
