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

#include "pdzdpg/baselines.hpp"
#include "pdzdpg/verify.hpp"

using namespace pdzdpg;
using Eigen::VectorXd;

namespace {

ServiceSpec spec(ServiceKind kind, VectorXd w, double p_max = 20.0) {
  ServiceSpec s;
  s.kind = kind;
  s.n_users = int(w.size());
  s.weights = std::move(w);
  s.noise = VectorXd::Ones(s.n_users);
  s.p_max = p_max;
  return s;
}

template <typename F>
double simpson(F&& f, double a, double b, int m) {
  const double h = (b - a) / m;
  double s = f(a) + f(b);
  for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

// Single user, unit noise, H ~ Exp(1/2): E{(c - 1/H)_+} with water level c = 1/nu.
double single_user_budget(double c) {
  return simpson([&](double h) { return (c - 1.0 / h) * 0.5 * std::exp(-0.5 * h); }, 1.0 / c, 1.0 / c + 120.0,
                 40000);
}

double single_user_rate(double c) {
  return simpson([&](double h) { return std::log(c * h) * 0.5 * std::exp(-0.5 * h); }, 1.0 / c, 1.0 / c + 120.0,
                 40000);
}

double mai_objective(const ServiceSpec& s, const VectorXd& h, const VectorXd& p) {
  return s.weights.dot(mai_rates(h, p, s.noise));
}

}  // namespace

TEST_CASE("waterfilling allocation is max(0, w / nu - v / h)") {
  const VectorXd w = (VectorXd(3) << 0.5, 0.3, 0.2).finished();
  const VectorXd v = (VectorXd(3) << 1.0, 2.0, 1.0).finished();
  const VectorXd h = (VectorXd(3) << 4.0, 0.1, 1.0).finished();
  const VectorXd p = waterfill_allocation(w, v, h, 0.1);
  CHECK(p[0] == doctest::Approx(5.0 - 0.25));
  CHECK(p[1] == 0.0);
  CHECK(p[2] == doctest::Approx(2.0 - 1.0));
}

TEST_CASE("waterfilling on fixed samples meets the budget") {
  const ServiceSpec s = spec(ServiceKind::awgn, (VectorXd(2) << 0.6, 0.4).finished(), 3.0);
  Eigen::MatrixXd H(2, 3);
  H << 1.0, 2.0, 0.5, 0.25, 4.0, 1.0;
  const WaterfillSolution sol = waterfill_from_samples(s, H, 1e-9);
  double used = 0;
  for (int k = 0; k < 3; ++k) used += sol.allocate(H.col(k)).sum();
  CHECK(used / 3.0 == doctest::Approx(3.0).epsilon(1e-8));
  CHECK(sol.achieved_budget == doctest::Approx(3.0).epsilon(1e-8));
}

TEST_CASE("single-user waterfilling level matches a quadrature solve") {
  // Independent oracle: bisection on the water level using Simpson quadrature.
  double lo = 0.01, hi = 100.0;
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    (single_user_budget(mid) < 20.0 ? lo : hi) = mid;
  }
  const double c_star = 0.5 * (lo + hi);
  const double rate_star = single_user_rate(c_star);

  const ServiceSpec s = spec(ServiceKind::awgn, VectorXd::Ones(1));
  Rng rng(20210611, "benchmark");
  const WaterfillSolution sol =
      waterfill_clairvoyant(s, ChannelDist{ChannelKind::exponential_iid, 0.5, 1}, 400000, 1e-9, rng);
  CHECK(1.0 / sol.dual_level == doctest::Approx(c_star).epsilon(0.01));
  CHECK(std::abs(sol.sumrate.value - rate_star) <= 3.0 * sol.sumrate.std_error + 0.002);
  CHECK(std::abs(sol.achieved_budget - 20.0) <= 1e-6 * 20.0 * 1.01);
}

TEST_CASE("waterfilling validates its inputs") {
  const ServiceSpec mai = spec(ServiceKind::mai, VectorXd::Constant(2, 0.5));
  CHECK_THROWS_AS(waterfill_from_samples(mai, Eigen::MatrixXd::Ones(2, 4), 1e-6), std::invalid_argument);
  const ServiceSpec s = spec(ServiceKind::awgn, VectorXd::Constant(2, 0.5));
  CHECK_THROWS_AS(waterfill_from_samples(s, Eigen::MatrixXd::Ones(3, 4), 1e-6), std::invalid_argument);
  CHECK_THROWS_AS(waterfill_from_samples(s, Eigen::MatrixXd::Ones(2, 4), 0.0), std::invalid_argument);
}

TEST_CASE("single-user wmmse spends the whole budget") {
  const ServiceSpec s = spec(ServiceKind::mai, VectorXd::Ones(1));
  const WmmseIterate it = wmmse_instant(s, VectorXd::Constant(1, 0.7));
  CHECK(it.powers()[0] == doctest::Approx(20.0).epsilon(1e-9));
  CHECK(it.objective == doctest::Approx(std::log1p(0.7 * 20.0)).epsilon(1e-9));
}

TEST_CASE("two-user wmmse is no better than a grid search and no worse than its start") {
  Rng rng(17, "wmmse-grid");
  for (int trial = 0; trial < 20; ++trial) {
    const double w0 = 0.2 + 0.6 * rng.uniform();
    const ServiceSpec s = spec(ServiceKind::mai, (VectorXd(2) << w0, 1.0 - w0).finished());
    const VectorXd h = (VectorXd(2) << rng.exponential(0.5), rng.exponential(0.5)).finished();
    double best = 0;
    for (double p0 = 0; p0 <= 20.0; p0 += 0.02)
      for (double p1 = 0; p0 + p1 <= 20.0 + 1e-12; p1 += 0.02)
        best = std::max(best, mai_objective(s, h, (VectorXd(2) << p0, p1).finished()));
    const WmmseIterate it = wmmse_instant(s, h);
    const double start = mai_objective(s, h, VectorXd::Constant(2, 10.0));
    CHECK(it.objective <= best + 1e-3);
    CHECK(it.objective >= start - 1e-9);
    CHECK(it.powers().sum() <= 20.0 + 1e-9);
    CHECK(it.objective == doctest::Approx(mai_objective(s, h, it.powers())).epsilon(1e-12));
  }
}

TEST_CASE("wmmse observer sees the start and every outer iteration") {
  const ServiceSpec s = spec(ServiceKind::mai, VectorXd::Constant(3, 1.0 / 3));
  int calls = 0;
  const WmmseIterate it =
      wmmse_instant(s, (VectorXd(3) << 0.5, 2.0, 1.0).finished(), 1000, 1e-10, [&](const WmmseIterate&) { ++calls; });
  CHECK(calls == it.iterations + 1);
  CHECK(it.iterations >= 2);
}

TEST_CASE("wmmse validates its inputs") {
  const ServiceSpec s = spec(ServiceKind::mai, VectorXd::Constant(2, 0.5));
  CHECK_THROWS_AS(wmmse_instant(s, VectorXd::Ones(3)), std::invalid_argument);
  CHECK_THROWS_AS(wmmse_instant(s, VectorXd::Zero(2)), std::invalid_argument);
  CHECK_THROWS_AS(wmmse_instant(s, VectorXd::Ones(2), 0), std::invalid_argument);
}

TEST_CASE("ergodic wmmse is reproducible for a fixed seed") {
  const ServiceSpec s = spec(ServiceKind::mai, VectorXd::Constant(4, 0.25));
  const ChannelDist d{ChannelKind::exponential_iid, 0.5, 4};
  Rng a(9, "benchmark"), b(9, "benchmark");
  const auto ea = wmmse_ergodic(s, d, 200, a), eb = wmmse_ergodic(s, d, 200, b);
  CHECK(ea.value == eb.value);
  CHECK(ea.std_error > 0);
}

TEST_CASE("property: waterfilling meets the budget and is per-state optimal") {
  const CheckResult r = check_waterfilling(50);
  INFO(r.detail);
  CHECK(r.passed);
}

TEST_CASE("property: wmmse is monotone and power-feasible") {
  const CheckResult r = check_wmmse(100);
  INFO(r.detail);
  CHECK(r.passed);
}
