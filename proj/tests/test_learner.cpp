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

#include "pdzdpg/learner.hpp"
#include "pdzdpg/verify.hpp"

using namespace pdzdpg;
using Eigen::VectorXd;
using Event = StepTrace::Event;

namespace {

ServiceSpec awgn(int n) {
  ServiceSpec s;
  s.kind = ServiceKind::awgn;
  s.n_users = n;
  s.weights = VectorXd::Constant(n, 1.0 / n);
  s.noise = VectorXd::Ones(n);
  s.p_max = 20.0;
  return s;
}

std::shared_ptr<const PolicyLayout> per_user(int n) {
  MlpSpec net{{1, 8, 4, 1}, HiddenActivation::relu, OutputActivation::sigmoid_scaled, 20.0};
  return std::make_shared<const PolicyLayout>(PolicyLayout::per_user(net, n));
}

Problem problem(int n) { return make_problem(awgn(n), ChannelDist{ChannelKind::exponential_iid, 0.5, n}, {}); }

// Composite Simpson rule on [a, b] with m (even) panels.
template <typename F>
double simpson(F&& f, double a, double b, int m) {
  const double h = (b - a) / m;
  double s = f(a) + f(b);
  for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

// E{ g(H) } for H ~ Exp(1/2).
template <typename G>
double expect_exp(G&& g) {
  return simpson([&](double h) { return g(h) * 0.5 * std::exp(-0.5 * h); }, 1e-12, 80.0, 20000);
}

double gauss_pdf(double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * M_PI); }

}  // namespace

TEST_CASE("step schedule rejects nonpositive sizes") {
  StepSchedule s;
  CHECK_NOTHROW(s.validate());
  s.alpha_theta = -0.1;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("slack is zero or linear in mu_R") {
  SlackSpec s;
  CHECK(s.evaluate(0.1, 4, 3) == VectorXd::Zero(3));
  CHECK(s.feasibility_margin(0.1, 4, 3).size() == 0);
  s.mode = SlackMode::linear;
  CHECK_THROWS_AS(s.validate(3), std::invalid_argument);
  s.c_R = VectorXd::Constant(1, 2.0);
  CHECK_NOTHROW(s.validate(3));
  const VectorXd v = s.evaluate(0.1, 4, 3);
  for (int i = 0; i < 3; ++i) CHECK(v[i] == doctest::Approx(0.1 * 2.0 * 2.0));
  CHECK(s.feasibility_margin(0.1, 4, 3).cwiseAbs().maxCoeff() < 1e-15);
  s.c_R = VectorXd::Ones(2);
  CHECK_THROWS_AS(s.validate(3), std::invalid_argument);
}

TEST_CASE("initial state has the configured shapes") {
  const Problem p = problem(3);
  const LearnerState s = initial_state(p, init_params<double>(per_user(3)), 1.0, 1.0);
  CHECK(s.x == VectorXd::Ones(3));
  CHECK(s.lambda_R == VectorXd::Ones(4));
  CHECK(s.lambda_S.size() == 0);
  CHECK(s.iter == 0);
  CHECK_THROWS_AS(initial_state(p, init_params<double>(per_user(2)), 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("x box upper rail is ten times the full-power ergodic capacity bound") {
  const Problem p = problem(2);
  CHECK(p.x_set.upper()[0] == doctest::Approx(10.0 * std::log(1.0 + 20.0 * 2.0)));
  CHECK(p.x_set.lower() == VectorXd::Zero(2));
}

TEST_CASE("dual rate step projects onto the nonnegative orthant") {
  StepSchedule s;
  s.alpha_lambda_rate = 0.5;
  s.alpha_lambda_power = 0.25;
  const VectorXd lam = (VectorXd(3) << 1.0, 0.1, 2.0).finished();
  const VectorXd res = (VectorXd(3) << 1.0, 1.0, -4.0).finished();
  const VectorXd out = dual_lambda_R_step(lam, res, s);
  CHECK(out[0] == doctest::Approx(0.5));
  CHECK(out[1] == 0.0);
  CHECK(out[2] == doctest::Approx(3.0));
  CHECK_THROWS_AS(dual_lambda_R_step(lam, VectorXd::Zero(2), s), std::invalid_argument);
}

TEST_CASE("dual g step projects onto the nonnegative orthant") {
  StepSchedule s;
  s.alpha_lambda_S = 0.5;
  const VectorXd out = dual_lambda_S_step(VectorXd::Constant(2, 1.0), (VectorXd(2) << 4.0, -2.0).finished(), s);
  CHECK(out[0] == 0.0);
  CHECK(out[1] == doctest::Approx(2.0));
}

TEST_CASE("primal x step ascends w - lambda and reports rail hits") {
  const Problem p = problem(2);
  LearnerState s = initial_state(p, init_params<double>(per_user(2)), 1.0, 1.0);
  s.lambda_R << 0.2, 3.0, 1.0;
  StepSchedule sch;
  sch.alpha_x = 0.5;
  bool hit = true;
  const VectorXd w = (VectorXd(2) << 0.6, 0.4).finished();
  const VectorXd x = primal_x_step(s, p.x_set, w, nullptr, nullptr, sch, &hit);
  CHECK(x[0] == doctest::Approx(1.0 + 0.5 * 0.4));
  CHECK(x[1] == 0.0);  // 1 + 0.5 (0.4 - 3) < 0
  CHECK_FALSE(hit);
  s.x = p.x_set.upper();
  primal_x_step(s, p.x_set, w, nullptr, nullptr, sch, &hit);
  CHECK(hit);
}

TEST_CASE("primal theta step is theta + alpha vjp((delta_f . lambda) u)") {
  const Problem p = problem(2);
  Rng rng(5);
  const auto layout = per_user(2);
  LearnerState s = initial_state(p, Policy(layout, 0.3 * sample_gaussian(layout->param_count(), rng)), 1.0, 1.0);
  s.lambda_R << 0.3, 0.7, 0.05;
  const VectorXd h = (VectorXd(2) << 1.2, 0.4).finished(), u = (VectorXd(2) << 0.5, -1.0).finished();
  const VectorXd df = (VectorXd(3) << 0.2, -0.1, -1.5).finished();
  StepSchedule sch;
  sch.alpha_theta = 0.1;
  const Policy next = primal_theta_step(s, h, u, df, sch);
  const VectorXd expect = s.params.theta() + 0.1 * vjp(s.params, h, df.dot(s.lambda_R) * u);
  CHECK((next.theta() - expect).norm() == 0.0);
  CHECK_THROWS_AS(primal_theta_step(s, h, u, df.head(2), sch), std::invalid_argument);
}

TEST_CASE("parameter-space direction is the weighted finite difference times u") {
  const VectorXd fb = (VectorXd(2) << 1.0, 2.0).finished(), fp = (VectorXd(2) << 1.5, 1.0).finished();
  const VectorXd lam = (VectorXd(2) << 2.0, 1.0).finished(), u = (VectorXd(3) << 1, -2, 0.5).finished();
  const VectorXd d = parameter_space_direction(fb, fp, 0.5, lam, u);
  // finite difference (1, -2), weighted sum 0
  CHECK(d.isZero(0));
  const VectorXd d2 = parameter_space_direction(fb, fp, 0.5, VectorXd::Ones(2), u);
  CHECK((d2 - (-1.0) * u).norm() == doctest::Approx(0.0));
}

TEST_CASE("one step of each algorithm makes three probes in the prescribed order") {
  const CheckResult r = check_learner_structure();
  INFO(r.detail);
  CHECK(r.passed);
}

TEST_CASE("state-space perturbation is drawn first when the problem has g-constraints") {
  ObjectiveSpec obj;
  obj.n_g = 1;
  obj.g = [](const VectorXd& x) { return VectorXd::Constant(1, 3.0 - x.sum()); };
  const Problem p = make_problem(awgn(2), ChannelDist{ChannelKind::exponential_iid, 0.5, 2}, obj);
  const LearnerState s0 = initial_state(p, init_params<double>(per_user(2)), 1.0, 1.0);
  REQUIRE(s0.lambda_S.size() == 1);
  LearnerConfig cfg;
  Rng rng(3);
  StepTrace trace;
  const StepResult r = step(s0, rng, p, cfg, &trace);
  std::vector<Event> got;
  for (const auto& e : trace.entries) got.push_back(e.event);
  const std::vector<Event> want{Event::sample_u_s,   Event::sample_u_r,    Event::sample_channel,
                                Event::probe_base,   Event::probe_perturbed, Event::update_x,
                                Event::update_theta, Event::probe_dual,    Event::eval_g_dual,
                                Event::update_lambda_s, Event::update_lambda_r};
  CHECK(got == want);
  CHECK(r.state.lambda_S[0] >= 0.0);
}

TEST_CASE("non-finite values abort the run with the iteration") {
  const Problem p = problem(2);
  LearnerState s = initial_state(p, init_params<double>(per_user(2)), 1.0, 1.0);
  s.lambda_R[0] = std::numeric_limits<double>::quiet_NaN();
  s.iter = 41;
  LearnerConfig cfg;
  Rng rng(1);
  try {
    step(s, rng, p, cfg);
    FAIL("expected NumericAbort");
  } catch (const NumericAbort& e) {
    CHECK(e.iter() == 42);
  }
}

TEST_CASE("run streams one record per iteration") {
  const Problem p = problem(2);
  LearnerConfig cfg;
  Rng rng(2, "learner");
  std::vector<std::int64_t> iters;
  const LearnerState out = run(p, cfg, initial_state(p, init_params<double>(per_user(2)), 1.0, 1.0), 25, rng,
                               [&](const StepRecord& r) {
                                 iters.push_back(r.iter);
                                 CHECK(r.wall_ns >= 0);
                                 CHECK(r.rates.size() == 2);
                               });
  REQUIRE(iters.size() == 25);
  CHECK(iters.front() == 1);
  CHECK(iters.back() == 25);
  CHECK(out.iter == 25);
}

TEST_CASE("property: zero step sizes freeze the state and seeds reproduce trajectories") {
  const CheckResult r = check_learner_determinism();
  INFO(r.detail);
  CHECK(r.passed);
}

TEST_CASE("saddle point of a symmetric two-user problem is stationary in expectation") {
  // theta = 0 gives a = (10, 10), so the budget is tight. With w = (1/2, 1/2),
  // x_i = E log(1 + 10 H) and lambda_i = w_i, the x-update is exactly zero.
  // The output-bias gradient vanishes when
  // lambda_p = w_i E{ H / (1 + H (10 + mu U)) }.
  const double mu = 0.1;
  const double x_star = expect_exp([](double h) { return std::log1p(10.0 * h); });
  const double lp_star =
      0.5 * simpson([&](double u) { return gauss_pdf(u) * expect_exp([&](double h) { return h / (1.0 + h * (10.0 + mu * u)); }); },
                    -8.0, 8.0, 400);

  const Problem p = problem(2);
  const auto layout = per_user(2);
  LearnerState s0 = initial_state(p, init_params<double>(layout), x_star, 0.5);
  s0.lambda_R[2] = lp_star;
  LearnerConfig cfg;
  cfg.smoothing.mu_R = mu;

  Rng rng(77, "saddle");
  const long n = 100000;
  const Eigen::Index d = layout->param_count() + 3;
  VectorXd mean = VectorXd::Zero(d), m2 = VectorXd::Zero(d);
  for (long k = 0; k < n; ++k) {
    const StepResult r = step(s0, rng, p, cfg);
    CHECK(r.state.x == s0.x);
    VectorXd inc(d);
    inc << r.state.params.theta() - s0.params.theta(), r.state.lambda_R - s0.lambda_R;
    const VectorXd delta = inc - mean;
    mean += delta / double(k + 1);
    m2.array() += delta.array() * (inc - mean).array();
  }
  const VectorXd se = (m2 / double(n - 1) / double(n)).cwiseSqrt();
  int checked = 0;
  for (Eigen::Index j = 0; j < d; ++j) {
    if (se[j] == 0) {
      CHECK(mean[j] == 0.0);
      continue;
    }
    ++checked;
    INFO("coordinate " << j << " mean " << mean[j] << " se " << se[j]);
    CHECK(std::abs(mean[j]) <= 3.5 * se[j]);
  }
  CHECK(checked == 5);  // two output biases and three multipliers move
}
