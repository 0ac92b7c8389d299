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

#include "pdzdpg/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "pdzdpg/baselines.hpp"
#include "pdzdpg/learner.hpp"
#include "pdzdpg/smoothing.hpp"
#include "pdzdpg/systems.hpp"

namespace pdzdpg {

namespace {

using Eigen::VectorXd;

template <typename Fn>
CheckResult timed(std::string name, Fn&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckResult r{std::move(name), false, {}, 0};
  try {
    r.passed = body(r.detail);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

VectorXd uniform_vec(Eigen::Index n, double lo, double hi, Rng& rng) {
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = lo + (hi - lo) * rng.uniform();
  return v;
}

VectorXd exp_vec(Eigen::Index n, double rate, Rng& rng) {
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.exponential(rate);
  return v;
}

ServiceSpec make_service(ServiceKind kind, int n, Rng& rng) {
  ServiceSpec s;
  s.kind = kind;
  s.n_users = n;
  s.weights = random_user_weights(n, rng);
  s.noise = VectorXd::Ones(n);
  s.p_max = 20.0;
  return s;
}

// Smallest |pre-activation| over hidden layers of every sub-network.
double min_hidden_preactivation(const Policy& p, const VectorXd& h) {
  const PolicyLayout& layout = p.layout();
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < layout.sub_policies().size(); ++k) {
    detail::Tape<double> tape;
    detail::sub_forward<double>(p.theta(), layout, k, detail::gather<double>(h, layout.sub_policies()[k].inputs),
                                &tape, nullptr);
    for (std::size_t l = 0; l + 1 < tape.pre.size(); ++l) m = std::min(m, tape.pre[l].cwiseAbs().minCoeff());
  }
  return m;
}

}  // namespace

VjpFn default_vjp() {
  return [](const Policy& p, const VectorXd& h, const VectorXd& c) -> VectorXd { return vjp(p, h, c); };
}

CheckResult check_projection(int n_pairs) {
  return timed("projection", [&](std::string& detail) {
    Rng rng(101, "verify-projection");
    for (int k = 0; k < n_pairs; ++k) {
      const int n = 1 + int(rng.index(6));
      VectorXd lo = uniform_vec(n, -2, 1, rng);
      VectorXd hi = lo + uniform_vec(n, 0, 3, rng);
      if (k % 4 == 0) hi.setConstant(std::numeric_limits<double>::infinity());
      const BoxSet<double> set(lo, hi);
      const VectorXd a = 3 * sample_gaussian(n, rng), b = 3 * sample_gaussian(n, rng);
      const VectorXd pa = project_box(a, set), pb = project_box(b, set);
      if (project_box(pa, set) != pa || !set.contains(pa)) {
        detail = "projection not idempotent at pair " + std::to_string(k);
        return false;
      }
      if ((pa - pb).norm() > (a - b).norm() * (1 + 1e-15)) {
        detail = "projection expanded a distance at pair " + std::to_string(k);
        return false;
      }
    }
    detail = std::to_string(n_pairs) + " pairs";
    return true;
  });
}

CheckResult check_vjp_gradient(const VjpFn& vjp_fn, int instances) {
  return timed("vjp_gradient", [&](std::string& detail) {
    Rng rng(202, "verify-vjp");
    constexpr double eps = 1e-5, tol = 1e-5;
    double worst = 0;
    int done = 0, redraws = 0;
    while (done < instances) {
      std::vector<int> sizes{1 + int(rng.index(4)), 1 + int(rng.index(8))};
      if (rng.uniform() < 0.5) sizes.push_back(1 + int(rng.index(4)));
      sizes.push_back(1 + int(rng.index(3)));
      MlpSpec spec{sizes, HiddenActivation::relu, OutputActivation::sigmoid_scaled, 20.0};
      auto layout = std::make_shared<const PolicyLayout>(PolicyLayout::global(spec));
      Policy p(layout, 0.5 * sample_gaussian(layout->param_count(), rng));
      const VectorXd h = exp_vec(spec.input_dim(), 0.5, rng);
      const VectorXd u = sample_gaussian(spec.output_dim(), rng);
      // A perturbation of size eps can move a pre-activation by eps * |input|.
      if (min_hidden_preactivation(p, h) < 1e-6 + 1e-3) {
        ++redraws;
        continue;
      }
      const VectorXd g = vjp_fn(p, h, u);
      VectorXd fd(p.size());
      for (Eigen::Index j = 0; j < p.size(); ++j) {
        Policy plus = p, minus = p;
        plus.theta()[j] += eps;
        minus.theta()[j] -= eps;
        fd[j] = (u.dot(forward(plus, h)) - u.dot(forward(minus, h))) / (2 * eps);
      }
      const double scale = std::max(fd.lpNorm<Eigen::Infinity>(), 1e-8);
      worst = std::max(worst, (g - fd).lpNorm<Eigen::Infinity>() / scale);
      ++done;
    }
    detail = "max relative error " + fmt(worst) + " over " + std::to_string(instances) + " nets (" +
             std::to_string(redraws) + " redrawn near kinks)";
    return worst <= tol;
  });
}

CheckResult check_composite_block_diagonal(const VjpFn& vjp_fn) {
  return timed("composite_block_diagonal", [&](std::string& detail) {
    Rng rng(303, "verify-composite");
    const int n = 4;
    MlpSpec spec{{1, 8, 4, 1}, HiddenActivation::relu, OutputActivation::sigmoid_scaled, 20.0};
    auto layout = std::make_shared<const PolicyLayout>(PolicyLayout::per_user(spec, n));
    const Policy p(layout, 0.5 * sample_gaussian(layout->param_count(), rng));
    const VectorXd h = exp_vec(n, 0.5, rng);
    const VectorXd c = sample_gaussian(n, rng);
    const VectorXd full = vjp_fn(p, h, c);
    double leak = 0, mismatch = 0;
    for (int i = 0; i < n; ++i) {
      VectorXd ci = VectorXd::Zero(n);
      ci[i] = c[i];
      const VectorXd gi = vjp_fn(p, h, ci);
      const Eigen::Index off = layout->sub_offset(i), len = layout->sub_param_count(i);
      mismatch = std::max(mismatch, (gi.segment(off, len) - full.segment(off, len)).lpNorm<Eigen::Infinity>());
      VectorXd outside = gi;
      outside.segment(off, len).setZero();
      leak = std::max(leak, outside.lpNorm<Eigen::Infinity>());
    }
    detail = "off-block magnitude " + fmt(leak) + ", block mismatch " + fmt(mismatch);
    return leak == 0 && mismatch <= 1e-14;
  });
}

CheckResult check_vjp_cost() {
  return timed("vjp_cost", [&](std::string& detail) {
    Rng rng(404, "verify-cost");
    const std::vector<std::vector<int>> shapes{{10, 64, 32, 10}, {5, 512, 256, 5}, {3, 4, 2}};
    for (const auto& s : shapes) {
      MlpSpec spec{s, HiddenActivation::relu, OutputActivation::sigmoid_scaled, 20.0};
      auto layout = std::make_shared<const PolicyLayout>(PolicyLayout::global(spec));
      const Policy p(layout, 0.1 * sample_gaussian(layout->param_count(), rng));
      OpCounter ops;
      vjp(p, exp_vec(spec.input_dim(), 0.5, rng), sample_gaussian(spec.output_dim(), rng), &ops);
      if (ops.forward_sweeps != 1 || ops.backward_sweeps != 1 || ops.mult_adds > 3 * layout->param_count()) {
        detail = "shape with " + std::to_string(layout->param_count()) + " params: " +
                 std::to_string(ops.forward_sweeps) + " forward, " + std::to_string(ops.backward_sweeps) +
                 " backward, " + std::to_string(ops.mult_adds) + " mult-adds";
        return false;
      }
    }
    detail = "one forward and one backward sweep, mult-adds <= 3 N_phi";
    return true;
  });
}

CheckResult check_rate_monotonicity(int n_cases) {
  return timed("rate_monotonicity", [&](std::string& detail) {
    Rng rng(505, "verify-rates");
    for (int k = 0; k < n_cases; ++k) {
      const int n = 2 + int(rng.index(9));
      const VectorXd h = exp_vec(n, 0.5, rng);
      const VectorXd v = uniform_vec(n, 0.5, 2.0, rng);
      const VectorXd p = uniform_vec(n, 0.0, 5.0, rng);
      const int i = int(rng.index(n));
      VectorXd q = p;
      q[i] += 0.5 + rng.uniform();
      const VectorXd r0 = mai_rates(h, p, v), r1 = mai_rates(h, q, v);
      if (!(r1[i] > r0[i])) {
        detail = "own rate did not increase in case " + std::to_string(k);
        return false;
      }
      for (int j = 0; j < n; ++j)
        if (j != i && !(r1[j] < r0[j])) {
          detail = "rate of another user did not decrease in case " + std::to_string(k);
          return false;
        }
    }
    detail = std::to_string(n_cases) + " cases";
    return true;
  });
}

CheckResult check_waterfilling(int n_states) {
  return timed("waterfilling", [&](std::string& detail) {
    Rng rng(606, "verify-waterfill");
    const ServiceSpec spec = make_service(ServiceKind::awgn, 10, rng);
    const ChannelDist dist{ChannelKind::exponential_iid, 0.5, 10};
    const WaterfillSolution sol = waterfill_clairvoyant(spec, dist, 20000, 1e-6, rng);
    const double residual = std::abs(sol.achieved_budget - spec.p_max);
    if (residual > 1e-3 * spec.p_max) {
      detail = "budget residual " + fmt(residual);
      return false;
    }
    double worst = 0;
    for (int s = 0; s < n_states; ++s) {
      const VectorXd h = sample_channel(dist, rng);
      const VectorXd p = sol.allocate(h);
      for (int i = 0; i < spec.n_users; ++i) {
        auto lagr = [&](double q) {
          return spec.weights[i] * std::log1p(h[i] * q / spec.noise[i]) - sol.dual_level * q;
        };
        const double at = lagr(p[i]);
        double best = -std::numeric_limits<double>::infinity();
        for (double q = 0; q <= spec.p_max; q += 1e-3) best = std::max(best, lagr(q));
        worst = std::max(worst, best - at);
      }
    }
    detail = "budget residual " + fmt(residual) + ", worst grid improvement " + fmt(worst);
    return worst <= 1e-6;
  });
}

CheckResult check_wmmse(int n_instances) {
  return timed("wmmse", [&](std::string& detail) {
    Rng rng(707, "verify-wmmse");
    const ServiceSpec spec = make_service(ServiceKind::mai, 10, rng);
    const ChannelDist dist{ChannelKind::exponential_iid, 0.5, 10};
    double worst_drop = 0, worst_excess = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < n_instances; ++k) {
      const VectorXd h = sample_channel(dist, rng);
      double prev = -std::numeric_limits<double>::infinity();
      wmmse_instant(spec, h, 1000, 1e-10, [&](const WmmseIterate& it) {
        if (std::isfinite(prev)) worst_drop = std::max(worst_drop, prev - it.objective);
        prev = it.objective;
        worst_excess = std::max(worst_excess, it.powers().sum() - spec.p_max);
      });
    }
    detail = "largest objective drop " + fmt(worst_drop) + ", largest budget excess " + fmt(worst_excess);
    return worst_drop <= 1e-9 && worst_excess <= 1e-9;
  });
}

namespace {

struct SmallProblem {
  Problem problem;
  std::shared_ptr<const PolicyLayout> layout;
};

SmallProblem small_awgn(int n, Rng& rng) {
  ServiceSpec spec = make_service(ServiceKind::awgn, n, rng);
  ChannelDist dist{ChannelKind::exponential_iid, 0.5, n};
  MlpSpec net{{1, 4, 2, 1}, HiddenActivation::relu, OutputActivation::sigmoid_scaled, spec.p_max};
  auto layout = std::make_shared<const PolicyLayout>(PolicyLayout::per_user(net, n));
  return {make_problem(spec, dist, ObjectiveSpec{}), layout};
}

}  // namespace

CheckResult check_learner_structure() {
  return timed("learner_structure", [&](std::string& detail) {
    using E = StepTrace::Event;
    Rng rng(808, "verify-structure");
    SmallProblem sp = small_awgn(3, rng);
    LearnerConfig cfg;
    LearnerState s0 = initial_state(sp.problem, Policy(sp.layout, 0.3 * sample_gaussian(sp.layout->param_count(), rng)),
                                    1.0, 1.0);

    StepTrace plus_trace;
    const StepResult r = step(s0, rng, sp.problem, cfg, &plus_trace);
    const std::vector<E> plus_order{E::sample_u_r,     E::sample_channel, E::probe_base,  E::probe_perturbed,
                                    E::update_x,       E::update_theta,   E::probe_dual, E::update_lambda_r};
    std::vector<E> got;
    for (const auto& e : plus_trace.entries) got.push_back(e.event);
    if (got != plus_order) {
      detail = "unexpected event order for the action-space learner";
      return false;
    }
    const auto& ent = plus_trace.entries;
    if (ent[2].theta != s0.params.theta() || ent[3].theta != s0.params.theta() ||
        ent[6].theta != r.state.params.theta()) {
      detail = "probes evaluated at the wrong parameters";
      return false;
    }
    if (r.record.probes != 3 || r.record.vjps != 1 || r.record.perturbation_dim != sp.problem.n_users()) {
      detail = "action-space learner reported " + std::to_string(r.record.probes) + " probes, " +
               std::to_string(r.record.vjps) + " vjps, perturbation dim " +
               std::to_string(r.record.perturbation_dim);
      return false;
    }

    StepTrace par_trace;
    cfg.algo = Algorithm::pdzdpg;
    const StepResult q = step_pdzdpg(s0, rng, sp.problem, cfg, &par_trace);
    int probes = 0;
    for (const auto& e : par_trace.entries)
      probes += e.event == E::probe_base || e.event == E::probe_perturbed || e.event == E::probe_dual;
    if (probes != 3 || q.record.probes != 3 || q.record.vjps != 0 ||
        q.record.perturbation_dim != sp.layout->param_count()) {
      detail = "parameter-space learner structure mismatch";
      return false;
    }
    detail = "3 probes per step; perturbation dims " + std::to_string(r.record.perturbation_dim) + " and " +
             std::to_string(q.record.perturbation_dim);
    return true;
  });
}

CheckResult check_learner_determinism() {
  return timed("learner_determinism", [&](std::string& detail) {
    Rng setup(909, "verify-determinism");
    SmallProblem sp = small_awgn(3, setup);
    const LearnerState s0 =
        initial_state(sp.problem, Policy(sp.layout, 0.3 * sample_gaussian(sp.layout->param_count(), setup)), 1.0, 1.0);
    for (Algorithm algo : {Algorithm::pdzdpg_plus, Algorithm::pdzdpg}) {
      LearnerConfig frozen;
      frozen.algo = algo;
      frozen.schedule = StepSchedule{0, 0, 0, 0, 0};
      Rng r0(1, "learner");
      const LearnerState f = run(sp.problem, frozen, s0, 50, r0, [](const StepRecord&) {});
      if (f.x != s0.x || f.params.theta() != s0.params.theta() || f.lambda_R != s0.lambda_R) {
        detail = "zero step sizes changed the state";
        return false;
      }
      LearnerConfig cfg;
      cfg.algo = algo;
      Rng a(7, "learner"), b(7, "learner"), c(8, "learner");
      const LearnerState sa = run(sp.problem, cfg, s0, 200, a, [](const StepRecord&) {});
      const LearnerState sb = run(sp.problem, cfg, s0, 200, b, [](const StepRecord&) {});
      const LearnerState sc = run(sp.problem, cfg, s0, 200, c, [](const StepRecord&) {});
      if (sa.x != sb.x || sa.params.theta() != sb.params.theta() || sa.lambda_R != sb.lambda_R) {
        detail = "equal seeds produced different trajectories";
        return false;
      }
      if (sa.params.theta() == sc.params.theta()) {
        detail = "different seeds produced identical trajectories";
        return false;
      }
    }
    detail = "frozen under zero steps; bitwise reproducible";
    return true;
  });
}

CheckResult check_smoothing_bounds(int n_points, long n_samples) {
  return timed("smoothing_bounds", [&](std::string& detail) {
    Rng rng(1010, "verify-smoothing");
    constexpr int n = 3;
    constexpr double L = 2.0, mu = 0.5, b = 3.0, cap = 1.0;
    const VectorXd a = VectorXd::Constant(n, 1.0 / std::sqrt(double(n)));
    // Concave, L-Lipschitz, nonincreasing in every coordinate.
    auto g = [&](const VectorXd& y) { return L * std::min(b - a.dot(y), cap); };
    const auto set = BoxSet<double>::nonnegative(n);
    const double bias_bound = mu * L * std::sqrt(double(n));
    const double moment_bound = L * L * (n + 4.0) * (n + 4.0);
    double worst_over = -1e300, worst_bias = -1e300, worst_moment = 0;
    for (int k = 0; k < n_points; ++k) {
      const VectorXd x = uniform_vec(n, 0.0, 8.0, rng);
      const double gx = g(x);
      const McEstimate<double> est = smoothed_value_mc<double>(g, x, set, mu, n_samples, rng, McSampling::antithetic);
      const double slack = 3 * est.std_error + 1e-12;
      worst_over = std::max(worst_over, est.value - gx - slack);
      worst_bias = std::max(worst_bias, std::abs(est.value - gx) - 3 * est.std_error - bias_bound);
      double m = 0;
      for (long s = 0; s < n_samples; ++s) {
        const VectorXd u = sample_gaussian(n, rng);
        const double delta = (g(project_box(x + mu * u, set)) - gx) / mu;
        m += delta * delta * u.squaredNorm();
      }
      worst_moment = std::max(worst_moment, m / double(n_samples));
    }
    detail = "max excess over g " + fmt(worst_over) + ", max bias excess " + fmt(worst_bias) +
             ", max second moment " + fmt(worst_moment) + " (bound " + fmt(moment_bound) + ")";
    return worst_over <= 0 && worst_bias <= 0 && worst_moment <= moment_bound;
  });
}

CheckResult check_smoothed_gradient_identity(long n_samples) {
  return timed("smoothed_gradient_identity", [&](std::string& detail) {
    Eigen::Matrix3d A;
    A << 2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 1.5;
    const VectorXd bvec = (VectorXd(3) << 1.0, -0.5, 0.25).finished();
    const VectorXd x = (VectorXd(3) << 0.4, -0.3, 0.8).finished();
    auto f = [&](const VectorXd& y) { return -y.dot(A * y) + bvec.dot(y); };
    const auto set = BoxSet<double>::unbounded(3);
    constexpr double mu = 0.3, eps = 1e-3;
    Rng rng(1111, "verify-gradient");
    const McGradient<double> g = smoothed_grad_mc<double>(f, x, set, mu, n_samples, rng);
    double worst = 0;
    for (int j = 0; j < 3; ++j) {
      auto diff = [&](const VectorXd& y) {
        VectorXd e = VectorXd::Zero(3);
        e[j] = eps;
        return (f(y + e) - f(y - e)) / (2 * eps);
      };
      const McEstimate<double> fd = smoothed_value_mc<double>(diff, x, set, mu, n_samples, rng);
      const double z = std::abs(g.value[j] - fd.value) /
                       std::sqrt(g.std_error[j] * g.std_error[j] + fd.std_error * fd.std_error);
      worst = std::max(worst, z);
    }
    detail = "max standardized gap " + fmt(worst);
    return worst <= 3.0;
  });
}

CheckResult check_policy_gradient_consistency(long n_samples) {
  return timed("policy_gradient_consistency", [&](std::string& detail) {
    ServiceSpec spec;
    spec.kind = ServiceKind::awgn;
    spec.n_users = 1;
    spec.weights = VectorXd::Ones(1);
    spec.noise = VectorXd::Ones(1);
    spec.p_max = 20.0;
    const ChannelDist dist{ChannelKind::exponential_iid, 0.5, 1};
    const Problem problem = make_problem(spec, dist, ObjectiveSpec{});
    MlpSpec net{{1, 2, 1}, HiddenActivation::relu, OutputActivation::sigmoid_scaled, spec.p_max};
    auto layout = std::make_shared<const PolicyLayout>(PolicyLayout::per_user(net, 1));
    VectorXd theta(layout->param_count());
    theta << 0.8, 0.5, 0.1, -0.2, 0.6, -0.9, 0.3;
    LearnerState s0 = initial_state(problem, Policy(layout, theta), 1.0, 1.0);
    s0.lambda_R << 1.0, 0.05;
    LearnerConfig cfg;
    cfg.smoothing.mu_R = 0.5;
    cfg.schedule = StepSchedule{0, 1.0, 0, 0, 0};

    // Mean learner direction from a frozen state.
    Rng rng(1212, "verify-policy-gradient");
    VectorXd dir = VectorXd::Zero(theta.size());
    for (long k = 0; k < n_samples; ++k) dir += step(s0, rng, problem, cfg).state.params.theta() - theta;
    dir /= double(n_samples);

    // Central differences of E{ lambda^T f(P(phi(H, theta) + mu U), H) } with
    // common random numbers.
    Rng ref_rng(1313, "verify-policy-reference");
    std::vector<VectorXd> hs, us;
    for (long k = 0; k < n_samples; ++k) {
      hs.push_back(sample_channel(dist, ref_rng));
      us.push_back(sample_gaussian(1, ref_rng));
    }
    auto J = [&](const VectorXd& th) {
      const Policy p(layout, th);
      double acc = 0;
      for (long k = 0; k < n_samples; ++k) {
        const VectorXd a = project_box(forward(p, hs[k]) + cfg.smoothing.mu_R * us[k], problem.actions);
        acc += s0.lambda_R.dot(service_vector(spec, hs[k], a));
      }
      return acc / double(n_samples);
    };
    constexpr double eps = 1e-4;
    VectorXd ref(theta.size());
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
      VectorXd tp = theta, tm = theta;
      tp[j] += eps;
      tm[j] -= eps;
      ref[j] = (J(tp) - J(tm)) / (2 * eps);
    }
    const double rel = (dir - ref).norm() / ref.norm();
    detail = "relative error " + fmt(rel) + " (reference norm " + fmt(ref.norm()) + ")";
    return rel <= 0.05;
  });
}

std::vector<CheckResult> verify(VerifySuite suite, const VjpFn& vjp_fn) {
  std::vector<CheckResult> out{
      check_projection(),          check_vjp_gradient(vjp_fn), check_composite_block_diagonal(vjp_fn),
      check_vjp_cost(),            check_rate_monotonicity(),  check_waterfilling(),
      check_wmmse(),               check_learner_structure(),  check_learner_determinism(),
  };
  if (suite == VerifySuite::full) {
    out.push_back(check_smoothing_bounds());
    out.push_back(check_smoothed_gradient_identity());
    out.push_back(check_policy_gradient_consistency());
  }
  return out;
}

}  // namespace pdzdpg
