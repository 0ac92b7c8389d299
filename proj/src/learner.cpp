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

#include "pdzdpg/learner.hpp"

#include <chrono>
#include <cmath>

namespace pdzdpg {

void StepSchedule::validate() const {
  const double all[] = {alpha_x, alpha_theta, alpha_lambda_rate, alpha_lambda_power, alpha_lambda_S};
  for (double a : all)
    if (!(a > 0) || !std::isfinite(a)) throw std::invalid_argument("step sizes must be positive and finite");
}

namespace {

Eigen::VectorXd broadcast(const Eigen::VectorXd& c, int n) {
  if (c.size() == 1) return Eigen::VectorXd::Constant(n, c[0]);
  if (c.size() != n) throw std::invalid_argument("c_R must have 1 or " + std::to_string(n) + " entries");
  return c;
}

}  // namespace

Eigen::VectorXd SlackSpec::evaluate(double mu_R, int n_actions, int n_constraints) const {
  if (mode == SlackMode::zero) return Eigen::VectorXd::Zero(n_constraints);
  return mu_R * std::sqrt(double(n_actions)) * broadcast(c_R, n_constraints);
}

Eigen::VectorXd SlackSpec::feasibility_margin(double mu_R, int n_actions, int n_constraints) const {
  if (c_R.size() == 0) return {};
  return evaluate(mu_R, n_actions, n_constraints) -
         mu_R * std::sqrt(double(n_actions)) * broadcast(c_R, n_constraints);
}

void SlackSpec::validate(int n_constraints) const {
  if (c_R.size() != 0) {
    broadcast(c_R, n_constraints);
    if ((c_R.array() < 0).any()) throw std::invalid_argument("c_R must be nonnegative");
  }
  if (mode == SlackMode::linear && c_R.size() == 0)
    throw std::invalid_argument("linear slack requires c_R");
}

Problem make_problem(ServiceSpec service, ChannelDist channel, ObjectiveSpec objective) {
  service.validate();
  channel.validate();
  if (channel.dim != service.n_users) throw std::invalid_argument("channel dimension must equal n_users");
  if (objective.weights.size() == 0) objective.weights = service.weights;
  if (objective.weights.size() != service.n_users) throw std::invalid_argument("objective weights length");
  if (objective.n_g > 0 && !objective.g) throw std::invalid_argument("n_g > 0 requires a constraint function");
  // Safety rail far above any achievable ergodic rate.
  const Eigen::VectorXd rail =
      10.0 * (1.0 + service.p_max * channel.mean() / service.noise.array()).log().matrix();
  BoxSet<double> x_set(Eigen::VectorXd::Zero(service.n_users), rail);
  BoxSet<double> actions = action_set(service);
  return Problem{std::move(service), channel, std::move(objective), std::move(x_set), std::move(actions)};
}

LearnerState initial_state(const Problem& problem, Policy params, double x0, double lambda0) {
  if (params.layout().input_dim() != problem.channel.dim || params.layout().output_dim() != problem.n_users())
    throw std::invalid_argument("policy shape does not match the problem");
  return LearnerState{project_box(Eigen::VectorXd::Constant(problem.n_users(), x0), problem.x_set),
                      std::move(params), Eigen::VectorXd::Constant(problem.objective.n_g, lambda0),
                      Eigen::VectorXd::Constant(problem.n_constraints(), lambda0), 0};
}

Eigen::VectorXd primal_x_step(const LearnerState& state, const BoxSet<double>& x_set,
                              const Eigen::VectorXd& grad_obj, const Eigen::VectorXd* delta_g,
                              const Eigen::VectorXd* u_s, const StepSchedule& schedule, bool* rail_hit) {
  const Eigen::Index n = state.x.size();
  if (grad_obj.size() != n || state.lambda_R.size() != n + 1)
    throw std::invalid_argument("primal_x_step: dimension mismatch");
  Eigen::VectorXd direction = grad_obj - state.lambda_R.head(n);
  if (delta_g && u_s && delta_g->size() > 0) {
    if (delta_g->size() != state.lambda_S.size() || u_s->size() != n)
      throw std::invalid_argument("primal_x_step: g-constraint dimension mismatch");
    direction += (*u_s) * delta_g->dot(state.lambda_S);
  }
  const Eigen::VectorXd raw = state.x + schedule.alpha_x * direction;
  if (rail_hit) *rail_hit = (raw.array() > x_set.upper().array()).any();
  return project_box(raw, x_set);
}

Policy primal_theta_step(const LearnerState& state, const Eigen::VectorXd& h, const Eigen::VectorXd& u_r,
                         const Eigen::VectorXd& delta_f, const StepSchedule& schedule, OpCounter* ops) {
  if (delta_f.size() != state.lambda_R.size())
    throw std::invalid_argument("primal_theta_step: delta_f must cover every constraint");
  const double s = delta_f.dot(state.lambda_R);
  const Eigen::VectorXd grad = vjp(state.params, h, s * u_r, ops);
  return Policy(state.params.layout_ptr(), state.params.theta() + schedule.alpha_theta * grad);
}

Eigen::VectorXd dual_lambda_S_step(const Eigen::VectorXd& lambda_S, const Eigen::VectorXd& g_value,
                                   const StepSchedule& schedule) {
  if (lambda_S.size() != g_value.size()) throw std::invalid_argument("dual_lambda_S_step: length mismatch");
  return (lambda_S - schedule.alpha_lambda_S * g_value).cwiseMax(0.0);
}

Eigen::VectorXd dual_lambda_R_step(const Eigen::VectorXd& lambda_R, const Eigen::VectorXd& residuals,
                                   const StepSchedule& schedule) {
  if (lambda_R.size() != residuals.size() || lambda_R.size() < 1)
    throw std::invalid_argument("dual_lambda_R_step: length mismatch");
  Eigen::VectorXd alpha = Eigen::VectorXd::Constant(lambda_R.size(), schedule.alpha_lambda_rate);
  alpha[alpha.size() - 1] = schedule.alpha_lambda_power;
  return (lambda_R - alpha.cwiseProduct(residuals)).cwiseMax(0.0);
}

Eigen::VectorXd parameter_space_direction(const Eigen::VectorXd& f_base, const Eigen::VectorXd& f_perturbed,
                                          double mu, const Eigen::VectorXd& lambda_R,
                                          const Eigen::VectorXd& u_theta) {
  return finite_diff(f_base, f_perturbed, mu).dot(lambda_R) * u_theta;
}

namespace {

using Event = StepTrace::Event;

void note(StepTrace* trace, Event e, const Eigen::VectorXd* theta = nullptr) {
  if (trace) trace->push(e, theta ? *theta : Eigen::VectorXd{});
}

void require_finite(const Eigen::VectorXd& v, std::int64_t iter, const char* field) {
  if (!v.allFinite()) throw NumericAbort(iter, field);
}

/// State-space half of an iteration shared by both algorithms.
struct StateSide {
  bool needs_u_s = false;
  Eigen::VectorXd u_s;
  Eigen::VectorXd grad_obj;
  Eigen::VectorXd delta_g;
};

bool needs_state_perturbation(const Problem& problem) {
  return problem.objective.n_g > 0 || problem.objective.mode == ObjectiveMode::smoothed_zeroth_order;
}

StateSide state_side(const LearnerState& state, const Problem& problem, const LearnerConfig& config,
                     Eigen::VectorXd u_s) {
  StateSide side;
  side.needs_u_s = u_s.size() > 0;
  side.u_s = std::move(u_s);
  const auto& obj = problem.objective;
  if (!side.needs_u_s) {
    side.grad_obj = obj.weights;
    return side;
  }
  const double mu = config.smoothing.mu_S;
  const Eigen::VectorXd x_pert = project_box(state.x + mu * side.u_s, problem.x_set);
  if (obj.mode == ObjectiveMode::smoothed_zeroth_order) {
    const double d = (obj.value(x_pert) - obj.value(state.x)) / mu;
    side.grad_obj = d * side.u_s;
  } else {
    side.grad_obj = obj.weights;
  }
  if (obj.n_g > 0) side.delta_g = finite_diff(obj.g(state.x), obj.g(x_pert), mu);
  return side;
}

StepRecord make_record(const LearnerState& next, const Problem& problem, const Eigen::VectorXd& action,
                       const Eigen::VectorXd& f_base) {
  StepRecord rec;
  rec.iter = next.iter;
  const int n = problem.n_users();
  rec.rates = f_base.head(n);
  rec.inst_weighted_sumrate = problem.service.weights.dot(rec.rates);
  rec.power_used = action.sum();
  rec.x = next.x;
  rec.objective_value = problem.objective.value(next.x);
  rec.lambda_power = next.lambda_R[n];
  return rec;
}

void dual_updates(LearnerState& next, const LearnerState& prev, const Problem& problem,
                  const LearnerConfig& config, const StateSide& side, const Eigen::VectorXd& f_dual,
                  StepTrace* trace) {
  if (problem.objective.n_g > 0) {
    const Eigen::VectorXd x_pert = project_box(next.x + config.smoothing.mu_S * side.u_s, problem.x_set);
    note(trace, Event::eval_g_dual);
    next.lambda_S = dual_lambda_S_step(prev.lambda_S, problem.objective.g(x_pert), config.schedule);
    note(trace, Event::update_lambda_s);
  }
  const Eigen::VectorXd slack =
      config.slack.evaluate(config.smoothing.mu_R, problem.n_users(), problem.n_constraints());
  next.lambda_R = dual_lambda_R_step(prev.lambda_R, constraint_residuals(f_dual, next.x, slack), config.schedule);
  note(trace, Event::update_lambda_r);
}

void check_state(const LearnerState& s, const Eigen::VectorXd& f_base, const Eigen::VectorXd& f_dual) {
  require_finite(f_base, s.iter, "service probe");
  require_finite(f_dual, s.iter, "dual service probe");
  require_finite(s.x, s.iter, "x");
  require_finite(s.params.theta(), s.iter, "theta");
  require_finite(s.lambda_S, s.iter, "lambda_S");
  require_finite(s.lambda_R, s.iter, "lambda_R");
}

}  // namespace

StepResult step(LearnerState state, Rng& rng, const Problem& problem, const LearnerConfig& config,
                StepTrace* trace) {
  const double mu_R = config.smoothing.mu_R;
  const int n = problem.n_users();

  Eigen::VectorXd u_s;
  if (needs_state_perturbation(problem)) {
    u_s = sample_gaussian(n, rng);
    note(trace, Event::sample_u_s);
  }
  const Eigen::VectorXd u_r = sample_gaussian(problem.actions.dim(), rng);
  note(trace, Event::sample_u_r);
  const Eigen::VectorXd h = sample_channel(problem.channel, rng);
  note(trace, Event::sample_channel);

  const StateSide side = state_side(state, problem, config, std::move(u_s));

  const Eigen::VectorXd action = forward(state.params, h);
  const Eigen::VectorXd f_base = service_vector(problem.service, h, action);
  note(trace, Event::probe_base, &state.params.theta());
  const Eigen::VectorXd f_pert =
      service_vector(problem.service, h, project_box(action + mu_R * u_r, problem.actions));
  note(trace, Event::probe_perturbed, &state.params.theta());
  const Eigen::VectorXd delta_f = finite_diff(f_base, f_pert, mu_R);

  LearnerState next{state.x, state.params, state.lambda_S, state.lambda_R, state.iter + 1};
  bool rail_hit = false;
  next.x = primal_x_step(state, problem.x_set, side.grad_obj, side.needs_u_s ? &side.delta_g : nullptr,
                         side.needs_u_s ? &side.u_s : nullptr, config.schedule, &rail_hit);
  note(trace, Event::update_x);
  next.params = primal_theta_step(state, h, u_r, delta_f, config.schedule);
  note(trace, Event::update_theta);

  // Re-probe with the updated policy, same channel and perturbation.
  const Eigen::VectorXd a_dual = project_box(forward(next.params, h) + mu_R * u_r, problem.actions);
  const Eigen::VectorXd f_dual = service_vector(problem.service, h, a_dual);
  note(trace, Event::probe_dual, &next.params.theta());
  dual_updates(next, state, problem, config, side, f_dual, trace);

  check_state(next, f_base, f_dual);
  StepRecord rec = make_record(next, problem, action, f_base);
  rec.probes = 3;
  rec.vjps = 1;
  rec.perturbation_dim = u_r.size();
  rec.x_rail_hit = rail_hit;
  return {std::move(next), std::move(rec)};
}

StepResult step_pdzdpg(LearnerState state, Rng& rng, const Problem& problem, const LearnerConfig& config,
                       StepTrace* trace) {
  const double mu = config.smoothing.mu_R;
  const int n = problem.n_users();

  Eigen::VectorXd u_s;
  if (needs_state_perturbation(problem)) {
    u_s = sample_gaussian(n, rng);
    note(trace, Event::sample_u_s);
  }
  const Eigen::VectorXd u_theta = sample_gaussian(state.params.size(), rng);
  note(trace, Event::sample_u_theta);
  const Eigen::VectorXd h = sample_channel(problem.channel, rng);
  note(trace, Event::sample_channel);

  const StateSide side = state_side(state, problem, config, std::move(u_s));

  const Eigen::VectorXd action = forward(state.params, h);
  const Eigen::VectorXd f_base = service_vector(problem.service, h, action);
  note(trace, Event::probe_base, &state.params.theta());
  const Policy perturbed = perturb_params(state.params, mu, u_theta);
  const Eigen::VectorXd f_pert =
      service_vector(problem.service, h, project_box(forward(perturbed, h), problem.actions));
  note(trace, Event::probe_perturbed, &perturbed.theta());

  LearnerState next{state.x, state.params, state.lambda_S, state.lambda_R, state.iter + 1};
  bool rail_hit = false;
  next.x = primal_x_step(state, problem.x_set, side.grad_obj, side.needs_u_s ? &side.delta_g : nullptr,
                         side.needs_u_s ? &side.u_s : nullptr, config.schedule, &rail_hit);
  note(trace, Event::update_x);
  next.params.theta() += config.schedule.alpha_theta *
                         parameter_space_direction(f_base, f_pert, mu, state.lambda_R, u_theta);
  note(trace, Event::update_theta);

  const Policy dual_probe = perturb_params(next.params, mu, u_theta);
  const Eigen::VectorXd f_dual =
      service_vector(problem.service, h, project_box(forward(dual_probe, h), problem.actions));
  note(trace, Event::probe_dual, &dual_probe.theta());
  dual_updates(next, state, problem, config, side, f_dual, trace);

  check_state(next, f_base, f_dual);
  StepRecord rec = make_record(next, problem, action, f_base);
  rec.probes = 3;
  rec.vjps = 0;
  rec.perturbation_dim = u_theta.size();
  rec.x_rail_hit = rail_hit;
  return {std::move(next), std::move(rec)};
}

LearnerState run(const Problem& problem, const LearnerConfig& config, LearnerState state, std::int64_t n_iters,
                 Rng& rng, const RecordSink& sink) {
  using Clock = std::chrono::steady_clock;
  const auto advance = config.algo == Algorithm::pdzdpg_plus ? &step : &step_pdzdpg;
  for (std::int64_t k = 0; k < n_iters; ++k) {
    const auto t0 = Clock::now();
    StepResult r = advance(std::move(state), rng, problem, config, nullptr);
    r.record.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count();
    state = std::move(r.state);
    if (sink) sink(r.record);
  }
  return state;
}

}  // namespace pdzdpg
