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

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pdzdpg/policy.hpp"
#include "pdzdpg/rng.hpp"
#include "pdzdpg/smoothing.hpp"
#include "pdzdpg/systems.hpp"

namespace pdzdpg {

enum class Algorithm {
  pdzdpg_plus,  // action-space perturbation + policy VJP
  pdzdpg,       // parameter-space perturbation, no VJP
};

/// Constant per-block step sizes.
struct StepSchedule {
  double alpha_x = 0.001;
  double alpha_theta = 0.02;
  double alpha_lambda_rate = 0.008;
  double alpha_lambda_power = 0.0001;
  double alpha_lambda_S = 0.008;

  void validate() const;
};

enum class SlackMode { zero, linear };

/// Feasibility slack S(mu_R) on the ergodic constraints.
struct SlackSpec {
  SlackMode mode = SlackMode::zero;
  /// Per-constraint Lipschitz estimates; one entry (broadcast) or one per constraint.
  Eigen::VectorXd c_R;

  /// S(mu_R): zero, or mu_R * c_R * sqrt(n_actions).
  Eigen::VectorXd evaluate(double mu_R, int n_actions, int n_constraints) const;

  /// S(mu_R) - mu_R c_R sqrt(n_actions). Negative entries bound the worst-case
  /// violation of the unsmoothed constraints. Empty when c_R is not supplied.
  Eigen::VectorXd feasibility_margin(double mu_R, int n_actions, int n_constraints) const;

  void validate(int n_constraints) const;
};

enum class ObjectiveMode { exact_linear, smoothed_zeroth_order };

/// Utility g^o(x) = w^T x and optional concave constraints g(x) >= 0.
struct ObjectiveSpec {
  ObjectiveMode mode = ObjectiveMode::exact_linear;
  Eigen::VectorXd weights;
  int n_g = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> g;

  double value(const Eigen::VectorXd& x) const { return weights.dot(x); }
};

/// Everything the learner needs to know about one allocation instance.
struct Problem {
  ServiceSpec service;
  ChannelDist channel;
  ObjectiveSpec objective;
  BoxSet<double> x_set;
  BoxSet<double> actions;

  int n_users() const { return service.n_users; }
  int n_constraints() const { return service.n_constraints(); }
};

/// Builds a problem with the default box for x: [0, 10 log(1 + p_max E[H] / v_i)].
Problem make_problem(ServiceSpec service, ChannelDist channel, ObjectiveSpec objective);

struct LearnerConfig {
  Algorithm algo = Algorithm::pdzdpg_plus;
  SmoothingParams<double> smoothing;
  SlackSpec slack;
  StepSchedule schedule;
};

struct LearnerState {
  Eigen::VectorXd x;         // ergodic service levels
  Policy params;             // theta
  Eigen::VectorXd lambda_S;  // multipliers of g(x) >= 0
  Eigen::VectorXd lambda_R;  // rate multipliers then the power multiplier
  std::int64_t iter = 0;
};

LearnerState initial_state(const Problem& problem, Policy params, double x0, double lambda0);

/// Per-iteration metrics emitted by a step.
struct StepRecord {
  std::int64_t iter = 0;               // iterations completed
  double inst_weighted_sumrate = 0;    // w^T rates at the unperturbed action
  double power_used = 0;               // sum of the unperturbed action
  Eigen::VectorXd rates;               // per-user rates at the unperturbed action
  Eigen::VectorXd x;                   // ergodic iterate after the update
  double objective_value = 0;          // w^T x after the update
  double lambda_power = 0;
  int probes = 0;
  int vjps = 0;
  Eigen::Index perturbation_dim = 0;
  bool x_rail_hit = false;
  std::int64_t wall_ns = 0;
};

/// Optional instrumentation of one step: what happened, in order.
struct StepTrace {
  enum class Event {
    sample_u_s,
    sample_u_r,
    sample_u_theta,
    sample_channel,
    probe_base,
    probe_perturbed,
    update_x,
    update_theta,
    eval_g_dual,
    probe_dual,
    update_lambda_s,
    update_lambda_r,
  };
  struct Entry {
    Event event;
    Eigen::VectorXd theta;  // parameters the policy was evaluated at (probes only)
  };
  std::vector<Entry> entries;

  void push(Event e, Eigen::VectorXd theta = {}) { entries.push_back({e, std::move(theta)}); }
};

/// A non-finite value appeared; the run cannot continue.
class NumericAbort : public std::runtime_error {
 public:
  NumericAbort(std::int64_t iter, std::string field)
      : std::runtime_error("non-finite " + field + " at iteration " + std::to_string(iter)),
        iter_(iter),
        field_(std::move(field)) {}
  std::int64_t iter() const { return iter_; }
  const std::string& field() const { return field_; }

 private:
  std::int64_t iter_;
  std::string field_;
};

struct StepResult {
  LearnerState state;
  StepRecord record;
};

// Building blocks of one iteration.

/// x <- P_X{ x + alpha_x (G + U_S Delta_g^T lambda_S - lambda_R[rates]) }.
/// `delta_g`/`u_s` may be null when there are no explicit g-constraints.
Eigen::VectorXd primal_x_step(const LearnerState& state, const BoxSet<double>& x_set,
                              const Eigen::VectorXd& grad_obj, const Eigen::VectorXd* delta_g,
                              const Eigen::VectorXd* u_s, const StepSchedule& schedule,
                              bool* rail_hit = nullptr);

/// theta <- theta + alpha_theta * vjp(theta, h, (Delta_f^T lambda_R) u_R).
Policy primal_theta_step(const LearnerState& state, const Eigen::VectorXd& h,
                         const Eigen::VectorXd& u_r, const Eigen::VectorXd& delta_f,
                         const StepSchedule& schedule, OpCounter* ops = nullptr);

/// lambda_S <- [lambda_S - alpha g(P_X{x^{k+1} + mu_S U_S})]_+.
Eigen::VectorXd dual_lambda_S_step(const Eigen::VectorXd& lambda_S, const Eigen::VectorXd& g_value,
                                   const StepSchedule& schedule);

/// lambda_R <- [lambda_R - alpha o residuals]_+; the last entry is the power
/// multiplier and uses alpha_lambda_power.
Eigen::VectorXd dual_lambda_R_step(const Eigen::VectorXd& lambda_R, const Eigen::VectorXd& residuals,
                                   const StepSchedule& schedule);

/// Parameter-space ascent direction (Delta_f^T lambda) u_theta.
Eigen::VectorXd parameter_space_direction(const Eigen::VectorXd& f_base, const Eigen::VectorXd& f_perturbed,
                                          double mu, const Eigen::VectorXd& lambda_R,
                                          const Eigen::VectorXd& u_theta);

/// One PD-ZDPG+ iteration.
StepResult step(LearnerState state, Rng& rng, const Problem& problem, const LearnerConfig& config,
                StepTrace* trace = nullptr);

/// One PD-ZDPG iteration: the same skeleton with theta perturbed directly
/// (radius mu_R in parameter space).
StepResult step_pdzdpg(LearnerState state, Rng& rng, const Problem& problem, const LearnerConfig& config,
                       StepTrace* trace = nullptr);

using RecordSink = std::function<void(const StepRecord&)>;

/// `n_iters` iterations of the configured algorithm, streaming every record
/// to `sink`. Throws NumericAbort on divergence.
LearnerState run(const Problem& problem, const LearnerConfig& config, LearnerState state,
                 std::int64_t n_iters, Rng& rng, const RecordSink& sink);

}  // namespace pdzdpg
