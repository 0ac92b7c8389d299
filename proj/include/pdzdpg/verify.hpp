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

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pdzdpg/policy.hpp"
#include "pdzdpg/rng.hpp"

namespace pdzdpg {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0;
};

enum class VerifySuite {
  fast,  // deterministic and cheap Monte-Carlo checks
  full,  // adds the statistical smoothing-bound and policy-gradient checks
};

/// The reverse-mode product under test; replaceable for fault injection.
using VjpFn = std::function<Eigen::VectorXd(const Policy&, const Eigen::VectorXd&, const Eigen::VectorXd&)>;

VjpFn default_vjp();

// Individual checks. Each is self-contained and seeded.

/// Projection idempotence and nonexpansiveness on random pairs.
CheckResult check_projection(int n_pairs = 1000);

/// vjp against central finite differences (step 1e-5) on random small nets;
/// relative error <= 1e-5; instances near a ReLU kink are redrawn.
CheckResult check_vjp_gradient(const VjpFn& vjp_fn, int instances = 20);

/// Per-user composite: user i's gradient block depends only on cotangent i.
CheckResult check_composite_block_diagonal(const VjpFn& vjp_fn);

/// One forward and one backward sweep per vjp, O(N_phi) multiply-adds.
CheckResult check_vjp_cost();

/// MAI rate monotonicity in own and others' power.
CheckResult check_rate_monotonicity(int n_cases = 200);

/// Waterfilling budget residual and per-state grid-search KKT check.
CheckResult check_waterfilling(int n_states = 100);

/// WMMSE monotone objective and power feasibility per outer iteration.
CheckResult check_wmmse(int n_instances = 100);

/// Probe and VJP counts, perturbation dimension, and update ordering.
CheckResult check_learner_structure();

/// Zero step sizes freeze the state; fixed seeds reproduce trajectories bitwise.
CheckResult check_learner_determinism();

/// Smoothing bias bound, underestimation, and second-moment bound on a
/// concave Lipschitz test function over random points.
CheckResult check_smoothing_bounds(int n_points = 1000, long n_samples = 2000);

/// Smoothed-gradient estimator vs central difference of the smoothed value.
CheckResult check_smoothed_gradient_identity(long n_samples = 200000);

/// Mean action-space theta direction vs finite differences of the smoothed
/// Lagrangian term on a frozen single-user state; relative error <= 5%.
CheckResult check_policy_gradient_consistency(long n_samples = 200000);

std::vector<CheckResult> verify(VerifySuite suite, const VjpFn& vjp_fn = default_vjp());

}  // namespace pdzdpg
