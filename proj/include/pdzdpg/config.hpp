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
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdzdpg/learner.hpp"

namespace pdzdpg {

/// Invalid or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LayoutKind {
  per_user,  // one 1-...-1 network per user
  global,    // one N-...-N network
};

struct BenchmarkSpec {
  std::int64_t n_mc = 1000000;
  std::uint64_t seed = 20210611;
  double tol = 1e-6;
};

/// A fully resolved experiment: every default applied, user weights drawn.
struct ExperimentConfig {
  std::string name;
  ServiceSpec service;
  ChannelDist channel;
  std::uint64_t weight_seed = 0;  // 0 when weights were given explicitly
  LayoutKind layout = LayoutKind::per_user;
  std::vector<int> hidden;
  ObjectiveMode objective_mode = ObjectiveMode::exact_linear;
  LearnerConfig learner;
  double init_theta = 0.0;
  double init_theta_std = 0.0;  // > 0 adds seeded N(0, std^2) noise per run
  double init_x = 1.0;
  double init_lambda = 1.0;
  std::int64_t n_iters = 100000;
  std::vector<std::uint64_t> seeds;
  int ma_window = 1000;
  int log_every = 100;
  bool record_wall_time = false;
  BenchmarkSpec benchmark;

  /// Canonical JSON echo of the resolved configuration.
  nlohmann::json to_json() const;
  /// 16 hex digits of FNV-1a over the canonical echo.
  std::string hash() const;

  MlpSpec network() const;
  std::shared_ptr<const PolicyLayout> policy_layout() const;
  Problem problem() const;
  /// `seed` selects the initialization noise when init_theta_std > 0.
  LearnerState initial_state(std::uint64_t seed = 0) const;

  void validate() const;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

std::string algorithm_name(Algorithm algo);
Algorithm parse_algorithm(const std::string& name);

}  // namespace pdzdpg
