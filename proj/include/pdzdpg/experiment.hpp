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
#include <optional>
#include <string>
#include <vector>

#include "pdzdpg/config.hpp"
#include "pdzdpg/records.hpp"

namespace pdzdpg {

enum class BenchmarkKind { waterfilling, wmmse };

std::string benchmark_name(BenchmarkKind kind);
BenchmarkKind parse_benchmark(const std::string& name);
/// Waterfilling for AWGN, WMMSE for MAI.
BenchmarkKind default_benchmark(const ExperimentConfig& cfg);

struct BenchmarkResult {
  BenchmarkKind kind = BenchmarkKind::waterfilling;
  double value = 0;
  double std_error = 0;
  std::int64_t n_mc = 0;
  std::uint64_t seed = 0;
  double dual_level = 0;  // waterfilling only
};

/// Evaluates the model-based reference for the configured problem.
BenchmarkResult compute_benchmark(const ExperimentConfig& cfg, BenchmarkKind kind);

/// `{ "value": ..., "stderr": ..., "n_mc": ..., "seed": ... }`
void write_benchmark_sidecar(const std::filesystem::path& path, const BenchmarkResult& b);
BenchmarkResult read_benchmark_sidecar(const std::filesystem::path& path, BenchmarkKind kind);
std::string benchmark_file_name(BenchmarkKind kind);

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool diverged = false;
  std::int64_t iterations = 0;  // completed
  std::int64_t failed_iter = 0;  // iteration that produced a non-finite value
  std::string message;
  std::filesystem::path csv;
  std::filesystem::path checkpoint;
  std::int64_t x_rail_hits = 0;
};

/// Runs one seed, writing its CSV (and a parameter checkpoint on success).
/// If `trace` is non-null every step record is appended to it.
SeedOutcome run_seed(const ExperimentConfig& cfg, std::uint64_t seed, const std::filesystem::path& out_dir,
                     std::vector<StepRecord>* trace = nullptr);

struct ExperimentResult {
  std::string config_hash;
  std::vector<SeedOutcome> seeds;
  std::optional<BenchmarkResult> benchmark;
  std::string benchmark_error;  // set when the oracle failed
  std::filesystem::path manifest;

  bool any_diverged() const;
};

/// All seeds in parallel (one worker each), the benchmark sidecar, and a
/// manifest echoing the resolved config.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                bool with_benchmark = true);

}  // namespace pdzdpg
