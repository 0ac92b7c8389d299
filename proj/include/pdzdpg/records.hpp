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
#include <deque>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pdzdpg/learner.hpp"

namespace pdzdpg {

/// One logged row of a training run.
struct RunRecord {
  std::int64_t iter = 0;
  std::uint64_t seed = 0;
  double inst_sumrate = 0;
  double ma_sumrate = 0;
  double power_used = 0;         // windowed mean of sum(p)
  double power_violation = 0;    // max(0, power_used - p_max)
  double max_rate_residual = 0;  // max_i (x_i - windowed mean of rate_i)
  double lambda_power = 0;
  double objective = 0;          // w^T x
  std::int64_t wall_ns = 0;

  bool operator==(const RunRecord&) const = default;
};

inline constexpr std::string_view kRunCsvHeader =
    "iter,seed,inst_sumrate,ma_sumrate,power_used,power_violation,max_rate_residual,lambda_power,objective,"
    "wall_ns";

/// Metric columns of a run CSV, in order (everything but iter and seed).
const std::vector<std::string>& run_metric_names();

/// Trailing-window statistics over step records.
class MetricsWindow {
 public:
  MetricsWindow(int window, double p_max);

  void push(const StepRecord& rec);
  /// Row for the most recently pushed record.
  RunRecord snapshot(std::uint64_t seed) const;
  std::size_t size() const { return sumrate_.size(); }

 private:
  int window_;
  double p_max_;
  std::deque<double> sumrate_;
  std::deque<double> power_;
  std::deque<Eigen::VectorXd> rates_;
  StepRecord last_;
};

std::string format_run_row(const RunRecord& r);
RunRecord parse_run_row(const std::string& line);

/// A run CSV on disk: fixed header, one row per logged iteration.
struct RunTable {
  std::vector<RunRecord> rows;
};

RunTable read_run_csv(const std::filesystem::path& path);

/// `run-<hash>-seed<seed>.csv`
std::string run_csv_name(const std::string& config_hash, std::uint64_t seed);
/// Extracts the config hash from a run CSV file name; empty if it does not match.
std::string config_hash_from_name(const std::filesystem::path& path);

}  // namespace pdzdpg
