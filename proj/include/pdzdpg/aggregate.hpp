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
#include <string>
#include <string_view>
#include <vector>

namespace pdzdpg {

/// Across-seed mean with a percentile-bootstrap band.
struct AggregateBand {
  std::int64_t iter = 0;
  std::string metric;
  double mean = 0;
  double lo = 0;
  double hi = 0;
};

inline constexpr std::string_view kAggregateCsvHeader = "iter,metric,mean,lo,hi";

/// Percentile of sorted data with linear interpolation between order statistics.
double percentile_sorted(const std::vector<double>& sorted, double q);

/// Bootstrap bands over seed resamples for every iteration and metric.
/// Inputs must share one config hash and one iteration grid.
std::vector<AggregateBand> aggregate(const std::vector<std::filesystem::path>& csv_paths, int n_boot, double level,
                                     std::uint64_t rng_seed);

/// Run CSVs (`run-<hash>-seed<n>.csv`) in a directory, sorted by name.
std::vector<std::filesystem::path> find_run_csvs(const std::filesystem::path& dir);

void write_aggregate_csv(const std::filesystem::path& path, const std::vector<AggregateBand>& bands);

}  // namespace pdzdpg
