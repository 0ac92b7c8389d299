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

#include "pdzdpg/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "pdzdpg/records.hpp"
#include "pdzdpg/rng.hpp"

namespace pdzdpg {

double percentile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("percentile of empty data");
  const double pos = q * double(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - double(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

namespace {

double metric_value(const RunRecord& r, std::size_t m) {
  switch (m) {
    case 0: return r.inst_sumrate;
    case 1: return r.ma_sumrate;
    case 2: return r.power_used;
    case 3: return r.power_violation;
    case 4: return r.max_rate_residual;
    case 5: return r.lambda_power;
    case 6: return r.objective;
    case 7: return double(r.wall_ns);
  }
  throw std::logic_error("metric index");
}

}  // namespace

std::vector<AggregateBand> aggregate(const std::vector<std::filesystem::path>& csv_paths, int n_boot, double level,
                                     std::uint64_t rng_seed) {
  if (csv_paths.size() < 2) throw std::invalid_argument("aggregate: need at least two run CSVs");
  if (n_boot < 1) throw std::invalid_argument("aggregate: n_boot must be positive");
  if (!(level > 0 && level < 1)) throw std::invalid_argument("aggregate: level must lie in (0, 1)");

  const std::string hash = config_hash_from_name(csv_paths.front());
  if (hash.empty()) throw std::invalid_argument("aggregate: " + csv_paths.front().string() + " carries no config hash");
  std::vector<RunTable> runs;
  for (const auto& p : csv_paths) {
    if (config_hash_from_name(p) != hash)
      throw std::invalid_argument("aggregate: refusing to mix config hashes (" + p.filename().string() + ")");
    runs.push_back(read_run_csv(p));
  }
  const auto& grid = runs.front().rows;
  for (const auto& run : runs) {
    bool same = run.rows.size() == grid.size();
    for (std::size_t k = 0; same && k < grid.size(); ++k) same = run.rows[k].iter == grid[k].iter;
    if (!same) throw std::invalid_argument("aggregate: iteration grids differ between runs");
  }

  const std::size_t n_runs = runs.size();
  const auto& names = run_metric_names();
  const double tail = (1.0 - level) / 2.0;
  Rng rng(rng_seed, "bootstrap");
  std::vector<AggregateBand> bands;
  std::vector<double> values(n_runs), boot(static_cast<std::size_t>(n_boot));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    for (std::size_t m = 0; m < names.size(); ++m) {
      for (std::size_t r = 0; r < n_runs; ++r) values[r] = metric_value(runs[r].rows[k], m);
      double sum = 0;
      for (double v : values) sum += v;
      const double mean = sum / double(n_runs);
      for (auto& b : boot) {
        double s = 0;
        for (std::size_t r = 0; r < n_runs; ++r) s += values[rng.index(n_runs)];
        b = s / double(n_runs);
      }
      std::sort(boot.begin(), boot.end());
      AggregateBand band{grid[k].iter, names[m], mean, percentile_sorted(boot, tail),
                         percentile_sorted(boot, 1.0 - tail)};
      band.lo = std::min(band.lo, mean);
      band.hi = std::max(band.hi, mean);
      bands.push_back(std::move(band));
    }
  }
  return bands;
}

std::vector<std::filesystem::path> find_run_csvs(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw std::invalid_argument("not a directory: " + dir.string());
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && !config_hash_from_name(entry.path()).empty()) out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

void write_aggregate_csv(const std::filesystem::path& path, const std::vector<AggregateBand>& bands) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kAggregateCsvHeader << '\n';
  char buf[128];
  for (const auto& b : bands) {
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g", b.mean, b.lo, b.hi);
    out << b.iter << ',' << b.metric << buf << '\n';
  }
}

}  // namespace pdzdpg
