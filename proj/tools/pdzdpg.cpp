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

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pdzdpg/aggregate.hpp"
#include "pdzdpg/config.hpp"
#include "pdzdpg/experiment.hpp"
#include "pdzdpg/verify.hpp"

namespace fs = std::filesystem;
using namespace pdzdpg;

namespace {

enum Exit : int { kOk = 0, kOther = 1, kConfig = 2, kDiverged = 3 };

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw ConfigError("--seeds: '" + item + "' is not a nonnegative integer");
    seeds.push_back(v);
  }
  if (seeds.empty()) throw ConfigError("--seeds: empty list");
  return seeds;
}

int cmd_train(const std::string& config_path, const std::string& algo, const std::string& out,
              const std::string& seeds) {
  ExperimentConfig cfg = load_config(config_path);
  if (!algo.empty()) cfg.learner.algo = parse_algorithm(algo);
  if (!seeds.empty()) cfg.seeds = parse_seed_list(seeds);
  cfg.validate();
  const ExperimentResult res = run_experiment(cfg, out);
  std::cout << "config " << res.config_hash << "\n";
  for (const auto& s : res.seeds) {
    std::cout << "seed " << s.seed << ": " << (s.diverged ? "diverged" : "ok") << " after " << s.iterations
              << " iterations -> " << s.csv.string() << "\n";
    if (s.diverged) std::cerr << "seed " << s.seed << ": " << s.message << "\n";
  }
  if (res.benchmark)
    std::cout << benchmark_name(res.benchmark->kind) << " benchmark " << res.benchmark->value << " (stderr "
              << res.benchmark->std_error << ")\n";
  std::cout << "manifest " << res.manifest.string() << "\n";
  if (res.any_diverged()) return kDiverged;
  if (!res.benchmark_error.empty()) {
    std::cerr << "benchmark failed: " << res.benchmark_error << "\n";
    return kOther;
  }
  return kOk;
}

int cmd_baseline(const std::string& config_path, const std::string& which, const std::string& out) {
  const ExperimentConfig cfg = load_config(config_path);
  const BenchmarkKind kind = parse_benchmark(which);
  const BenchmarkResult b = compute_benchmark(cfg, kind);
  fs::create_directories(out);
  const fs::path path = fs::path(out) / benchmark_file_name(kind);
  write_benchmark_sidecar(path, b);
  std::cout << benchmark_name(kind) << " " << b.value << " (stderr " << b.std_error << ") -> " << path.string()
            << "\n";
  return kOk;
}

int cmd_aggregate(const std::string& in, const std::string& out, int n_boot, double level, std::uint64_t seed) {
  const auto csvs = find_run_csvs(in);
  const auto bands = aggregate(csvs, n_boot, level, seed);
  if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
  write_aggregate_csv(out, bands);
  std::cout << bands.size() << " bands from " << csvs.size() << " runs -> " << out << "\n";
  return kOk;
}

int cmd_verify(bool full) {
  const auto results = verify(full ? VerifySuite::full : VerifySuite::fast);
  bool ok = true;
  for (const auto& r : results) {
    std::printf("%s %-28s %7.2fs  %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.seconds, r.detail.c_str());
    ok = ok && r.passed;
  }
  return ok ? kOk : kOther;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Primal-dual zeroth-order policy gradient learning for resource allocation"};
  app.require_subcommand(1);

  std::string config, algo, out = "runs", seeds;
  auto* train = app.add_subcommand("train", "Run every seed of an experiment");
  train->add_option("--config", config, "Experiment JSON")->required();
  train->add_option("--algo", algo, "Override the learner")->check(CLI::IsMember({"pdzdpg+", "pdzdpg"}));
  train->add_option("--out", out, "Output directory");
  train->add_option("--seeds", seeds, "Comma-separated seeds overriding the config");

  std::string which, base_out;
  auto* baseline = app.add_subcommand("baseline", "Evaluate a model-based benchmark");
  baseline->add_option("--config", config, "Experiment JSON")->required();
  baseline->add_option("--which", which, "waterfilling or wmmse")->required();
  baseline->add_option("--out", base_out, "Output directory")->required();

  std::string agg_in, agg_out;
  int n_boot = 1000;
  double level = 0.95;
  std::uint64_t boot_seed = 0;
  auto* agg = app.add_subcommand("aggregate", "Bootstrap bands over per-seed CSVs");
  agg->add_option("--in", agg_in, "Directory of run CSVs")->required();
  agg->add_option("--out", agg_out, "Aggregate CSV path")->required();
  agg->add_option("--boot", n_boot, "Bootstrap resamples")->check(CLI::PositiveNumber);
  agg->add_option("--level", level, "Band coverage")->check(CLI::Range(0.0, 1.0));
  agg->add_option("--boot-seed", boot_seed, "Bootstrap seed");

  bool full = false;
  auto* ver = app.add_subcommand("verify", "Run the built-in property checks");
  ver->add_flag("--full", full, "Include the statistical checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*train) return cmd_train(config, algo, out, seeds);
    if (*baseline) return cmd_baseline(config, which, base_out);
    if (*agg) return cmd_aggregate(agg_in, agg_out, n_boot, level, boot_seed);
    if (*ver) return cmd_verify(full);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const NumericAbort& e) {
    std::cerr << "numeric abort: " << e.what() << "\n";
    return kDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOther;
  }
  return kOther;
}
