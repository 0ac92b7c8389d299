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

#include "pdzdpg/experiment.hpp"

#include <fstream>
#include <thread>

#include <json.hpp>

#include "pdzdpg/baselines.hpp"
#include "pdzdpg/checkpoint.hpp"

#ifndef PDZDPG_VERSION
#define PDZDPG_VERSION "dev"
#endif

namespace pdzdpg {

using nlohmann::json;

std::string benchmark_name(BenchmarkKind kind) {
  return kind == BenchmarkKind::waterfilling ? "waterfilling" : "wmmse";
}

BenchmarkKind parse_benchmark(const std::string& name) {
  if (name == "waterfilling") return BenchmarkKind::waterfilling;
  if (name == "wmmse") return BenchmarkKind::wmmse;
  throw ConfigError("benchmark: expected 'waterfilling' or 'wmmse', got '" + name + "'");
}

BenchmarkKind default_benchmark(const ExperimentConfig& cfg) {
  return cfg.service.kind == ServiceKind::awgn ? BenchmarkKind::waterfilling : BenchmarkKind::wmmse;
}

std::string benchmark_file_name(BenchmarkKind kind) { return "benchmark_" + benchmark_name(kind) + ".json"; }

BenchmarkResult compute_benchmark(const ExperimentConfig& cfg, BenchmarkKind kind) {
  BenchmarkResult b;
  b.kind = kind;
  b.n_mc = cfg.benchmark.n_mc;
  b.seed = cfg.benchmark.seed;
  Rng rng(cfg.benchmark.seed, "benchmark");
  if (kind == BenchmarkKind::waterfilling) {
    if (cfg.service.kind != ServiceKind::awgn) throw ConfigError("waterfilling benchmark requires an AWGN problem");
    const WaterfillSolution sol = waterfill_clairvoyant(cfg.service, cfg.channel, b.n_mc, cfg.benchmark.tol, rng);
    b.value = sol.sumrate.value;
    b.std_error = sol.sumrate.std_error;
    b.dual_level = sol.dual_level;
  } else {
    if (cfg.service.kind != ServiceKind::mai) throw ConfigError("WMMSE benchmark requires an MAI problem");
    const McEstimate<double> est = wmmse_ergodic(cfg.service, cfg.channel, b.n_mc, rng);
    b.value = est.value;
    b.std_error = est.std_error;
  }
  return b;
}

void write_benchmark_sidecar(const std::filesystem::path& path, const BenchmarkResult& b) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << json{{"value", b.value}, {"stderr", b.std_error}, {"n_mc", b.n_mc}, {"seed", b.seed}}.dump(2) << '\n';
}

BenchmarkResult read_benchmark_sidecar(const std::filesystem::path& path, BenchmarkKind kind) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const json j = json::parse(in);
  BenchmarkResult b;
  b.kind = kind;
  b.value = j.at("value").get<double>();
  b.std_error = j.at("stderr").get<double>();
  b.n_mc = j.at("n_mc").get<std::int64_t>();
  b.seed = j.at("seed").get<std::uint64_t>();
  return b;
}

SeedOutcome run_seed(const ExperimentConfig& cfg, std::uint64_t seed, const std::filesystem::path& out_dir,
                     std::vector<StepRecord>* trace) {
  const std::string hash = cfg.hash();
  SeedOutcome outcome;
  outcome.seed = seed;
  outcome.csv = out_dir / run_csv_name(hash, seed);

  std::ofstream csv(outcome.csv);
  if (!csv) throw std::runtime_error("cannot write " + outcome.csv.string());
  csv << kRunCsvHeader << '\n';

  const Problem problem = cfg.problem();
  MetricsWindow window(cfg.ma_window, cfg.service.p_max);
  std::int64_t interval_ns = 0, interval_steps = 0;
  auto sink = [&](const StepRecord& rec) {
    window.push(rec);
    outcome.iterations = rec.iter;
    if (rec.x_rail_hit) ++outcome.x_rail_hits;
    interval_ns += rec.wall_ns;
    ++interval_steps;
    if (trace) trace->push_back(rec);
    if (rec.iter % cfg.log_every != 0) return;
    RunRecord row = window.snapshot(seed);
    row.wall_ns = cfg.record_wall_time ? interval_ns / interval_steps : 0;
    interval_ns = interval_steps = 0;
    csv << format_run_row(row) << '\n';
  };

  Rng rng(seed, "learner");
  try {
    const LearnerState final_state = run(problem, cfg.learner, cfg.initial_state(seed), cfg.n_iters, rng, sink);
    outcome.checkpoint = out_dir / ("run-" + hash + "-seed" + std::to_string(seed) + ".params");
    save_checkpoint(outcome.checkpoint, final_state.params);
  } catch (const NumericAbort& e) {
    outcome.diverged = true;
    outcome.failed_iter = e.iter();
    outcome.message = e.what();
  }
  csv.flush();
  return outcome;
}

bool ExperimentResult::any_diverged() const {
  for (const auto& s : seeds)
    if (s.diverged) return true;
  return false;
}

namespace {

json versions() {
  return {{"pdzdpg", PDZDPG_VERSION},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"compiler", __VERSION__},
          {"cxx", __cplusplus}};
}

json diagnostics(const ExperimentConfig& cfg) {
  const int n_R = cfg.service.n_users;
  const double mu_R = cfg.learner.smoothing.mu_R;
  const Eigen::VectorXd slack = cfg.learner.slack.evaluate(mu_R, n_R, cfg.service.n_constraints());
  json d = {{"slack", std::vector<double>(slack.data(), slack.data() + slack.size())},
            {"perturbation_dim", cfg.learner.algo == Algorithm::pdzdpg_plus ? Eigen::Index(n_R)
                                                                           : cfg.policy_layout()->param_count()},
            {"n_params", cfg.policy_layout()->param_count()}};
  const Eigen::VectorXd margin = cfg.learner.slack.feasibility_margin(mu_R, n_R, cfg.service.n_constraints());
  if (margin.size() > 0) {
    d["feasibility_margin"] = std::vector<double>(margin.data(), margin.data() + margin.size());
    d["max_constraint_violation_bound"] = std::max(0.0, -margin.minCoeff());
  }
  return d;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                bool with_benchmark) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  ExperimentResult result;
  result.config_hash = cfg.hash();
  result.seeds.resize(cfg.seeds.size());

  std::vector<std::exception_ptr> errors(cfg.seeds.size());
  {
    std::vector<std::jthread> workers;
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
      workers.emplace_back([&, i] {
        try {
          result.seeds[i] = run_seed(cfg, cfg.seeds[i], out_dir);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  json manifest = {{"config", cfg.to_json()}, {"config_hash", result.config_hash}, {"versions", versions()},
                   {"diagnostics", diagnostics(cfg)}};
  if (with_benchmark) {
    const BenchmarkKind kind = default_benchmark(cfg);
    try {
      result.benchmark = compute_benchmark(cfg, kind);
      write_benchmark_sidecar(out_dir / benchmark_file_name(kind), *result.benchmark);
      manifest["benchmark"] = {{"kind", benchmark_name(kind)},
                               {"file", benchmark_file_name(kind)},
                               {"value", result.benchmark->value},
                               {"stderr", result.benchmark->std_error}};
    } catch (const OracleError& e) {
      result.benchmark_error = e.what();
      manifest["benchmark"] = {{"kind", benchmark_name(kind)}, {"error", result.benchmark_error}};
    }
  }
  json seeds = json::array();
  for (const auto& s : result.seeds) {
    seeds.push_back({{"seed", s.seed},
                     {"status", s.diverged ? "diverged" : "ok"},
                     {"iterations", s.iterations},
                     {"failed_iter", s.failed_iter},
                     {"message", s.message},
                     {"csv", s.csv.filename().string()},
                     {"checkpoint", s.checkpoint.empty() ? "" : s.checkpoint.filename().string()},
                     {"x_rail_hits", s.x_rail_hits}});
  }
  manifest["seeds"] = seeds;
  manifest["diverged"] = result.any_diverged();

  result.manifest = out_dir / "manifest.json";
  std::ofstream out(result.manifest);
  if (!out) throw std::runtime_error("cannot write " + result.manifest.string());
  out << manifest.dump(2) << '\n';
  return result;
}

}  // namespace pdzdpg
