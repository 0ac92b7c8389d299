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

#include "pdzdpg/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

namespace pdzdpg {

using nlohmann::json;

std::string algorithm_name(Algorithm algo) { return algo == Algorithm::pdzdpg_plus ? "pdzdpg+" : "pdzdpg"; }

Algorithm parse_algorithm(const std::string& name) {
  if (name == "pdzdpg+" || name == "pdzdpg_plus") return Algorithm::pdzdpg_plus;
  if (name == "pdzdpg") return Algorithm::pdzdpg;
  throw ConfigError("algo: expected 'pdzdpg+' or 'pdzdpg', got '" + name + "'");
}

namespace {

/// Strict view of one JSON object: every key must be consumed.
class Fields {
 public:
  Fields(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key);
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return as<T>(obj_.at(key), key);
  }

  template <typename T>
  T require(const std::string& key) {
    if (!has(key)) throw ConfigError(field(key) + ": required");
    return as<T>(obj_.at(key), key);
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : obj_.items())
      if (!seen_.count(key)) throw ConfigError(field(key) + ": unknown key");
  }

 private:
  template <typename T>
  T as(const json& v, const std::string& key) const {
    try {
      return v.get<T>();
    } catch (const json::exception&) {
      throw ConfigError(field(key) + ": wrong type (" + v.dump() + ")");
    }
  }

  std::string where() const { return path_.empty() ? "config" : path_; }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

Eigen::VectorXd per_user(Fields& f, const std::string& key, int n, double fallback) {
  if (!f.has(key)) return Eigen::VectorXd::Constant(n, fallback);
  const json& v = f.raw(key);
  if (v.is_number()) return Eigen::VectorXd::Constant(n, v.get<double>());
  if (!v.is_array() || int(v.size()) != n)
    throw ConfigError(f.field(key) + ": expected a number or an array of " + std::to_string(n) + " numbers");
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) {
    if (!v[i].is_number()) throw ConfigError(f.field(key) + ": non-numeric entry");
    out[i] = v[i].get<double>();
  }
  return out;
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

void parse_problem(const json& j, ExperimentConfig& cfg) {
  Fields f(j, "problem");
  const auto kind = f.require<std::string>("kind");
  if (kind == "awgn")
    cfg.service.kind = ServiceKind::awgn;
  else if (kind == "mai")
    cfg.service.kind = ServiceKind::mai;
  else
    throw ConfigError("problem.kind: expected 'awgn' or 'mai', got '" + kind + "'");
  const int n = f.require<int>("n_users");
  if (n < 1) throw ConfigError("problem.n_users: must be positive");
  cfg.service.n_users = n;
  cfg.service.p_max = f.get<double>("p_max", 20.0);
  cfg.service.noise = per_user(f, "noise", n, 1.0);

  const bool explicit_weights = f.has("weights") && f.raw("weights").is_array();
  cfg.weight_seed = f.get<std::uint64_t>("weight_seed", explicit_weights ? 0 : 1);
  if (explicit_weights) {
    cfg.service.weights = per_user(f, "weights", n, 0.0);
  } else {
    if (f.has("weights")) {
      Fields w(f.raw("weights"), "problem.weights");
      cfg.weight_seed = w.require<std::uint64_t>("seed");
      w.finish();
    }
    Rng rng(cfg.weight_seed, "user-weights");
    cfg.service.weights = random_user_weights(n, rng);
  }

  cfg.channel.dim = n;
  if (f.has("channel")) {
    Fields c(f.raw("channel"), "problem.channel");
    const auto ck = c.get<std::string>("kind", "exponential_iid");
    if (ck != "exponential_iid") throw ConfigError("problem.channel.kind: only 'exponential_iid' is supported");
    cfg.channel.rate = c.get<double>("rate", 0.5);
    c.finish();
  }
  f.finish();
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  Fields f(j, "");
  cfg.name = f.get<std::string>("name", "experiment");
  if (!f.has("problem")) throw ConfigError("problem: required");
  parse_problem(f.raw("problem"), cfg);
  const bool awgn = cfg.service.kind == ServiceKind::awgn;

  cfg.layout = awgn ? LayoutKind::per_user : LayoutKind::global;
  cfg.hidden = awgn ? std::vector<int>{8, 4} : std::vector<int>{64, 32};
  if (f.has("policy")) {
    Fields p(f.raw("policy"), "policy");
    if (p.has("layout")) {
      const auto l = p.get<std::string>("layout", "");
      if (l == "per_user")
        cfg.layout = LayoutKind::per_user;
      else if (l == "global")
        cfg.layout = LayoutKind::global;
      else
        throw ConfigError("policy.layout: expected 'per_user' or 'global'");
    }
    cfg.hidden = p.get<std::vector<int>>("hidden", cfg.hidden);
    p.finish();
  }

  cfg.learner.algo = parse_algorithm(f.get<std::string>("algo", "pdzdpg+"));

  if (f.has("smoothing")) {
    Fields s(f.raw("smoothing"), "smoothing");
    cfg.learner.smoothing.mu_S = s.get<double>("mu_S", 0.1);
    cfg.learner.smoothing.mu_R = s.get<double>("mu_R", 0.1);
    s.finish();
  }

  if (f.has("slack")) {
    Fields s(f.raw("slack"), "slack");
    const auto mode = s.get<std::string>("mode", "zero");
    if (mode == "zero")
      cfg.learner.slack.mode = SlackMode::zero;
    else if (mode == "linear")
      cfg.learner.slack.mode = SlackMode::linear;
    else
      throw ConfigError("slack.mode: expected 'zero' or 'linear'");
    const auto c = s.get<std::vector<double>>("c_R", {});
    cfg.learner.slack.c_R = Eigen::Map<const Eigen::VectorXd>(c.data(), Eigen::Index(c.size()));
    s.finish();
  }

  if (f.has("objective")) {
    Fields o(f.raw("objective"), "objective");
    const auto mode = o.get<std::string>("mode", "exact_linear");
    if (mode == "exact_linear")
      cfg.objective_mode = ObjectiveMode::exact_linear;
    else if (mode == "smoothed_zeroth_order")
      cfg.objective_mode = ObjectiveMode::smoothed_zeroth_order;
    else
      throw ConfigError("objective.mode: expected 'exact_linear' or 'smoothed_zeroth_order'");
    o.finish();
  }

  StepSchedule& sch = cfg.learner.schedule;
  sch = StepSchedule{0.001, awgn ? 0.02 : 0.04, 0.008, 0.0001, 0.008};
  if (f.has("schedule")) {
    Fields s(f.raw("schedule"), "schedule");
    sch.alpha_x = s.get<double>("alpha_x", sch.alpha_x);
    sch.alpha_theta = s.get<double>("alpha_theta", sch.alpha_theta);
    sch.alpha_lambda_rate = s.get<double>("alpha_lambda_rate", sch.alpha_lambda_rate);
    sch.alpha_lambda_power = s.get<double>("alpha_lambda_power", sch.alpha_lambda_power);
    sch.alpha_lambda_S = s.get<double>("alpha_lambda_S", sch.alpha_lambda_rate);
    s.finish();
  }

  cfg.init_x = awgn ? 1.0 : 0.0;
  if (f.has("init")) {
    Fields i(f.raw("init"), "init");
    cfg.init_theta = i.get<double>("theta", 0.0);
    cfg.init_theta_std = i.get<double>("theta_std", 0.0);
    cfg.init_x = i.get<double>("x", cfg.init_x);
    cfg.init_lambda = i.get<double>("lambda", 1.0);
    i.finish();
  }

  cfg.n_iters = f.get<std::int64_t>("n_iters", 100000);
  cfg.seeds = f.get<std::vector<std::uint64_t>>("seeds", {1, 2, 3, 4, 5});
  cfg.ma_window = f.get<int>("ma_window", 1000);
  cfg.log_every = f.get<int>("log_every", 100);
  cfg.record_wall_time = f.get<bool>("record_wall_time", false);

  cfg.benchmark.n_mc = awgn ? 1000000 : 10000;
  if (f.has("benchmark")) {
    Fields b(f.raw("benchmark"), "benchmark");
    cfg.benchmark.n_mc = b.get<std::int64_t>("n_mc", cfg.benchmark.n_mc);
    cfg.benchmark.seed = b.get<std::uint64_t>("seed", cfg.benchmark.seed);
    cfg.benchmark.tol = b.get<double>("tol", cfg.benchmark.tol);
    b.finish();
  }
  f.finish();
  cfg.validate();
  return cfg;
}

void ExperimentConfig::validate() const {
  try {
    service.validate();
    channel.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("problem: ") + e.what());
  }
  if (hidden.empty()) throw ConfigError("policy.hidden: need at least one hidden layer");
  for (int s : hidden)
    if (s < 1) throw ConfigError("policy.hidden: layer sizes must be positive");
  if (!(learner.smoothing.mu_S > 0) || !(learner.smoothing.mu_R > 0))
    throw ConfigError("smoothing: mu_S and mu_R must be positive");
  try {
    learner.schedule.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("schedule: ") + e.what());
  }
  try {
    learner.slack.validate(service.n_constraints());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("slack: ") + e.what());
  }
  if (init_x < 0 || init_lambda < 0) throw ConfigError("init: x and lambda must be nonnegative");
  if (!(init_theta_std >= 0)) throw ConfigError("init.theta_std: must be nonnegative");
  if (n_iters < 1) throw ConfigError("n_iters: must be positive");
  if (seeds.empty()) throw ConfigError("seeds: need at least one seed");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw ConfigError("seeds: duplicates");
  if (ma_window < 1) throw ConfigError("ma_window: must be positive");
  if (log_every < 1) throw ConfigError("log_every: must be positive");
  if (benchmark.n_mc < 1) throw ConfigError("benchmark.n_mc: must be positive");
  if (!(benchmark.tol > 0)) throw ConfigError("benchmark.tol: must be positive");
}

json ExperimentConfig::to_json() const {
  const bool awgn = service.kind == ServiceKind::awgn;
  const auto& sch = learner.schedule;
  return {
      {"name", name},
      {"problem",
       {{"kind", awgn ? "awgn" : "mai"},
        {"n_users", service.n_users},
        {"p_max", service.p_max},
        {"noise", to_vector(service.noise)},
        {"weights", to_vector(service.weights)},
        {"weight_seed", weight_seed},
        {"channel", {{"kind", "exponential_iid"}, {"rate", channel.rate}}}}},
      {"policy", {{"layout", layout == LayoutKind::per_user ? "per_user" : "global"}, {"hidden", hidden}}},
      {"algo", algorithm_name(learner.algo)},
      {"smoothing", {{"mu_S", learner.smoothing.mu_S}, {"mu_R", learner.smoothing.mu_R}}},
      {"slack",
       {{"mode", learner.slack.mode == SlackMode::zero ? "zero" : "linear"}, {"c_R", to_vector(learner.slack.c_R)}}},
      {"objective",
       {{"mode", objective_mode == ObjectiveMode::exact_linear ? "exact_linear" : "smoothed_zeroth_order"}}},
      {"schedule",
       {{"alpha_x", sch.alpha_x},
        {"alpha_theta", sch.alpha_theta},
        {"alpha_lambda_rate", sch.alpha_lambda_rate},
        {"alpha_lambda_power", sch.alpha_lambda_power},
        {"alpha_lambda_S", sch.alpha_lambda_S}}},
      {"init", {{"theta", init_theta}, {"theta_std", init_theta_std}, {"x", init_x}, {"lambda", init_lambda}}},
      {"n_iters", n_iters},
      {"seeds", seeds},
      {"ma_window", ma_window},
      {"log_every", log_every},
      {"record_wall_time", record_wall_time},
      {"benchmark", {{"n_mc", benchmark.n_mc}, {"seed", benchmark.seed}, {"tol", benchmark.tol}}},
  };
}

std::string ExperimentConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json().dump())));
  return buf;
}

MlpSpec ExperimentConfig::network() const {
  MlpSpec spec;
  const int io = layout == LayoutKind::per_user ? 1 : service.n_users;
  spec.layer_sizes.push_back(io);
  spec.layer_sizes.insert(spec.layer_sizes.end(), hidden.begin(), hidden.end());
  spec.layer_sizes.push_back(io);
  spec.output_scale = service.p_max;
  return spec;
}

std::shared_ptr<const PolicyLayout> ExperimentConfig::policy_layout() const {
  return std::make_shared<const PolicyLayout>(layout == LayoutKind::per_user
                                                  ? PolicyLayout::per_user(network(), service.n_users)
                                                  : PolicyLayout::global(network()));
}

Problem ExperimentConfig::problem() const {
  ObjectiveSpec objective;
  objective.mode = objective_mode;
  objective.weights = service.weights;
  return make_problem(service, channel, objective);
}

LearnerState ExperimentConfig::initial_state(std::uint64_t seed) const {
  auto params = init_theta == 0.0 ? init_params<double>(policy_layout())
                                  : init_params<double>(policy_layout(), InitScheme::constant, init_theta);
  if (init_theta_std > 0) {
    Rng rng(seed, "policy-init");
    params.theta() += init_theta_std * sample_gaussian(params.size(), rng);
  }
  return pdzdpg::initial_state(problem(), std::move(params), init_x, init_lambda);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  return parse_config(j);
}

}  // namespace pdzdpg
