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

#include "pdzdpg/records.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>
#include <stdexcept>

namespace pdzdpg {

const std::vector<std::string>& run_metric_names() {
  static const std::vector<std::string> names = {"inst_sumrate",      "ma_sumrate",   "power_used",
                                                 "power_violation",   "max_rate_residual",
                                                 "lambda_power",      "objective",    "wall_ns"};
  return names;
}

MetricsWindow::MetricsWindow(int window, double p_max) : window_(window), p_max_(p_max) {
  if (window < 1) throw std::invalid_argument("moving-average window must be positive");
}

void MetricsWindow::push(const StepRecord& rec) {
  sumrate_.push_back(rec.inst_weighted_sumrate);
  power_.push_back(rec.power_used);
  rates_.push_back(rec.rates);
  if (int(sumrate_.size()) > window_) {
    sumrate_.pop_front();
    power_.pop_front();
    rates_.pop_front();
  }
  last_ = rec;
}

RunRecord MetricsWindow::snapshot(std::uint64_t seed) const {
  if (sumrate_.empty()) throw std::logic_error("MetricsWindow: no records");
  const double n = double(sumrate_.size());
  double s = 0, p = 0;
  Eigen::VectorXd rates = Eigen::VectorXd::Zero(rates_.front().size());
  for (std::size_t k = 0; k < sumrate_.size(); ++k) {
    s += sumrate_[k];
    p += power_[k];
    rates += rates_[k];
  }
  RunRecord r;
  r.iter = last_.iter;
  r.seed = seed;
  r.inst_sumrate = last_.inst_weighted_sumrate;
  r.ma_sumrate = s / n;
  r.power_used = p / n;
  r.power_violation = std::max(0.0, r.power_used - p_max_);
  r.max_rate_residual = (last_.x - rates / n).maxCoeff();
  r.lambda_power = last_.lambda_power;
  r.objective = last_.objective_value;
  r.wall_ns = last_.wall_ns;
  return r;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string format_run_row(const RunRecord& r) {
  std::ostringstream os;
  os << r.iter << ',' << r.seed << ',' << fmt(r.inst_sumrate) << ',' << fmt(r.ma_sumrate) << ','
     << fmt(r.power_used) << ',' << fmt(r.power_violation) << ',' << fmt(r.max_rate_residual) << ','
     << fmt(r.lambda_power) << ',' << fmt(r.objective) << ',' << r.wall_ns;
  return os.str();
}

RunRecord parse_run_row(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
  if (cells.size() != 10) throw std::runtime_error("run CSV: expected 10 columns, got " + std::to_string(cells.size()));
  auto num = [&](std::size_t i) {
    std::size_t used = 0;
    const double v = std::stod(cells[i], &used);
    if (used != cells[i].size()) throw std::runtime_error("run CSV: bad number '" + cells[i] + "'");
    return v;
  };
  RunRecord r;
  r.iter = std::stoll(cells[0]);
  r.seed = std::stoull(cells[1]);
  r.inst_sumrate = num(2);
  r.ma_sumrate = num(3);
  r.power_used = num(4);
  r.power_violation = num(5);
  r.max_rate_residual = num(6);
  r.lambda_power = num(7);
  r.objective = num(8);
  r.wall_ns = std::stoll(cells[9]);
  return r;
}

RunTable read_run_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kRunCsvHeader)
    throw std::runtime_error(path.string() + ": unexpected header");
  RunTable t;
  while (std::getline(in, line))
    if (!line.empty()) t.rows.push_back(parse_run_row(line));
  return t;
}

std::string run_csv_name(const std::string& config_hash, std::uint64_t seed) {
  return "run-" + config_hash + "-seed" + std::to_string(seed) + ".csv";
}

std::string config_hash_from_name(const std::filesystem::path& path) {
  static const std::regex pattern(R"(run-([0-9a-f]{16})-seed[0-9]+\.csv)");
  std::smatch m;
  const std::string name = path.filename().string();
  return std::regex_match(name, m, pattern) ? m[1].str() : std::string{};
}

}  // namespace pdzdpg
