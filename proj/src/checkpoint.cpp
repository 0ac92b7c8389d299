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

#include "pdzdpg/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

namespace pdzdpg {

using nlohmann::json;

namespace {

json layout_to_json(const PolicyLayout& layout) {
  json subs = json::array();
  for (const auto& sub : layout.sub_policies()) {
    subs.push_back({{"layers", sub.spec.layer_sizes},
                    {"hidden_activation", "relu"},
                    {"output_activation", "sigmoid_scaled"},
                    {"output_scale", sub.spec.output_scale},
                    {"inputs", sub.inputs},
                    {"outputs", sub.outputs}});
  }
  return {{"input_dim", layout.input_dim()}, {"output_dim", layout.output_dim()}, {"sub_policies", subs}};
}

PolicyLayout layout_from_json(const json& j) {
  std::vector<SubPolicy> subs;
  for (const auto& s : j.at("sub_policies")) {
    if (s.at("hidden_activation") != "relu" || s.at("output_activation") != "sigmoid_scaled")
      throw std::runtime_error("checkpoint: unsupported activation");
    MlpSpec spec;
    spec.layer_sizes = s.at("layers").get<std::vector<int>>();
    spec.output_scale = s.at("output_scale").get<double>();
    subs.push_back({spec, s.at("inputs").get<std::vector<int>>(), s.at("outputs").get<std::vector<int>>()});
  }
  return PolicyLayout(std::move(subs), j.at("input_dim").get<int>(), j.at("output_dim").get<int>());
}

}  // namespace

void write_checkpoint(std::ostream& out, const Policy& params) {
  const json header = {{"format", "pdzdpg-params"},
                       {"version", kCheckpointVersion},
                       {"n_params", params.size()},
                       {"layout", layout_to_json(params.layout())}};
  out << header.dump() << '\n';
  unsigned char bytes[8];
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(params.theta()[i]);
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>(bits >> (8 * b));
    out.write(reinterpret_cast<const char*>(bytes), 8);
  }
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

Policy read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("checkpoint: missing header");
  const json header = json::parse(line);
  if (header.value("format", "") != "pdzdpg-params")
    throw std::runtime_error("checkpoint: not a pdzdpg parameter file");
  if (header.at("version").get<int>() != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version " + header.at("version").dump());
  auto layout = std::make_shared<const PolicyLayout>(layout_from_json(header.at("layout")));
  const auto n = header.at("n_params").get<Eigen::Index>();
  if (n != layout->param_count()) throw std::runtime_error("checkpoint: parameter count disagrees with layout");

  Eigen::VectorXd theta(n);
  unsigned char bytes[8];
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw std::runtime_error("checkpoint: truncated payload");
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= std::uint64_t(bytes[b]) << (8 * b);
    theta[i] = std::bit_cast<double>(bits);
  }
  return Policy(std::move(layout), std::move(theta));
}

void save_checkpoint(const std::filesystem::path& path, const Policy& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path.string());
  write_checkpoint(out, params);
}

Policy load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace pdzdpg
