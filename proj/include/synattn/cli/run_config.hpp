// Copyright 2026 The synattn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "synattn/error.hpp"
#include "synattn/model/config.hpp"

// Run configuration in a line-oriented "key = value" format:
//
//   # comment
//   format_version = 1
//   model.d_model = 64
//   supervision.alpha = 0.4
//
// Blank lines and lines starting with '#' are ignored. Unknown keys are
// errors. `format_version` must be present and equal to 1.
namespace synattn {

inline constexpr int kConfigFormatVersion = 1;

struct OptimizerConfig {
  double lr_scale = 1.0;
  std::size_t warmup_steps = 4000;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-9;
};

struct RunConfig {
  ModelConfig model;
  SupervisionConfig supervision;
  OptimizerConfig optim;
  std::size_t batch_size = 32;
  std::size_t steps = 1000;
  std::uint64_t seed = 1;
  std::size_t checkpoint_every = 0;
  std::size_t src_vocab_max = 30000;
  std::size_t tgt_vocab_max = 30000;
  std::string train_src;
  std::string train_tgt;
  std::string train_conllu;
  std::string checkpoint_path = "model.ckpt";
  std::string metrics_path = "metrics.jsonl";

  void validate() const {
    require(batch_size > 0, ErrorCategory::kConfig, "train.batch_size must be positive");
    require(optim.warmup_steps > 0, ErrorCategory::kConfig, "optim.warmup_steps must be positive");
    require(optim.lr_scale > 0.0, ErrorCategory::kConfig, "optim.lr_scale must be positive");
    require(optim.beta1 >= 0.0 && optim.beta1 < 1.0 && optim.beta2 >= 0.0 && optim.beta2 < 1.0,
            ErrorCategory::kConfig, "optimizer moment decays must be in [0, 1)");
  }

  std::string serialize() const;
  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path);
};

namespace detail {

template <typename V>
V parse_number(const std::string& key, const std::string& value) {
  V out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  require(ec == std::errc() && ptr == value.data() + value.size(), ErrorCategory::kConfig,
          "invalid value '" + value + "' for " + key);
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  fail(ErrorCategory::kConfig, "invalid boolean '" + value + "' for " + key);
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct ConfigField {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

inline const std::map<std::string, ConfigField>& config_fields() {
  using C = RunConfig;
  auto sz = [](auto getter) {
    return ConfigField{[getter](C& c, const std::string& k, const std::string& v) {
                         getter(c) = parse_number<std::size_t>(k, v);
                       },
                       [getter](const C& c) { return std::to_string(getter(c)); }};
  };
  auto real = [](auto getter) {
    return ConfigField{[getter](C& c, const std::string& k, const std::string& v) {
                         getter(c) = parse_number<double>(k, v);
                       },
                       [getter](const C& c) { return format_double(getter(c)); }};
  };
  auto text = [](auto getter) {
    return ConfigField{[getter](C& c, const std::string&, const std::string& v) { getter(c) = v; },
                       [getter](const C& c) { return getter(c); }};
  };
  static const std::map<std::string, ConfigField> fields = {
      {"model.n_layers", sz([](auto& c) -> auto& { return c.model.n_layers; })},
      {"model.n_heads", sz([](auto& c) -> auto& { return c.model.n_heads; })},
      {"model.d_model", sz([](auto& c) -> auto& { return c.model.d_model; })},
      {"model.d_ff", sz([](auto& c) -> auto& { return c.model.d_ff; })},
      {"model.max_len", sz([](auto& c) -> auto& { return c.model.max_len; })},
      {"model.src_vocab", sz([](auto& c) -> auto& { return c.model.src_vocab; })},
      {"model.tgt_vocab", sz([](auto& c) -> auto& { return c.model.tgt_vocab; })},
      {"model.dropout", real([](auto& c) -> auto& { return c.model.dropout_rate; })},
      {"supervision.enabled",
       ConfigField{[](C& c, const std::string& k, const std::string& v) { c.supervision.enabled = parse_bool(k, v); },
                   [](const C& c) { return std::string(c.supervision.enabled ? "true" : "false"); }}},
      {"supervision.alpha", real([](auto& c) -> auto& { return c.supervision.alpha; })},
      {"supervision.beta", real([](auto& c) -> auto& { return c.supervision.beta; })},
      {"supervision.layer",
       ConfigField{[](C& c, const std::string& k, const std::string& v) {
                     c.supervision.layer = v == "top" ? -1 : parse_number<int>(k, v);
                   },
                   [](const C& c) {
                     return c.supervision.layer < 0 ? std::string("top") : std::to_string(c.supervision.layer);
                   }}},
      {"supervision.csh_head", sz([](auto& c) -> auto& { return c.supervision.csh_head; })},
      {"supervision.psh_head", sz([](auto& c) -> auto& { return c.supervision.psh_head; })},
      {"optim.lr_scale", real([](auto& c) -> auto& { return c.optim.lr_scale; })},
      {"optim.warmup_steps", sz([](auto& c) -> auto& { return c.optim.warmup_steps; })},
      {"optim.beta1", real([](auto& c) -> auto& { return c.optim.beta1; })},
      {"optim.beta2", real([](auto& c) -> auto& { return c.optim.beta2; })},
      {"optim.epsilon", real([](auto& c) -> auto& { return c.optim.epsilon; })},
      {"train.batch_size", sz([](auto& c) -> auto& { return c.batch_size; })},
      {"train.steps", sz([](auto& c) -> auto& { return c.steps; })},
      {"train.seed",
       ConfigField{[](C& c, const std::string& k, const std::string& v) { c.seed = parse_number<std::uint64_t>(k, v); },
                   [](const C& c) { return std::to_string(c.seed); }}},
      {"train.checkpoint_every", sz([](auto& c) -> auto& { return c.checkpoint_every; })},
      {"data.src_vocab_max", sz([](auto& c) -> auto& { return c.src_vocab_max; })},
      {"data.tgt_vocab_max", sz([](auto& c) -> auto& { return c.tgt_vocab_max; })},
      {"data.train_src", text([](auto& c) -> auto& { return c.train_src; })},
      {"data.train_tgt", text([](auto& c) -> auto& { return c.train_tgt; })},
      {"data.train_conllu", text([](auto& c) -> auto& { return c.train_conllu; })},
      {"output.checkpoint", text([](auto& c) -> auto& { return c.checkpoint_path; })},
      {"output.metrics", text([](auto& c) -> auto& { return c.metrics_path; })},
  };
  return fields;
}

}  // namespace detail

inline std::string RunConfig::serialize() const {
  std::string out = "format_version = " + std::to_string(kConfigFormatVersion) + "\n";
  for (const auto& [key, field] : detail::config_fields()) out += key + " = " + field.get(*this) + "\n";
  return out;
}

inline RunConfig RunConfig::parse(const std::string& text) {
  RunConfig cfg;
  bool versioned = false;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  const auto& fields = detail::config_fields();
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorCategory::kConfig,
            "config line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = detail::trim(std::string_view(line).substr(0, eq));
    const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    if (key == "format_version") {
      require(detail::parse_number<int>(key, value) == kConfigFormatVersion, ErrorCategory::kConfig,
              "unsupported config format_version " + value);
      versioned = true;
      continue;
    }
    auto it = fields.find(key);
    require(it != fields.end(), ErrorCategory::kConfig,
            "config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    it->second.set(cfg, key, value);
  }
  require(versioned, ErrorCategory::kConfig, "config is missing format_version");
  return cfg;
}

inline RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCategory::kIo, "cannot open config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

}  // namespace synattn
