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

#include <algorithm>
#include <cmath>
#include <vector>

#include "synattn/cli/run_config.hpp"
#include "synattn/numerics/parameter.hpp"

namespace synattn {

// lr = scale * d_model^-0.5 * min(step^-0.5, step * warmup^-1.5), step >= 1.
inline double inverse_sqrt_schedule(const OptimizerConfig& cfg, std::size_t d_model, std::size_t step) {
  const double s = static_cast<double>(std::max<std::size_t>(step, 1));
  const double w = static_cast<double>(cfg.warmup_steps);
  return cfg.lr_scale / std::sqrt(static_cast<double>(d_model)) * std::min(1.0 / std::sqrt(s), s / (w * std::sqrt(w)));
}

template <typename T>
class Adam {
 public:
  Adam(const OptimizerConfig& cfg, std::size_t d_model) : cfg_(cfg), d_model_(d_model) {}

  std::size_t steps_taken() const noexcept { return step_; }
  double current_rate() const { return inverse_sqrt_schedule(cfg_, d_model_, step_); }

  void step(ParameterSet<T>& params) {
    if (first_.empty()) {
      for (const auto& p : params.entries()) {
        first_.emplace_back(p.var.numel(), T{0});
        second_.emplace_back(p.var.numel(), T{0});
      }
    }
    ++step_;
    const double lr = inverse_sqrt_schedule(cfg_, d_model_, step_);
    const double bias1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bias2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    const T b1 = static_cast<T>(cfg_.beta1);
    const T b2 = static_cast<T>(cfg_.beta2);
    const T step_size = static_cast<T>(lr / bias1);
    const T inv_bias2 = static_cast<T>(1.0 / bias2);
    const T eps = static_cast<T>(cfg_.epsilon);
    auto& entries = params.entries();
    for (std::size_t k = 0; k < entries.size(); ++k) {
      auto& var = entries[k].var;
      auto grad = var.grad();
      if (grad.empty()) continue;
      auto values = var.mutable_value().data();
      auto& m = first_[k];
      auto& v = second_[k];
      for (std::size_t i = 0; i < values.size(); ++i) {
        m[i] = b1 * m[i] + (T{1} - b1) * grad[i];
        v[i] = b2 * v[i] + (T{1} - b2) * grad[i] * grad[i];
        values[i] -= step_size * m[i] / (std::sqrt(v[i] * inv_bias2) + eps);
      }
    }
  }

 private:
  OptimizerConfig cfg_;
  std::size_t d_model_;
  std::size_t step_ = 0;
  std::vector<std::vector<T>> first_;
  std::vector<std::vector<T>> second_;
};

}  // namespace synattn
