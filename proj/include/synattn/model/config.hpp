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

#include <cstddef>
#include <string>

#include "synattn/error.hpp"

namespace synattn {

struct ModelConfig {
  std::size_t n_layers = 6;
  std::size_t n_heads = 8;
  std::size_t d_model = 512;
  std::size_t d_ff = 2048;
  std::size_t src_vocab = 0;
  std::size_t tgt_vocab = 0;
  std::size_t max_len = 256;
  double dropout_rate = 0.1;

  std::size_t d_k() const { return d_model / n_heads; }
  std::size_t d_v() const { return d_model / n_heads; }

  void validate() const {
    require(n_layers >= 1 && n_heads >= 1 && d_model >= 1 && d_ff >= 1, ErrorCategory::kConfig,
            "model sizes must be positive");
    require(d_model % n_heads == 0, ErrorCategory::kConfig,
            "d_model " + std::to_string(d_model) + " is not divisible by n_heads " + std::to_string(n_heads));
    require(src_vocab > 0 && tgt_vocab > 0, ErrorCategory::kConfig, "vocabulary sizes must be set");
    require(max_len >= 2, ErrorCategory::kConfig, "max_len must be at least 2");
    require(dropout_rate >= 0.0 && dropout_rate < 1.0, ErrorCategory::kConfig, "dropout rate must be in [0, 1)");
  }
};

// Which encoder self-attention heads are tied to the child and parent
// targets, and how strongly.
struct SupervisionConfig {
  bool enabled = true;
  double alpha = 0.4;
  double beta = 0.4;
  // Encoder layer index, 0-based; negative selects the top layer.
  int layer = -1;
  std::size_t csh_head = 0;
  std::size_t psh_head = 1;

  std::size_t resolved_layer(const ModelConfig& model) const {
    return layer < 0 ? model.n_layers - 1 : static_cast<std::size_t>(layer);
  }

  void validate(const ModelConfig& model) const {
    require(alpha >= 0.0 && beta >= 0.0, ErrorCategory::kConfig, "alpha and beta must be nonnegative");
    require(csh_head != psh_head, ErrorCategory::kConfig, "CSH and PSH must be distinct heads");
    require(csh_head < model.n_heads && psh_head < model.n_heads, ErrorCategory::kConfig,
            "supervised head index out of range");
    require(layer < static_cast<int>(model.n_layers), ErrorCategory::kConfig, "supervised layer out of range");
  }
};

}  // namespace synattn
