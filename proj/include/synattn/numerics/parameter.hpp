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

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "synattn/error.hpp"
#include "synattn/numerics/autodiff.hpp"
#include "synattn/numerics/tensor.hpp"

namespace synattn {

template <typename T>
struct Parameter {
  std::string name;
  ad::Var<T> var;
};

// Ordered registry of trainable leaves. Insertion order is the canonical
// order for checkpoints and optimizer state.
template <typename T>
class ParameterSet {
 public:
  ad::Var<T> add(const std::string& name, Tensor<T> init) {
    require(!index_.contains(name), ErrorCategory::kConfig, "duplicate parameter name " + name);
    index_.emplace(name, params_.size());
    params_.push_back({name, ad::Var<T>(std::move(init), true)});
    return params_.back().var;
  }

  const ad::Var<T>& get(const std::string& name) const {
    auto it = index_.find(name);
    require(it != index_.end(), ErrorCategory::kCheckpoint, "unknown parameter " + name);
    return params_[it->second].var;
  }

  bool contains(const std::string& name) const { return index_.contains(name); }

  std::vector<Parameter<T>>& entries() noexcept { return params_; }
  const std::vector<Parameter<T>>& entries() const noexcept { return params_; }
  std::size_t size() const noexcept { return params_.size(); }

  std::size_t total_elements() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.var.numel();
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) p.var.zero_grad();
  }

 private:
  std::vector<Parameter<T>> params_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace synattn
