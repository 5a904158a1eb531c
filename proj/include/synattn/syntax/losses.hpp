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

#include <cmath>
#include <string>

#include "synattn/error.hpp"
#include "synattn/model/config.hpp"
#include "synattn/numerics/autodiff.hpp"
#include "synattn/numerics/tensor.hpp"

namespace synattn {

struct LossBreakdown {
  double translation = 0.0;
  double child = 0.0;
  double parent = 0.0;
  double joint = 0.0;

  bool operator==(const LossBreakdown&) const = default;
};

template <typename T>
struct SupervisionLosses {
  ad::Var<T> child;
  ad::Var<T> parent;
};

// Cross-entropy of the supervised heads against their targets, summed over
// real rows and divided by the number of real source tokens in the batch.
// All inputs are (batch, m, m); row_mask is (batch, m).
template <typename T>
SupervisionLosses<T> supervision_losses(const Tensor<T>& w_child, const Tensor<T>& w_parent,
                                        const ad::Var<T>& p_child, const ad::Var<T>& p_parent,
                                        const Mask& row_mask) {
  require(w_child.shape() == p_child.shape() && w_parent.shape() == p_parent.shape() &&
              w_child.shape() == w_parent.shape(),
          ErrorCategory::kShape, "supervision_losses: target/prediction shape mismatch");
  const std::size_t tokens = row_mask.count();
  require(tokens > 0, ErrorCategory::kData, "supervision_losses: batch has no real tokens");
  const T inv = T{1} / static_cast<T>(tokens);
  return {ad::scale(ad::cross_entropy_rows(w_child, p_child, row_mask), inv),
          ad::scale(ad::cross_entropy_rows(w_parent, p_parent, row_mask), inv)};
}

// J = L + alpha * L_c + beta * L_p on the graph.
template <typename T>
ad::Var<T> joint_objective(const ad::Var<T>& translation, const ad::Var<T>& child, const ad::Var<T>& parent,
                           const SupervisionConfig& sup) {
  return ad::add(ad::add(translation, ad::scale(child, static_cast<T>(sup.alpha))),
                 ad::scale(parent, static_cast<T>(sup.beta)));
}

inline double joint_loss(double translation, double child, double parent, const SupervisionConfig& sup) {
  require(std::isfinite(translation) && std::isfinite(child) && std::isfinite(parent), ErrorCategory::kNumeric,
          "joint_loss: non-finite loss component");
  return translation + sup.alpha * child + sup.beta * parent;
}

}  // namespace synattn
