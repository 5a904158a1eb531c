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
#include <limits>
#include <span>
#include <vector>

#include "synattn/error.hpp"
#include "synattn/numerics/tensor.hpp"
#include "synattn/syntax/tree.hpp"

namespace synattn {

// Smoothing added to attention probabilities before taking logs.
inline constexpr double kArcWeightSmoothing = 1e-9;

// heads[i] = argmax_j scores[i][j] as a 1-based index, with a self-argmax
// read as "root" (0). Ties go to the lowest column.
template <typename T>
std::vector<int> predict_parents(const Tensor<T>& scores) {
  require(scores.rank() == 2 && scores.dim(0) == scores.dim(1), ErrorCategory::kShape,
          "parent scores must be square");
  const std::size_t m = scores.dim(0);
  std::vector<int> heads(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < m; ++j) {
      if (scores.at(i, j) > scores.at(i, best)) best = j;
    }
    heads[i] = best == i ? 0 : static_cast<int>(best) + 1;
  }
  return heads;
}

namespace detail {

inline constexpr double kNoArc = -std::numeric_limits<double>::infinity();

// Chu-Liu/Edmonds on a dense graph. weights[u][v] is the score of arc u -> v;
// node 0 is the root. Returns parent[v] for every node (parent[0] = -1).
// Lower-indexed candidates win ties.
inline std::vector<int> chu_liu_edmonds_dense(const std::vector<std::vector<double>>& weights) {
  const int n = static_cast<int>(weights.size());
  std::vector<int> parent(n, -1);
  for (int v = 1; v < n; ++v) {
    int best = -1;
    for (int u = 0; u < n; ++u) {
      if (u == v || weights[u][v] == kNoArc) continue;
      if (best < 0 || weights[u][v] > weights[best][v]) best = u;
    }
    require(best >= 0, ErrorCategory::kNumeric, "node without incoming arcs");
    parent[v] = best;
  }

  // Find a cycle among the greedy choices.
  std::vector<int> color(n, 0);
  std::vector<int> cycle;
  for (int start = 1; start < n && cycle.empty(); ++start) {
    if (color[start]) continue;
    std::vector<int> path;
    int v = start;
    while (v > 0 && color[v] == 0) {
      color[v] = 1;
      path.push_back(v);
      v = parent[v];
    }
    if (v > 0 && color[v] == 1) {
      for (int u = v;;) {
        cycle.push_back(u);
        u = parent[u];
        if (u == v) break;
      }
    }
    for (int p : path) color[p] = 2;
  }
  if (cycle.empty()) return parent;

  std::vector<bool> in_cycle(n, false);
  for (int c : cycle) in_cycle[c] = true;
  std::sort(cycle.begin(), cycle.end());

  // Contract: surviving nodes keep their relative order; the cycle becomes
  // the last node of the smaller graph.
  std::vector<int> new_id(n, -1);
  std::vector<int> old_of;
  for (int v = 0; v < n; ++v) {
    if (!in_cycle[v]) {
      new_id[v] = static_cast<int>(old_of.size());
      old_of.push_back(v);
    }
  }
  const int c_id = static_cast<int>(old_of.size());
  const int m = c_id + 1;
  std::vector<std::vector<double>> w(m, std::vector<double>(m, kNoArc));
  std::vector<int> enter_at(m, -1);  // cycle node entered from outside node u
  std::vector<int> leave_from(m, -1);  // cycle node leaving toward outside node v
  for (int u = 0; u < n; ++u) {
    if (in_cycle[u]) continue;
    for (int v = 0; v < n; ++v) {
      if (in_cycle[v] || u == v || v == 0) continue;
      w[new_id[u]][new_id[v]] = weights[u][v];
    }
  }
  for (int u = 0; u < n; ++u) {
    if (in_cycle[u]) continue;
    for (int v : cycle) {
      if (weights[u][v] == kNoArc) continue;
      const double gain = weights[u][v] - weights[parent[v]][v];
      if (enter_at[new_id[u]] < 0 || gain > w[new_id[u]][c_id]) {
        w[new_id[u]][c_id] = gain;
        enter_at[new_id[u]] = v;
      }
    }
  }
  for (int v = 1; v < n; ++v) {
    if (in_cycle[v]) continue;
    for (int u : cycle) {
      if (weights[u][v] == kNoArc) continue;
      if (leave_from[new_id[v]] < 0 || weights[u][v] > w[c_id][new_id[v]]) {
        w[c_id][new_id[v]] = weights[u][v];
        leave_from[new_id[v]] = u;
      }
    }
  }

  const std::vector<int> sub = chu_liu_edmonds_dense(w);
  std::vector<int> result(n, -1);
  for (int v = 1; v < n; ++v) {
    if (!in_cycle[v]) {
      const int p = sub[new_id[v]];
      result[v] = p == c_id ? leave_from[new_id[v]] : old_of[p];
    } else {
      result[v] = parent[v];
    }
  }
  const int entry_parent = old_of[sub[c_id]];
  result[enter_at[new_id[entry_parent]]] = entry_parent;
  return result;
}

}  // namespace detail

// Maximum spanning arborescence over a virtual root (node 0) and tokens
// 1..m with exactly one root child. weights[u][v] scores arc u -> v and
// weights[*][0] is ignored. Returns 1-based heads with 0 for the root.
inline std::vector<int> max_single_root_arborescence(const std::vector<std::vector<double>>& weights) {
  const int n = static_cast<int>(weights.size());
  require(n >= 2, ErrorCategory::kShape, "arborescence needs at least one token");
  auto to_heads = [](const std::vector<int>& parent) {
    return std::vector<int>(parent.begin() + 1, parent.end());
  };
  auto unconstrained = detail::chu_liu_edmonds_dense(weights);
  int root_children = 0;
  for (int v = 1; v < n; ++v) root_children += unconstrained[v] == 0;
  if (root_children == 1) return to_heads(unconstrained);

  // Retry with each single root arc allowed and keep the best.
  std::vector<int> best;
  double best_score = detail::kNoArc;
  for (int r = 1; r < n; ++r) {
    if (weights[0][r] == detail::kNoArc) continue;
    auto w = weights;
    for (int v = 1; v < n; ++v) {
      if (v != r) w[0][v] = detail::kNoArc;
    }
    auto parent = detail::chu_liu_edmonds_dense(w);
    double score = 0.0;
    for (int v = 1; v < n; ++v) score += weights[parent[v]][v];
    if (best.empty() || score > best_score) {
      best = std::move(parent);
      best_score = score;
    }
  }
  return to_heads(best);
}

// Arc weights from a PSH matrix: token j -> token i scores
// log(scores[i][j] + eps) and root -> i scores log(scores[i][i] + eps).
template <typename T>
std::vector<std::vector<double>> arc_weights(const Tensor<T>& scores) {
  require(scores.rank() == 2 && scores.dim(0) == scores.dim(1), ErrorCategory::kShape,
          "parent scores must be square");
  const std::size_t m = scores.dim(0);
  std::vector<std::vector<double>> w(m + 1, std::vector<double>(m + 1, detail::kNoArc));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double lw = std::log(static_cast<double>(scores.at(i, j)) + kArcWeightSmoothing);
      if (i == j) {
        w[0][i + 1] = lw;
      } else {
        w[j + 1][i + 1] = lw;
      }
    }
  }
  return w;
}

template <typename T>
std::vector<int> chu_liu_edmonds(const Tensor<T>& scores) {
  return max_single_root_arborescence(arc_weights(scores));
}

// Total arc weight of `heads` under arc_weights-style weights.
inline double tree_weight(const std::vector<std::vector<double>>& weights, std::span<const int> heads) {
  double total = 0.0;
  for (std::size_t i = 0; i < heads.size(); ++i) total += weights[static_cast<std::size_t>(heads[i])][i + 1];
  return total;
}

// Argmax parents, repaired by the maximum spanning arborescence when they
// do not already form a tree.
template <typename T>
std::vector<int> decode_tree(const Tensor<T>& scores) {
  auto heads = predict_parents(scores);
  if (is_valid_tree(heads)) return heads;
  return chu_liu_edmonds(scores);
}

inline double uas(std::span<const int> predicted, std::span<const int> gold) {
  require(predicted.size() == gold.size(), ErrorCategory::kData,
          "uas: predicted has " + std::to_string(predicted.size()) + " heads, gold has " +
              std::to_string(gold.size()));
  if (gold.empty()) return 1.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) correct += predicted[i] == gold[i];
  return static_cast<double>(correct) / static_cast<double>(gold.size());
}

}  // namespace synattn
