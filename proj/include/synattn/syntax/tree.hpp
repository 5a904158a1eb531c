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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "synattn/error.hpp"

namespace synattn {

// Tokens with 1-based parent indices; 0 marks the root.
struct DependencyTree {
  std::vector<std::string> tokens;
  std::vector<int> heads;

  std::size_t size() const noexcept { return heads.size(); }
  bool operator==(const DependencyTree&) const = default;
};

// Describes the first structural violation in `heads`, or nullopt when the
// heads form a single-rooted tree.
inline std::optional<std::string> tree_violation(std::span<const int> heads) {
  const int m = static_cast<int>(heads.size());
  if (m == 0) return "empty tree";
  int roots = 0;
  for (int i = 0; i < m; ++i) {
    const int h = heads[i];
    if (h < 0 || h > m) return "head " + std::to_string(h) + " of token " + std::to_string(i + 1) + " out of range";
    if (h == i + 1) return "token " + std::to_string(i + 1) + " is its own head";
    if (h == 0) ++roots;
  }
  if (roots == 0) return "no root";
  if (roots > 1) return "multiple roots";
  // 0 = unvisited, 1 = on current path, 2 = reaches root
  std::vector<int> state(m, 0);
  for (int start = 0; start < m; ++start) {
    std::vector<int> path;
    int v = start;
    while (v >= 0 && state[v] == 0) {
      state[v] = 1;
      path.push_back(v);
      v = heads[v] - 1;
    }
    if (v >= 0 && state[v] == 1) return "cycle through token " + std::to_string(v + 1);
    for (int p : path) state[p] = 2;
  }
  return std::nullopt;
}

inline bool is_valid_tree(std::span<const int> heads) { return !tree_violation(heads).has_value(); }

inline void validate_tree(const DependencyTree& tree) {
  require(tree.tokens.size() == tree.heads.size(), ErrorCategory::kTree,
          "tree has " + std::to_string(tree.tokens.size()) + " tokens but " + std::to_string(tree.heads.size()) +
              " heads");
  if (auto why = tree_violation(tree.heads)) fail(ErrorCategory::kTree, *why);
}

inline std::vector<std::size_t> child_counts(std::span<const int> heads) {
  std::vector<std::size_t> counts(heads.size(), 0);
  for (int h : heads) {
    if (h > 0) ++counts[static_cast<std::size_t>(h - 1)];
  }
  return counts;
}

}  // namespace synattn
