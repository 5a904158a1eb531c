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

#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "synattn/error.hpp"
#include "synattn/numerics/tensor.hpp"
#include "synattn/syntax/tree.hpp"

namespace synattn {

template <typename T = double>
struct AdjacencyMatrices {
  Tensor<T> w_child;
  Tensor<T> w_parent;
};

// Row i spreads weight 1/n_i over the n_i children of token i; a token
// without children puts weight 1 on itself. A lone root counts as a leaf.
template <typename T = double>
Tensor<T> build_child_matrix(const DependencyTree& tree) {
  validate_tree(tree);
  const std::size_t m = tree.size();
  const auto counts = child_counts(tree.heads);
  Tensor<T> w(Shape{m, m});
  for (std::size_t j = 0; j < m; ++j) {
    const int h = tree.heads[j];
    if (h > 0) {
      const auto i = static_cast<std::size_t>(h - 1);
      w.at(i, j) = T{1} / static_cast<T>(counts[i]);
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (counts[i] == 0) w.at(i, i) = T{1};
  }
  return w;
}

// Row i is one-hot at the parent of token i; the root row points at itself.
template <typename T = double>
Tensor<T> build_parent_matrix(const DependencyTree& tree) {
  validate_tree(tree);
  const std::size_t m = tree.size();
  Tensor<T> w(Shape{m, m});
  for (std::size_t i = 0; i < m; ++i) {
    const int h = tree.heads[i];
    w.at(i, h == 0 ? i : static_cast<std::size_t>(h - 1)) = T{1};
  }
  return w;
}

template <typename T = double>
AdjacencyMatrices<T> build_adjacency(const DependencyTree& tree) {
  return {build_child_matrix<T>(tree), build_parent_matrix<T>(tree)};
}

// Projects a word-level tree onto subword pieces. Each word's first piece
// takes the word's head (remapped to the head word's first piece) and every
// later piece attaches to its own word's first piece.
//
// `piece_tokens`, when given, names the pieces; otherwise every piece
// repeats its word's token.
inline DependencyTree bpe_adjust_heads(const DependencyTree& tree, std::span<const std::size_t> piece_counts,
                                       std::span<const std::string> piece_tokens = {}) {
  validate_tree(tree);
  require(piece_counts.size() == tree.size(), ErrorCategory::kData,
          "segmentation covers " + std::to_string(piece_counts.size()) + " words, tree has " +
              std::to_string(tree.size()));
  std::vector<int> first_piece(tree.size());
  int total = 0;
  for (std::size_t w = 0; w < piece_counts.size(); ++w) {
    require(piece_counts[w] >= 1, ErrorCategory::kData, "word " + std::to_string(w + 1) + " has no pieces");
    first_piece[w] = total + 1;
    total += static_cast<int>(piece_counts[w]);
  }
  require(piece_tokens.empty() || piece_tokens.size() == static_cast<std::size_t>(total), ErrorCategory::kData,
          "piece token count " + std::to_string(piece_tokens.size()) + " does not match segmentation total " +
              std::to_string(total));

  DependencyTree out;
  out.heads.reserve(static_cast<std::size_t>(total));
  out.tokens.reserve(static_cast<std::size_t>(total));
  for (std::size_t w = 0; w < tree.size(); ++w) {
    const int h = tree.heads[w];
    out.heads.push_back(h == 0 ? 0 : first_piece[static_cast<std::size_t>(h - 1)]);
    for (std::size_t p = 1; p < piece_counts[w]; ++p) out.heads.push_back(first_piece[w]);
    for (std::size_t p = 0; p < piece_counts[w]; ++p) {
      out.tokens.push_back(piece_tokens.empty() ? tree.tokens[w]
                                                : piece_tokens[static_cast<std::size_t>(first_piece[w] - 1) + p]);
    }
  }
  validate_tree(out);
  return out;
}

}  // namespace synattn
