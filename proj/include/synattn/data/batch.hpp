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
#include <span>
#include <vector>

#include "synattn/data/corpus.hpp"
#include "synattn/data/vocab.hpp"
#include "synattn/error.hpp"
#include "synattn/numerics/tensor.hpp"
#include "synattn/syntax/adjacency.hpp"

namespace synattn {

template <typename T>
struct Batch {
  TokenMatrix src_ids;      // (B, m)
  TokenMatrix tgt_in_ids;   // (B, n): <s> y_1 .. y_k
  TokenMatrix tgt_out_ids;  // (B, n): y_1 .. y_k </s>
  Mask src_mask;            // (B, m)
  Mask tgt_mask;            // (B, n)
  Tensor<T> w_child;        // (B, m, m), zero rows and columns on padding
  Tensor<T> w_parent;       // (B, m, m)
  Mask row_mask;            // (B, m)
  std::vector<std::size_t> src_lengths;

  std::size_t size() const noexcept { return src_ids.rows; }
};

// Pads to the longest sentence, or to min_src_len / min_tgt_len when larger.
template <typename T>
Batch<T> make_batch(std::span<const ParallelExample> examples, const Vocabulary& src_vocab,
                    const Vocabulary& tgt_vocab, std::size_t min_src_len = 0, std::size_t min_tgt_len = 0) {
  require(!examples.empty(), ErrorCategory::kData, "cannot batch zero examples");
  std::size_t m = min_src_len;
  std::size_t n = min_tgt_len;
  for (const auto& ex : examples) {
    require(ex.src_tree.size() == ex.src_tokens.size(), ErrorCategory::kData,
            "source tokens and tree lengths differ");
    require(!ex.src_tokens.empty(), ErrorCategory::kData, "empty source sentence");
    m = std::max(m, ex.src_tokens.size());
    n = std::max(n, ex.tgt_tokens.size() + 1);
  }
  const std::size_t batch = examples.size();
  Batch<T> b;
  b.src_ids = TokenMatrix(batch, m, kPadId);
  b.tgt_in_ids = TokenMatrix(batch, n, kPadId);
  b.tgt_out_ids = TokenMatrix(batch, n, kPadId);
  b.src_mask = Mask(Shape{batch, m}, 0);
  b.tgt_mask = Mask(Shape{batch, n}, 0);
  b.w_child = Tensor<T>(Shape{batch, m, m});
  b.w_parent = Tensor<T>(Shape{batch, m, m});
  for (std::size_t i = 0; i < batch; ++i) {
    const auto& ex = examples[i];
    const std::size_t len = ex.src_tokens.size();
    b.src_lengths.push_back(len);
    for (std::size_t j = 0; j < len; ++j) {
      b.src_ids.at(i, j) = src_vocab.encode(ex.src_tokens[j]);
      b.src_mask.bits[i * m + j] = 1;
    }
    const auto adj = build_adjacency<T>(ex.src_tree);
    for (std::size_t r = 0; r < len; ++r) {
      for (std::size_t c = 0; c < len; ++c) {
        b.w_child.at(i, r, c) = adj.w_child.at(r, c);
        b.w_parent.at(i, r, c) = adj.w_parent.at(r, c);
      }
    }
    b.tgt_in_ids.at(i, 0) = kBosId;
    const std::size_t k = ex.tgt_tokens.size();
    for (std::size_t t = 0; t < k; ++t) {
      const int id = tgt_vocab.encode(ex.tgt_tokens[t]);
      b.tgt_in_ids.at(i, t + 1) = id;
      b.tgt_out_ids.at(i, t) = id;
    }
    b.tgt_out_ids.at(i, k) = kEosId;
    for (std::size_t t = 0; t <= k; ++t) b.tgt_mask.bits[i * n + t] = 1;
  }
  b.row_mask = b.src_mask;
  return b;
}

// Source-only batch for inference.
inline std::pair<TokenMatrix, Mask> encode_sources(const std::vector<std::vector<std::string>>& sentences,
                                                   const Vocabulary& src_vocab) {
  std::size_t m = 1;
  for (const auto& s : sentences) m = std::max(m, s.size());
  TokenMatrix ids(sentences.size(), m, kPadId);
  Mask mask(Shape{sentences.size(), m}, 0);
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    require(!sentences[i].empty(), ErrorCategory::kData, "empty source sentence " + std::to_string(i + 1));
    for (std::size_t j = 0; j < sentences[i].size(); ++j) {
      ids.at(i, j) = src_vocab.encode(sentences[i][j]);
      mask.bits[i * m + j] = 1;
    }
  }
  return {std::move(ids), std::move(mask)};
}

}  // namespace synattn
