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
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "synattn/cli/trainer.hpp"
#include "synattn/data/batch.hpp"
#include "synattn/syntax/tree.hpp"
#include "synattn/treedec/decode.hpp"

namespace synattn {

inline constexpr std::size_t kInferenceChunk = 64;

namespace detail {

template <typename F>
void for_each_chunk(const std::vector<std::vector<std::string>>& sentences, F&& f) {
  for (std::size_t start = 0; start < sentences.size(); start += kInferenceChunk) {
    const std::size_t end = std::min(sentences.size(), start + kInferenceChunk);
    std::vector<std::vector<std::string>> chunk(sentences.begin() + static_cast<std::ptrdiff_t>(start),
                                                sentences.begin() + static_cast<std::ptrdiff_t>(end));
    f(start, chunk);
  }
}

}  // namespace detail

template <typename T>
std::vector<std::vector<std::string>> translate_sentences(const ModelBundle<T>& bundle,
                                                          const std::vector<std::vector<std::string>>& sources) {
  // A blank source line yields a blank output line.
  std::vector<std::vector<std::string>> nonempty;
  for (const auto& s : sources) {
    if (!s.empty()) nonempty.push_back(s);
  }
  std::vector<std::vector<std::string>> decoded_text;
  decoded_text.reserve(nonempty.size());
  detail::for_each_chunk(nonempty, [&](std::size_t, const auto& chunk) {
    const auto [ids, mask] = encode_sources(chunk, bundle.src_vocab);
    const auto decoded =
        greedy_decode(bundle.model, ids, mask, bundle.config.model.max_len - 1, bundle.config.supervision);
    for (const auto& seq : decoded.outputs) {
      std::vector<std::string> words;
      for (int id : seq) words.push_back(bundle.tgt_vocab.decode(id));
      decoded_text.push_back(std::move(words));
    }
  });
  std::vector<std::vector<std::string>> out(sources.size());
  std::size_t next = 0;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (!sources[i].empty()) out[i] = std::move(decoded_text[next++]);
  }
  return out;
}

// Per-sentence attention matrices of one encoder layer, padding stripped:
// result[sentence][head] is (m, m).
template <typename T>
std::vector<std::vector<Tensor<T>>> encoder_attention(const ModelBundle<T>& bundle,
                                                      const std::vector<std::vector<std::string>>& sources,
                                                      std::size_t layer) {
  ad::NoGradGuard no_grad;
  std::vector<std::vector<Tensor<T>>> out;
  out.reserve(sources.size());
  detail::for_each_chunk(sources, [&](std::size_t, const auto& chunk) {
    const auto [ids, mask] = encode_sources(chunk, bundle.src_vocab);
    const auto enc = bundle.model.encode(ids, mask);
    for (std::size_t b = 0; b < chunk.size(); ++b) {
      std::vector<Tensor<T>> heads;
      for (const auto& p : enc.head_probs.at(layer)) heads.push_back(sentence_block(p.value(), b, chunk[b].size()));
      out.push_back(std::move(heads));
    }
  });
  return out;
}

// Trees read off the parent-supervised head: argmax parents, repaired by the
// maximum spanning arborescence when needed.
template <typename T>
std::vector<DependencyTree> parse_attention(const ModelBundle<T>& bundle,
                                            const std::vector<std::vector<std::string>>& sources) {
  const auto& sup = bundle.config.supervision;
  const auto attn = encoder_attention(bundle, sources, sup.resolved_layer(bundle.config.model));
  std::vector<DependencyTree> trees;
  trees.reserve(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    trees.push_back(DependencyTree{sources[i], decode_tree(attn[i][sup.psh_head])});
  }
  return trees;
}

// One JSON object per line:
//   {"sentence": 0, "tokens": [...], "layer": 1,
//    "heads": [{"head": 0, "role": "CSH", "probs": [[...], ...]}, ...]}
// role is "CSH", "PSH" or "free".
template <typename T>
void export_attention(const ModelBundle<T>& bundle, const std::vector<std::vector<std::string>>& sources,
                      std::ostream& out) {
  const auto& sup = bundle.config.supervision;
  const std::size_t layer = sup.resolved_layer(bundle.config.model);
  const auto attn = encoder_attention(bundle, sources, layer);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    nlohmann::json rec;
    rec["sentence"] = i;
    rec["tokens"] = sources[i];
    rec["layer"] = layer;
    rec["heads"] = nlohmann::json::array();
    for (std::size_t h = 0; h < attn[i].size(); ++h) {
      const auto& p = attn[i][h];
      nlohmann::json rows = nlohmann::json::array();
      for (std::size_t r = 0; r < p.dim(0); ++r) {
        std::vector<double> row(p.dim(1));
        for (std::size_t c = 0; c < p.dim(1); ++c) row[c] = static_cast<double>(p.at(r, c));
        rows.push_back(std::move(row));
      }
      const char* role = h == sup.csh_head ? "CSH" : h == sup.psh_head ? "PSH" : "free";
      rec["heads"].push_back({{"head", h}, {"role", role}, {"probs", std::move(rows)}});
    }
    out << rec.dump() << '\n';
  }
}

struct UasReport {
  std::size_t correct = 0;
  std::size_t total = 0;
  double uas() const { return total == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(total); }
};

// Token-level (micro-averaged) attachment score over aligned corpora.
inline UasReport corpus_uas(const std::vector<DependencyTree>& predicted, const std::vector<DependencyTree>& gold) {
  require(predicted.size() == gold.size(), ErrorCategory::kData,
          "predicted has " + std::to_string(predicted.size()) + " sentences, gold has " +
              std::to_string(gold.size()));
  UasReport report;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    require(predicted[s].size() == gold[s].size(), ErrorCategory::kData,
            "sentence " + std::to_string(s + 1) + " length differs between predicted and gold");
    for (std::size_t i = 0; i < gold[s].size(); ++i) report.correct += predicted[s].heads[i] == gold[s].heads[i];
    report.total += gold[s].size();
  }
  return report;
}

}  // namespace synattn
