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
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "synattn/data/conllu.hpp"
#include "synattn/error.hpp"
#include "synattn/syntax/adjacency.hpp"
#include "synattn/syntax/tree.hpp"

namespace synattn {

// Suffix marking a subword piece that continues into the next piece.
inline constexpr std::string_view kContinuationMarker = "@@";

struct ParallelExample {
  std::vector<std::string> src_tokens;
  std::vector<std::string> tgt_tokens;
  DependencyTree src_tree;
};

inline std::vector<std::string> split_whitespace(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

inline std::vector<std::vector<std::string>> read_token_lines(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCategory::kIo, "cannot open " + path);
  std::vector<std::vector<std::string>> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(split_whitespace(line));
  return lines;
}

inline std::vector<DependencyTree> read_conllu_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCategory::kIo, "cannot open " + path);
  return parse_conllu(in);
}

struct WordSegmentation {
  std::vector<std::string> words;
  std::vector<std::size_t> piece_counts;
};

inline bool has_continuation_marker(const std::string& piece) {
  return piece.size() > kContinuationMarker.size() && piece.ends_with(kContinuationMarker);
}

// Groups "@@"-suffixed pieces with the piece that follows them.
inline WordSegmentation merge_subword_pieces(const std::vector<std::string>& pieces) {
  WordSegmentation seg;
  std::string word;
  std::size_t count = 0;
  for (const auto& p : pieces) {
    ++count;
    if (has_continuation_marker(p)) {
      word += p.substr(0, p.size() - kContinuationMarker.size());
      continue;
    }
    word += p;
    seg.words.push_back(std::move(word));
    seg.piece_counts.push_back(count);
    word.clear();
    count = 0;
  }
  require(count == 0, ErrorCategory::kData, "sentence ends inside a subword continuation");
  return seg;
}

// Pairs a (possibly subword-segmented) source with its word-level tree. The
// returned example's tree is over source pieces.
inline ParallelExample make_example(std::vector<std::string> src_pieces, std::vector<std::string> tgt_tokens,
                                    const DependencyTree& word_tree) {
  validate_tree(word_tree);
  ParallelExample ex;
  ex.tgt_tokens = std::move(tgt_tokens);
  const bool segmented = std::any_of(src_pieces.begin(), src_pieces.end(), has_continuation_marker);
  if (!segmented) {
    require(src_pieces == word_tree.tokens, ErrorCategory::kData,
            "source tokens do not match the dependency tree's FORM column");
    ex.src_tree = word_tree;
  } else {
    const auto seg = merge_subword_pieces(src_pieces);
    require(seg.words == word_tree.tokens, ErrorCategory::kData,
            "merged subword pieces do not match the dependency tree's FORM column");
    ex.src_tree = bpe_adjust_heads(word_tree, seg.piece_counts, src_pieces);
  }
  ex.src_tokens = std::move(src_pieces);
  return ex;
}

inline std::vector<ParallelExample> load_parallel_corpus(const std::string& src_path, const std::string& tgt_path,
                                                         const std::string& conllu_path) {
  auto src = read_token_lines(src_path);
  auto tgt = read_token_lines(tgt_path);
  const auto trees = read_conllu_file(conllu_path);
  require(src.size() == tgt.size() && src.size() == trees.size(), ErrorCategory::kData,
          "corpus misaligned: " + std::to_string(src.size()) + " source lines, " + std::to_string(tgt.size()) +
              " target lines, " + std::to_string(trees.size()) + " trees");
  std::vector<ParallelExample> out;
  out.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    try {
      out.push_back(make_example(std::move(src[i]), std::move(tgt[i]), trees[i]));
    } catch (const Error& e) {
      fail(e.category(), "sentence " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace synattn
