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
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "synattn/error.hpp"

namespace synattn {

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kBosId = 2;
inline constexpr int kEosId = 3;
inline constexpr std::size_t kReservedTokens = 4;

class Vocabulary {
 public:
  Vocabulary() : tokens_{"<pad>", "<unk>", "<s>", "</s>"} {
    for (std::size_t i = 0; i < tokens_.size(); ++i) ids_.emplace(tokens_[i], static_cast<int>(i));
  }

  // Keeps the (max_size - 4) most frequent tokens; ties go to the
  // lexicographically smaller token.
  static Vocabulary build(const std::vector<std::vector<std::string>>& sentences, std::size_t max_size) {
    require(max_size > kReservedTokens, ErrorCategory::kConfig, "vocabulary max_size must exceed 4");
    std::map<std::string, std::size_t> freq;
    for (const auto& s : sentences) {
      for (const auto& tok : s) ++freq[tok];
    }
    require(!freq.empty(), ErrorCategory::kData, "cannot build a vocabulary from an empty corpus");
    std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    Vocabulary v;
    for (const auto& [tok, count] : ranked) {
      if (v.size() >= max_size) break;
      if (!v.contains(tok)) v.append(tok);
    }
    return v;
  }

  // One token per line in id order, reserved entries included.
  static Vocabulary deserialize(const std::string& text) {
    Vocabulary v;
    std::istringstream in(text);
    std::string line;
    std::size_t index = 0;
    while (std::getline(in, line)) {
      if (index < kReservedTokens) {
        require(line == v.tokens_[index], ErrorCategory::kCheckpoint, "vocabulary reserved entries are corrupt");
      } else {
        v.append(line);
      }
      ++index;
    }
    return v;
  }

  std::string serialize() const {
    std::string out;
    for (const auto& t : tokens_) {
      out += t;
      out += '\n';
    }
    return out;
  }

  int encode(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnkId : it->second;
  }

  std::vector<int> encode(const std::vector<std::string>& tokens) const {
    std::vector<int> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(encode(t));
    return out;
  }

  const std::string& decode(int id) const {
    require(id >= 0 && static_cast<std::size_t>(id) < tokens_.size(), ErrorCategory::kData,
            "token id " + std::to_string(id) + " outside vocabulary");
    return tokens_[static_cast<std::size_t>(id)];
  }

  bool contains(const std::string& token) const { return ids_.contains(token); }
  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

 private:
  void append(const std::string& token) {
    require(!token.empty() && token.find('\n') == std::string::npos, ErrorCategory::kData,
            "invalid vocabulary token");
    require(!ids_.contains(token), ErrorCategory::kData, "duplicate vocabulary token " + token);
    ids_.emplace(token, static_cast<int>(tokens_.size()));
    tokens_.push_back(token);
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

}  // namespace synattn
