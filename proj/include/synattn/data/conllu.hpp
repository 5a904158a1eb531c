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

#include <charconv>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "synattn/error.hpp"
#include "synattn/syntax/tree.hpp"

namespace synattn {

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    cols.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return cols;
}

inline bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace detail

// Reads CoNLL-U blocks, keeping ID, FORM and HEAD. Comment lines,
// multiword ranges ("3-4") and empty nodes ("3.1") are skipped.
inline std::vector<DependencyTree> parse_conllu(std::istream& in) {
  std::vector<DependencyTree> trees;
  DependencyTree current;
  std::size_t line_no = 0;
  std::size_t block_start = 0;

  auto flush = [&]() {
    if (current.heads.empty()) return;
    if (auto why = tree_violation(current.heads)) {
      fail(ErrorCategory::kTree, "sentence starting at line " + std::to_string(block_start) + ": " + *why);
    }
    trees.push_back(std::move(current));
    current = DependencyTree{};
  };

  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      flush();
      continue;
    }
    if (line.front() == '#') continue;
    const auto cols = detail::split_tabs(line);
    require(cols.size() == 10, ErrorCategory::kData,
            "line " + std::to_string(line_no) + ": expected 10 tab-separated columns, found " +
                std::to_string(cols.size()));
    const std::string_view id = cols[0];
    if (id.find('-') != std::string_view::npos || id.find('.') != std::string_view::npos) continue;
    int id_value = 0;
    require(detail::parse_int(id, id_value) && id_value == static_cast<int>(current.heads.size()) + 1,
            ErrorCategory::kData, "line " + std::to_string(line_no) + ": unexpected token ID '" + std::string(id) + "'");
    int head = 0;
    require(detail::parse_int(cols[6], head), ErrorCategory::kData,
            "line " + std::to_string(line_no) + ": non-integer HEAD '" + std::string(cols[6]) + "'");
    if (current.heads.empty()) block_start = line_no;
    current.tokens.emplace_back(cols[1]);
    current.heads.push_back(head);
  }
  flush();
  return trees;
}

// Writes ID, FORM and HEAD; every other column is "_".
inline void emit_conllu(std::ostream& out, const std::vector<DependencyTree>& trees) {
  for (const auto& tree : trees) {
    for (std::size_t i = 0; i < tree.size(); ++i) {
      out << (i + 1) << '\t' << tree.tokens[i] << "\t_\t_\t_\t_\t" << tree.heads[i] << "\t_\t_\t_\n";
    }
    out << '\n';
  }
}

}  // namespace synattn
