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
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "synattn/error.hpp"

namespace synattn {

// Numerator used in place of a zero clipped n-gram count.
inline constexpr double kBleuZeroCountFloor = 1e-9;

struct BleuScore {
  double bleu = 0.0;  // 0..100
  std::array<double, 4> precisions{};
  double brevity_penalty = 1.0;
  std::size_t hyp_length = 0;
  std::size_t ref_length = 0;
};

// Corpus-level BLEU-4 with a single reference per line, tokenized and
// case-sensitive. Clipped counts and totals are summed over the corpus;
// an order whose clipped count is 0 uses kBleuZeroCountFloor instead, and
// an order with no hypothesis n-grams at all is left out of the mean.
inline BleuScore corpus_bleu(const std::vector<std::vector<std::string>>& hyps,
                             const std::vector<std::vector<std::string>>& refs) {
  require(hyps.size() == refs.size(), ErrorCategory::kData,
          "hypothesis has " + std::to_string(hyps.size()) + " lines, reference has " + std::to_string(refs.size()));
  std::array<double, 4> matched{};
  std::array<double, 4> total{};
  BleuScore score;
  for (std::size_t s = 0; s < hyps.size(); ++s) {
    const auto& h = hyps[s];
    const auto& r = refs[s];
    score.hyp_length += h.size();
    score.ref_length += r.size();
    for (std::size_t n = 1; n <= 4; ++n) {
      std::map<std::vector<std::string>, std::size_t> ref_counts;
      for (std::size_t i = 0; i + n <= r.size(); ++i) ++ref_counts[{r.begin() + i, r.begin() + i + n}];
      std::map<std::vector<std::string>, std::size_t> hyp_counts;
      for (std::size_t i = 0; i + n <= h.size(); ++i) ++hyp_counts[{h.begin() + i, h.begin() + i + n}];
      for (const auto& [gram, count] : hyp_counts) {
        auto it = ref_counts.find(gram);
        matched[n - 1] += static_cast<double>(std::min(count, it == ref_counts.end() ? 0 : it->second));
        total[n - 1] += static_cast<double>(count);
      }
    }
  }
  if (score.hyp_length == 0) {
    score.bleu = score.ref_length == 0 ? 100.0 : 0.0;
    return score;
  }
  double log_sum = 0.0;
  int orders = 0;
  for (std::size_t n = 0; n < 4; ++n) {
    if (total[n] == 0.0) continue;
    score.precisions[n] = std::max(matched[n], kBleuZeroCountFloor) / total[n];
    log_sum += std::log(score.precisions[n]);
    ++orders;
  }
  const double c = static_cast<double>(score.hyp_length);
  const double r = static_cast<double>(score.ref_length);
  score.brevity_penalty = std::exp(std::min(0.0, 1.0 - r / c));
  score.bleu = 100.0 * score.brevity_penalty * std::exp(log_sum / orders);
  return score;
}

}  // namespace synattn
