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

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "synattn/data/corpus.hpp"

// Synthetic head-final source language with a deterministic dependency
// grammar and an SVO target produced by a fixed transduction.
//
// Source clause:  NP_subj ga NP_obj wo [ADV] VERB
//   NP := [DET] ADJ{0,2} NOUN
//   DET, ADJ, the case marker -> NOUN; NOUN, ADV -> VERB; VERB is the root.
// Target clause:  NP_subj VERB NP_obj [ADV]   (markers dropped, words mapped 1:1)
namespace synattn::toy {

struct Lexeme {
  const char* src;
  const char* tgt;
};

inline constexpr Lexeme kNouns[] = {{"inu", "dog"},     {"neko", "cat"},     {"tori", "bird"},  {"sakana", "fish"},
                                    {"uma", "horse"},   {"nezumi", "mouse"}, {"ookami", "wolf"}, {"kuma", "bear"},
                                    {"kitsune", "fox"}, {"fukurou", "owl"},  {"kaeru", "frog"}, {"shika", "deer"}};
inline constexpr Lexeme kAdjectives[] = {{"ooki", "big"}, {"chiisa", "small"}, {"aka", "red"},
                                         {"furu", "old"}, {"waka", "young"},   {"haya", "fast"}};
inline constexpr Lexeme kDeterminers[] = {{"ano", "the"}, {"sono", "a"}, {"kono", "this"}};
inline constexpr Lexeme kVerbs[] = {{"miru", "sees"},    {"ou", "chases"},  {"taberu", "eats"}, {"suku", "likes"},
                                    {"tsuku", "follows"}, {"kiku", "hears"}, {"kamu", "bites"}, {"sagasu", "finds"}};
inline constexpr Lexeme kAdverbs[] = {{"hayaku", "quickly"}, {"yukkuri", "slowly"}};

class ToyGrammar {
 public:
  explicit ToyGrammar(std::uint64_t seed) : rng_(seed) {}

  ParallelExample sample() {
    std::vector<std::string> src;
    std::vector<int> heads;
    std::vector<std::string> tgt;

    auto subj = noun_phrase();
    auto obj = noun_phrase();
    const bool adverb = coin(0.5);
    const Lexeme verb = pick(kVerbs);
    const Lexeme adv = pick(kAdverbs);

    const int subj_start = 1;
    const int subj_noun = subj_start + static_cast<int>(subj.size()) - 1;
    const int ga = subj_noun + 1;
    const int obj_start = ga + 1;
    const int obj_noun = obj_start + static_cast<int>(obj.size()) - 1;
    const int wo = obj_noun + 1;
    const int verb_pos = wo + 1 + (adverb ? 1 : 0);

    for (std::size_t i = 0; i < subj.size(); ++i) {
      src.push_back(subj[i].src);
      heads.push_back(i + 1 == subj.size() ? verb_pos : subj_noun);
    }
    src.push_back("ga");
    heads.push_back(subj_noun);
    for (std::size_t i = 0; i < obj.size(); ++i) {
      src.push_back(obj[i].src);
      heads.push_back(i + 1 == obj.size() ? verb_pos : obj_noun);
    }
    src.push_back("wo");
    heads.push_back(obj_noun);
    if (adverb) {
      src.push_back(adv.src);
      heads.push_back(verb_pos);
    }
    src.push_back(verb.src);
    heads.push_back(0);

    for (const auto& w : subj) tgt.push_back(w.tgt);
    tgt.push_back(verb.tgt);
    for (const auto& w : obj) tgt.push_back(w.tgt);
    if (adverb) tgt.push_back(adv.tgt);

    DependencyTree tree{src, heads};
    return make_example(src, std::move(tgt), tree);
  }

  std::vector<ParallelExample> sample(std::size_t n) {
    std::vector<ParallelExample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sample());
    return out;
  }

 private:
  template <std::size_t N>
  Lexeme pick(const Lexeme (&table)[N]) {
    return table[std::uniform_int_distribution<std::size_t>(0, N - 1)(rng_)];
  }

  bool coin(double p) { return std::bernoulli_distribution(p)(rng_); }

  // Determiner and adjectives first, noun last.
  std::vector<Lexeme> noun_phrase() {
    std::vector<Lexeme> np;
    if (coin(0.6)) np.push_back(pick(kDeterminers));
    const int adjectives = std::uniform_int_distribution<int>(0, 2)(rng_);
    for (int i = 0; i < adjectives; ++i) np.push_back(pick(kAdjectives));
    np.push_back(pick(kNouns));
    return np;
  }

  std::mt19937_64 rng_;
};

inline std::vector<ParallelExample> generate(std::size_t n, std::uint64_t seed) { return ToyGrammar(seed).sample(n); }

}  // namespace synattn::toy
