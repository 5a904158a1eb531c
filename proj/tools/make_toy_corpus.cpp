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

// Writes a synthetic parallel corpus: <prefix>.src, <prefix>.tgt, <prefix>.conllu.
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "synattn/data/conllu.hpp"
#include "toy_grammar.hpp"

int main(int argc, char** argv) {
  CLI::App app{"generate a toy head-final parallel corpus with gold dependency trees"};
  std::string prefix;
  std::size_t count = 1000;
  std::uint64_t seed = 1;
  app.add_option("prefix", prefix, "output path prefix")->required();
  app.add_option("-n,--count", count, "sentence pairs to generate");
  app.add_option("--seed", seed, "generator seed");
  CLI11_PARSE(app, argc, argv);

  const auto corpus = synattn::toy::generate(count, seed);
  std::ofstream src(prefix + ".src");
  std::ofstream tgt(prefix + ".tgt");
  std::ofstream conllu(prefix + ".conllu");
  if (!src || !tgt || !conllu) {
    std::cerr << "error: io: cannot write to prefix " << prefix << '\n';
    return 2;
  }
  std::vector<synattn::DependencyTree> trees;
  for (const auto& ex : corpus) {
    for (std::size_t i = 0; i < ex.src_tokens.size(); ++i) src << (i ? " " : "") << ex.src_tokens[i];
    src << '\n';
    for (std::size_t i = 0; i < ex.tgt_tokens.size(); ++i) tgt << (i ? " " : "") << ex.tgt_tokens[i];
    tgt << '\n';
    trees.push_back(ex.src_tree);
  }
  synattn::emit_conllu(conllu, trees);
  return 0;
}
