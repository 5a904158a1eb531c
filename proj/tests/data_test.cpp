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

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "synattn/synattn.hpp"
#include "test_support.hpp"

namespace synattn {
namespace {

std::vector<DependencyTree> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_conllu(in);
}

std::string row(int id, const std::string& form, const std::string& head) {
  return std::to_string(id) + "\t" + form + "\t_\t_\t_\t_\t" + head + "\t_\t_\t_\n";
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

TEST(Conllu, MinimalSentence) {
  const auto trees = parse(row(1, "He", "2") + row(2, "runs", "0") + "\n");
  ASSERT_EQ(trees.size(), 1u);
  EXPECT_EQ(trees[0].tokens, (std::vector<std::string>{"He", "runs"}));
  EXPECT_EQ(trees[0].heads, (std::vector<int>{2, 0}));
}

TEST(Conllu, CommentsRangesAndEmptyNodesAreSkipped) {
  const std::string text = "# sent_id = 1\n# text = a b c\n" + row(1, "a", "2") +
                           "2-3\tbc\t_\t_\t_\t_\t_\t_\t_\t_\n" + row(2, "b", "0") + "2.1\tx\t_\t_\t_\t_\t_\t_\t_\t_\n" +
                           row(3, "c", "2") + "\n" + row(1, "solo", "0");
  const auto trees = parse(text);
  ASSERT_EQ(trees.size(), 2u);
  EXPECT_EQ(trees[0].heads, (std::vector<int>{2, 0, 2}));
  EXPECT_EQ(trees[1].tokens, std::vector<std::string>{"solo"});
}

TEST(Conllu, NoRootIsReportedWithLine) {
  const auto msg = error_of("# c\n" + row(1, "a", "2") + row(2, "b", "1") + "\n");
  EXPECT_NE(msg.find("no root"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
}

TEST(Conllu, MalformedInputIsAnError) {
  EXPECT_NE(error_of(row(1, "a", "x")).find("line 1: non-integer HEAD"), std::string::npos);
  EXPECT_NE(error_of(row(1, "a", "5")).find("out of range"), std::string::npos);
  EXPECT_NE(error_of(row(1, "a", "0") + row(2, "b", "0")).find("multiple roots"), std::string::npos);
  EXPECT_NE(error_of(row(1, "a", "0") + row(2, "b", "3") + row(3, "c", "2")).find("cycle"), std::string::npos);
  EXPECT_NE(error_of("1\ta\t0\n").find("10 tab-separated columns"), std::string::npos);
  EXPECT_NE(error_of(row(2, "a", "0")).find("unexpected token ID"), std::string::npos);
}

TEST(Conllu, EmitThenParseRoundTrips) {
  std::mt19937_64 rng(13);
  std::vector<DependencyTree> trees;
  for (int k = 0; k < 300; ++k) trees.push_back(testing::tree_from_heads(testing::random_heads(1 + rng() % 25, rng)));
  std::ostringstream out;
  emit_conllu(out, trees);
  EXPECT_EQ(parse(out.str()), trees);
}

TEST(Vocabulary, BuildOrdersByFrequency) {
  const auto v = Vocabulary::build({{"a", "a", "b"}}, 6);
  EXPECT_EQ(v.tokens(), (std::vector<std::string>{"<pad>", "<unk>", "<s>", "</s>", "a", "b"}));
  EXPECT_EQ(v.encode("zzz"), kUnkId);
}

TEST(Vocabulary, TiesAreLexicographic) {
  const auto v = Vocabulary::build({{"b", "a"}}, 5);
  EXPECT_EQ(v.size(), 5u);
  EXPECT_TRUE(v.contains("a"));
  EXPECT_FALSE(v.contains("b"));
}

TEST(Vocabulary, Errors) {
  EXPECT_THROW(Vocabulary::build({}, 10), Error);
  EXPECT_THROW(Vocabulary::build({{}, {}}, 10), Error);
  EXPECT_THROW(Vocabulary::build({{"a"}}, 4), Error);
  EXPECT_THROW(Vocabulary().decode(4), Error);
}

TEST(Vocabulary, RoundTrips) {
  const auto data = testing::toy_data(50, 3);
  const auto& v = data.src_vocab;
  for (std::size_t id = 0; id < v.size(); ++id) {
    EXPECT_EQ(v.encode(v.decode(static_cast<int>(id))), static_cast<int>(id));
  }
  const auto copy = Vocabulary::deserialize(v.serialize());
  EXPECT_EQ(copy.tokens(), v.tokens());
  EXPECT_THROW(Vocabulary::deserialize("x\ny\n"), Error);
}

TEST(Subwords, MergeAndProjectTree) {
  const auto seg = merge_subword_pieces({"un@@", "believ@@", "able", "cat"});
  EXPECT_EQ(seg.words, (std::vector<std::string>{"unbelievable", "cat"}));
  EXPECT_EQ(seg.piece_counts, (std::vector<std::size_t>{3, 1}));
  EXPECT_THROW(merge_subword_pieces({"dangling@@"}), Error);

  DependencyTree words{{"unbelievable", "cat"}, {2, 0}};
  const auto ex = make_example({"un@@", "believ@@", "able", "cat"}, {"x"}, words);
  EXPECT_EQ(ex.src_tree.heads, (std::vector<int>{4, 1, 1, 0}));
  EXPECT_EQ(ex.src_tree.tokens, ex.src_tokens);
}

TEST(Subwords, FormMismatchIsAnError) {
  DependencyTree words{{"a", "b"}, {2, 0}};
  EXPECT_THROW(make_example({"a", "c"}, {"x"}, words), Error);
  EXPECT_THROW(make_example({"a@@", "b"}, {"x"}, words), Error);
}

TEST(Batch, SingleExampleHasNoPadding) {
  const auto data = testing::toy_data(1, 8);
  const auto b = make_batch<double>(data.examples, data.src_vocab, data.tgt_vocab);
  const std::size_t m = data.examples[0].src_tokens.size();
  const std::size_t n = data.examples[0].tgt_tokens.size() + 1;
  EXPECT_EQ(b.src_ids.shape(), (Shape{1, m}));
  EXPECT_EQ(b.src_mask.count(), m);
  EXPECT_EQ(b.tgt_mask.count(), n);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t ones = 0;
    for (std::size_t j = 0; j < m; ++j) ones += b.w_parent.at(0, i, j) == 1.0;
    EXPECT_EQ(ones, 1u);
  }
  EXPECT_EQ(b.tgt_in_ids.at(0, 0), kBosId);
  EXPECT_EQ(b.tgt_out_ids.at(0, n - 1), kEosId);
  for (std::size_t t = 0; t + 1 < n; ++t) EXPECT_EQ(b.tgt_out_ids.at(0, t), b.tgt_in_ids.at(0, t + 1));
}

TEST(Batch, PadsToLongest) {
  DependencyTree three{{"a", "b", "c"}, {2, 0, 2}};
  DependencyTree five{{"a", "b", "c", "d", "e"}, {2, 0, 2, 3, 4}};
  std::vector<ParallelExample> ex{make_example(three.tokens, {"x"}, three), make_example(five.tokens, {"y", "z"}, five)};
  const auto v = Vocabulary::build({{"a", "b", "c", "d", "e"}}, 100);
  const auto t = Vocabulary::build({{"x", "y", "z"}}, 100);
  const auto b = make_batch<double>(ex, v, t);
  EXPECT_EQ(b.src_ids.shape(), (Shape{2, 5}));
  std::size_t first = 0;
  std::size_t second = 0;
  for (std::size_t j = 0; j < 5; ++j) {
    first += b.row_mask.bits[j];
    second += b.row_mask.bits[5 + j];
  }
  EXPECT_EQ(first, 3u);
  EXPECT_EQ(second, 5u);
  EXPECT_EQ(b.src_ids.at(0, 4), kPadId);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      if (i >= 3 || j >= 3) {
        EXPECT_EQ(b.w_child.at(0, i, j), 0.0);
        EXPECT_EQ(b.w_parent.at(0, i, j), 0.0);
      }
    }
  }
  EXPECT_EQ(b.tgt_out_ids.at(0, 1), kEosId);
  EXPECT_EQ(b.tgt_out_ids.at(0, 2), kPadId);
}

TEST(Batch, ExtraPaddingLeavesLossesUnchanged) {
  const auto data = testing::toy_data(4, 41);
  ModelConfig cfg;
  cfg.n_layers = 2;
  cfg.n_heads = 4;
  cfg.d_model = 16;
  cfg.d_ff = 32;
  cfg.max_len = 40;
  cfg.dropout_rate = 0.0;
  cfg.src_vocab = data.src_vocab.size();
  cfg.tgt_vocab = data.tgt_vocab.size();
  Transformer<double> model(cfg, 5);
  const auto tight = make_batch<double>(data.examples, data.src_vocab, data.tgt_vocab);
  const auto loose = make_batch<double>(data.examples, data.src_vocab, data.tgt_vocab, 25, 30);
  ASSERT_GT(loose.src_ids.cols, tight.src_ids.cols);
  const auto a = compute_losses(model, tight, SupervisionConfig{}).values();
  const auto b = compute_losses(model, loose, SupervisionConfig{}).values();
  EXPECT_NEAR(a.translation, b.translation, 1e-6);
  EXPECT_NEAR(a.child, b.child, 1e-6);
  EXPECT_NEAR(a.parent, b.parent, 1e-6);
  EXPECT_NEAR(a.joint, b.joint, 1e-6);

  // Duplicating one sentence with padding keeps per-token losses the same.
  std::vector<ParallelExample> solo{data.examples[0]};
  std::vector<ParallelExample> twice{data.examples[0], data.examples[0]};
  const auto one = compute_losses(model, make_batch<double>(solo, data.src_vocab, data.tgt_vocab), SupervisionConfig{});
  const auto two =
      compute_losses(model, make_batch<double>(twice, data.src_vocab, data.tgt_vocab, 20, 20), SupervisionConfig{});
  EXPECT_NEAR(one.values().joint, two.values().joint, 1e-6);
}

TEST(Corpus, LoadsAlignedFilesAndRejectsMisalignment) {
  const auto dir = std::filesystem::temp_directory_path() / "synattn_data_test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "c.src") << "a b\nc\n";
  std::ofstream(dir / "c.tgt") << "x y\nz\n";
  std::ofstream(dir / "c.conllu") << row(1, "a", "0") + row(2, "b", "1") + "\n" + row(1, "c", "0") + "\n";
  std::ofstream(dir / "short.tgt") << "x y\n";
  const auto corpus = load_parallel_corpus((dir / "c.src").string(), (dir / "c.tgt").string(),
                                           (dir / "c.conllu").string());
  ASSERT_EQ(corpus.size(), 2u);
  EXPECT_EQ(corpus[0].src_tree.heads, (std::vector<int>{0, 1}));
  EXPECT_EQ(corpus[1].tgt_tokens, std::vector<std::string>{"z"});
  EXPECT_THROW(load_parallel_corpus((dir / "c.src").string(), (dir / "short.tgt").string(),
                                    (dir / "c.conllu").string()),
               Error);
  EXPECT_THROW(read_token_lines((dir / "missing.src").string()), Error);
  std::filesystem::remove_all(dir);
}

TEST(Corpus, LongSentencesAreDroppedAndCounted) {
  auto corpus = testing::toy_data(30, 4).examples;
  std::size_t dropped = 0;
  const auto kept = detail::drop_long(corpus, 8, dropped);
  EXPECT_EQ(kept.size() + dropped, corpus.size());
  EXPECT_GT(dropped, 0u);
  for (const auto& ex : kept) EXPECT_LE(ex.src_tokens.size(), 8u);
}

}  // namespace
}  // namespace synattn
