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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.
//
//   acceptance                  run every criterion
//   acceptance --criterion 3    run one
//   acceptance --criterion 6,7  run the toy experiment once for both
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "synattn/synattn.hpp"
#include "test_support.hpp"
#include "toy_grammar.hpp"

namespace {

using namespace synattn;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1. Supervision matrices.
Outcome matrix_construction() {
  const auto start = Clock::now();
  const auto a = build_adjacency(testing::anchored_tree());
  bool anchored = true;
  for (std::size_t j = 0; j < 7; ++j) {
    const bool child_of_root = j == 0 || j == 2 || j == 6;
    anchored &= a.w_child.at(4, j) == (child_of_root ? 1.0 / 3.0 : 0.0);
    anchored &= a.w_parent.at(4, j) == (j == 4 ? 1.0 : 0.0);
  }
  anchored &= a.w_child.at(6, 5) == 1.0 && a.w_child.at(5, 5) == 1.0;

  auto rows_ok = [](const std::vector<int>& heads) {
    const auto t = testing::tree_from_heads(heads);
    const auto w = build_adjacency(t);
    const std::size_t m = heads.size();
    for (std::size_t i = 0; i < m; ++i) {
      double sum = 0.0;
      std::size_t ones = 0;
      std::size_t zeros = 0;
      for (std::size_t j = 0; j < m; ++j) {
        sum += w.w_child.at(i, j);
        ones += w.w_parent.at(i, j) == 1.0;
        zeros += w.w_parent.at(i, j) == 0.0;
      }
      if (std::abs(sum - 1.0) > 1e-12 || ones != 1 || zeros != m - 1) return false;
    }
    return true;
  };
  std::size_t exhaustive = 0;
  std::size_t bad = 0;
  for (std::size_t m = 1; m <= 6; ++m) {
    for (const auto& h : testing::all_trees(m)) {
      ++exhaustive;
      bad += !rows_ok(h);
    }
  }
  std::mt19937_64 rng(20260101);
  for (int k = 0; k < 10000; ++k) bad += !rows_ok(testing::random_heads(7 + rng() % 44, rng));
  const double secs = seconds_since(start);
  return {anchored && bad == 0 && secs < 60.0,
          fmt("anchored facts %s; %zu exhaustive trees (m<=6) + 10000 random trees, %zu row violations; %.1fs",
              anchored ? "match" : "MISMATCH", exhaustive, bad, secs)};
}

// 2. Analytic vs numeric gradients of J.
Outcome gradient_check() {
  const auto start = Clock::now();
  const auto data = testing::toy_data(3, 2718);
  const auto cfg = testing::tiny_model_config(data);
  Transformer<double> model(cfg, 31);
  const auto batch = make_batch<double>(data.examples, data.src_vocab, data.tgt_vocab);
  SupervisionConfig sup;
  sup.alpha = 0.4;
  sup.beta = 0.4;
  const auto results = testing::check_model_gradients(model, batch, sup);
  double worst = 0.0;
  std::string worst_name;
  for (const auto& r : results) {
    if (r.relative_error >= worst) {
      worst = r.relative_error;
      worst_name = r.name;
    }
  }
  const double secs = seconds_since(start);
  return {worst < 1e-4 && secs < 300.0,
          fmt("%zu parameter tensors, max relative error %.2e (%s), tolerance 1e-4; %.1fs", results.size(), worst,
              worst_name.c_str(), secs)};
}

// 3. Zero-weighted supervision reproduces the unsupervised loss curve.
Outcome baseline_reduction() {
  const auto corpus = toy::generate(200, 99);
  RunConfig base;
  base.model.n_layers = 2;
  base.model.n_heads = 4;
  base.model.d_model = 32;
  base.model.d_ff = 64;
  base.model.max_len = 32;
  base.model.dropout_rate = 0.1;
  base.batch_size = 16;
  base.optim.warmup_steps = 50;
  base.seed = 1234;
  auto zero = base;
  zero.supervision.alpha = 0.0;
  zero.supervision.beta = 0.0;
  auto off = base;
  off.supervision.enabled = false;

  constexpr std::size_t kSteps = 120;
  Trainer<float> a(zero, corpus);
  Trainer<float> b(off, corpus);
  std::size_t identical = 0;
  std::size_t first_diff = kSteps;
  for (std::size_t s = 0; s < kSteps; ++s) {
    const auto la = a.step();
    const auto lb = b.step();
    if (la.translation == lb.translation && la.joint == lb.translation) {
      ++identical;
    } else if (first_diff == kSteps) {
      first_diff = s + 1;
    }
  }
  return {identical == kSteps, identical == kSteps
                                   ? fmt("%zu/%zu steps bit-identical L (alpha=beta=0 vs supervision disabled)",
                                         identical, kSteps)
                                   : fmt("first divergence at step %zu; %zu/%zu identical", first_diff, identical,
                                         kSteps)};
}

// 4. Chu-Liu/Edmonds against exhaustive enumeration.
Outcome mst_oracle() {
  const auto start = Clock::now();
  const double none = -std::numeric_limits<double>::infinity();
  const std::vector<std::vector<double>> worked{{none, 5, 1}, {none, none, 10}, {none, 8, none}};
  const auto worked_heads = max_single_root_arborescence(worked);
  const double worked_weight = tree_weight(worked, worked_heads);
  bool ok = worked_weight == 15.0 && worked_heads == std::vector<int>{0, 1};

  std::mt19937_64 rng(4242);
  std::size_t mismatches = 0;
  std::size_t checked = 0;
  for (std::size_t m = 2; m <= 6; ++m) {
    const auto trees = testing::all_trees(m);
    for (int k = 0; k < 1000; ++k) {
      const auto scores = testing::random_stochastic(m, rng);
      const auto w = arc_weights(scores);
      const auto heads = chu_liu_edmonds(scores);
      ++checked;
      if (!is_valid_tree(heads) || std::abs(tree_weight(w, heads) - testing::brute_force_best_weight(w, trees)) > 1e-9) {
        ++mismatches;
      }
    }
  }
  const double secs = seconds_since(start);
  ok &= mismatches == 0 && secs < 120.0;
  return {ok, fmt("worked example weight %.0f; %zu random matrices (m=2..6), %zu mismatches vs brute force; %.1fs",
                  worked_weight, checked, mismatches, secs)};
}

// 5. Parent matrix -> argmax parents round trip.
Outcome parent_round_trip() {
  std::mt19937_64 rng(5150);
  std::size_t failures = 0;
  for (int k = 0; k < 10000; ++k) {
    const auto heads = testing::random_heads(1 + rng() % 40, rng);
    failures += predict_parents(build_parent_matrix(testing::tree_from_heads(heads))) != heads;
  }
  return {failures == 0, fmt("10000 random trees, %zu failed to round-trip", failures)};
}

// 6 and 7. Toy head-final -> SVO translation with supervised heads.
struct ToyRun {
  double exact_match = 0.0;
  double uas = 0.0;
  double child_loss = 0.0;
  double child_bound = 0.0;
  double parent_loss = 0.0;
  double seconds = 0.0;
};

RunConfig toy_config() {
  RunConfig cfg;
  cfg.model.n_layers = 2;
  cfg.model.n_heads = 4;
  cfg.model.d_model = 64;
  cfg.model.d_ff = 256;
  cfg.model.max_len = 32;
  cfg.model.dropout_rate = 0.0;
  cfg.batch_size = 32;
  cfg.steps = 4000;
  cfg.optim.warmup_steps = 400;
  cfg.seed = 1;
  return cfg;
}

// Supervision losses and the child-loss entropy bound over a whole corpus,
// both per real source token.
void corpus_supervision(const ModelBundle<float>& bundle, const std::vector<ParallelExample>& corpus,
                        ToyRun& run) {
  ad::NoGradGuard no_grad;
  double child = 0.0;
  double parent = 0.0;
  double bound = 0.0;
  std::size_t tokens = 0;
  for (std::size_t start = 0; start < corpus.size(); start += 64) {
    const std::size_t end = std::min(corpus.size(), start + 64);
    const std::span<const ParallelExample> chunk(corpus.data() + start, end - start);
    const auto batch = make_batch<float>(chunk, bundle.src_vocab, bundle.tgt_vocab);
    const auto losses = compute_losses(bundle.model, batch, bundle.config.supervision).values();
    const std::size_t n = batch.row_mask.count();
    child += losses.child * static_cast<double>(n);
    parent += losses.parent * static_cast<double>(n);
    tokens += n;
    for (const auto& ex : chunk) {
      const auto w = build_child_matrix(ex.src_tree);
      for (std::size_t i = 0; i < ex.src_tree.size(); ++i) bound += testing::row_entropy(w, i);
    }
  }
  run.child_loss = child / static_cast<double>(tokens);
  run.parent_loss = parent / static_cast<double>(tokens);
  run.child_bound = bound / static_cast<double>(tokens);
}

ToyRun toy_run(const RunConfig& cfg, const std::vector<ParallelExample>& train,
               const std::vector<ParallelExample>& heldout) {
  const auto start = Clock::now();
  Trainer<float> trainer(cfg, train);
  for (std::size_t s = 0; s < cfg.steps; ++s) trainer.step();
  const auto& bundle = trainer.bundle();

  ToyRun run;
  std::vector<std::vector<std::string>> sources;
  for (const auto& ex : train) sources.push_back(ex.src_tokens);
  const auto hyps = translate_sentences(bundle, sources);
  std::size_t exact = 0;
  for (std::size_t i = 0; i < train.size(); ++i) exact += hyps[i] == train[i].tgt_tokens;
  run.exact_match = static_cast<double>(exact) / static_cast<double>(train.size());

  std::vector<std::vector<std::string>> held_sources;
  std::vector<DependencyTree> gold;
  for (const auto& ex : heldout) {
    held_sources.push_back(ex.src_tokens);
    gold.push_back(ex.src_tree);
  }
  run.uas = corpus_uas(parse_attention(bundle, held_sources), gold).uas();
  corpus_supervision(bundle, train, run);
  run.seconds = seconds_since(start);
  return run;
}

struct ToyOutcomes {
  Outcome end_to_end;
  Outcome loss_bound;
};

ToyOutcomes toy_experiment() {
  const auto train = toy::generate(1000, 1);
  std::set<std::vector<std::string>> seen;
  for (const auto& ex : train) seen.insert(ex.src_tokens);
  std::vector<ParallelExample> heldout;
  for (auto& ex : toy::generate(400, 2)) {
    if (!seen.contains(ex.src_tokens) && heldout.size() < 200) heldout.push_back(std::move(ex));
  }

  auto supervised_cfg = toy_config();
  auto free_cfg = supervised_cfg;
  free_cfg.supervision.alpha = 0.0;
  free_cfg.supervision.beta = 0.0;
  const auto sup = toy_run(supervised_cfg, train, heldout);
  const auto free = toy_run(free_cfg, train, heldout);
  const double total = sup.seconds + free.seconds;

  ToyOutcomes out;
  const double gap = 100.0 * (sup.uas - free.uas);
  out.end_to_end.pass = sup.exact_match >= 0.95 && sup.uas >= 0.90 && gap >= 20.0 && total <= 1800.0;
  out.end_to_end.detail =
      fmt("train exact match %.1f%% (>=95); held-out UAS %.1f%% supervised vs %.1f%% with alpha=beta=0 "
          "(gap %.1f, >=20); %zu held-out sentences; %.0fs total",
          100.0 * sup.exact_match, 100.0 * sup.uas, 100.0 * free.uas, gap, heldout.size(), total);
  const double child_gap = sup.child_loss - sup.child_bound;
  out.loss_bound.pass = child_gap <= 0.05 && child_gap >= -1e-6 && sup.parent_loss <= 0.05;
  out.loss_bound.detail = fmt("L_c %.4f vs entropy bound %.4f (gap %.4f, <=0.05); L_p %.4f (<=0.05) nats/token",
                              sup.child_loss, sup.child_bound, child_gap, sup.parent_loss);
  return out;
}

// 8. BLEU-4 self-test through files on disk.
Outcome bleu_self_test() {
  const auto dir = std::filesystem::temp_directory_path() / "synattn_acceptance_bleu";
  std::filesystem::create_directories(dir);
  const auto ref_path = (dir / "ref.txt").string();
  {
    std::ofstream ref(ref_path);
    for (const auto& ex : toy::generate(100, 8)) {
      for (std::size_t i = 0; i < ex.tgt_tokens.size(); ++i) ref << (i ? " " : "") << ex.tgt_tokens[i];
      ref << '\n';
    }
  }
  const auto refs = read_token_lines(ref_path);
  const double self = corpus_bleu(refs, refs).bleu;
  std::filesystem::remove_all(dir);

  const double hand = corpus_bleu({{"a", "b", "c", "d"}}, {{"a", "b", "c", "e"}}).bleu;
  // p1 = 3/4, p2 = 2/3, p3 = 1/2, p4 = 1e-9 / 1, brevity penalty 1.
  const double expected = 100.0 * std::exp((std::log(0.75) + std::log(2.0 / 3.0) + std::log(0.5) + std::log(1e-9)) / 4);
  const bool ok = self == 100.0 && std::round(hand * 1e4) == std::round(expected * 1e4);
  return {ok, fmt("identical files %.1f; hand example %.4f vs expected %.4f", self, hand, expected)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synattn acceptance suite"};
  std::string which = "1,2,3,4,5,6,7,8";
  app.add_option("--criterion", which, "comma-separated criteria to run");
  CLI11_PARSE(app, argc, argv);

  std::set<int> wanted;
  std::stringstream ss(which);
  for (std::string tok; std::getline(ss, tok, ',');) wanted.insert(std::stoi(tok));

  const std::map<int, std::function<Outcome()>> simple = {
      {1, matrix_construction}, {2, gradient_check}, {3, baseline_reduction},
      {4, mst_oracle},          {5, parent_round_trip}, {8, bleu_self_test},
  };
  std::map<int, Outcome> results;
  try {
    for (int c : wanted) {
      if (auto it = simple.find(c); it != simple.end()) results[c] = it->second();
    }
    if (wanted.contains(6) || wanted.contains(7)) {
      const auto toy = toy_experiment();
      if (wanted.contains(6)) results[6] = toy.end_to_end;
      if (wanted.contains(7)) results[7] = toy.loss_bound;
    }
  } catch (const std::exception& e) {
    std::printf("FAIL internal error: %s\n", e.what());
    return 1;
  }
  bool all = true;
  for (const auto& [c, r] : results) {
    std::printf("%s criterion %d: %s\n", r.pass ? "PASS" : "FAIL", c, r.detail.c_str());
    all &= r.pass;
  }
  return all ? 0 : 1;
}
