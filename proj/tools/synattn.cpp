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

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "synattn/synattn.hpp"

namespace {

using synattn::ErrorCategory;
using synattn::require;

// Float32 for training, matching the checkpoints the CLI writes.
using Scalar = float;

std::vector<std::vector<std::string>> read_sentences(const std::string& path) {
  return synattn::read_token_lines(path);
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_.open(path, std::ios::trunc);
    require(file_.good(), ErrorCategory::kIo, "cannot open " + path + " for writing");
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

void write_sentences(std::ostream& out, const std::vector<std::vector<std::string>>& lines) {
  for (const auto& line : lines) {
    for (std::size_t i = 0; i < line.size(); ++i) out << (i ? " " : "") << line[i];
    out << '\n';
  }
}

struct TrainArgs {
  std::string config;
  std::string checkpoint;
  std::string metrics;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::optional<double> beta;
};

void cmd_train(const TrainArgs& args) {
  auto cfg = synattn::RunConfig::load(args.config);
  if (!args.checkpoint.empty()) cfg.checkpoint_path = args.checkpoint;
  if (!args.metrics.empty()) cfg.metrics_path = args.metrics;
  if (args.seed) cfg.seed = *args.seed;
  if (args.alpha) cfg.supervision.alpha = *args.alpha;
  if (args.beta) cfg.supervision.beta = *args.beta;
  require(!cfg.train_src.empty() && !cfg.train_tgt.empty() && !cfg.train_conllu.empty(), ErrorCategory::kConfig,
          "data.train_src, data.train_tgt and data.train_conllu must be set");
  auto corpus = synattn::load_parallel_corpus(cfg.train_src, cfg.train_tgt, cfg.train_conllu);
  synattn::Trainer<Scalar> trainer(cfg, std::move(corpus));
  std::ofstream metrics(cfg.metrics_path, std::ios::app);
  require(metrics.good(), ErrorCategory::kIo, "cannot open metrics log " + cfg.metrics_path);
  const auto summary =
      synattn::run_training(trainer, metrics, [](const std::string& msg) { std::cerr << msg << '\n'; });
  std::cerr << "trained " << summary.steps << " steps; last L=" << summary.last.translation
            << " L_c=" << summary.last.child << " L_p=" << summary.last.parent << " J=" << summary.last.joint
            << "; checkpoint " << cfg.checkpoint_path << '\n';
}

void cmd_translate(const std::string& checkpoint, const std::string& input, const std::string& output) {
  const auto bundle = synattn::load_bundle<Scalar>(checkpoint);
  const auto hyps = synattn::translate_sentences(bundle, read_sentences(input));
  Output out(output);
  write_sentences(out.stream(), hyps);
}

void cmd_parse_attn(const std::string& checkpoint, const std::string& input, const std::string& output) {
  const auto bundle = synattn::load_bundle<Scalar>(checkpoint);
  const auto trees = synattn::parse_attention(bundle, read_sentences(input));
  Output out(output);
  synattn::emit_conllu(out.stream(), trees);
}

void cmd_export_attn(const std::string& checkpoint, const std::string& input, const std::string& output) {
  const auto bundle = synattn::load_bundle<Scalar>(checkpoint);
  Output out(output);
  synattn::export_attention(bundle, read_sentences(input), out.stream());
}

void cmd_eval_uas(const std::string& predicted, const std::string& gold) {
  const auto report = synattn::corpus_uas(synattn::read_conllu_file(predicted), synattn::read_conllu_file(gold));
  std::printf("UAS %.4f (%zu/%zu)\n", report.uas(), report.correct, report.total);
}

void cmd_eval_bleu(const std::string& hypothesis, const std::string& reference) {
  const auto s = synattn::corpus_bleu(read_sentences(hypothesis), read_sentences(reference));
  std::printf("BLEU-4 %.2f (p1=%.4f p2=%.4f p3=%.4f p4=%.4f BP=%.4f hyp_len=%zu ref_len=%zu)\n", s.bleu,
              s.precisions[0], s.precisions[1], s.precisions[2], s.precisions[3], s.brevity_penalty, s.hyp_length,
              s.ref_length);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transformer NMT with dependency-supervised encoder attention heads"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "train a model from a config file");
  train->add_option("--config", train_args.config, "run configuration file")->required();
  train->add_option("--checkpoint", train_args.checkpoint, "checkpoint output path (overrides config)");
  train->add_option("--metrics", train_args.metrics, "metrics log path (overrides config)");
  train->add_option("--seed", train_args.seed, "random seed (overrides config)");
  train->add_option("--alpha", train_args.alpha, "child-head loss weight (overrides config)");
  train->add_option("--beta", train_args.beta, "parent-head loss weight (overrides config)");

  std::string checkpoint;
  std::string input;
  std::string output;
  auto add_model_command = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
    sub->add_option("input", input, "source file, one whitespace-tokenized sentence per line")->required();
    sub->add_option("-o,--output", output, "output file (default stdout)");
    return sub;
  };
  auto* translate = add_model_command("translate", "greedy-decode translations");
  auto* parse_attn = add_model_command("parse-attn", "recover dependency trees from the parent head as CoNLL-U");
  auto* export_attn = add_model_command("export-attn", "dump supervised-layer attention matrices as JSON lines");

  std::string predicted;
  std::string gold;
  auto* eval_uas = app.add_subcommand("eval-uas", "unlabeled attachment score between CoNLL-U files");
  eval_uas->add_option("predicted", predicted)->required();
  eval_uas->add_option("gold", gold)->required();

  std::string hypothesis;
  std::string reference;
  auto* eval_bleu = app.add_subcommand("eval-bleu", "corpus BLEU-4 of a hypothesis file against a reference");
  eval_bleu->add_option("hypothesis", hypothesis)->required();
  eval_bleu->add_option("reference", reference)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: usage: " << e.what() << '\n';
    return 64;
  }

  try {
    if (*train) cmd_train(train_args);
    if (*translate) cmd_translate(checkpoint, input, output);
    if (*parse_attn) cmd_parse_attn(checkpoint, input, output);
    if (*export_attn) cmd_export_attn(checkpoint, input, output);
    if (*eval_uas) cmd_eval_uas(predicted, gold);
    if (*eval_bleu) cmd_eval_bleu(hypothesis, reference);
  } catch (const synattn::Error& e) {
    std::cerr << "error: " << synattn::category_name(e.category()) << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
