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
#include <chrono>
#include <cstdint>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "synattn/cli/optimizer.hpp"
#include "synattn/cli/run_config.hpp"
#include "synattn/data/batch.hpp"
#include "synattn/data/corpus.hpp"
#include "synattn/data/vocab.hpp"
#include "synattn/model/transformer.hpp"
#include "synattn/numerics/checkpoint.hpp"
#include "synattn/syntax/losses.hpp"

namespace synattn {

template <typename T>
struct LossGraph {
  ad::Var<T> translation;
  ad::Var<T> child;
  ad::Var<T> parent;
  ad::Var<T> joint;

  LossBreakdown values() const {
    LossBreakdown out;
    out.translation = static_cast<double>(translation.item());
    out.child = child.defined() ? static_cast<double>(child.item()) : 0.0;
    out.parent = parent.defined() ? static_cast<double>(parent.item()) : 0.0;
    out.joint = static_cast<double>(joint.item());
    return out;
  }
};

// Forward pass for one batch. With supervision disabled the attention
// losses are never built and J is the translation loss itself.
template <typename T>
LossGraph<T> compute_losses(const Transformer<T>& model, const Batch<T>& batch, const SupervisionConfig& sup,
                            ForwardContext ctx = {}) {
  auto enc = model.encode(batch.src_ids, batch.src_mask, ctx);
  auto logits = model.decode(batch.tgt_in_ids, enc.hidden, batch.src_mask, causal_mask(batch.tgt_mask), ctx);
  LossGraph<T> g;
  g.translation = ad::nll_from_logits(logits, std::span<const int>(batch.tgt_out_ids.ids), batch.tgt_mask);
  if (!sup.enabled) {
    g.joint = g.translation;
    return g;
  }
  const auto& heads = enc.head_probs[sup.resolved_layer(model.config())];
  auto sl = supervision_losses(batch.w_child, batch.w_parent, heads[sup.csh_head], heads[sup.psh_head],
                               batch.row_mask);
  g.child = sl.child;
  g.parent = sl.parent;
  g.joint = joint_objective(g.translation, g.child, g.parent, sup);
  return g;
}

// Model plus everything needed to run it on raw text.
template <typename T>
struct ModelBundle {
  RunConfig config;
  Vocabulary src_vocab;
  Vocabulary tgt_vocab;
  Transformer<T> model;

  ModelBundle(RunConfig cfg, Vocabulary src, Vocabulary tgt)
      : config(std::move(cfg)), src_vocab(std::move(src)), tgt_vocab(std::move(tgt)), model(config.model, config.seed) {}
};

template <typename T>
void save_bundle(const std::string& path, const ModelBundle<T>& bundle) {
  save_checkpoint(path, bundle.config.serialize(),
                  {{"src_vocab", bundle.src_vocab.serialize()}, {"tgt_vocab", bundle.tgt_vocab.serialize()}},
                  bundle.model.parameters());
}

template <typename T>
ModelBundle<T> load_bundle(const std::string& path) {
  const auto ck = load_checkpoint<T>(path);
  RunConfig cfg = RunConfig::parse(ck.config_text);
  auto src = Vocabulary::deserialize(ck.blob("src_vocab"));
  auto tgt = Vocabulary::deserialize(ck.blob("tgt_vocab"));
  require(src.size() == cfg.model.src_vocab && tgt.size() == cfg.model.tgt_vocab, ErrorCategory::kCheckpoint,
          "vocabulary mismatch: checkpoint vocabularies have " + std::to_string(src.size()) + "/" +
              std::to_string(tgt.size()) + " entries, model config expects " + std::to_string(cfg.model.src_vocab) +
              "/" + std::to_string(cfg.model.tgt_vocab));
  ModelBundle<T> bundle(std::move(cfg), std::move(src), std::move(tgt));
  restore_parameters(ck, bundle.model.parameters());
  return bundle;
}

namespace detail {

inline std::vector<ParallelExample> drop_long(std::vector<ParallelExample> corpus, std::size_t max_len,
                                              std::size_t& dropped) {
  std::vector<ParallelExample> kept;
  kept.reserve(corpus.size());
  dropped = 0;
  for (auto& ex : corpus) {
    if (ex.src_tokens.size() > max_len || ex.tgt_tokens.size() + 1 > max_len) {
      ++dropped;
    } else {
      kept.push_back(std::move(ex));
    }
  }
  return kept;
}

template <typename T>
ModelBundle<T> fresh_bundle(RunConfig cfg, const std::vector<ParallelExample>& corpus) {
  std::vector<std::vector<std::string>> src;
  std::vector<std::vector<std::string>> tgt;
  for (const auto& ex : corpus) {
    src.push_back(ex.src_tokens);
    tgt.push_back(ex.tgt_tokens);
  }
  auto src_vocab = Vocabulary::build(src, cfg.src_vocab_max);
  auto tgt_vocab = Vocabulary::build(tgt, cfg.tgt_vocab_max);
  cfg.model.src_vocab = src_vocab.size();
  cfg.model.tgt_vocab = tgt_vocab.size();
  cfg.model.validate();
  cfg.supervision.validate(cfg.model);
  return ModelBundle<T>(std::move(cfg), std::move(src_vocab), std::move(tgt_vocab));
}

}  // namespace detail

// Single-threaded trainer: shuffled minibatches, Adam with warmup.
// Identical (config, seed, corpus) yield identical parameter trajectories.
template <typename T>
class Trainer {
 public:
  Trainer(RunConfig config, std::vector<ParallelExample> corpus)
      : data_(detail::drop_long(std::move(corpus), config.model.max_len, dropped_)),
        bundle_(prepare(std::move(config), data_)),
        optimizer_(bundle_.config.optim, bundle_.config.model.d_model),
        data_rng_(bundle_.config.seed ^ 0x5eed'da7aULL),
        dropout_rng_(bundle_.config.seed ^ 0xd50f'0b0eULL) {}

  // One optimizer step on the next minibatch; returns that batch's losses.
  LossBreakdown step() {
    const auto& cfg = bundle_.config;
    const Batch<T> batch = next_batch();
    auto& params = bundle_.model.parameters();
    params.zero_grad();
    ForwardContext ctx{true, &dropout_rng_};
    auto graph = compute_losses(bundle_.model, batch, cfg.supervision, ctx);
    ad::backward(graph.joint);
    optimizer_.step(params);
    return graph.values();
  }

  std::size_t steps_taken() const noexcept { return optimizer_.steps_taken(); }
  std::size_t dropped_sentences() const noexcept { return dropped_; }
  const std::vector<ParallelExample>& corpus() const noexcept { return data_; }
  ModelBundle<T>& bundle() noexcept { return bundle_; }
  const ModelBundle<T>& bundle() const noexcept { return bundle_; }
  const RunConfig& config() const noexcept { return bundle_.config; }

 private:
  static ModelBundle<T> prepare(RunConfig cfg, const std::vector<ParallelExample>& data) {
    cfg.validate();
    require(!data.empty(), ErrorCategory::kData, "training corpus is empty after length filtering");
    return detail::fresh_bundle<T>(std::move(cfg), data);
  }

  Batch<T> next_batch() {
    if (cursor_ >= order_.size()) {
      order_.resize(data_.size());
      std::iota(order_.begin(), order_.end(), std::size_t{0});
      std::shuffle(order_.begin(), order_.end(), data_rng_);
      cursor_ = 0;
    }
    const std::size_t end = std::min(order_.size(), cursor_ + bundle_.config.batch_size);
    std::vector<ParallelExample> picked;
    picked.reserve(end - cursor_);
    for (std::size_t i = cursor_; i < end; ++i) picked.push_back(data_[order_[i]]);
    cursor_ = end;
    return make_batch<T>(picked, bundle_.src_vocab, bundle_.tgt_vocab);
  }

  std::size_t dropped_ = 0;
  std::vector<ParallelExample> data_;
  ModelBundle<T> bundle_;
  Adam<T> optimizer_;
  std::mt19937_64 data_rng_;
  std::mt19937_64 dropout_rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

// One metrics-log line.
inline std::string metrics_record(std::size_t step, const LossBreakdown& loss, double wall_clock_seconds) {
  nlohmann::json rec;
  rec["step"] = step;
  rec["L"] = loss.translation;
  rec["L_c"] = loss.child;
  rec["L_p"] = loss.parent;
  rec["J"] = loss.joint;
  rec["wall_clock"] = wall_clock_seconds;
  return rec.dump();
}

struct TrainingSummary {
  std::size_t steps = 0;
  std::size_t dropped_sentences = 0;
  LossBreakdown last;
};

// Runs config.steps optimizer steps, appending one record per step to
// `metrics` and saving checkpoints every checkpoint_every steps and at the end.
template <typename T>
TrainingSummary run_training(Trainer<T>& trainer, std::ostream& metrics,
                             const std::function<void(const std::string&)>& log = {}) {
  const auto& cfg = trainer.config();
  const auto start = std::chrono::steady_clock::now();
  if (log && trainer.dropped_sentences() > 0) {
    log("dropped " + std::to_string(trainer.dropped_sentences()) + " sentence pairs longer than max_len");
  }
  TrainingSummary summary;
  summary.dropped_sentences = trainer.dropped_sentences();
  for (std::size_t s = 0; s < cfg.steps; ++s) {
    summary.last = trainer.step();
    const std::size_t step = trainer.steps_taken();
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    metrics << metrics_record(step, summary.last, elapsed) << '\n';
    if (cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0 && step != cfg.steps) {
      save_bundle(cfg.checkpoint_path + ".step" + std::to_string(step), trainer.bundle());
    }
  }
  metrics.flush();
  summary.steps = trainer.steps_taken();
  save_bundle(cfg.checkpoint_path, trainer.bundle());
  return summary;
}

}  // namespace synattn
