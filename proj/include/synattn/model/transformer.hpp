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
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "synattn/data/vocab.hpp"
#include "synattn/error.hpp"
#include "synattn/model/config.hpp"
#include "synattn/numerics/autodiff.hpp"
#include "synattn/numerics/parameter.hpp"
#include "synattn/numerics/tensor.hpp"

namespace synattn {

// Dropout is active only when `training` is set and an rng is supplied.
struct ForwardContext {
  bool training = false;
  std::mt19937_64* rng = nullptr;
};

template <typename T>
struct AttentionWeights {
  std::vector<ad::Var<T>> wq;
  std::vector<ad::Var<T>> wk;
  std::vector<ad::Var<T>> wv;
  ad::Var<T> wo;
};

template <typename T>
struct AttentionResult {
  ad::Var<T> output;
  // One (batch, m_q, m_k) probability tensor per head, still on the graph.
  std::vector<ad::Var<T>> probs;
};

// Multi-head scaled dot-product attention over (batch, m, d_model) inputs.
// `mask` is (batch, m_q, m_k) or a suffix of that shape.
template <typename T>
AttentionResult<T> multi_head_attention(const ad::Var<T>& q_in, const ad::Var<T>& k_in, const ad::Var<T>& v_in,
                                        const Mask& mask, const AttentionWeights<T>& w) {
  const std::size_t heads = w.wq.size();
  require(heads > 0 && w.wk.size() == heads && w.wv.size() == heads, ErrorCategory::kShape,
          "attention weights are incomplete");
  require(q_in.value().rank() == 3 && k_in.value().rank() == 3 && v_in.value().rank() == 3, ErrorCategory::kShape,
          "attention inputs must be (batch, m, d_model)");
  require(k_in.shape() == v_in.shape() && q_in.shape()[0] == k_in.shape()[0], ErrorCategory::kShape,
          "attention key/value/query batch mismatch");
  const std::size_t d_model = w.wq[0].shape()[0];
  require(q_in.shape()[2] == d_model && k_in.shape()[2] == d_model, ErrorCategory::kShape,
          "attention input width " + std::to_string(q_in.shape()[2]) + " differs from d_model " +
              std::to_string(d_model));
  const T inv_sqrt_dk = T{1} / std::sqrt(static_cast<T>(w.wq[0].shape()[1]));

  AttentionResult<T> result;
  std::vector<ad::Var<T>> head_out;
  head_out.reserve(heads);
  for (std::size_t i = 0; i < heads; ++i) {
    auto q = ad::matmul(q_in, w.wq[i]);
    auto k = ad::matmul(k_in, w.wk[i]);
    auto v = ad::matmul(v_in, w.wv[i]);
    auto scores = ad::scale(ad::bmm(q, k, true), inv_sqrt_dk);
    auto p = ad::softmax_rows(scores, mask);
    head_out.push_back(ad::bmm(p, v));
    result.probs.push_back(std::move(p));
  }
  result.output = ad::matmul(heads == 1 ? head_out[0] : ad::concat_last(head_out), w.wo);
  return result;
}

template <typename T>
struct EncoderOutput {
  ad::Var<T> hidden;
  // head_probs[layer][head], each (batch, m, m).
  std::vector<std::vector<ad::Var<T>>> head_probs;
};

// Key-padding mask (batch, m_q, m_k) from per-position validity (batch, m_k).
inline Mask key_padding_mask(const Mask& keys, std::size_t m_q) {
  require(keys.shape.size() == 2, ErrorCategory::kShape, "key mask must be (batch, m)");
  const std::size_t batch = keys.shape[0];
  const std::size_t m_k = keys.shape[1];
  Mask out(Shape{batch, m_q, m_k}, 0);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < m_q; ++i) {
      std::copy_n(keys.bits.begin() + static_cast<std::ptrdiff_t>(b * m_k), m_k,
                  out.bits.begin() + static_cast<std::ptrdiff_t>((b * m_q + i) * m_k));
    }
  }
  return out;
}

// Decoder self-attention mask: position i sees positions j <= i that are real.
inline Mask causal_mask(const Mask& tgt_keys) {
  Mask out = key_padding_mask(tgt_keys, tgt_keys.shape[1]);
  const std::size_t batch = tgt_keys.shape[0];
  const std::size_t n = tgt_keys.shape[1];
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) out.bits[(b * n + i) * n + j] = 0;
    }
  }
  return out;
}

template <typename T>
Tensor<T> sinusoidal_positions(std::size_t length, std::size_t d_model) {
  Tensor<T> pe(Shape{length, d_model});
  for (std::size_t pos = 0; pos < length; ++pos) {
    for (std::size_t i = 0; i < d_model; i += 2) {
      const double angle = static_cast<double>(pos) / std::pow(10000.0, static_cast<double>(i) / d_model);
      pe.at(pos, i) = static_cast<T>(std::sin(angle));
      if (i + 1 < d_model) pe.at(pos, i + 1) = static_cast<T>(std::cos(angle));
    }
  }
  return pe;
}

// Post-norm Transformer encoder-decoder with per-head projection matrices.
template <typename T>
class Transformer {
 public:
  Transformer(const ModelConfig& config, std::uint64_t seed) : config_(config) {
    config_.validate();
    std::mt19937_64 rng(seed);
    build(rng);
  }

  const ModelConfig& config() const noexcept { return config_; }
  ParameterSet<T>& parameters() noexcept { return params_; }
  const ParameterSet<T>& parameters() const noexcept { return params_; }

  EncoderOutput<T> encode(const TokenMatrix& src, const Mask& src_mask, ForwardContext ctx = {}) const {
    require(src_mask.shape == src.shape(), ErrorCategory::kShape, "source mask does not match source ids");
    require(src.cols <= config_.max_len, ErrorCategory::kData,
            "source length " + std::to_string(src.cols) + " exceeds max_len");
    const Mask attn_mask = key_padding_mask(src_mask, src.cols);
    ad::Var<T> x = embed(enc_emb_, src);
    EncoderOutput<T> out;
    for (const auto& layer : enc_layers_) {
      auto att = multi_head_attention(x, x, x, attn_mask, layer.self);
      x = ad::layer_norm(ad::add(x, drop(att.output, ctx)), layer.ln1_gain, layer.ln1_bias);
      x = ad::layer_norm(ad::add(x, drop(feed_forward(x, layer.ff), ctx)), layer.ln2_gain, layer.ln2_bias);
      out.head_probs.push_back(std::move(att.probs));
    }
    out.hidden = std::move(x);
    return out;
  }

  // Teacher-forced logits (batch, n, tgt_vocab). `self_mask` is (batch, n, n).
  ad::Var<T> decode(const TokenMatrix& tgt_in, const ad::Var<T>& enc_hidden, const Mask& src_mask,
                    const Mask& self_mask, ForwardContext ctx = {}) const {
    const Shape expected{tgt_in.rows, tgt_in.cols, tgt_in.cols};
    require(self_mask.shape == expected, ErrorCategory::kShape,
            "decoder self mask " + shape_string(self_mask.shape) + " expected " + shape_string(expected));
    require(src_mask.shape.size() == 2 && src_mask.shape[0] == tgt_in.rows &&
                enc_hidden.shape()[1] == src_mask.shape[1],
            ErrorCategory::kShape, "source mask does not match encoder output");
    require(tgt_in.cols <= config_.max_len, ErrorCategory::kData, "target length exceeds max_len");
    const Mask cross_mask = key_padding_mask(src_mask, tgt_in.cols);
    ad::Var<T> y = embed(dec_emb_, tgt_in);
    for (const auto& layer : dec_layers_) {
      auto self = multi_head_attention(y, y, y, self_mask, layer.self);
      y = ad::layer_norm(ad::add(y, drop(self.output, ctx)), layer.ln1_gain, layer.ln1_bias);
      auto cross = multi_head_attention(y, enc_hidden, enc_hidden, cross_mask, layer.cross);
      y = ad::layer_norm(ad::add(y, drop(cross.output, ctx)), layer.ln2_gain, layer.ln2_bias);
      y = ad::layer_norm(ad::add(y, drop(feed_forward(y, layer.ff), ctx)), layer.ln3_gain, layer.ln3_bias);
    }
    return ad::add_bias(ad::matmul(y, out_w_), out_b_);
  }

 private:
  struct FeedForward {
    ad::Var<T> w1, b1, w2, b2;
  };
  struct EncoderLayer {
    AttentionWeights<T> self;
    ad::Var<T> ln1_gain, ln1_bias;
    FeedForward ff;
    ad::Var<T> ln2_gain, ln2_bias;
  };
  struct DecoderLayer {
    AttentionWeights<T> self;
    ad::Var<T> ln1_gain, ln1_bias;
    AttentionWeights<T> cross;
    ad::Var<T> ln2_gain, ln2_bias;
    FeedForward ff;
    ad::Var<T> ln3_gain, ln3_bias;
  };

  ad::Var<T> xavier(const std::string& name, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Tensor<T> t(Shape{fan_in, fan_out});
    for (auto& v : t.data()) v = static_cast<T>(dist(rng));
    return params_.add(name, std::move(t));
  }

  ad::Var<T> filled(const std::string& name, std::size_t n, T value) {
    return params_.add(name, Tensor<T>(Shape{n}, value));
  }

  AttentionWeights<T> attention(const std::string& prefix, std::mt19937_64& rng) {
    AttentionWeights<T> w;
    const std::size_t d = config_.d_model;
    for (std::size_t i = 0; i < config_.n_heads; ++i) {
      const std::string head = prefix + ".head" + std::to_string(i);
      w.wq.push_back(xavier(head + ".Wq", d, config_.d_k(), rng));
      w.wk.push_back(xavier(head + ".Wk", d, config_.d_k(), rng));
      w.wv.push_back(xavier(head + ".Wv", d, config_.d_v(), rng));
    }
    w.wo = xavier(prefix + ".Wo", config_.n_heads * config_.d_v(), d, rng);
    return w;
  }

  FeedForward feed_forward_params(const std::string& prefix, std::mt19937_64& rng) {
    FeedForward ff;
    ff.w1 = xavier(prefix + ".W1", config_.d_model, config_.d_ff, rng);
    ff.b1 = filled(prefix + ".b1", config_.d_ff, T{0});
    ff.w2 = xavier(prefix + ".W2", config_.d_ff, config_.d_model, rng);
    ff.b2 = filled(prefix + ".b2", config_.d_model, T{0});
    return ff;
  }

  void build(std::mt19937_64& rng) {
    const std::size_t d = config_.d_model;
    enc_emb_ = xavier("enc.emb", config_.src_vocab, d, rng);
    for (std::size_t l = 0; l < config_.n_layers; ++l) {
      const std::string p = "enc.layer" + std::to_string(l);
      EncoderLayer layer;
      layer.self = attention(p + ".self", rng);
      layer.ln1_gain = filled(p + ".ln1.gain", d, T{1});
      layer.ln1_bias = filled(p + ".ln1.bias", d, T{0});
      layer.ff = feed_forward_params(p + ".ff", rng);
      layer.ln2_gain = filled(p + ".ln2.gain", d, T{1});
      layer.ln2_bias = filled(p + ".ln2.bias", d, T{0});
      enc_layers_.push_back(std::move(layer));
    }
    dec_emb_ = xavier("dec.emb", config_.tgt_vocab, d, rng);
    for (std::size_t l = 0; l < config_.n_layers; ++l) {
      const std::string p = "dec.layer" + std::to_string(l);
      DecoderLayer layer;
      layer.self = attention(p + ".self", rng);
      layer.ln1_gain = filled(p + ".ln1.gain", d, T{1});
      layer.ln1_bias = filled(p + ".ln1.bias", d, T{0});
      layer.cross = attention(p + ".cross", rng);
      layer.ln2_gain = filled(p + ".ln2.gain", d, T{1});
      layer.ln2_bias = filled(p + ".ln2.bias", d, T{0});
      layer.ff = feed_forward_params(p + ".ff", rng);
      layer.ln3_gain = filled(p + ".ln3.gain", d, T{1});
      layer.ln3_bias = filled(p + ".ln3.bias", d, T{0});
      dec_layers_.push_back(std::move(layer));
    }
    out_w_ = xavier("dec.out.W", d, config_.tgt_vocab, rng);
    out_b_ = filled("dec.out.b", config_.tgt_vocab, T{0});
    positions_ = sinusoidal_positions<T>(config_.max_len, d);
  }

  ad::Var<T> embed(const ad::Var<T>& table, const TokenMatrix& ids) const {
    auto e = ad::scale(ad::embedding(table, std::span<const int>(ids.ids), ids.shape()),
                       static_cast<T>(std::sqrt(static_cast<double>(config_.d_model))));
    const std::size_t d = config_.d_model;
    Tensor<T> pe(Shape{ids.cols, d});
    std::copy_n(positions_.data().data(), ids.cols * d, pe.data().data());
    return ad::add_broadcast(e, pe);
  }

  ad::Var<T> feed_forward(const ad::Var<T>& x, const FeedForward& ff) const {
    auto h = ad::relu(ad::add_bias(ad::matmul(x, ff.w1), ff.b1));
    return ad::add_bias(ad::matmul(h, ff.w2), ff.b2);
  }

  ad::Var<T> drop(const ad::Var<T>& x, const ForwardContext& ctx) const {
    if (!ctx.training || ctx.rng == nullptr) return x;
    return ad::dropout(x, config_.dropout_rate, *ctx.rng);
  }

  ModelConfig config_;
  ParameterSet<T> params_;
  ad::Var<T> enc_emb_;
  ad::Var<T> dec_emb_;
  std::vector<EncoderLayer> enc_layers_;
  std::vector<DecoderLayer> dec_layers_;
  ad::Var<T> out_w_;
  ad::Var<T> out_b_;
  Tensor<T> positions_;
};

template <typename T>
struct DecodeResult {
  std::vector<std::vector<int>> outputs;
  // Supervised heads' (m, m) probabilities per sentence, padding stripped.
  std::vector<Tensor<T>> csh_probs;
  std::vector<Tensor<T>> psh_probs;
};

// Copies the (len, len) top-left block of sentence b from a (batch, m, m) tensor.
template <typename T>
Tensor<T> sentence_block(const Tensor<T>& probs, std::size_t b, std::size_t len) {
  Tensor<T> out(Shape{len, len});
  for (std::size_t i = 0; i < len; ++i) {
    for (std::size_t j = 0; j < len; ++j) out.at(i, j) = probs.at(b, i, j);
  }
  return out;
}

// Batched argmax decoding from <s> until </s> or max_steps tokens.
template <typename T>
DecodeResult<T> greedy_decode(const Transformer<T>& model, const TokenMatrix& src, const Mask& src_mask,
                              std::size_t max_steps, const SupervisionConfig& sup) {
  ad::NoGradGuard no_grad;
  const auto& cfg = model.config();
  sup.validate(cfg);
  const auto enc = model.encode(src, src_mask);
  const std::size_t batch = src.rows;
  DecodeResult<T> result;
  result.outputs.resize(batch);
  const std::size_t layer = sup.resolved_layer(cfg);
  for (std::size_t b = 0; b < batch; ++b) {
    std::size_t len = 0;
    for (std::size_t j = 0; j < src.cols; ++j) len += src_mask.bits[b * src.cols + j] != 0;
    result.csh_probs.push_back(sentence_block(enc.head_probs[layer][sup.csh_head].value(), b, len));
    result.psh_probs.push_back(sentence_block(enc.head_probs[layer][sup.psh_head].value(), b, len));
  }

  const std::size_t steps = std::min(max_steps, cfg.max_len - 1);
  std::vector<std::vector<int>> prefix(batch, std::vector<int>{kBosId});
  std::vector<bool> done(batch, false);
  for (std::size_t step = 0; step < steps; ++step) {
    if (std::all_of(done.begin(), done.end(), [](bool d) { return d; })) break;
    const std::size_t n = step + 1;
    TokenMatrix tgt(batch, n);
    for (std::size_t b = 0; b < batch; ++b) std::copy(prefix[b].begin(), prefix[b].end(), tgt.ids.begin() + b * n);
    const Mask tgt_keys(Shape{batch, n}, 1);
    auto logits = model.decode(tgt, enc.hidden, src_mask, causal_mask(tgt_keys));
    const std::size_t vocab = cfg.tgt_vocab;
    for (std::size_t b = 0; b < batch; ++b) {
      if (done[b]) {
        prefix[b].push_back(kPadId);
        continue;
      }
      const T* row = logits.value().data().data() + (b * n + step) * vocab;
      const int best = static_cast<int>(std::max_element(row, row + vocab) - row);
      prefix[b].push_back(best);
      if (best == kEosId) {
        done[b] = true;
      } else {
        result.outputs[b].push_back(best);
      }
    }
  }
  return result;
}

}  // namespace synattn
