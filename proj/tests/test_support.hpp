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
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "synattn/synattn.hpp"
#include "toy_grammar.hpp"

namespace synattn::testing {

// Random single-rooted tree: a random permutation fixes attachment order and
// each later token picks a parent uniformly among earlier ones.
inline std::vector<int> random_heads(std::size_t m, std::mt19937_64& rng) {
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> heads(m, 0);
  for (std::size_t k = 1; k < m; ++k) {
    const std::size_t p = std::uniform_int_distribution<std::size_t>(0, k - 1)(rng);
    heads[static_cast<std::size_t>(order[k])] = order[p] + 1;
  }
  return heads;
}

inline DependencyTree tree_from_heads(std::vector<int> heads) {
  DependencyTree t;
  for (std::size_t i = 0; i < heads.size(); ++i) t.tokens.push_back("w" + std::to_string(i + 1));
  t.heads = std::move(heads);
  return t;
}

// Every head assignment in {0..m}^m that forms a valid tree.
inline std::vector<std::vector<int>> all_trees(std::size_t m) {
  std::vector<std::vector<int>> out;
  std::vector<int> heads(m, 0);
  while (true) {
    if (is_valid_tree(heads)) out.push_back(heads);
    std::size_t i = 0;
    while (i < m && heads[i] == static_cast<int>(m)) heads[i++] = 0;
    if (i == m) break;
    ++heads[i];
  }
  return out;
}

// Central finite differences of f with respect to each entry of `param`.
template <typename T>
std::vector<T> numeric_gradient(ad::Var<T> param, const std::function<T()>& f, T h) {
  auto values = param.mutable_value().data();
  std::vector<T> grad(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const T saved = values[i];
    values[i] = saved + h;
    const T up = f();
    values[i] = saved - h;
    const T down = f();
    values[i] = saved;
    grad[i] = (up - down) / (T{2} * h);
  }
  return grad;
}

// ||analytic - numeric|| / max(||analytic||, ||numeric||) over one parameter tensor.
template <typename T>
double relative_error(std::span<const T> analytic, std::span<const T> numeric) {
  double diff = 0.0;
  double na = 0.0;
  double nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = static_cast<double>(analytic[i]);
    const double n = static_cast<double>(numeric[i]);
    diff += (a - n) * (a - n);
    na += a * a;
    nn += n * n;
  }
  const double denom = std::sqrt(std::max(na, nn));
  return denom == 0.0 ? 0.0 : std::sqrt(diff) / denom;
}

// Seven-token tree whose root (token 5) has three children, whose token 7
// has the single child 6, and whose token 6 is a leaf.
inline DependencyTree anchored_tree() {
  return {{"the", "cat", "on", "mat", "saw", "small", "dog"}, {5, 3, 5, 3, 0, 7, 5}};
}

// Maximum arborescence weight by exhaustive search over `trees`, which must
// be all valid head vectors of the matching length.
inline double brute_force_best_weight(const std::vector<std::vector<double>>& weights,
                                      const std::vector<std::vector<int>>& trees) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& t : trees) best = std::max(best, tree_weight(weights, t));
  return best;
}

// Random row-stochastic m x m matrix with occasional sharp rows.
inline Tensor<double> random_stochastic(std::size_t m, std::mt19937_64& rng) {
  Tensor<double> s(Shape{m, m});
  std::exponential_distribution<double> expo(1.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double sharp = (rng() % 3 == 0) ? 8.0 : 1.0;
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      s.at(i, j) = std::pow(expo(rng), sharp);
      total += s.at(i, j);
    }
    for (std::size_t j = 0; j < m; ++j) s.at(i, j) /= total;
  }
  return s;
}

// Shannon entropy (nats) of one matrix row.
template <typename T>
double row_entropy(const Tensor<T>& w, std::size_t row) {
  double h = 0.0;
  for (std::size_t j = 0; j < w.dim(1); ++j) {
    const double v = static_cast<double>(w.at(row, j));
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

template <typename T>
Tensor<T> random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& v : t.data()) v = static_cast<T>(dist(rng));
  return t;
}

// Small batch of toy sentence pairs with vocabularies built from them.
struct ToyData {
  std::vector<ParallelExample> examples;
  Vocabulary src_vocab;
  Vocabulary tgt_vocab;
};

inline ToyData toy_data(std::size_t n, std::uint64_t seed) {
  ToyData d;
  d.examples = toy::generate(n, seed);
  std::vector<std::vector<std::string>> src;
  std::vector<std::vector<std::string>> tgt;
  for (const auto& ex : d.examples) {
    src.push_back(ex.src_tokens);
    tgt.push_back(ex.tgt_tokens);
  }
  d.src_vocab = Vocabulary::build(src, 1000);
  d.tgt_vocab = Vocabulary::build(tgt, 1000);
  return d;
}

inline ModelConfig tiny_model_config(const ToyData& d) {
  ModelConfig c;
  c.n_layers = 1;
  c.n_heads = 2;
  c.d_model = 8;
  c.d_ff = 16;
  c.max_len = 32;
  c.dropout_rate = 0.0;
  c.src_vocab = d.src_vocab.size();
  c.tgt_vocab = d.tgt_vocab.size();
  return c;
}

struct GradientCheckResult {
  std::string name;
  double relative_error;
};

// Compares the analytic gradient of J against central differences for every
// parameter tensor of `model` on `batch`, in double precision.
inline std::vector<GradientCheckResult> check_model_gradients(Transformer<double>& model, const Batch<double>& batch,
                                                              const SupervisionConfig& sup, double h = 1e-5) {
  auto& params = model.parameters();
  params.zero_grad();
  ad::backward(compute_losses(model, batch, sup).joint);
  auto objective = [&]() {
    ad::NoGradGuard no_grad;
    return compute_losses(model, batch, sup).joint.item();
  };
  std::vector<GradientCheckResult> out;
  for (auto& p : params.entries()) {
    const std::vector<double> analytic(p.var.grad().begin(), p.var.grad().end());
    const auto numeric = numeric_gradient<double>(p.var, objective, h);
    out.push_back({p.name, relative_error<double>(analytic, numeric)});
  }
  return out;
}

}  // namespace synattn::testing
