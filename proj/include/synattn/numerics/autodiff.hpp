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
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "synattn/error.hpp"
#include "synattn/numerics/tensor.hpp"

// Reverse-mode differentiation over dense tensors. Each op allocates a
// node holding its forward value and a closure that pushes the node's
// gradient into its inputs. Graphs are built per forward pass and released
// with the last Var referring to them; parameters are long-lived leaves.
namespace synattn::ad {

template <typename T>
struct Node {
  Tensor<T> value;
  std::vector<T> grad;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;
  bool requires_grad = false;

  void ensure_grad() {
    if (grad.empty()) grad.assign(value.numel(), T{0});
  }
};

namespace detail {
inline bool& no_grad_flag() {
  thread_local bool flag = false;
  return flag;
}
}  // namespace detail

// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::no_grad_flag()) { detail::no_grad_flag() = true; }
  ~NoGradGuard() { detail::no_grad_flag() = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(Tensor<T> value, bool requires_grad = false) : node_(std::make_shared<Node<T>>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
    if (requires_grad) node_->ensure_grad();
  }
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  bool defined() const noexcept { return node_ != nullptr; }
  const Tensor<T>& value() const { return node_->value; }
  Tensor<T>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t numel() const { return node_->value.numel(); }
  T item() const { return node_->value.item(); }
  bool requires_grad() const noexcept { return node_ && node_->requires_grad; }

  // Empty span when no gradient has been accumulated.
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->grad; }
  void zero_grad() {
    if (node_->requires_grad) node_->grad.assign(node_->value.numel(), T{0});
  }

  const std::shared_ptr<Node<T>>& node() const noexcept { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

template <typename T>
Var<T> constant(Tensor<T> value) {
  return Var<T>(std::move(value), false);
}

namespace detail {

template <typename T>
Var<T> make_result(Tensor<T> value, std::vector<std::shared_ptr<Node<T>>> inputs,
                   std::function<void(Node<T>&)> backward) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  bool needs = false;
  if (!no_grad_flag()) {
    for (const auto& in : inputs) needs = needs || in->requires_grad;
  }
  if (needs) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backward = std::move(backward);
  }
  return Var<T>(std::move(node));
}

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using MutMap = Eigen::Map<RowMat<T>>;

// Gradient buffer of an input, or null when that input is not trainable.
template <typename T>
T* grad_of(Node<T>& n) {
  if (!n.requires_grad) return nullptr;
  n.ensure_grad();
  return n.grad.data();
}

inline void check_same_shape(const Shape& a, const Shape& b, const char* op) {
  require(a == b, ErrorCategory::kShape,
          std::string(op) + ": shape mismatch " + shape_string(a) + " vs " + shape_string(b));
}

}  // namespace detail

// Populates grad buffers of every trainable leaf reachable from `loss`.
template <typename T>
void backward(const Var<T>& loss) {
  require(loss.defined() && loss.numel() == 1, ErrorCategory::kShape,
          "backward() requires a scalar loss");
  if (!loss.requires_grad()) return;

  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node<T>* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  Node<T>* root = loss.node().get();
  root->grad.assign(1, T{1});
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
}

// ---------------------------------------------------------------------------
// Elementwise

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  detail::check_same_shape(a.shape(), b.shape(), "add");
  Tensor<T> out = a.value();
  auto od = out.data();
  auto bd = b.value().data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] += bd[i];
  return detail::make_result<T>(std::move(out), {a.node(), b.node()}, [](Node<T>& self) {
    for (auto& in : self.inputs) {
      if (T* g = detail::grad_of(*in)) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
      }
    }
  });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  detail::check_same_shape(a.shape(), b.shape(), "mul");
  Tensor<T> out = a.value();
  auto od = out.data();
  auto bd = b.value().data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] *= bd[i];
  return detail::make_result<T>(std::move(out), {a.node(), b.node()}, [](Node<T>& self) {
    Node<T>& x = *self.inputs[0];
    Node<T>& y = *self.inputs[1];
    if (T* g = detail::grad_of(x)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * y.value[i];
    }
    if (T* g = detail::grad_of(y)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * x.value[i];
    }
  });
}

template <typename T>
Var<T> scale(const Var<T>& a, T factor) {
  Tensor<T> out = a.value();
  for (auto& v : out.data()) v *= factor;
  return detail::make_result<T>(std::move(out), {a.node()}, [factor](Node<T>& self) {
    if (T* g = detail::grad_of(*self.inputs[0])) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * factor;
    }
  });
}

// x[..., n] + b[n]
template <typename T>
Var<T> add_bias(const Var<T>& x, const Var<T>& bias) {
  const std::size_t n = bias.numel();
  require(x.shape().back() == n, ErrorCategory::kShape,
          "add_bias: bias " + shape_string(bias.shape()) + " vs input " + shape_string(x.shape()));
  Tensor<T> out = x.value();
  auto od = out.data();
  auto bd = bias.value().data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] += bd[i % n];
  return detail::make_result<T>(std::move(out), {x.node(), bias.node()}, [n](Node<T>& self) {
    if (T* g = detail::grad_of(*self.inputs[0])) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
    if (T* g = detail::grad_of(*self.inputs[1])) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i % n] += self.grad[i];
    }
  });
}

// x + c where c is a constant whose shape is a suffix of x's shape.
template <typename T>
Var<T> add_broadcast(const Var<T>& x, const Tensor<T>& c) {
  const Shape& xs = x.shape();
  const Shape& cs = c.shape();
  require(cs.size() <= xs.size() && std::equal(cs.rbegin(), cs.rend(), xs.rbegin()), ErrorCategory::kShape,
          "add_broadcast: " + shape_string(cs) + " is not a suffix of " + shape_string(xs));
  Tensor<T> out = x.value();
  auto od = out.data();
  auto cd = c.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] += cd[i % cd.size()];
  return detail::make_result<T>(std::move(out), {x.node()}, [](Node<T>& self) {
    if (T* g = detail::grad_of(*self.inputs[0])) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
  });
}

template <typename T>
Var<T> relu(const Var<T>& x) {
  Tensor<T> out = x.value();
  for (auto& v : out.data()) v = v > T{0} ? v : T{0};
  return detail::make_result<T>(std::move(out), {x.node()}, [](Node<T>& self) {
    if (T* g = detail::grad_of(*self.inputs[0])) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        if (self.value[i] > T{0}) g[i] += self.grad[i];
      }
    }
  });
}

template <typename T>
Var<T> sum(const Var<T>& x) {
  T total{0};
  for (T v : x.value().data()) total += v;
  return detail::make_result<T>(Tensor<T>::scalar(total), {x.node()}, [](Node<T>& self) {
    if (T* g = detail::grad_of(*self.inputs[0])) {
      const std::size_t n = self.inputs[0]->value.numel();
      for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[0];
    }
  });
}

// Inverted dropout. Identity when rate == 0.
template <typename T, typename Rng>
Var<T> dropout(const Var<T>& x, double rate, Rng& rng) {
  if (rate <= 0.0) return x;
  require(rate < 1.0, ErrorCategory::kConfig, "dropout rate must be < 1");
  std::bernoulli_distribution keep(1.0 - rate);
  const T inv = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<T> factor(x.numel());
  for (auto& f : factor) f = keep(rng) ? inv : T{0};
  Tensor<T> out = x.value();
  for (std::size_t i = 0; i < factor.size(); ++i) out[i] *= factor[i];
  return detail::make_result<T>(std::move(out), {x.node()}, [factor = std::move(factor)](Node<T>& self) {
    if (T* g = detail::grad_of(*self.inputs[0])) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * factor[i];
    }
  });
}

// ---------------------------------------------------------------------------
// Linear algebra

// x[..., k] * w[k, n] -> [..., n]
template <typename T>
Var<T> matmul(const Var<T>& x, const Var<T>& w) {
  require(w.value().rank() == 2 && x.shape().back() == w.shape()[0], ErrorCategory::kShape,
          "matmul: " + shape_string(x.shape()) + " x " + shape_string(w.shape()));
  const auto k = static_cast<Eigen::Index>(w.shape()[0]);
  const auto n = static_cast<Eigen::Index>(w.shape()[1]);
  const auto rows = static_cast<Eigen::Index>(x.numel() / w.shape()[0]);
  Shape out_shape = x.shape();
  out_shape.back() = static_cast<std::size_t>(n);
  Tensor<T> out(out_shape);
  detail::MutMap<T>(out.data().data(), rows, n).noalias() =
      detail::ConstMap<T>(x.value().data().data(), rows, k) * detail::ConstMap<T>(w.value().data().data(), k, n);
  return detail::make_result<T>(std::move(out), {x.node(), w.node()}, [rows, k, n](Node<T>& self) {
    Node<T>& xn = *self.inputs[0];
    Node<T>& wn = *self.inputs[1];
    detail::ConstMap<T> dy(self.grad.data(), rows, n);
    if (T* g = detail::grad_of(xn)) {
      detail::MutMap<T>(g, rows, k).noalias() += dy * detail::ConstMap<T>(wn.value.data().data(), k, n).transpose();
    }
    if (T* g = detail::grad_of(wn)) {
      detail::MutMap<T>(g, k, n).noalias() += detail::ConstMap<T>(xn.value.data().data(), rows, k).transpose() * dy;
    }
  });
}

// Batched a[B, m, k] * b[B, k, n], or a * b^T with b[B, n, k] when transpose_b.
template <typename T>
Var<T> bmm(const Var<T>& a, const Var<T>& b, bool transpose_b = false) {
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  require(as.size() == 3 && bs.size() == 3 && as[0] == bs[0], ErrorCategory::kShape,
          "bmm: " + shape_string(as) + " x " + shape_string(bs));
  const auto batch = as[0];
  const auto m = static_cast<Eigen::Index>(as[1]);
  const auto k = static_cast<Eigen::Index>(as[2]);
  const auto n = static_cast<Eigen::Index>(transpose_b ? bs[1] : bs[2]);
  require(static_cast<Eigen::Index>(transpose_b ? bs[2] : bs[1]) == k, ErrorCategory::kShape,
          "bmm: inner dimensions differ " + shape_string(as) + " x " + shape_string(bs));
  Tensor<T> out(Shape{batch, static_cast<std::size_t>(m), static_cast<std::size_t>(n)});
  for (std::size_t i = 0; i < batch; ++i) {
    detail::ConstMap<T> am(a.value().data().data() + i * m * k, m, k);
    detail::MutMap<T> om(out.data().data() + i * m * n, m, n);
    if (transpose_b) {
      om.noalias() = am * detail::ConstMap<T>(b.value().data().data() + i * n * k, n, k).transpose();
    } else {
      om.noalias() = am * detail::ConstMap<T>(b.value().data().data() + i * k * n, k, n);
    }
  }
  return detail::make_result<T>(
      std::move(out), {a.node(), b.node()}, [batch, m, k, n, transpose_b](Node<T>& self) {
        Node<T>& an = *self.inputs[0];
        Node<T>& bn = *self.inputs[1];
        T* ga = detail::grad_of(an);
        T* gb = detail::grad_of(bn);
        for (std::size_t i = 0; i < batch; ++i) {
          detail::ConstMap<T> dy(self.grad.data() + i * m * n, m, n);
          detail::ConstMap<T> am(an.value.data().data() + i * m * k, m, k);
          if (transpose_b) {
            detail::ConstMap<T> bm(bn.value.data().data() + i * n * k, n, k);
            if (ga) detail::MutMap<T>(ga + i * m * k, m, k).noalias() += dy * bm;
            if (gb) detail::MutMap<T>(gb + i * n * k, n, k).noalias() += dy.transpose() * am;
          } else {
            detail::ConstMap<T> bm(bn.value.data().data() + i * k * n, k, n);
            if (ga) detail::MutMap<T>(ga + i * m * k, m, k).noalias() += dy * bm.transpose();
            if (gb) detail::MutMap<T>(gb + i * k * n, k, n).noalias() += am.transpose() * dy;
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Shape manipulation

template <typename T>
Var<T> slice_last(const Var<T>& x, std::size_t start, std::size_t len) {
  const std::size_t width = x.shape().back();
  require(start + len <= width && len > 0, ErrorCategory::kShape, "slice_last out of range");
  const std::size_t rows = x.numel() / width;
  Shape out_shape = x.shape();
  out_shape.back() = len;
  Tensor<T> out(out_shape);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(x.value().data().data() + r * width + start, len, out.data().data() + r * len);
  }
  return detail::make_result<T>(std::move(out), {x.node()}, [rows, width, start, len](Node<T>& self) {
    if (T* g = detail::grad_of(*self.inputs[0])) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < len; ++c) g[r * width + start + c] += self.grad[r * len + c];
      }
    }
  });
}

template <typename T>
Var<T> concat_last(const std::vector<Var<T>>& parts) {
  require(!parts.empty(), ErrorCategory::kShape, "concat_last of nothing");
  Shape lead = parts[0].shape();
  lead.pop_back();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    Shape s = p.shape();
    widths.push_back(s.back());
    total += s.back();
    s.pop_back();
    require(s == lead, ErrorCategory::kShape, "concat_last: leading shapes differ");
  }
  const std::size_t rows = shape_numel(lead);
  Shape out_shape = lead;
  out_shape.push_back(total);
  Tensor<T> out(out_shape);
  std::size_t offset = 0;
  std::vector<std::shared_ptr<Node<T>>> inputs;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const T* src = parts[p].value().data().data();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(src + r * widths[p], widths[p], out.data().data() + r * total + offset);
    }
    offset += widths[p];
    inputs.push_back(parts[p].node());
  }
  return detail::make_result<T>(std::move(out), std::move(inputs), [rows, total, widths](Node<T>& self) {
    std::size_t off = 0;
    for (std::size_t p = 0; p < self.inputs.size(); ++p) {
      if (T* g = detail::grad_of(*self.inputs[p])) {
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < widths[p]; ++c) g[r * widths[p] + c] += self.grad[r * total + off + c];
        }
      }
      off += widths[p];
    }
  });
}

// Rows of table[V, d] selected by ids; output shape is ids_shape + {d}.
template <typename T>
Var<T> embedding(const Var<T>& table, std::span<const int> ids, const Shape& ids_shape) {
  require(table.value().rank() == 2, ErrorCategory::kShape, "embedding table must be rank 2");
  require(shape_numel(ids_shape) == ids.size(), ErrorCategory::kShape, "embedding: ids do not match shape");
  const std::size_t vocab = table.shape()[0];
  const std::size_t d = table.shape()[1];
  std::vector<int> idx(ids.begin(), ids.end());
  for (int id : idx) {
    require(id >= 0 && static_cast<std::size_t>(id) < vocab, ErrorCategory::kData,
            "token id " + std::to_string(id) + " out of range for vocabulary of size " + std::to_string(vocab));
  }
  Shape out_shape = ids_shape;
  out_shape.push_back(d);
  Tensor<T> out(out_shape);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::copy_n(table.value().data().data() + static_cast<std::size_t>(idx[i]) * d, d, out.data().data() + i * d);
  }
  return detail::make_result<T>(std::move(out), {table.node()}, [idx = std::move(idx), d](Node<T>& self) {
    if (T* g = detail::grad_of(*self.inputs[0])) {
      for (std::size_t i = 0; i < idx.size(); ++i) {
        T* row = g + static_cast<std::size_t>(idx[i]) * d;
        for (std::size_t c = 0; c < d; ++c) row[c] += self.grad[i * d + c];
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Normalization and probabilities

template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gain, const Var<T>& bias, T eps = T(1e-6)) {
  const std::size_t n = x.shape().back();
  require(gain.numel() == n && bias.numel() == n, ErrorCategory::kShape, "layer_norm: parameter width mismatch");
  const std::size_t rows = x.numel() / n;
  std::vector<T> xhat(x.numel());
  std::vector<T> rstd(rows);
  Tensor<T> out(x.shape());
  const T* xd = x.value().data().data();
  const T* gd = gain.value().data().data();
  const T* bd = bias.value().data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = xd + r * n;
    T mean{0};
    for (std::size_t c = 0; c < n; ++c) mean += row[c];
    mean /= static_cast<T>(n);
    T var{0};
    for (std::size_t c = 0; c < n; ++c) var += (row[c] - mean) * (row[c] - mean);
    var /= static_cast<T>(n);
    rstd[r] = T{1} / std::sqrt(var + eps);
    for (std::size_t c = 0; c < n; ++c) {
      const T h = (row[c] - mean) * rstd[r];
      xhat[r * n + c] = h;
      out[r * n + c] = h * gd[c] + bd[c];
    }
  }
  return detail::make_result<T>(
      std::move(out), {x.node(), gain.node(), bias.node()},
      [n, rows, xhat = std::move(xhat), rstd = std::move(rstd)](Node<T>& self) {
        Node<T>& gn = *self.inputs[1];
        T* gx = detail::grad_of(*self.inputs[0]);
        T* gg = detail::grad_of(gn);
        T* gb = detail::grad_of(*self.inputs[2]);
        const T* gain_d = gn.value.data().data();
        std::vector<T> dxhat(n);
        for (std::size_t r = 0; r < rows; ++r) {
          const T* dy = self.grad.data() + r * n;
          const T* h = xhat.data() + r * n;
          if (gg) for (std::size_t c = 0; c < n; ++c) gg[c] += dy[c] * h[c];
          if (gb) for (std::size_t c = 0; c < n; ++c) gb[c] += dy[c];
          if (!gx) continue;
          T mean_d{0};
          T mean_dh{0};
          for (std::size_t c = 0; c < n; ++c) {
            dxhat[c] = dy[c] * gain_d[c];
            mean_d += dxhat[c];
            mean_dh += dxhat[c] * h[c];
          }
          mean_d /= static_cast<T>(n);
          mean_dh /= static_cast<T>(n);
          for (std::size_t c = 0; c < n; ++c) gx[r * n + c] += rstd[r] * (dxhat[c] - mean_d - h[c] * mean_dh);
        }
      });
}

namespace detail {

// Mask whose shape is a suffix of `shape`, broadcast over leading dims.
inline void check_mask(const Mask& mask, const Shape& shape) {
  require(mask.shape.size() <= shape.size() &&
              std::equal(mask.shape.rbegin(), mask.shape.rend(), shape.rbegin()),
          ErrorCategory::kShape, "mask " + shape_string(mask.shape) + " does not match " + shape_string(shape));
}

template <typename T>
Var<T> softmax_rows_impl(const Var<T>& x, const Mask* mask) {
  require(x.value().rank() >= 1, ErrorCategory::kShape, "softmax_rows on scalar");
  if (mask) check_mask(*mask, x.shape());
  const std::size_t n = x.shape().back();
  const std::size_t rows = x.numel() / n;
  const std::size_t mask_n = mask ? mask->numel() : 0;
  Tensor<T> out(x.shape());
  const T* xd = x.value().data().data();
  T* od = out.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t base = r * n;
    auto open = [&](std::size_t c) { return !mask || mask->bits[(base + c) % mask_n] != 0; };
    T mx = -std::numeric_limits<T>::infinity();
    bool any = false;
    for (std::size_t c = 0; c < n; ++c) {
      if (open(c)) {
        mx = std::max(mx, xd[base + c]);
        any = true;
      }
    }
    require(any, ErrorCategory::kNumeric, "degenerate attention row");
    T total{0};
    for (std::size_t c = 0; c < n; ++c) {
      const T e = open(c) ? std::exp(xd[base + c] - mx) : T{0};
      od[base + c] = e;
      total += e;
    }
    for (std::size_t c = 0; c < n; ++c) od[base + c] /= total;
  }
  return make_result<T>(std::move(out), {x.node()}, [n, rows](Node<T>& self) {
    if (T* g = grad_of(*self.inputs[0])) {
      const T* y = self.value.data().data();
      for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t base = r * n;
        T dot{0};
        for (std::size_t c = 0; c < n; ++c) dot += self.grad[base + c] * y[base + c];
        for (std::size_t c = 0; c < n; ++c) g[base + c] += y[base + c] * (self.grad[base + c] - dot);
      }
    }
  });
}

}  // namespace detail

// Softmax along the last axis. Masked entries are exactly 0.
template <typename T>
Var<T> softmax_rows(const Var<T>& x) {
  return detail::softmax_rows_impl<T>(x, nullptr);
}

template <typename T>
Var<T> softmax_rows(const Var<T>& x, const Mask& mask) {
  return detail::softmax_rows_impl<T>(x, &mask);
}

// Lower clamp applied to probabilities inside log.
inline constexpr double kProbabilityFloor = 1e-9;

// -sum_{unmasked rows i} sum_j target_ij * log(max(pred_ij, floor)).
// row_mask has the shape of pred without its last axis.
template <typename T>
Var<T> cross_entropy_rows(const Tensor<T>& target, const Var<T>& pred, const Mask& row_mask) {
  detail::check_same_shape(target.shape(), pred.shape(), "cross_entropy_rows");
  const std::size_t n = pred.shape().back();
  const std::size_t rows = pred.numel() / n;
  require(row_mask.numel() == rows, ErrorCategory::kShape,
          "cross_entropy_rows: row mask " + shape_string(row_mask.shape) + " vs " + shape_string(pred.shape()));
  const T floor = static_cast<T>(kProbabilityFloor);
  const T* p = pred.value().data().data();
  const T* t = target.data().data();
  T total{0};
  for (std::size_t r = 0; r < rows; ++r) {
    if (!row_mask[r]) continue;
    for (std::size_t c = 0; c < n; ++c) {
      const std::size_t i = r * n + c;
      if (t[i] != T{0}) total -= t[i] * std::log(std::max(p[i], floor));
    }
  }
  return detail::make_result<T>(Tensor<T>::scalar(total), {pred.node()},
                                [target, row_mask, n, rows, floor](Node<T>& self) {
                                  Node<T>& pn = *self.inputs[0];
                                  T* g = detail::grad_of(pn);
                                  if (!g) return;
                                  const T up = self.grad[0];
                                  const T* pv = pn.value.data().data();
                                  const T* tv = target.data().data();
                                  for (std::size_t r = 0; r < rows; ++r) {
                                    if (!row_mask[r]) continue;
                                    for (std::size_t c = 0; c < n; ++c) {
                                      const std::size_t i = r * n + c;
                                      if (tv[i] != T{0} && pv[i] >= floor) g[i] -= up * tv[i] / pv[i];
                                    }
                                  }
                                });
}

// Mean over counted positions of -log softmax(logits)[target].
template <typename T>
Var<T> nll_from_logits(const Var<T>& logits, std::span<const int> targets, const Mask& weight_mask) {
  const std::size_t vocab = logits.shape().back();
  const std::size_t rows = logits.numel() / vocab;
  require(targets.size() == rows && weight_mask.numel() == rows, ErrorCategory::kShape,
          "nll_from_logits: targets do not match logits " + shape_string(logits.shape()));
  const std::size_t count = weight_mask.count();
  require(count > 0, ErrorCategory::kData, "nll_from_logits: no counted positions");
  std::vector<T> probs(logits.numel());
  std::vector<int> tgt(targets.begin(), targets.end());
  const T* xd = logits.value().data().data();
  T total{0};
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = xd + r * vocab;
    T mx = *std::max_element(row, row + vocab);
    T z{0};
    for (std::size_t c = 0; c < vocab; ++c) {
      probs[r * vocab + c] = std::exp(row[c] - mx);
      z += probs[r * vocab + c];
    }
    for (std::size_t c = 0; c < vocab; ++c) probs[r * vocab + c] /= z;
    if (weight_mask[r]) {
      require(tgt[r] >= 0 && static_cast<std::size_t>(tgt[r]) < vocab, ErrorCategory::kData,
              "target id out of range");
      total -= row[tgt[r]] - mx - std::log(z);
    }
  }
  const T inv = T{1} / static_cast<T>(count);
  return detail::make_result<T>(
      Tensor<T>::scalar(total * inv), {logits.node()},
      [probs = std::move(probs), tgt = std::move(tgt), weight_mask, vocab, rows, inv](Node<T>& self) {
        T* g = detail::grad_of(*self.inputs[0]);
        if (!g) return;
        const T up = self.grad[0] * inv;
        for (std::size_t r = 0; r < rows; ++r) {
          if (!weight_mask[r]) continue;
          for (std::size_t c = 0; c < vocab; ++c) g[r * vocab + c] += up * probs[r * vocab + c];
          g[r * vocab + static_cast<std::size_t>(tgt[r])] -= up;
        }
      });
}

}  // namespace synattn::ad
