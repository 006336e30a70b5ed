// Copyright 2026 The LGNSDE Authors.
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

#include "lgnsde/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>
#include <utility>

#include "lgnsde/errors.hpp"
#include "lgnsde/kernels.hpp"

namespace lgnsde {

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;
  bool requires_grad = false;
  bool leaf = true;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  void ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
  }
};

}  // namespace detail

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

namespace {

thread_local bool t_grad_enabled = true;

NodePtr make_leaf(Shape shape, std::vector<double> values, bool requires_grad) {
  if (values.size() != shape.size())
    throw DimensionError("value count " + std::to_string(values.size()) + " does not match shape " + shape.str());
  auto node = std::make_shared<Node>();
  node->shape = shape;
  node->values = std::move(values);
  node->requires_grad = requires_grad;
  return node;
}

}  // namespace

struct TensorAccess {
  static const NodePtr& node(const Tensor& t) {
    if (!t.node_) throw std::invalid_argument("use of an undefined tensor");
    return t.node_;
  }
  static Tensor wrap(NodePtr node) { return Tensor(std::move(node)); }

  // Builds the result node; records parents and the backward rule only when
  // recording is on and some parent requires grad.
  static Tensor make(Shape shape, std::vector<double> values, std::vector<NodePtr> parents,
                     std::function<void(Node&)> backward_fn) {
    auto node = make_leaf(shape, std::move(values), false);
    if (t_grad_enabled) {
      const bool any = std::any_of(parents.begin(), parents.end(), [](const NodePtr& p) { return p->requires_grad; });
      if (any) {
        node->requires_grad = true;
        node->leaf = false;
        node->parents = std::move(parents);
        node->backward_fn = std::move(backward_fn);
      }
    }
    return Tensor(std::move(node));
  }
};

namespace {

const NodePtr& N(const Tensor& t) { return TensorAccess::node(t); }

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());
}

// Adds `delta(i)` into parent's gradient for every element when the parent
// participates in differentiation.
template <typename F>
void accumulate(Node& parent, F&& delta) {
  if (!parent.requires_grad) return;
  parent.ensure_grad();
  for (std::size_t i = 0; i < parent.grad.size(); ++i) parent.grad[i] += delta(i);
}

}  // namespace

std::string Shape::str() const { return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]"; }

Tensor Tensor::zeros(Shape shape) { return Tensor(make_leaf(shape, std::vector<double>(shape.size(), 0.0), false)); }

Tensor Tensor::constant(Shape shape, double value) {
  return Tensor(make_leaf(shape, std::vector<double>(shape.size(), value), false));
}

Tensor Tensor::scalar(double value) { return Tensor(make_leaf({1, 1}, {value}, false)); }

Tensor Tensor::from_values(Shape shape, std::vector<double> values) {
  return Tensor(make_leaf(shape, std::move(values), false));
}

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  return Tensor(make_leaf(shape, std::move(values), true));
}

Shape Tensor::shape() const { return N(*this)->shape; }

std::span<const double> Tensor::values() const { return N(*this)->values; }

std::span<double> Tensor::mutable_values() {
  const auto& node = N(*this);
  if (!node->leaf) throw InvalidStateError("mutable_values() on an interior tensor");
  return node->values;
}

double Tensor::at(std::size_t r, std::size_t c) const {
  const auto& node = N(*this);
  if (r >= node->shape.rows || c >= node->shape.cols)
    throw std::out_of_range("index (" + std::to_string(r) + ", " + std::to_string(c) + ") outside " + node->shape.str());
  return node->values[r * node->shape.cols + c];
}

double Tensor::item() const {
  const auto& node = N(*this);
  if (node->shape.size() != 1) throw DimensionError("item() on non-scalar " + node->shape.str());
  return node->values[0];
}

bool Tensor::requires_grad() const { return N(*this)->requires_grad; }
bool Tensor::is_leaf() const { return N(*this)->leaf; }
bool Tensor::has_grad() const { return N(*this)->grad.size() == N(*this)->values.size() && N(*this)->requires_grad; }

std::span<const double> Tensor::grad() const {
  if (!has_grad()) throw InvalidStateError("tensor has no gradient");
  return N(*this)->grad;
}

void Tensor::zero_grad() {
  auto& node = *N(*this);
  std::fill(node.grad.begin(), node.grad.end(), 0.0);
}

Tensor Tensor::detach(bool requires_grad) const {
  const auto& node = N(*this);
  return Tensor(make_leaf(node->shape, node->values, requires_grad));
}

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }
bool grad_enabled() { return t_grad_enabled; }

Tensor matmul(const Tensor& a, const Tensor& b) {
  const Shape sa = a.shape(), sb = b.shape();
  if (sa.cols != sb.rows) throw DimensionError("matmul: inner dimensions differ " + sa.str() + " x " + sb.str());
  const std::size_t m = sa.rows, k = sa.cols, n = sb.cols;
  std::vector<double> out(m * n, 0.0);
  kernels::gemm_nn(a.values(), b.values(), out, m, k, n);
  return TensorAccess::make({m, n}, std::move(out), {N(a), N(b)}, [m, k, n](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      kernels::gemm_nt(self.grad, pb.values, pa.grad, m, n, k);
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      kernels::gemm_tn(pa.values, self.grad, pb.grad, k, m, n);
    }
  });
}

Tensor spmm(const SparseMatrix& adj, const Tensor& h) {
  const Shape sh = h.shape();
  if (adj.cols() != sh.rows)
    throw DimensionError("spmm: adjacency [" + std::to_string(adj.rows()) + "x" + std::to_string(adj.cols()) +
                         "] x " + sh.str());
  const std::size_t d = sh.cols;
  std::vector<double> out(adj.rows() * d, 0.0);
  kernels::csr_spmm(adj.view(), h.values(), out, d);
  return TensorAccess::make({adj.rows(), d}, std::move(out), {N(h)}, [adj, d](Node& self) {
    Node& ph = *self.parents[0];
    ph.ensure_grad();
    kernels::csr_spmm(adj.transposed_view(), self.grad, ph.grad, d);
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  auto va = a.values(), vb = b.values();
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] + vb[i];
  return TensorAccess::make(a.shape(), std::move(out), {N(a), N(b)}, [](Node& self) {
    accumulate(*self.parents[0], [&](std::size_t i) { return self.grad[i]; });
    accumulate(*self.parents[1], [&](std::size_t i) { return self.grad[i]; });
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  auto va = a.values(), vb = b.values();
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] - vb[i];
  return TensorAccess::make(a.shape(), std::move(out), {N(a), N(b)}, [](Node& self) {
    accumulate(*self.parents[0], [&](std::size_t i) { return self.grad[i]; });
    accumulate(*self.parents[1], [&](std::size_t i) { return -self.grad[i]; });
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  auto va = a.values(), vb = b.values();
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * vb[i];
  return TensorAccess::make(a.shape(), std::move(out), {N(a), N(b)}, [](Node& self) {
    const auto& xa = self.parents[0]->values;
    const auto& xb = self.parents[1]->values;
    accumulate(*self.parents[0], [&](std::size_t i) { return self.grad[i] * xb[i]; });
    accumulate(*self.parents[1], [&](std::size_t i) { return self.grad[i] * xa[i]; });
  });
}

Tensor scale(const Tensor& a, double s) {
  auto va = a.values();
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * s;
  return TensorAccess::make(a.shape(), std::move(out), {N(a)}, [s](Node& self) {
    accumulate(*self.parents[0], [&](std::size_t i) { return self.grad[i] * s; });
  });
}

Tensor add_row_bias(const Tensor& a, const Tensor& bias) {
  const Shape sa = a.shape(), sb = bias.shape();
  if (sb.rows != 1 || sb.cols != sa.cols) throw DimensionError("add_row_bias: " + sa.str() + " + " + sb.str());
  auto va = a.values(), vb = bias.values();
  const std::size_t cols = sa.cols;
  std::vector<double> out(va.size());
  for (std::size_t r = 0; r < sa.rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = va[r * cols + c] + vb[c];
  return TensorAccess::make(sa, std::move(out), {N(a), N(bias)}, [cols](Node& self) {
    accumulate(*self.parents[0], [&](std::size_t i) { return self.grad[i]; });
    Node& pb = *self.parents[1];
    if (pb.requires_grad) {
      pb.ensure_grad();
      const std::size_t rows = self.shape.rows;
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) pb.grad[c] += self.grad[r * cols + c];
    }
  });
}

Tensor activate(const Tensor& x, Activation f) {
  auto vx = x.values();
  std::vector<double> out(vx.size());
  switch (f) {
    case Activation::Identity:
      return x;
    case Activation::Tanh:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(vx[i]);
      return TensorAccess::make(x.shape(), std::move(out), {N(x)}, [](Node& self) {
        accumulate(*self.parents[0], [&](std::size_t i) {
          const double y = self.values[i];
          return self.grad[i] * (1.0 - y * y);
        });
      });
    case Activation::Relu:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = vx[i] > 0.0 ? vx[i] : 0.0;
      return TensorAccess::make(x.shape(), std::move(out), {N(x)}, [](Node& self) {
        const auto& in = self.parents[0]->values;
        accumulate(*self.parents[0], [&](std::size_t i) { return in[i] > 0.0 ? self.grad[i] : 0.0; });
      });
  }
  throw std::invalid_argument("unknown activation");
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  const Shape sa = a.shape(), sb = b.shape();
  if (sa.rows != sb.rows) throw DimensionError("concat_cols: row counts differ " + sa.str() + " | " + sb.str());
  const std::size_t rows = sa.rows, ca = sa.cols, cb = sb.cols, cols = ca + cb;
  auto va = a.values(), vb = b.values();
  std::vector<double> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(va.begin() + static_cast<std::ptrdiff_t>(r * ca), ca, out.begin() + static_cast<std::ptrdiff_t>(r * cols));
    std::copy_n(vb.begin() + static_cast<std::ptrdiff_t>(r * cb), cb,
                out.begin() + static_cast<std::ptrdiff_t>(r * cols + ca));
  }
  return TensorAccess::make({rows, cols}, std::move(out), {N(a), N(b)}, [rows, ca, cb, cols](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < ca; ++c) pa.grad[r * ca + c] += self.grad[r * cols + c];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cb; ++c) pb.grad[r * cb + c] += self.grad[r * cols + ca + c];
    }
  });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  const Shape sx = x.shape();
  if (begin > end || end > sx.rows)
    throw DimensionError("slice_rows: [" + std::to_string(begin) + ", " + std::to_string(end) + ") of " + sx.str());
  const std::size_t cols = sx.cols;
  auto vx = x.values();
  std::vector<double> out(vx.begin() + static_cast<std::ptrdiff_t>(begin * cols),
                          vx.begin() + static_cast<std::ptrdiff_t>(end * cols));
  return TensorAccess::make({end - begin, cols}, std::move(out), {N(x)}, [begin, cols](Node& self) {
    Node& px = *self.parents[0];
    px.ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) px.grad[begin * cols + i] += self.grad[i];
  });
}

Tensor dropout(const Tensor& x, double p, bool training, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dropout probability must lie in [0, 1)");
  if (!training || p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  std::bernoulli_distribution keep(1.0 - p);
  auto vx = x.values();
  std::vector<double> factor(vx.size());
  std::vector<double> out(vx.size());
  for (std::size_t i = 0; i < vx.size(); ++i) {
    factor[i] = keep(rng) ? keep_scale : 0.0;
    out[i] = vx[i] * factor[i];
  }
  return TensorAccess::make(x.shape(), std::move(out), {N(x)}, [factor = std::move(factor)](Node& self) {
    accumulate(*self.parents[0], [&](std::size_t i) { return self.grad[i] * factor[i]; });
  });
}

namespace {

// Row-wise log-sum-exp with max shift.
std::vector<double> row_logsumexp(std::span<const double> v, std::size_t rows, std::size_t cols) {
  std::vector<double> lse(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = v.data() + r * cols;
    double mx = -INFINITY;
    for (std::size_t c = 0; c < cols; ++c) mx = std::max(mx, row[c]);
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += std::exp(row[c] - mx);
    lse[r] = mx + std::log(s);
  }
  return lse;
}

}  // namespace

Tensor softmax_rows(const Tensor& x) {
  const Shape sx = x.shape();
  auto vx = x.values();
  const auto lse = row_logsumexp(vx, sx.rows, sx.cols);
  std::vector<double> out(vx.size());
  for (std::size_t r = 0; r < sx.rows; ++r)
    for (std::size_t c = 0; c < sx.cols; ++c) out[r * sx.cols + c] = std::exp(vx[r * sx.cols + c] - lse[r]);
  return TensorAccess::make(sx, std::move(out), {N(x)}, [](Node& self) {
    Node& px = *self.parents[0];
    if (!px.requires_grad) return;
    px.ensure_grad();
    const std::size_t rows = self.shape.rows, cols = self.shape.cols;
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += self.grad[r * cols + c] * self.values[r * cols + c];
      for (std::size_t c = 0; c < cols; ++c)
        px.grad[r * cols + c] += self.values[r * cols + c] * (self.grad[r * cols + c] - dot);
    }
  });
}

Tensor log_softmax_rows(const Tensor& x) {
  const Shape sx = x.shape();
  auto vx = x.values();
  const auto lse = row_logsumexp(vx, sx.rows, sx.cols);
  std::vector<double> out(vx.size());
  for (std::size_t r = 0; r < sx.rows; ++r)
    for (std::size_t c = 0; c < sx.cols; ++c) out[r * sx.cols + c] = vx[r * sx.cols + c] - lse[r];
  return TensorAccess::make(sx, std::move(out), {N(x)}, [](Node& self) {
    Node& px = *self.parents[0];
    if (!px.requires_grad) return;
    px.ensure_grad();
    const std::size_t rows = self.shape.rows, cols = self.shape.cols;
    for (std::size_t r = 0; r < rows; ++r) {
      double gsum = 0.0;
      for (std::size_t c = 0; c < cols; ++c) gsum += self.grad[r * cols + c];
      for (std::size_t c = 0; c < cols; ++c)
        px.grad[r * cols + c] += self.grad[r * cols + c] - std::exp(self.values[r * cols + c]) * gsum;
    }
  });
}

Tensor masked_cross_entropy(const Tensor& logits, std::span<const int> labels, std::span<const std::uint8_t> mask) {
  const Shape sl = logits.shape();
  if (labels.size() != sl.rows || mask.size() != sl.rows)
    throw DimensionError("masked_cross_entropy: logits " + sl.str() + " with " + std::to_string(labels.size()) +
                         " labels and " + std::to_string(mask.size()) + " mask entries");
  std::vector<std::size_t> active;
  for (std::size_t r = 0; r < sl.rows; ++r) {
    if (!mask[r]) continue;
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= sl.cols)
      throw std::invalid_argument("masked_cross_entropy: label " + std::to_string(labels[r]) + " at row " +
                                  std::to_string(r) + " outside [0, " + std::to_string(sl.cols) + ")");
    active.push_back(r);
  }
  if (active.empty()) throw std::invalid_argument("masked_cross_entropy: mask selects no rows");

  auto vx = logits.values();
  const auto lse = row_logsumexp(vx, sl.rows, sl.cols);
  double total = 0.0;
  for (std::size_t r : active) total += lse[r] - vx[r * sl.cols + static_cast<std::size_t>(labels[r])];
  const double count = static_cast<double>(active.size());
  std::vector<int> picked;
  picked.reserve(active.size());
  for (std::size_t r : active) picked.push_back(labels[r]);

  return TensorAccess::make(
      {1, 1}, {total / count}, {N(logits)},
      [active = std::move(active), picked = std::move(picked), lse, count](Node& self) {
        Node& px = *self.parents[0];
        if (!px.requires_grad) return;
        px.ensure_grad();
        const std::size_t cols = px.shape.cols;
        const double g = self.grad[0] / count;
        for (std::size_t i = 0; i < active.size(); ++i) {
          const std::size_t r = active[i];
          for (std::size_t c = 0; c < cols; ++c) {
            const double p = std::exp(px.values[r * cols + c] - lse[r]);
            px.grad[r * cols + c] += g * (p - (static_cast<int>(c) == picked[i] ? 1.0 : 0.0));
          }
        }
      });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  return TensorAccess::make({1, 1}, {s}, {N(x)}, [](Node& self) {
    const double g = self.grad[0];
    accumulate(*self.parents[0], [g](std::size_t) { return g; });
  });
}

Tensor sum_squares(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v * v;
  return TensorAccess::make({1, 1}, {s}, {N(x)}, [](Node& self) {
    const double g = self.grad[0];
    const auto& in = self.parents[0]->values;
    accumulate(*self.parents[0], [&](std::size_t i) { return 2.0 * g * in[i]; });
  });
}

namespace {

std::vector<Node*> topological_order(Node* root) {
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

}  // namespace

ComputationTape record_tape(const Tensor& loss) {
  ComputationTape tape;
  const auto& root = N(loss);
  if (!root->requires_grad) return tape;
  for (Node* node : topological_order(root.get()))
    if (!node->leaf) tape.order.push_back(node);
  return tape;
}

void backward(const Tensor& loss) {
  const auto& root = N(loss);
  if (root->shape.size() != 1) throw std::invalid_argument("backward: loss must be scalar, got " + root->shape.str());
  if (!root->requires_grad) throw InvalidStateError("backward: loss does not depend on any parameter");

  const auto order = topological_order(root.get());
  for (Node* node : order) {
    if (node->leaf)
      node->ensure_grad();
    else
      node->grad.assign(node->values.size(), 0.0);
  }
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (!node->leaf) node->backward_fn(*node);
  }
}

}  // namespace lgnsde
