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

#pragma once

// Dense 2-D tensors with define-by-run reverse-mode differentiation.
//
// Every op returns a new Tensor. When gradient recording is enabled and an
// input requires grad, the result remembers its inputs and a backward rule;
// `backward(loss)` orders the reachable graph topologically (the tape) and
// replays it in reverse. Leaves accumulate gradients across calls, interior
// nodes are reset on every call. A graph is confined to the thread that
// built it; distinct graphs may share read-only parameter leaves.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lgnsde/sparse.hpp"

namespace lgnsde {

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const noexcept { return rows * cols; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

using Mask = std::vector<std::uint8_t>;
using Rng = std::mt19937_64;

namespace detail {
struct Node;
}

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor constant(Shape shape, double value);
  static Tensor scalar(double value);
  static Tensor from_values(Shape shape, std::vector<double> values);
  // Leaf that participates in gradients.
  static Tensor parameter(Shape shape, std::vector<double> values);

  bool defined() const noexcept { return static_cast<bool>(node_); }
  Shape shape() const;
  std::size_t rows() const { return shape().rows; }
  std::size_t cols() const { return shape().cols; }
  std::size_t size() const { return shape().size(); }

  std::span<const double> values() const;
  // Only valid on leaves; optimizers write parameters through this.
  std::span<double> mutable_values();
  double at(std::size_t r, std::size_t c) const;
  double item() const;

  bool requires_grad() const;
  bool is_leaf() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  void zero_grad();

  // Copy of the values as a new leaf, optionally requiring grad.
  Tensor detach(bool requires_grad = false) const;

  const detail::Node* node() const noexcept { return node_.get(); }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;

  friend struct TensorAccess;
};

// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

enum class Activation { Identity, Tanh, Relu };

Tensor matmul(const Tensor& a, const Tensor& b);
// Propagation by a constant sparse operator; gradients flow into `h` only.
Tensor spmm(const SparseMatrix& adj, const Tensor& h);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
// a[r, :] + bias[0, :] for every row r.
Tensor add_row_bias(const Tensor& a, const Tensor& bias);
Tensor activate(const Tensor& x, Activation f);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);
// Inverted dropout: identity when !training; otherwise zero with prob p and
// scale survivors by 1/(1-p).
Tensor dropout(const Tensor& x, double p, bool training, Rng& rng);
Tensor softmax_rows(const Tensor& x);
Tensor log_softmax_rows(const Tensor& x);
// Mean negative log-likelihood over rows with mask[r] != 0.
Tensor masked_cross_entropy(const Tensor& logits, std::span<const int> labels, std::span<const std::uint8_t> mask);
Tensor sum(const Tensor& x);
// Squared Frobenius norm.
Tensor sum_squares(const Tensor& x);

// Topologically ordered interior nodes reachable from `loss` (inputs first).
struct ComputationTape {
  std::vector<const detail::Node*> order;
};
ComputationTape record_tape(const Tensor& loss);

void backward(const Tensor& loss);

}  // namespace lgnsde
