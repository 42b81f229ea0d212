// Copyright 2026 The HyperAggregation Authors.
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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hyperagg/matrix.hpp"
#include "hyperagg/rng.hpp"

namespace hyperagg {

class Tape;

/// Handle to a value recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

/// Dynamically recorded operation list for reverse-mode differentiation.
///
/// Nodes are appended in execution order, so inputs always precede the
/// operations that consume them. `backward` walks the list once in reverse.
/// A tape is rebuilt for every forward pass and is confined to one thread.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  // A non-recording tape evaluates values only (inference mode).
  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const noexcept { return recording_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  Var constant(Matrix value);
  // Leaf bound to a trainable matrix. Repeated calls for the same matrix
  // return the same node. `backward` accumulates into `param.grad()`.
  Var parameter(Matrix& param);

  Var record(Matrix value, BackwardFn backward);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  // Gradient buffer of a node; zero-filled on first access.
  std::span<double> grad(std::size_t id);
  bool has_grad(std::size_t id) const { return !nodes_[id].grad.empty(); }

  // Populates gradients of every parameter reachable from `loss` (a 1x1
  // node). Parameters registered on this tape but unreachable receive zero.
  void backward(Var loss);

 private:
  struct Node {
    Matrix value;
    std::vector<double> grad;
    Matrix* param = nullptr;
    BackwardFn backward;
  };

  bool recording_;
  std::vector<Node> nodes_;
  std::unordered_map<const Matrix*, std::size_t> param_ids_;
};

namespace debug {
// Scales the gradient emitted by the backward rule of operation `op` (for
// example "gelu") by `factor`. Used as a negative control for gradient
// checking; pass an empty name to disable. Thread-local.
void corrupt_backward(const std::string& op, double factor = 1.5);
}  // namespace debug

// ---------------------------------------------------------------------------
// Operations. All return fresh values and never modify their inputs.
// ---------------------------------------------------------------------------

Var matmul(Var a, Var b);
Var transpose(Var a);
// Exact GeLU, x * Phi(x).
Var gelu(Var a);
// a + b where b has the same shape as a or is a 1 x a.cols() row broadcast.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double factor);
Var elementwise_mul(Var a, Var b);
Var sum(Var a);
Var mean_rows(Var a);
Var concat_cols(Var a, Var b);
// Gathers rows; indices may repeat. Backward scatter-adds.
Var row_select(Var a, std::span<const std::size_t> rows);
// Vertical concatenation of inputs with equal column counts.
Var stack_rows(std::span<const Var> parts);
Var layer_norm(Var a, Var gain, Var bias, double eps = 1e-5);
// Inverted dropout. Identity when !training or p == 0.
Var dropout(Var a, double p, bool training, Rng& rng);

/// CSR matrix with explicit weights; used for graph propagation.
struct SparseWeights {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> offsets;
  std::vector<std::size_t> targets;
  std::vector<double> weights;
};

// out = S * a.
Var propagate(const SparseWeights& s, Var a);
// Per-group mean of rows; `groups[r]` in [0, num_groups). Empty group throws.
Var segment_mean(Var a, std::span<const int> groups, std::size_t num_groups);

// Mean over masked rows of -log softmax(logits)[label]. Returns 1x1.
Var softmax_cross_entropy(Var logits, std::span<const int> labels,
                          std::span<const std::uint8_t> mask);
// Mean over masked rows of |pred - target| for an n x 1 prediction.
Var mean_absolute_error(Var pred, std::span<const double> targets,
                        std::span<const std::uint8_t> mask);

// Scalar helpers shared with the models and tests.
double gelu_scalar(double x);
double gelu_derivative(double x);

}  // namespace hyperagg
