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

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "hyperagg/graph.hpp"
#include "hyperagg/matrix.hpp"
#include "hyperagg/rng.hpp"
#include "hyperagg/tape.hpp"
#include "oracles.hpp"

namespace testing_util {

using hyperagg::Matrix;
using hyperagg::Tape;
using hyperagg::Var;

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                            double scale = 1.0) {
  hyperagg::Rng rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = normal(rng);
  return m;
}

inline oracle::Dense to_dense(const Matrix& m) {
  oracle::Dense d(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) d[i][j] = m(i, j);
  return d;
}

inline double max_abs(const Matrix& m) {
  double r = 0.0;
  for (double v : m.data()) r = std::max(r, std::abs(v));
  return r;
}

inline double max_diff(const Matrix& m, const oracle::Dense& d) {
  double r = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) r = std::max(r, std::abs(m(i, j) - d[i][j]));
  return r;
}

// max|a - f| / max(max|f|, 1e-8)
inline double relative_error(const std::vector<double>& analytic,
                             const std::vector<double>& reference) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - reference[i]));
    scale = std::max(scale, std::abs(reference[i]));
  }
  return diff / std::max(scale, 1e-8);
}

// Relative error between the tape gradient of sum(op(x) .* probe) and central
// finite differences, where `probe` is a fixed random weighting so every
// output entry matters.
inline double op_gradient_error(const std::function<Var(Var)>& op, Matrix input,
                                std::uint64_t seed = 99) {
  Matrix probe;
  auto loss = [&](Matrix& x, bool backward) {
    Tape tape(backward);
    Var out = op(tape.parameter(x));
    if (probe.empty()) probe = random_matrix(out.rows(), out.cols(), seed);
    Var l = hyperagg::sum(hyperagg::elementwise_mul(out, tape.constant(probe)));
    if (backward) tape.backward(l);
    return l.value()(0, 0);
  };
  input.zero_grad();
  loss(input, true);
  std::vector<double> analytic(input.grad().begin(), input.grad().end());
  auto f = [&](const std::vector<double>& theta) {
    Matrix x(input.rows(), input.cols(), theta);
    return loss(x, false);
  };
  const auto numeric =
      oracle::fd_gradient(f, std::vector<double>(input.data().begin(), input.data().end()));
  return relative_error(analytic, numeric);
}

// Undirected path 0 - 1 - ... - (n-1).
inline hyperagg::Graph path_graph(std::size_t n) {
  std::vector<hyperagg::Edge> edges;
  for (std::size_t i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return hyperagg::make_undirected(hyperagg::from_edges(n, edges));
}

}  // namespace testing_util
