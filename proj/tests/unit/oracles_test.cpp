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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "oracles.hpp"

namespace {

TEST(FiniteDifference, QuadraticHasGradientTwoTheta) {
  const std::vector<double> theta = {0.3, -1.7, 2.5, 0.0};
  auto f = [](const std::vector<double>& t) {
    double s = 0.0;
    for (double v : t) s += v * v;
    return s;
  };
  const auto g = oracle::fd_gradient(f, theta);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double expected = 2.0 * theta[i];
    EXPECT_LT(std::abs(g[i] - expected), 1e-8 * std::max(1.0, std::abs(expected)));
  }
}

TEST(FiniteDifference, ConstantHasZeroGradient) {
  const auto g = oracle::fd_gradient([](const std::vector<double>&) { return 4.0; }, {1.0, 2.0});
  EXPECT_EQ(g, (std::vector<double>{0.0, 0.0}));
}

TEST(FiniteDifference, RejectsNonFiniteObjectiveAndBadStep) {
  auto nan_f = [](const std::vector<double>&) { return std::numeric_limits<double>::quiet_NaN(); };
  EXPECT_THROW(oracle::fd_gradient(nan_f, {1.0}), std::domain_error);
  EXPECT_THROW(oracle::fd_gradient([](const auto&) { return 0.0; }, {1.0}, 0.0),
               std::invalid_argument);
}

TEST(DenseHyperAggregation, MatchesFrozenReference) {
  const oracle::Dense x = {{0.5, -1.0}, {2.0, 0.25}, {-0.75, 1.5}};
  const oracle::Dense w_a = {{0.3, -0.2}, {0.1, 0.4}};
  const oracle::Dense w_b = {{0.5}, {-0.6}};
  const oracle::Dense expected = {{0.08012499732182551, -0.017196914976478194},
                                  {0.22631457592642512, -0.04857301279540037},
                                  {-0.27754373522127135, 0.05956812700640521}};
  const auto out = oracle::dense_ha_forward(x, w_a, w_b);
  ASSERT_EQ(out.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(out[i][j], expected[i][j], 1e-15);
}

TEST(DenseHyperAggregation, ZerosMapToZeros) {
  const auto out = oracle::dense_ha_forward(oracle::zeros(4, 3), {{1, 2, 3}, {4, 5, 6}, {7, 8, 9}},
                                            {{1, 1}, {1, -1}, {0.5, 2}});
  for (const auto& row : out)
    for (double v : row) EXPECT_EQ(v, 0.0);
}

TEST(DenseHyperAggregation, SingleRowHandExpansion) {
  // n = 1, h = 1, m = 1: w = gelu(x a) b, out = gelu(x w) w.
  const double x = 0.7, a = 1.3, b = -0.4;
  const double w = oracle::exact_gelu(x * a) * b;
  const double expected = oracle::exact_gelu(x * w) * w;
  const auto out = oracle::dense_ha_forward({{x}}, {{a}}, {{b}});
  EXPECT_DOUBLE_EQ(out[0][0], expected);
}

TEST(Permutations, CountsAndBijections) {
  EXPECT_EQ(oracle::enumerate_permutations(0).size(), 1u);
  EXPECT_EQ(oracle::enumerate_permutations(1).size(), 1u);
  EXPECT_EQ(oracle::enumerate_permutations(3).size(), 6u);
  const auto all = oracle::enumerate_permutations(5);
  EXPECT_EQ(all.size(), 120u);
  std::set<std::vector<std::size_t>> distinct(all.begin(), all.end());
  EXPECT_EQ(distinct.size(), 120u);
  for (const auto& p : all) {
    std::vector<std::size_t> sorted = p;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(sorted, (std::vector<std::size_t>{0, 1, 2, 3, 4}));
  }
  EXPECT_THROW(oracle::enumerate_permutations(7), std::invalid_argument);
}

TEST(DenseOracleGraph, EnforcesSizeCap) {
  EXPECT_THROW(oracle::DenseOracleGraph(oracle::zeros(65, 65), {}), std::invalid_argument);
  EXPECT_THROW(oracle::DenseOracleGraph(oracle::zeros(3, 2), {}), std::invalid_argument);
  EXPECT_NO_THROW(oracle::DenseOracleGraph(oracle::zeros(64, 64), {}));
}

TEST(DenseOracleGraph, NormalizedAdjacencyOfOneEdgeWithLoops) {
  const oracle::DenseOracleGraph g({{1, 1}, {1, 1}}, {});
  const auto a = g.normalized_adjacency();
  for (const auto& row : a)
    for (double v : row) EXPECT_DOUBLE_EQ(v, 0.5);
}

TEST(DenseOracleGraph, KhopOnPath) {
  oracle::Dense a = oracle::zeros(5, 5);
  for (std::size_t i = 0; i + 1 < 5; ++i) a[i][i + 1] = a[i + 1][i] = 1.0;
  const oracle::DenseOracleGraph g(a, {});
  EXPECT_EQ(g.khop(2, 1), (std::set<std::size_t>{1, 2, 3}));
  EXPECT_EQ(g.khop(2, 2), (std::set<std::size_t>{0, 1, 2, 3, 4}));
  EXPECT_EQ(g.khop(0, 0), (std::set<std::size_t>{0}));
}

}  // namespace
