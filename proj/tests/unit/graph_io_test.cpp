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

#include "hyperagg/graph_io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include "hyperagg/error.hpp"

namespace hyperagg {
namespace {

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

void expect_identical(const Graph& a, const Graph& b) {
  EXPECT_EQ(a.num_vertices, b.num_vertices);
  EXPECT_EQ(a.offsets, b.offsets);
  EXPECT_EQ(a.targets, b.targets);
  EXPECT_EQ(a.num_classes, b.num_classes);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.masks.train, b.masks.train);
  EXPECT_EQ(a.masks.val, b.masks.val);
  EXPECT_EQ(a.masks.test, b.masks.test);
  ASSERT_EQ(a.features.rows(), b.features.rows());
  ASSERT_EQ(a.features.cols(), b.features.cols());
  for (std::size_t i = 0; i < a.features.data().size(); ++i)
    EXPECT_TRUE(bit_equal(a.features.data()[i], b.features.data()[i])) << "feature " << i;
  ASSERT_EQ(a.targets_reg.size(), b.targets_reg.size());
  for (std::size_t i = 0; i < a.targets_reg.size(); ++i)
    EXPECT_TRUE(bit_equal(a.targets_reg[i], b.targets_reg[i]) ||
                (std::isnan(a.targets_reg[i]) && std::isnan(b.targets_reg[i])));
  EXPECT_EQ(a.graph_ids, b.graph_ids);
  EXPECT_EQ(a.graph_targets, b.graph_targets);
}

Graph round_trip(const Graph& g) {
  std::stringstream s;
  write_graph(s, g);
  return read_graph(s);
}

TEST(GraphIo, SbmRoundTripIsBitExact) {
  Rng rng(9);
  SbmOptions opts;
  opts.n = 200;
  Graph g = generate_sbm(opts, rng);
  g.labels[3] = -1;
  expect_identical(g, round_trip(g));
}

TEST(GraphIo, RegressionAndGraphLevelRoundTrip) {
  Graph g = from_edges(4, std::vector<Edge>{{0, 1}, {1, 0}, {2, 3}});
  g.features = Matrix(4, 1, {0.1, 1e-300, -2.5, 1.0 / 3.0});
  g.targets_reg = {0.5, std::nan(""), -1.0, 7.0};
  g.masks.train = {1, 1, 0, 0};
  g.masks.val = {0, 0, 0, 0};
  g.masks.test = {0, 0, 1, 1};
  g.graph_ids = std::vector<int>{0, 0, 1, 1};
  g.graph_targets = {0.337, -1.25};
  expect_identical(g, round_trip(g));
}

TEST(GraphIo, ShippedFixture) {
  Graph g = load_graph(std::string(HYPERAGG_TEST_DATA) + "/fixture5.hagraph");
  EXPECT_EQ(g.num_vertices, 5u);
  EXPECT_EQ(g.edge_list(), (std::vector<Edge>{{0, 1}, {1, 0}, {1, 2}, {2, 3}, {3, 4}, {4, 0}}));
  EXPECT_EQ(g.labels, (std::vector<int>{0, 1, 1, -1, 0}));
  EXPECT_EQ(g.masks.train, (Mask{1, 1, 0, 0, 0}));
  EXPECT_EQ(g.masks.test, (Mask{0, 0, 0, 0, 1}));
  EXPECT_DOUBLE_EQ(g.features(3, 0), -1.25);
}

TEST(GraphIo, MalformedHeaderReportsLineNumber) {
  std::istringstream in("\n\nHAGRAF 1 2 0 1 2\nEDGES\n");
  try {
    read_graph(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("header"), std::string::npos);
  }
}

TEST(GraphIo, TruncatedFeatureBlockIsLengthError) {
  std::istringstream in(
      "HAGRAPH 1 3 0 1 2\nEDGES\nFEATURES\n1\n2\nLABELS\n0\n1\n0\nMASKS\nnone\nnone\nnone\n");
  try {
    read_graph(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 6u);
    EXPECT_NE(std::string(e.what()).find("FEATURES block truncated: length 2 of expected 3"),
              std::string::npos)
        << e.what();
  }
}

TEST(GraphIo, TruncatedAtEndOfInput) {
  std::istringstream in("HAGRAPH 1 2 0 1 2\nEDGES\nFEATURES\n1\n2\nLABELS\n0\n");
  EXPECT_THROW(read_graph(in), ParseError);
}

TEST(GraphIo, RejectsBadTokens) {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_graph(in);
  };
  const std::string tail = "FEATURES\n1\n2\nLABELS\n0\n1\nMASKS\ntrain\ntest\n";
  EXPECT_THROW(parse("HAGRAPH 1 2 1 1 2\nEDGES\n0 5\n" + tail), ParseError);
  EXPECT_THROW(parse("HAGRAPH 1 2 1 1 2\nEDGES\n0 x\n" + tail), ParseError);
  EXPECT_THROW(parse("HAGRAPH 2 2 1 1 2\nEDGES\n0 1\n" + tail), ParseError);
  EXPECT_THROW(parse("HAGRAPH 1 2 0 1 2\nEDGES\nFEATURES\n1 2\n3\n"), ParseError);
  EXPECT_NO_THROW(parse("HAGRAPH 1 2 1 1 2\nEDGES\n0 1\n" + tail));
}

TEST(GraphIo, MissingFileIsDataError) {
  EXPECT_THROW(load_graph("/nonexistent/graph.hagraph"), DataError);
}

}  // namespace
}  // namespace hyperagg
