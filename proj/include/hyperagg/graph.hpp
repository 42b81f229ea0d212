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
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hyperagg/matrix.hpp"
#include "hyperagg/rng.hpp"

namespace hyperagg {

using Mask = std::vector<std::uint8_t>;

struct Masks {
  Mask train;
  Mask val;
  Mask test;
  Mask observed;  // visible but unlabeled during inductive training
};

using Edge = std::pair<std::size_t, std::size_t>;

/// Attributed graph in CSR form.
///
/// Out-neighbors of v are `targets[offsets[v] .. offsets[v+1])`, sorted
/// ascending. Labels use -1 for unknown. For regression datasets
/// `num_classes == 0` and `targets_reg` carries the vertex targets. Graph-level
/// datasets additionally assign every vertex to a member graph via
/// `graph_ids`, with one entry per member graph in `graph_targets`.
struct Graph {
  std::size_t num_vertices = 0;
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> targets;
  Matrix features;
  std::vector<int> labels;
  std::vector<double> targets_reg;
  std::size_t num_classes = 0;
  Masks masks;
  std::optional<std::vector<int>> graph_ids;
  std::vector<double> graph_targets;

  std::size_t num_edges() const noexcept { return targets.size(); }
  std::size_t degree(std::size_t v) const { return offsets[v + 1] - offsets[v]; }
  std::span<const std::size_t> neighbors(std::size_t v) const {
    return {targets.data() + offsets[v], offsets[v + 1] - offsets[v]};
  }
  bool is_regression() const noexcept { return num_classes == 0; }
  std::size_t num_graphs() const;
  std::vector<Edge> edge_list() const;

  // Throws DataError when a structural invariant is violated.
  void validate() const;
};

// Builds canonical CSR (rows sorted ascending, duplicates removed) from an
// edge list. Non-structural fields are left default-initialized.
Graph from_edges(std::size_t num_vertices, std::span<const Edge> edges);

// Replaces the edge set of `g` while keeping every vertex attribute.
Graph with_edges(const Graph& g, std::span<const Edge> edges);

Graph make_undirected(const Graph& g);
Graph add_self_loops(const Graph& g);
Graph remove_self_loops(const Graph& g);

// Row-normalizes features to unit L1 norm; all-zero rows are left as is.
Graph normalize_features(const Graph& g);

// Fraction of non-loop edges whose endpoints share a label.
double edge_homophily(const Graph& g);

/// Vertex set aggregated together for one root vertex.
struct Neighborhood {
  std::size_t root = 0;
  std::vector<std::size_t> members;
  std::size_t root_pos = 0;  // index of `root` within `members`
};

// CSR row of v; v is appended when the row does not contain it.
Neighborhood neighborhood_1hop(const Graph& g, std::size_t v);

inline constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();

// Breadth-first k-hop neighborhood of v holding at most `cap` vertices.
// When a BFS layer would overflow the cap it is subsampled uniformly without
// replacement to fill the cap exactly, and expansion stops. The root is
// always the first member.
Neighborhood sample_khop(const Graph& g, std::size_t v, std::size_t k, std::size_t cap,
                         Rng& rng);

// Subgraph induced by vertices with keep[v] != 0, ids remapped in ascending
// order. `mapping[new_id]` is the original vertex id.
struct InducedGraph {
  Graph graph;
  std::vector<std::size_t> mapping;
};
InducedGraph induced_subgraph(const Graph& g, std::span<const std::uint8_t> keep);

enum class InductiveMode { kStrict, kProduction };

struct InductiveSplit {
  Graph train_graph;
  std::vector<std::size_t> train_mapping;  // train-graph id -> original id
  Graph eval_graph;
  bool train_graph_edgeless = false;
};

// kStrict trains on the subgraph induced by train vertices. kProduction moves
// round(0.8 * |test|) test vertices (seeded shuffle) into `observed` and
// trains on the subgraph induced by train, val and observed vertices.
// The eval graph is the full graph; in production mode its test mask is the
// remaining 20 % and its observed mask the 80 %.
InductiveSplit inductive_split(const Graph& g, InductiveMode mode, Rng& rng);

struct SbmOptions {
  std::size_t n = 1000;
  std::size_t classes = 4;
  double p_in = 0.02;
  double p_out = 0.002;
  std::size_t feat_dim = 8;
  double noise = 1.0;
  std::size_t train_per_class = 20;
  std::size_t val_per_class = 30;
};

// Undirected stochastic block model with `classes` contiguous equal blocks.
// Features are the one-hot class indicator plus N(0, noise^2) noise.
Graph generate_sbm(const SbmOptions& opts, Rng& rng);

// Draws `train_per_class` / `val_per_class` vertices per class; the rest of
// the labeled vertices become test vertices.
Masks per_class_split(std::span<const int> labels, std::size_t num_classes,
                      std::size_t train_per_class, std::size_t val_per_class, Rng& rng);

}  // namespace hyperagg
