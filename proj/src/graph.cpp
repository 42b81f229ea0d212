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

#include "hyperagg/graph.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "hyperagg/error.hpp"

namespace hyperagg {

std::size_t Graph::num_graphs() const {
  if (!graph_ids || graph_ids->empty()) return 0;
  return static_cast<std::size_t>(*std::max_element(graph_ids->begin(), graph_ids->end())) + 1;
}

std::vector<Edge> Graph::edge_list() const {
  std::vector<Edge> edges;
  edges.reserve(targets.size());
  for (std::size_t v = 0; v < num_vertices; ++v)
    for (std::size_t u : neighbors(v)) edges.emplace_back(v, u);
  return edges;
}

void Graph::validate() const {
  if (offsets.size() != num_vertices + 1 || offsets.front() != 0 ||
      offsets.back() != targets.size()) {
    throw DataError("CSR offsets do not match vertex/edge counts");
  }
  for (std::size_t v = 0; v < num_vertices; ++v) {
    if (offsets[v] > offsets[v + 1]) throw DataError("CSR offsets are not nondecreasing");
  }
  for (std::size_t u : targets) {
    if (u >= num_vertices) throw DataError("edge target " + std::to_string(u) + " out of range");
  }
  if (features.rows() != num_vertices) throw DataError("feature rows do not match vertex count");
  auto check_len = [&](std::size_t len, const char* what) {
    if (len != 0 && len != num_vertices) {
      throw DataError(std::string(what) + " length does not match vertex count");
    }
  };
  check_len(labels.size(), "labels");
  check_len(masks.train.size(), "train mask");
  check_len(masks.val.size(), "val mask");
  check_len(masks.test.size(), "test mask");
  check_len(masks.observed.size(), "observed mask");
  for (std::size_t v = 0; v < num_vertices; ++v) {
    const int count = (masks.train.empty() ? 0 : masks.train[v]) +
                      (masks.val.empty() ? 0 : masks.val[v]) +
                      (masks.test.empty() ? 0 : masks.test[v]);
    if (count > 1) throw DataError("vertex " + std::to_string(v) + " is in more than one split");
  }
  if (graph_ids) {
    if (graph_ids->size() != num_vertices) throw DataError("graph id length mismatch");
    for (int id : *graph_ids) {
      if (id < 0) throw DataError("negative graph id");
    }
    for (std::size_t v = 0; v < num_vertices; ++v) {
      for (std::size_t u : neighbors(v)) {
        if ((*graph_ids)[u] != (*graph_ids)[v]) {
          throw DataError("edge " + std::to_string(v) + "->" + std::to_string(u) +
                          " crosses two member graphs");
        }
      }
    }
  }
}

Graph from_edges(std::size_t num_vertices, std::span<const Edge> edges) {
  std::vector<Edge> sorted(edges.begin(), edges.end());
  for (const auto& [s, d] : sorted) {
    if (s >= num_vertices || d >= num_vertices) {
      throw DataError("edge " + std::to_string(s) + "->" + std::to_string(d) + " out of range");
    }
  }
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  Graph g;
  g.num_vertices = num_vertices;
  g.offsets.assign(num_vertices + 1, 0);
  g.targets.reserve(sorted.size());
  for (const auto& [s, d] : sorted) {
    ++g.offsets[s + 1];
    g.targets.push_back(d);
  }
  std::partial_sum(g.offsets.begin(), g.offsets.end(), g.offsets.begin());
  g.features = Matrix(num_vertices, 0);
  return g;
}

Graph with_edges(const Graph& g, std::span<const Edge> edges) {
  Graph structure = from_edges(g.num_vertices, edges);
  Graph out = g;
  out.offsets = std::move(structure.offsets);
  out.targets = std::move(structure.targets);
  return out;
}

Graph make_undirected(const Graph& g) {
  std::vector<Edge> edges = g.edge_list();
  const std::size_t n = edges.size();
  edges.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) edges.emplace_back(edges[i].second, edges[i].first);
  return with_edges(g, edges);
}

Graph add_self_loops(const Graph& g) {
  std::vector<Edge> edges = g.edge_list();
  for (std::size_t v = 0; v < g.num_vertices; ++v) edges.emplace_back(v, v);
  return with_edges(g, edges);
}

Graph remove_self_loops(const Graph& g) {
  std::vector<Edge> edges = g.edge_list();
  std::erase_if(edges, [](const Edge& e) { return e.first == e.second; });
  return with_edges(g, edges);
}

Graph normalize_features(const Graph& g) {
  Graph out = g;
  for (std::size_t v = 0; v < out.num_vertices; ++v) {
    auto row = out.features.row(v);
    double s = 0.0;
    for (double x : row) s += std::abs(x);
    if (s == 0.0) continue;
    for (double& x : row) x /= s;
  }
  return out;
}

double edge_homophily(const Graph& g) {
  std::size_t same = 0, total = 0;
  for (std::size_t v = 0; v < g.num_vertices; ++v) {
    for (std::size_t u : g.neighbors(v)) {
      if (u == v || g.labels[u] < 0 || g.labels[v] < 0) continue;
      ++total;
      if (g.labels[u] == g.labels[v]) ++same;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(same) / static_cast<double>(total);
}

Neighborhood neighborhood_1hop(const Graph& g, std::size_t v) {
  Neighborhood nb;
  nb.root = v;
  auto row = g.neighbors(v);
  nb.members.assign(row.begin(), row.end());
  auto it = std::find(nb.members.begin(), nb.members.end(), v);
  if (it == nb.members.end()) {
    nb.root_pos = nb.members.size();
    nb.members.push_back(v);
  } else {
    nb.root_pos = static_cast<std::size_t>(it - nb.members.begin());
  }
  return nb;
}

Neighborhood sample_khop(const Graph& g, std::size_t v, std::size_t k, std::size_t cap,
                         Rng& rng) {
  if (k == 0 || cap == 0) throw ConfigError("sample_khop requires k >= 1 and cap >= 1");
  Neighborhood nb;
  nb.root = v;
  nb.root_pos = 0;
  nb.members.push_back(v);
  std::vector<std::uint8_t> seen(g.num_vertices, 0);
  seen[v] = 1;
  std::vector<std::size_t> layer{v};
  for (std::size_t depth = 0; depth < k && nb.members.size() < cap; ++depth) {
    std::vector<std::size_t> frontier;
    for (std::size_t w : layer) {
      for (std::size_t u : g.neighbors(w)) {
        if (!seen[u]) {
          seen[u] = 1;
          frontier.push_back(u);
        }
      }
    }
    if (frontier.empty()) break;
    std::sort(frontier.begin(), frontier.end());
    const std::size_t room = cap - nb.members.size();
    if (frontier.size() > room) {
      // Partial Fisher-Yates: the first `room` entries form a uniform sample.
      for (std::size_t i = 0; i < room; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, frontier.size() - 1);
        std::swap(frontier[i], frontier[pick(rng)]);
      }
      frontier.resize(room);
      std::sort(frontier.begin(), frontier.end());
      nb.members.insert(nb.members.end(), frontier.begin(), frontier.end());
      break;
    }
    nb.members.insert(nb.members.end(), frontier.begin(), frontier.end());
    layer = std::move(frontier);
  }
  return nb;
}

InducedGraph induced_subgraph(const Graph& g, std::span<const std::uint8_t> keep) {
  if (keep.size() != g.num_vertices) throw DimensionError("induced_subgraph: mask length mismatch");
  InducedGraph out;
  std::vector<std::size_t> new_id(g.num_vertices, kUnlimited);
  for (std::size_t v = 0; v < g.num_vertices; ++v) {
    if (keep[v]) {
      new_id[v] = out.mapping.size();
      out.mapping.push_back(v);
    }
  }
  const std::size_t n = out.mapping.size();
  std::vector<Edge> edges;
  for (std::size_t v : out.mapping) {
    for (std::size_t u : g.neighbors(v)) {
      if (keep[u]) edges.emplace_back(new_id[v], new_id[u]);
    }
  }
  Graph& s = out.graph;
  s = from_edges(n, edges);
  s.num_classes = g.num_classes;
  s.features = Matrix(n, g.features.cols());
  for (std::size_t i = 0; i < n; ++i) {
    auto src = g.features.row(out.mapping[i]);
    std::copy(src.begin(), src.end(), s.features.row(i).begin());
  }
  auto gather_int = [&](const auto& src, auto& dst) {
    if (src.empty()) return;
    dst.resize(n);
    for (std::size_t i = 0; i < n; ++i) dst[i] = src[out.mapping[i]];
  };
  gather_int(g.labels, s.labels);
  gather_int(g.targets_reg, s.targets_reg);
  gather_int(g.masks.train, s.masks.train);
  gather_int(g.masks.val, s.masks.val);
  gather_int(g.masks.test, s.masks.test);
  gather_int(g.masks.observed, s.masks.observed);
  if (g.graph_ids) {
    s.graph_ids.emplace();
    gather_int(*g.graph_ids, *s.graph_ids);
    s.graph_targets = g.graph_targets;
  }
  return out;
}

InductiveSplit inductive_split(const Graph& g, InductiveMode mode, Rng& rng) {
  if (g.masks.train.size() != g.num_vertices || g.masks.test.size() != g.num_vertices) {
    throw DataError("inductive split requires populated train/val/test masks");
  }
  InductiveSplit split;
  split.eval_graph = g;
  Masks& em = split.eval_graph.masks;
  if (em.val.empty()) em.val.assign(g.num_vertices, 0);
  em.observed.assign(g.num_vertices, 0);

  Mask keep(g.num_vertices, 0);
  for (std::size_t v = 0; v < g.num_vertices; ++v) keep[v] = em.train[v];

  if (mode == InductiveMode::kProduction) {
    std::vector<std::size_t> test;
    for (std::size_t v = 0; v < g.num_vertices; ++v)
      if (em.test[v]) test.push_back(v);
    std::shuffle(test.begin(), test.end(), rng);
    const auto observed =
        static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(test.size())));
    for (std::size_t i = 0; i < observed; ++i) {
      em.observed[test[i]] = 1;
      em.test[test[i]] = 0;
    }
    for (std::size_t v = 0; v < g.num_vertices; ++v) {
      keep[v] = em.train[v] || em.val[v] || em.observed[v];
    }
  }

  InducedGraph induced = induced_subgraph(split.eval_graph, keep);
  split.train_graph = std::move(induced.graph);
  split.train_mapping = std::move(induced.mapping);
  split.train_graph_edgeless = split.train_graph.num_edges() == 0;
  if (split.train_graph.num_vertices == 0 || split.train_graph_edgeless) {
    std::cerr << "warning: inductive training graph has " << split.train_graph.num_vertices
              << " vertices and no edges\n";
  }
  return split;
}

Masks per_class_split(std::span<const int> labels, std::size_t num_classes,
                      std::size_t train_per_class, std::size_t val_per_class, Rng& rng) {
  const std::size_t n = labels.size();
  Masks m;
  m.train.assign(n, 0);
  m.val.assign(n, 0);
  m.test.assign(n, 0);
  m.observed.assign(n, 0);
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t v = 0; v < n; ++v) {
    if (labels[v] >= 0) by_class[static_cast<std::size_t>(labels[v])].push_back(v);
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    auto& members = by_class[c];
    if (members.size() < train_per_class + val_per_class) {
      throw ConfigError("class " + std::to_string(c) + " has " + std::to_string(members.size()) +
                        " vertices, fewer than the " +
                        std::to_string(train_per_class + val_per_class) +
                        " needed for train and validation masks");
    }
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (i < train_per_class) {
        m.train[members[i]] = 1;
      } else if (i < train_per_class + val_per_class) {
        m.val[members[i]] = 1;
      } else {
        m.test[members[i]] = 1;
      }
    }
  }
  return m;
}

Graph generate_sbm(const SbmOptions& opts, Rng& rng) {
  if (!(opts.p_in >= 0.0 && opts.p_in <= 1.0) || !(opts.p_out >= 0.0 && opts.p_out <= 1.0)) {
    throw ConfigError("SBM edge probabilities must lie in [0, 1]");
  }
  if (opts.classes == 0 || opts.n == 0) throw ConfigError("SBM needs n >= 1 and classes >= 1");
  if (opts.feat_dim < opts.classes) {
    throw ConfigError("SBM feature dimension must be at least the number of classes");
  }
  if (!(opts.noise >= 0.0)) throw ConfigError("SBM noise must be non-negative");
  const std::size_t n = opts.n;
  const std::size_t smallest_block = n / opts.classes;
  if (smallest_block < opts.train_per_class + opts.val_per_class) {
    throw ConfigError("SBM blocks of " + std::to_string(smallest_block) +
                      " vertices are too small for the train/val masks");
  }
  std::vector<int> labels(n);
  for (std::size_t v = 0; v < n; ++v) labels[v] = static_cast<int>(v * opts.classes / n);

  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<Edge> edges;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      const double p = labels[u] == labels[v] ? opts.p_in : opts.p_out;
      if (coin(rng) < p) {
        edges.emplace_back(u, v);
        edges.emplace_back(v, u);
      }
    }
  }
  Graph g = from_edges(n, edges);
  g.num_classes = opts.classes;
  g.labels = labels;

  std::normal_distribution<double> gauss(0.0, 1.0);
  g.features = Matrix(n, opts.feat_dim);
  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t j = 0; j < opts.feat_dim; ++j) {
      const double signal = static_cast<std::size_t>(labels[v]) == j ? 1.0 : 0.0;
      g.features(v, j) = signal + opts.noise * gauss(rng);
    }
  }
  g.masks = per_class_split(labels, opts.classes, opts.train_per_class, opts.val_per_class, rng);
  return g;
}

}  // namespace hyperagg
