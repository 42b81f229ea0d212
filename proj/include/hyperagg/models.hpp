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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hyperagg/graph.hpp"
#include "hyperagg/matrix.hpp"
#include "hyperagg/rng.hpp"
#include "hyperagg/tape.hpp"

namespace hyperagg {

enum class Arch { kGHC, kGHM, kGCN, kMLP };
enum class Readout { kRoot, kMean };
enum class Task { kVertexClassification, kGraphClassification, kGraphRegression };

std::string to_string(Arch a);
std::string to_string(Readout r);
std::string to_string(Task t);

/// Every architectural and training knob of a model.
struct ModelConfig {
  Arch arch = Arch::kGHC;
  Task task = Task::kVertexClassification;
  std::size_t depth = 2;
  std::size_t hidden = 64;
  std::size_t mixing = 32;

  // HyperAggregation: the "input" bundle sits in front of the hypernetwork
  // and target network, the "output" bundle after the target network.
  bool pre_activation = true;
  bool pre_norm = false;
  double pre_dropout = 0.0;
  bool post_norm = true;
  double post_dropout = 0.0;
  double mixing_dropout = 0.0;

  bool root_connection = true;
  bool residual = false;
  Readout readout = Readout::kRoot;  // GHC only

  // GHM sampling.
  std::size_t k_hop = 2;
  std::size_t subgraph_cap = 16;
  std::size_t batch_size = 64;
  bool freeze_sampling = false;

  // Dataset preprocessing.
  bool normalize_input = false;
  bool self_loops = true;
  bool undirected = true;

  double input_dropout = 0.0;
  double model_dropout = 0.5;
  double lr = 1e-2;
  double weight_decay = 5e-4;

  // Throws ConfigError on out-of-range values.
  void validate() const;
  bool is_graph_task() const { return task != Task::kVertexClassification; }
};

struct Linear {
  Matrix weight;  // in x out
  Matrix bias;    // 1 x out
};

struct NormParams {
  Matrix gain;  // 1 x h
  Matrix bias;  // 1 x h
};

/// Hypernetwork weights and the placement flags of one HyperAggregation.
struct HAParams {
  Matrix w_a;  // h x h
  Matrix w_b;  // h x m
  bool pre_activation = true;
  bool pre_norm = false;
  double pre_dropout = 0.0;
  bool post_norm = false;
  double post_dropout = 0.0;
  double mixing_dropout = 0.0;
  NormParams pre_ln;
  NormParams post_ln;

  // Trainable weights of the aggregation proper: h*h + h*m.
  std::size_t weight_count() const { return w_a.size() + w_b.size(); }
};

struct BlockParams {
  Linear ff_in;
  HAParams ha;
  Linear ff_out;  // input width 2h with root connection, h otherwise
  bool root_connection = true;
  bool residual = false;
  Readout readout = Readout::kRoot;
  double dropout = 0.0;
};

struct NamedParam {
  std::string name;
  Matrix* matrix;
};

struct ModelParams {
  ModelConfig config;
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::vector<BlockParams> blocks;  // GHC / GHM
  std::vector<Linear> layers;       // GCN / MLP
  Linear head;

  // Stable, ordered list of trainable matrices.
  std::vector<NamedParam> named_parameters();
  std::size_t parameter_count();
};

// Glorot-uniform weights, zero biases, unit norm gains.
ModelParams init_params(const ModelConfig& config, std::size_t in_dim, std::size_t out_dim,
                        Rng& rng);
HAParams init_ha_params(const ModelConfig& config, Rng& rng);
Linear init_linear(std::size_t in, std::size_t out, Rng& rng);

/// Per-forward state: the tape being recorded, mode, and random streams.
struct ForwardContext {
  Tape& tape;
  bool training = false;
  Rng* dropout_rng = nullptr;
  Rng* sample_rng = nullptr;

  Var param(Matrix& m) { return tape.parameter(m); }
  Rng& dropout() const;
  Rng& sampling() const;
};

Var linear(Var x, Linear& layer, ForwardContext& ctx);

// ---------------------------------------------------------------------------
// HyperAggregation
// ---------------------------------------------------------------------------

// Row-wise part of HA applied to every input row: the optional input bundle
// (activation, layer norm, dropout) followed by the hypernetwork
// W_tar = gelu(X W_A) W_B. `mix_input` is the (mixing-dropout) copy of X that
// enters the target network. Rows of both outputs stay aligned with X.
struct HAPrepared {
  Var mix_input;  // n x h
  Var w_tar;      // n x m
};
HAPrepared ha_prepare(Var x, HAParams& params, ForwardContext& ctx);

// Target network with tied weights: (gelu(X^T W_tar) W_tar^T)^T, n x h.
Var ha_target_mix(Var mix_input, Var w_tar);

// Optional output bundle (layer norm, dropout).
Var ha_finish(Var out, HAParams& params, ForwardContext& ctx);

// Full HyperAggregation over one neighborhood's n x h embedding matrix.
Var hyper_aggregate(Var xn, HAParams& params, ForwardContext& ctx);

// ---------------------------------------------------------------------------
// Architectures
// ---------------------------------------------------------------------------

// Graph-dependent data computed once per graph and reused across epochs.
struct PreparedGraph {
  const Graph* graph = nullptr;
  Matrix input;                             // features, row-normalized if configured
  std::vector<Neighborhood> neighborhoods;  // GHC: 1-hop per vertex
  SparseWeights gcn_adjacency;              // GCN: D^-1/2 (A) D^-1/2
  std::vector<Neighborhood> frozen_samples; // GHM with freeze_sampling
};
PreparedGraph prepare_graph(const Graph& g, const ModelConfig& config, Rng& sample_rng);

// Symmetric normalization of the (self-looped) adjacency. Throws DataError
// for a vertex without edges.
SparseWeights gcn_normalized_adjacency(const Graph& g);

// One GraphHyperConv block over all vertices of a graph.
Var ghc_block(Var x, std::span<const Neighborhood> neighborhoods, BlockParams& params,
              ForwardContext& ctx);
Var ghc_block(Var x, const Graph& g, BlockParams& params, ForwardContext& ctx);

// One GraphHyperMixer block over a sampled subgraph treated as fully connected.
Var ghm_block(Var xn, BlockParams& params, ForwardContext& ctx);

// GCN propagation D^-1/2 A D^-1/2 X W + b.
Var gcn_layer(Var x, const SparseWeights& adjacency, Linear& layer, ForwardContext& ctx);

// Per-graph mean pooling of vertex rows.
Var graph_readout(Var embeddings, std::span<const int> graph_ids, std::size_t num_graphs);

// Whole-graph forward passes. Vertex tasks return |V| x out_dim logits, graph
// tasks num_graphs x out_dim.
Var forward_ghc(const PreparedGraph& pg, ModelParams& params, ForwardContext& ctx);
Var forward_gcn(const PreparedGraph& pg, ModelParams& params, ForwardContext& ctx);
Var mlp_forward(const PreparedGraph& pg, ModelParams& params, ForwardContext& ctx);
// One logits row per batch vertex (vertex tasks). For graph tasks the batch
// must cover every vertex and the result is pooled per graph.
Var forward_ghm(const PreparedGraph& pg, ModelParams& params, std::span<const std::size_t> batch,
                ForwardContext& ctx);

// Dispatches on params.config.arch. `batch` is only consulted by GHM; empty
// means all vertices.
Var forward_model(const PreparedGraph& pg, ModelParams& params,
                  std::span<const std::size_t> batch, ForwardContext& ctx);

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

// Canonical key=value rendering of a config, one key per line.
std::string describe(const ModelConfig& config);

// Binary checkpoint: magic, config header, then length-prefixed named
// matrices as little-endian doubles.
void save_checkpoint(const std::string& path, ModelParams& params);
// Loads into `params`, which must have been initialized for the same
// configuration and dimensions; throws DataError on any mismatch.
void load_checkpoint(const std::string& path, ModelParams& params);

}  // namespace hyperagg
