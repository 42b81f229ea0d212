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

#include "hyperagg/models.hpp"

#include <cmath>
#include <numeric>

#include "hyperagg/error.hpp"

namespace hyperagg {

std::string to_string(Arch a) {
  switch (a) {
    case Arch::kGHC: return "GHC";
    case Arch::kGHM: return "GHM";
    case Arch::kGCN: return "GCN";
    case Arch::kMLP: return "MLP";
  }
  return "?";
}

std::string to_string(Readout r) { return r == Readout::kRoot ? "root" : "mean"; }

std::string to_string(Task t) {
  switch (t) {
    case Task::kVertexClassification: return "vertex_cls";
    case Task::kGraphClassification: return "graph_cls";
    case Task::kGraphRegression: return "graph_reg";
  }
  return "?";
}

namespace {

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw ConfigError(std::string(name) + " must lie in [0, 1), got " + std::to_string(p));
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (depth < 1) throw ConfigError("depth must be >= 1");
  if (hidden < 1) throw ConfigError("hidden must be >= 1");
  if (mixing < 1) throw ConfigError("mixing must be >= 1");
  if (k_hop < 1) throw ConfigError("k_hop must be >= 1");
  if (subgraph_cap < 1) throw ConfigError("subgraph_cap must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  check_probability(pre_dropout, "pre_dropout");
  check_probability(post_dropout, "post_dropout");
  check_probability(mixing_dropout, "mixing_dropout");
  check_probability(input_dropout, "input_dropout");
  check_probability(model_dropout, "model_dropout");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

namespace {

Matrix glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-bound, bound);
  Matrix w(fan_in, fan_out);
  for (double& v : w.data()) v = u(rng);
  return w;
}

NormParams init_norm(std::size_t h) { return NormParams{Matrix(1, h, 1.0), Matrix(1, h, 0.0)}; }

}  // namespace

Linear init_linear(std::size_t in, std::size_t out, Rng& rng) {
  return Linear{glorot(in, out, rng), Matrix(1, out, 0.0)};
}

HAParams init_ha_params(const ModelConfig& config, Rng& rng) {
  HAParams ha;
  ha.w_a = glorot(config.hidden, config.hidden, rng);
  ha.w_b = glorot(config.hidden, config.mixing, rng);
  ha.pre_activation = config.pre_activation;
  ha.pre_norm = config.pre_norm;
  ha.pre_dropout = config.pre_dropout;
  ha.post_norm = config.post_norm;
  ha.post_dropout = config.post_dropout;
  ha.mixing_dropout = config.mixing_dropout;
  ha.pre_ln = init_norm(config.hidden);
  ha.post_ln = init_norm(config.hidden);
  return ha;
}

ModelParams init_params(const ModelConfig& config, std::size_t in_dim, std::size_t out_dim,
                        Rng& rng) {
  config.validate();
  if (in_dim == 0 || out_dim == 0) throw ConfigError("model needs positive input/output width");
  ModelParams p;
  p.config = config;
  p.in_dim = in_dim;
  p.out_dim = out_dim;
  const std::size_t h = config.hidden;
  switch (config.arch) {
    case Arch::kGHC:
    case Arch::kGHM:
      for (std::size_t b = 0; b < config.depth; ++b) {
        BlockParams block;
        block.ff_in = init_linear(b == 0 ? in_dim : h, h, rng);
        block.ha = init_ha_params(config, rng);
        block.ff_out = init_linear(config.root_connection ? 2 * h : h, h, rng);
        block.root_connection = config.root_connection;
        block.residual = config.residual;
        block.readout = config.readout;
        block.dropout = config.model_dropout;
        p.blocks.push_back(std::move(block));
      }
      break;
    case Arch::kGCN:
    case Arch::kMLP:
      for (std::size_t l = 0; l < config.depth; ++l) {
        p.layers.push_back(init_linear(l == 0 ? in_dim : h, h, rng));
      }
      break;
  }
  p.head = init_linear(h, out_dim, rng);
  return p;
}

std::vector<NamedParam> ModelParams::named_parameters() {
  std::vector<NamedParam> out;
  auto add_linear = [&](const std::string& prefix, Linear& l) {
    out.push_back({prefix + ".weight", &l.weight});
    out.push_back({prefix + ".bias", &l.bias});
  };
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const std::string prefix = "block" + std::to_string(b);
    BlockParams& block = blocks[b];
    add_linear(prefix + ".ff_in", block.ff_in);
    out.push_back({prefix + ".ha.w_a", &block.ha.w_a});
    out.push_back({prefix + ".ha.w_b", &block.ha.w_b});
    if (block.ha.pre_norm) {
      out.push_back({prefix + ".ha.pre_norm.gain", &block.ha.pre_ln.gain});
      out.push_back({prefix + ".ha.pre_norm.bias", &block.ha.pre_ln.bias});
    }
    if (block.ha.post_norm) {
      out.push_back({prefix + ".ha.post_norm.gain", &block.ha.post_ln.gain});
      out.push_back({prefix + ".ha.post_norm.bias", &block.ha.post_ln.bias});
    }
    add_linear(prefix + ".ff_out", block.ff_out);
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    add_linear("layer" + std::to_string(l), layers[l]);
  }
  add_linear("head", head);
  return out;
}

std::size_t ModelParams::parameter_count() {
  std::size_t n = 0;
  for (const auto& p : named_parameters()) n += p.matrix->size();
  return n;
}

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

Rng& ForwardContext::dropout() const {
  if (dropout_rng == nullptr) throw std::logic_error("forward context has no dropout stream");
  return *dropout_rng;
}

Rng& ForwardContext::sampling() const {
  if (sample_rng == nullptr) throw std::logic_error("forward context has no sampling stream");
  return *sample_rng;
}

namespace {

Var maybe_dropout(Var x, double p, ForwardContext& ctx) {
  if (!ctx.training || p == 0.0) return x;
  return dropout(x, p, true, ctx.dropout());
}

}  // namespace

Var linear(Var x, Linear& layer, ForwardContext& ctx) {
  return add(matmul(x, ctx.param(layer.weight)), ctx.param(layer.bias));
}

HAPrepared ha_prepare(Var x, HAParams& params, ForwardContext& ctx) {
  if (x.rows() == 0) throw DataError("empty neighborhood");
  if (x.cols() != params.w_a.rows()) {
    throw DimensionError("hyper_aggregate: input width " + std::to_string(x.cols()) +
                         " does not match W_A " + params.w_a.shape_string());
  }
  if (params.pre_activation) x = gelu(x);
  if (params.pre_norm) {
    x = layer_norm(x, ctx.param(params.pre_ln.gain), ctx.param(params.pre_ln.bias));
  }
  x = maybe_dropout(x, params.pre_dropout, ctx);
  Var w_tar = matmul(gelu(matmul(x, ctx.param(params.w_a))), ctx.param(params.w_b));
  Var mix_input = maybe_dropout(x, params.mixing_dropout, ctx);
  return HAPrepared{mix_input, w_tar};
}

Var ha_target_mix(Var mix_input, Var w_tar) {
  // Channel mixing: each of the h channels is a length-n signal over the
  // neighborhood, mapped n -> m by W_tar and back m -> n by W_tar^T.
  Var hidden = gelu(matmul(transpose(mix_input), w_tar));  // h x m
  return transpose(matmul(hidden, transpose(w_tar)));      // n x h
}

Var ha_finish(Var out, HAParams& params, ForwardContext& ctx) {
  if (params.post_norm) {
    out = layer_norm(out, ctx.param(params.post_ln.gain), ctx.param(params.post_ln.bias));
  }
  return maybe_dropout(out, params.post_dropout, ctx);
}

Var hyper_aggregate(Var xn, HAParams& params, ForwardContext& ctx) {
  HAPrepared prep = ha_prepare(xn, params, ctx);
  return ha_finish(ha_target_mix(prep.mix_input, prep.w_tar), params, ctx);
}

namespace {

// ff_out(dropout(gelu([agg | h0]))) (+ x)
Var close_block(Var x, Var h0, Var agg, BlockParams& params, ForwardContext& ctx) {
  Var joined = params.root_connection ? concat_cols(agg, h0) : agg;
  Var out = linear(maybe_dropout(gelu(joined), params.dropout, ctx), params.ff_out, ctx);
  if (params.residual && x.cols() == out.cols()) out = add(out, x);
  return out;
}

}  // namespace

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// Readout selector of one neighborhood: w at the root, or the mean of w.
void mix_selector(const Matrix& w, const Neighborhood& nb, Readout readout,
                  std::vector<double>& sel) {
  const std::size_t m = w.cols();
  if (readout == Readout::kRoot) {
    auto row = w.row(nb.members[nb.root_pos]);
    std::copy(row.begin(), row.end(), sel.begin());
    return;
  }
  std::fill(sel.begin(), sel.end(), 0.0);
  for (std::size_t j : nb.members) {
    auto row = w.row(j);
    for (std::size_t k = 0; k < m; ++k) sel[k] += row[k];
  }
  const double inv = 1.0 / static_cast<double>(nb.members.size());
  for (double& v : sel) v *= inv;
}

// pre = sum_{j in nb} x_j^T w_j, stored h x m row-major.
void mix_pre_activation(const Matrix& x, const Matrix& w, const Neighborhood& nb,
                        std::vector<double>& pre) {
  const std::size_t h = x.cols();
  const std::size_t m = w.cols();
  std::fill(pre.begin(), pre.end(), 0.0);
  for (std::size_t j : nb.members) {
    auto xr = x.row(j);
    auto wr = w.row(j);
    for (std::size_t c = 0; c < h; ++c) {
      const double a = xr[c];
      if (a == 0.0) continue;
      double* dst = pre.data() + c * m;
      for (std::size_t k = 0; k < m; ++k) dst[k] += a * wr[k];
    }
  }
}

// Fused gather + target network + readout for every neighborhood:
//   out_i = s_i * gelu(sum_{j in N(i)} x_j^T w_j)^T
// where s_i is the readout selector. The h x m pre-activation is recomputed
// in the backward pass instead of stored.
Var neighborhood_mix(Var x, Var w, std::span<const Neighborhood> neighborhoods, Readout readout) {
  if (x.tape != w.tape) throw std::logic_error("neighborhood_mix: operands on different tapes");
  const Matrix& xv = x.value();
  const Matrix& wv = w.value();
  if (xv.rows() != wv.rows()) {
    throw DimensionError("neighborhood_mix: " + xv.shape_string() + " vs " + wv.shape_string());
  }
  const std::size_t h = xv.cols();
  const std::size_t m = wv.cols();
  for (const Neighborhood& nb : neighborhoods) {
    if (nb.members.empty()) throw DataError("empty neighborhood");
    for (std::size_t j : nb.members) {
      if (j >= xv.rows()) throw DimensionError("neighborhood_mix: member out of range");
    }
  }

  Matrix out(neighborhoods.size(), h);
  std::vector<double> pre(h * m), sel(m);
  for (std::size_t i = 0; i < neighborhoods.size(); ++i) {
    mix_pre_activation(xv, wv, neighborhoods[i], pre);
    mix_selector(wv, neighborhoods[i], readout, sel);
    auto dst = out.row(i);
    for (std::size_t c = 0; c < h; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < m; ++k) acc += sel[k] * gelu_scalar(pre[c * m + k]);
      dst[c] = acc;
    }
  }

  const std::size_t xid = x.id;
  const std::size_t wid = w.id;
  std::vector<Neighborhood> nbs(neighborhoods.begin(), neighborhoods.end());
  return x.tape->record(std::move(out), [xid, wid, h, m, readout, nbs = std::move(nbs)](
                                            Tape& t, std::size_t self) {
    const Matrix& xv = t.value(xid);
    const Matrix& wv = t.value(wid);
    std::span<const double> g = t.grad(self);
    std::span<double> gx = t.grad(xid);
    std::span<double> gw = t.grad(wid);
    std::vector<double> pre(h * m), sel(m), dpre(h * m), dsel(m);
    for (std::size_t i = 0; i < nbs.size(); ++i) {
      const Neighborhood& nb = nbs[i];
      mix_pre_activation(xv, wv, nb, pre);
      mix_selector(wv, nb, readout, sel);
      const double* gi = g.data() + i * h;
      std::fill(dsel.begin(), dsel.end(), 0.0);
      for (std::size_t c = 0; c < h; ++c) {
        for (std::size_t k = 0; k < m; ++k) {
          // One erf per entry for both gelu(z) and gelu'(z).
          const double z = pre[c * m + k];
          const double cdf = 0.5 * (1.0 + std::erf(z * kInvSqrt2));
          const double pdf = kInvSqrt2Pi * std::exp(-0.5 * z * z);
          dsel[k] += gi[c] * z * cdf;
          dpre[c * m + k] = gi[c] * sel[k] * (cdf + z * pdf);
        }
      }
      for (std::size_t j : nb.members) {
        auto xr = xv.row(j);
        auto wr = wv.row(j);
        double* gxr = gx.data() + j * h;
        double* gwr = gw.data() + j * m;
        for (std::size_t c = 0; c < h; ++c) {
          const double* dp = dpre.data() + c * m;
          double acc = 0.0;
          for (std::size_t k = 0; k < m; ++k) {
            acc += dp[k] * wr[k];
            gwr[k] += xr[c] * dp[k];
          }
          gxr[c] += acc;
        }
      }
      if (readout == Readout::kRoot) {
        double* gwr = gw.data() + nb.members[nb.root_pos] * m;
        for (std::size_t k = 0; k < m; ++k) gwr[k] += dsel[k];
      } else {
        const double inv = 1.0 / static_cast<double>(nb.members.size());
        for (std::size_t j : nb.members) {
          double* gwr = gw.data() + j * m;
          for (std::size_t k = 0; k < m; ++k) gwr[k] += dsel[k] * inv;
        }
      }
    }
  });
}

}  // namespace

Var ghc_block(Var x, std::span<const Neighborhood> neighborhoods, BlockParams& params,
              ForwardContext& ctx) {
  if (neighborhoods.size() != x.rows()) {
    throw DimensionError("ghc_block: " + std::to_string(neighborhoods.size()) +
                         " neighborhoods for input " + x.value().shape_string());
  }
  Var h0 = linear(x, params.ff_in, ctx);
  // The input bundle and hypernetwork act row-wise, so they are evaluated
  // once for all vertices and gathered per neighborhood. Row r of the target
  // output is w_r * hidden^T, and the mean of all rows is mean(w) * hidden^T
  // since the second layer is linear.
  HAPrepared prep = ha_prepare(h0, params.ha, ctx);
  Var agg = ha_finish(neighborhood_mix(prep.mix_input, prep.w_tar, neighborhoods, params.readout),
                      params.ha, ctx);
  return close_block(x, h0, agg, params, ctx);
}

Var ghc_block(Var x, const Graph& g, BlockParams& params, ForwardContext& ctx) {
  std::vector<Neighborhood> nbs;
  nbs.reserve(g.num_vertices);
  for (std::size_t v = 0; v < g.num_vertices; ++v) nbs.push_back(neighborhood_1hop(g, v));
  return ghc_block(x, nbs, params, ctx);
}

Var ghm_block(Var xn, BlockParams& params, ForwardContext& ctx) {
  Var h0 = linear(xn, params.ff_in, ctx);
  Var agg = hyper_aggregate(h0, params.ha, ctx);
  return close_block(xn, h0, agg, params, ctx);
}

SparseWeights gcn_normalized_adjacency(const Graph& g) {
  SparseWeights s;
  s.rows = s.cols = g.num_vertices;
  s.offsets = g.offsets;
  s.targets = g.targets;
  s.weights.resize(g.targets.size());
  std::vector<double> inv_sqrt(g.num_vertices);
  for (std::size_t v = 0; v < g.num_vertices; ++v) {
    if (g.degree(v) == 0) {
      throw DataError("GCN: vertex " + std::to_string(v) +
                      " has no edges; add self loops (add_self_loops) first");
    }
    inv_sqrt[v] = 1.0 / std::sqrt(static_cast<double>(g.degree(v)));
  }
  for (std::size_t v = 0; v < g.num_vertices; ++v) {
    for (std::size_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e) {
      s.weights[e] = inv_sqrt[v] * inv_sqrt[g.targets[e]];
    }
  }
  return s;
}

Var gcn_layer(Var x, const SparseWeights& adjacency, Linear& layer, ForwardContext& ctx) {
  Var xw = matmul(x, ctx.param(layer.weight));
  return add(propagate(adjacency, xw), ctx.param(layer.bias));
}

Var graph_readout(Var embeddings, std::span<const int> graph_ids, std::size_t num_graphs) {
  return segment_mean(embeddings, graph_ids, num_graphs);
}

// ---------------------------------------------------------------------------
// Whole models
// ---------------------------------------------------------------------------

PreparedGraph prepare_graph(const Graph& g, const ModelConfig& config, Rng& sample_rng) {
  PreparedGraph pg;
  pg.graph = &g;
  pg.input = config.normalize_input ? normalize_features(g).features : g.features;
  switch (config.arch) {
    case Arch::kGHC:
      pg.neighborhoods.reserve(g.num_vertices);
      for (std::size_t v = 0; v < g.num_vertices; ++v) {
        pg.neighborhoods.push_back(neighborhood_1hop(g, v));
      }
      break;
    case Arch::kGCN:
      pg.gcn_adjacency = gcn_normalized_adjacency(g);
      break;
    case Arch::kGHM:
      if (config.freeze_sampling) {
        pg.frozen_samples.reserve(g.num_vertices);
        for (std::size_t v = 0; v < g.num_vertices; ++v) {
          pg.frozen_samples.push_back(
              sample_khop(g, v, config.k_hop, config.subgraph_cap, sample_rng));
        }
      }
      break;
    case Arch::kMLP:
      break;
  }
  return pg;
}

namespace {

Var finish_model(Var embeddings, const PreparedGraph& pg, ModelParams& params,
                 ForwardContext& ctx) {
  Var x = embeddings;
  if (params.config.is_graph_task()) {
    const Graph& g = *pg.graph;
    if (!g.graph_ids) throw DataError("graph-level task requires graph ids");
    x = graph_readout(x, *g.graph_ids, g.num_graphs());
  }
  return linear(x, params.head, ctx);
}

Var between_layers(Var x, const ModelConfig& config, ForwardContext& ctx) {
  return maybe_dropout(gelu(x), config.model_dropout, ctx);
}

Var input_var(const PreparedGraph& pg, const ModelConfig& config, ForwardContext& ctx) {
  Var x = ctx.tape.constant(pg.input);
  return maybe_dropout(x, config.input_dropout, ctx);
}

}  // namespace

Var forward_ghc(const PreparedGraph& pg, ModelParams& params, ForwardContext& ctx) {
  const ModelConfig& config = params.config;
  Var x = input_var(pg, config, ctx);
  for (BlockParams& block : params.blocks) {
    x = between_layers(ghc_block(x, pg.neighborhoods, block, ctx), config, ctx);
  }
  return finish_model(x, pg, params, ctx);
}

Var forward_gcn(const PreparedGraph& pg, ModelParams& params, ForwardContext& ctx) {
  const ModelConfig& config = params.config;
  Var x = input_var(pg, config, ctx);
  for (Linear& layer : params.layers) {
    x = between_layers(gcn_layer(x, pg.gcn_adjacency, layer, ctx), config, ctx);
  }
  return finish_model(x, pg, params, ctx);
}

Var mlp_forward(const PreparedGraph& pg, ModelParams& params, ForwardContext& ctx) {
  const ModelConfig& config = params.config;
  Var x = input_var(pg, config, ctx);
  for (Linear& layer : params.layers) x = between_layers(linear(x, layer, ctx), config, ctx);
  return finish_model(x, pg, params, ctx);
}

Var forward_ghm(const PreparedGraph& pg, ModelParams& params, std::span<const std::size_t> batch,
                ForwardContext& ctx) {
  const ModelConfig& config = params.config;
  const Graph& g = *pg.graph;
  if (batch.empty()) throw DataError("forward_ghm: empty batch");
  Var features = ctx.tape.constant(pg.input);
  std::vector<Var> roots;
  roots.reserve(batch.size());
  for (std::size_t v : batch) {
    if (v >= g.num_vertices) throw DataError("forward_ghm: vertex out of range");
    Neighborhood sampled;
    const Neighborhood* nb = nullptr;
    if (!pg.frozen_samples.empty()) {
      nb = &pg.frozen_samples[v];
    } else {
      sampled = sample_khop(g, v, config.k_hop, config.subgraph_cap, ctx.sampling());
      nb = &sampled;
    }
    Var xn = maybe_dropout(row_select(features, nb->members), config.input_dropout, ctx);
    for (BlockParams& block : params.blocks) {
      xn = between_layers(ghm_block(xn, block, ctx), config, ctx);
    }
    const std::size_t pos[1] = {nb->root_pos};
    roots.push_back(row_select(xn, pos));
  }
  Var x = stack_rows(roots);
  if (config.is_graph_task() && batch.size() != g.num_vertices) {
    throw DataError("forward_ghm: graph-level tasks need every vertex in the batch");
  }
  return finish_model(x, pg, params, ctx);
}

Var forward_model(const PreparedGraph& pg, ModelParams& params,
                  std::span<const std::size_t> batch, ForwardContext& ctx) {
  switch (params.config.arch) {
    case Arch::kGHC: return forward_ghc(pg, params, ctx);
    case Arch::kGCN: return forward_gcn(pg, params, ctx);
    case Arch::kMLP: return mlp_forward(pg, params, ctx);
    case Arch::kGHM: {
      if (!batch.empty()) return forward_ghm(pg, params, batch, ctx);
      std::vector<std::size_t> all(pg.graph->num_vertices);
      std::iota(all.begin(), all.end(), std::size_t{0});
      return forward_ghm(pg, params, all, ctx);
    }
  }
  throw std::logic_error("unknown architecture");
}

}  // namespace hyperagg
