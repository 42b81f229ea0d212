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

#include <algorithm>
#include <cmath>
#include <random>

#include "cli.hpp"
#include "hyperagg/error.hpp"

namespace hyperagg::cli {

double relative_error(std::span<const double> analytic, std::span<const double> reference) {
  if (analytic.size() != reference.size()) throw DimensionError("relative_error: size mismatch");
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - reference[i]));
    scale = std::max(scale, std::abs(reference[i]));
  }
  return diff / std::max(scale, 1e-8);
}

Graph gradcheck_graph(std::uint64_t seed) {
  constexpr std::size_t n = 6;
  Rng rng = derive_rng(seed, "gradcheck-graph");
  std::bernoulli_distribution coin(0.4);
  std::vector<Edge> edges;
  for (std::size_t u = 0; u < n; ++u) {
    edges.emplace_back(u, (u + 1) % n);  // ring keeps it connected
    for (std::size_t v = u + 2; v < n; ++v)
      if (coin(rng)) edges.emplace_back(u, v);
  }
  Graph g = add_self_loops(make_undirected(from_edges(n, edges)));
  std::normal_distribution<double> normal;
  g.features = Matrix(n, 3);
  for (double& v : g.features.data()) v = normal(rng);
  g.num_classes = 2;
  g.labels = {0, 1, 1, 0, 1, 0};
  g.masks.train.assign(n, 1);
  g.masks.val.assign(n, 0);
  g.masks.test.assign(n, 0);
  g.masks.observed.assign(n, 0);
  return g;
}

std::vector<GradcheckEntry> gradient_check(Arch arch, std::size_t depth, std::size_t hidden,
                                           std::size_t mixing, std::uint64_t seed) {
  const Graph g = gradcheck_graph(seed);
  ModelConfig config;
  config.arch = arch;
  config.depth = depth;
  config.hidden = hidden;
  config.mixing = mixing;
  config.model_dropout = 0.0;
  config.pre_norm = true;  // exercise both layer norms
  config.validate();

  Rng init = derive_rng(seed, "init");
  ModelParams params = init_params(config, g.features.cols(), g.num_classes, init);
  Rng prep_rng = derive_rng(seed, "prepare");
  const PreparedGraph pg = prepare_graph(g, config, prep_rng);
  const Rng sampling = derive_rng(seed, "sampling");

  // Same samples on every call so the loss is a deterministic function.
  auto loss_value = [&](bool with_backward) {
    Tape tape(with_backward);
    Rng sample_rng = sampling;
    ForwardContext ctx{tape, false, nullptr, &sample_rng};
    Var logits = forward_model(pg, params, {}, ctx);
    Var loss = softmax_cross_entropy(logits, g.labels, g.masks.train);
    const double value = loss.value()(0, 0);
    if (with_backward) tape.backward(loss);
    return value;
  };

  for (const NamedParam& p : params.named_parameters()) p.matrix->zero_grad();
  loss_value(true);

  constexpr double kStep = 1e-5;
  std::vector<GradcheckEntry> report;
  for (const NamedParam& p : params.named_parameters()) {
    auto values = p.matrix->data();
    std::vector<double> numeric(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + kStep;
      const double up = loss_value(false);
      values[i] = saved - kStep;
      const double down = loss_value(false);
      values[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw NumericalError("non-finite loss while perturbing " + p.name);
      }
      numeric[i] = (up - down) / (2.0 * kStep);
    }
    report.push_back({p.name, relative_error(p.matrix->grad(), numeric)});
  }
  return report;
}

}  // namespace hyperagg::cli
