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

#include "hyperagg/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "hyperagg/error.hpp"

namespace hyperagg {

std::string to_string(Setting s) {
  switch (s) {
    case Setting::kTransductive: return "transductive";
    case Setting::kInductiveStrict: return "inductive_strict";
    case Setting::kInductiveProduction: return "inductive_production";
  }
  return "?";
}

void ExperimentSpec::validate() const {
  model.validate();
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (max_epochs == 0) throw ConfigError("max_epochs must be >= 1");
  if (patience > max_epochs) throw ConfigError("patience must not exceed max_epochs");
  if (parallel == 0) throw ConfigError("parallel must be >= 1");
  if (metric == Metric::kMae && model.task != Task::kGraphRegression) {
    throw ConfigError("mae requires the graph_reg task");
  }
  if (metric != Metric::kMae && model.task == Task::kGraphRegression) {
    throw ConfigError("graph_reg is evaluated with mae");
  }
}

namespace {

Summary summarize_by(std::span<const RunResult> runs, double RunResult::*field) {
  Summary s;
  std::vector<double> values;
  for (const RunResult& r : runs) {
    if (r.failed) {
      s.excluded_seeds.push_back(r.seed);
    } else {
      values.push_back(r.*field);
    }
  }
  s.runs = values.size();
  if (values.empty()) {
    s.mean = std::numeric_limits<double>::quiet_NaN();
    s.std = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

// True when `candidate` beats `incumbent` for this metric.
bool improves(double candidate, double incumbent, Metric metric) {
  return higher_is_better(metric) ? candidate > incumbent : candidate < incumbent;
}

std::size_t output_width(const Graph& g, const ModelConfig& config) {
  if (config.task == Task::kGraphRegression) return 1;
  if (g.num_classes == 0) throw DataError("classification task on a graph without classes");
  return g.num_classes;
}

struct RowTargets {
  std::vector<int> labels;
  std::vector<double> values;
};

RowTargets row_targets(const Graph& g, const ModelConfig& config) {
  RowTargets t;
  switch (config.task) {
    case Task::kVertexClassification:
      t.labels = g.labels;
      break;
    case Task::kGraphClassification:
      for (double y : g.graph_targets) t.labels.push_back(static_cast<int>(y));
      break;
    case Task::kGraphRegression:
      t.values = g.graph_targets;
      break;
  }
  if (config.is_graph_task() && g.graph_targets.size() != g.num_graphs()) {
    throw DataError("graph-level task needs one target per graph");
  }
  return t;
}

Var task_loss(Var logits, std::span<const int> labels, std::span<const double> values,
              std::span<const std::uint8_t> mask, Task task) {
  if (task == Task::kGraphRegression) return mean_absolute_error(logits, values, mask);
  return softmax_cross_entropy(logits, labels, mask);
}

std::vector<std::size_t> masked_rows(std::span<const std::uint8_t> mask) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) rows.push_back(i);
  return rows;
}

std::vector<Matrix> snapshot(ModelParams& params) {
  std::vector<Matrix> copy;
  for (const NamedParam& p : params.named_parameters()) copy.push_back(*p.matrix);
  return copy;
}

void restore(ModelParams& params, const std::vector<Matrix>& saved) {
  auto named = params.named_parameters();
  for (std::size_t i = 0; i < named.size(); ++i) {
    auto src = saved[i].data();
    auto dst = named[i].matrix->data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

}  // namespace

Summary summarize(std::span<const RunResult> runs) {
  return summarize_by(runs, &RunResult::test_metric);
}

Summary summarize_validation(std::span<const RunResult> runs) {
  return summarize_by(runs, &RunResult::best_val_metric);
}

Graph preprocess(const Graph& g, const ModelConfig& config) {
  Graph out = config.undirected ? make_undirected(g) : g;
  if (config.self_loops || config.arch == Arch::kGCN) out = add_self_loops(out);
  return out;
}

Masks prediction_masks(const Graph& g, const ModelConfig& config) {
  if (!config.is_graph_task()) return g.masks;
  if (!g.graph_ids) throw DataError("graph-level task requires graph ids");
  const std::size_t ng = g.num_graphs();
  Masks m;
  m.train.assign(ng, 0);
  m.val.assign(ng, 0);
  m.test.assign(ng, 0);
  m.observed.assign(ng, 0);
  std::vector<std::uint8_t> seen(ng, 0);
  auto take = [](const Mask& mask, std::size_t v) -> std::uint8_t {
    return v < mask.size() ? mask[v] : 0;
  };
  for (std::size_t v = 0; v < g.num_vertices; ++v) {
    const auto gid = static_cast<std::size_t>((*g.graph_ids)[v]);
    if (seen[gid]) continue;
    seen[gid] = 1;
    m.train[gid] = take(g.masks.train, v);
    m.val[gid] = take(g.masks.val, v);
    m.test[gid] = take(g.masks.test, v);
    m.observed[gid] = take(g.masks.observed, v);
  }
  return m;
}

std::unique_ptr<TrainState> make_train_state(const Graph& train_graph, const ModelConfig& config,
                                             std::uint64_t seed) {
  auto state = std::make_unique<TrainState>();
  TrainState& s = *state;
  Rng init_rng = derive_rng(seed, "init");
  s.params = init_params(config, train_graph.features.cols(), output_width(train_graph, config),
                         init_rng);
  s.dropout_rng = derive_rng(seed, "dropout");
  s.sample_rng = derive_rng(seed, "sampling");
  s.batch_rng = derive_rng(seed, "batches");
  std::vector<Matrix*> matrices;
  for (const NamedParam& p : s.params.named_parameters()) matrices.push_back(p.matrix);
  s.optimizer.emplace(std::move(matrices),
                      AdamOptions{.lr = config.lr, .weight_decay = config.weight_decay});
  s.train = prepare_graph(train_graph, config, s.sample_rng);
  RowTargets t = row_targets(train_graph, config);
  s.labels = std::move(t.labels);
  s.targets = std::move(t.values);
  s.train_mask = prediction_masks(train_graph, config).train;
  if (std::none_of(s.train_mask.begin(), s.train_mask.end(), [](auto b) { return b != 0; })) {
    throw DataError("training mask is empty");
  }
  return state;
}

double train_epoch(TrainState& state) {
  const ModelConfig& config = state.params.config;
  AdamOptimizer& opt = *state.optimizer;

  auto step = [&](std::span<const std::size_t> batch, std::span<const int> labels,
                  std::span<const double> values, std::span<const std::uint8_t> mask) {
    opt.zero_grad();
    Tape tape;
    ForwardContext ctx{tape, true, &state.dropout_rng, &state.sample_rng};
    Var logits = forward_model(state.train, state.params, batch, ctx);
    Var loss = task_loss(logits, labels, values, mask, config.task);
    const double value = loss.value()(0, 0);
    if (!std::isfinite(value)) return value;
    tape.backward(loss);
    opt.step();
    return value;
  };

  if (config.arch != Arch::kGHM || config.is_graph_task()) {
    return step({}, state.labels, state.targets, state.train_mask);
  }

  std::vector<std::size_t> roots = masked_rows(state.train_mask);
  std::shuffle(roots.begin(), roots.end(), state.batch_rng);
  double total = 0.0;
  std::size_t batches = 0;
  for (std::size_t begin = 0; begin < roots.size(); begin += config.batch_size) {
    const std::size_t end = std::min(roots.size(), begin + config.batch_size);
    std::span<const std::size_t> batch(roots.data() + begin, end - begin);
    std::vector<int> labels;
    labels.reserve(batch.size());
    for (std::size_t v : batch) labels.push_back(state.labels[v]);
    const Mask all(batch.size(), 1);
    const double loss = step(batch, labels, {}, all);
    if (!std::isfinite(loss)) return loss;
    total += loss;
    ++batches;
  }
  return total / static_cast<double>(batches);
}

double evaluate(const PreparedGraph& pg, ModelParams& params, std::span<const std::uint8_t> mask,
                Metric metric, Rng& sample_rng) {
  const ModelConfig& config = params.config;
  const Graph& g = *pg.graph;
  std::vector<std::size_t> rows = masked_rows(mask);
  if (rows.empty()) throw DataError("evaluation mask is empty");

  Tape tape(false);
  ForwardContext ctx{tape, false, nullptr, &sample_rng};
  RowTargets t = row_targets(g, config);
  Mask eval_mask(mask.begin(), mask.end());
  std::span<const std::size_t> batch;
  if (config.arch == Arch::kGHM && !config.is_graph_task()) {
    // Only the evaluated roots are forwarded; compact labels to match.
    batch = rows;
    std::vector<int> labels;
    for (std::size_t v : rows) labels.push_back(t.labels[v]);
    t.labels = std::move(labels);
    eval_mask.assign(rows.size(), 1);
  }
  const Matrix out = forward_model(pg, params, batch, ctx).value();
  switch (metric) {
    case Metric::kAccuracy: return accuracy(out, t.labels, eval_mask);
    case Metric::kAuroc: return auroc(out, t.labels, eval_mask);
    case Metric::kMae: return mean_absolute_error(out, t.values, eval_mask);
  }
  throw std::logic_error("unknown metric");
}

RunResult run_single(const Graph& data, const ExperimentSpec& spec, std::uint64_t seed,
                     ModelParams* trained) {
  const auto start = std::chrono::steady_clock::now();
  RunResult result;
  result.seed = seed;
  const ModelConfig& config = spec.model;

  Graph base = data;
  if (spec.resplit) {
    if (config.is_graph_task()) throw ConfigError("per-seed resplits apply to vertex tasks only");
    Rng split_rng = derive_rng(seed, "split");
    base.masks = per_class_split(base.labels, base.num_classes, spec.resplit->train_per_class,
                                 spec.resplit->val_per_class, split_rng);
  }
  base = preprocess(base, config);

  Graph train_graph;
  Graph eval_graph;
  if (spec.setting == Setting::kTransductive) {
    train_graph = base;
    eval_graph = std::move(base);
  } else {
    Rng split_rng = derive_rng(seed, "inductive");
    const InductiveMode mode = spec.setting == Setting::kInductiveStrict
                                   ? InductiveMode::kStrict
                                   : InductiveMode::kProduction;
    InductiveSplit split = inductive_split(base, mode, split_rng);
    train_graph = std::move(split.train_graph);
    eval_graph = std::move(split.eval_graph);
  }

  auto owned = make_train_state(train_graph, config, seed);
  TrainState& state = *owned;
  Rng eval_sampling_seed = derive_rng(seed, "eval-sampling");
  const std::uint64_t eval_stream = eval_sampling_seed();
  Rng eval_prep_rng = derive_rng(eval_stream, "prepare");
  PreparedGraph eval_pg = prepare_graph(eval_graph, config, eval_prep_rng);
  const Masks eval_masks = prediction_masks(eval_graph, config);

  double best = higher_is_better(spec.metric) ? -std::numeric_limits<double>::infinity()
                                              : std::numeric_limits<double>::infinity();
  std::vector<Matrix> best_params = snapshot(state.params);
  std::size_t since_best = 0;
  std::size_t epoch = 0;
  for (; epoch < spec.max_epochs; ++epoch) {
    const double loss = train_epoch(state);
    if (!std::isfinite(loss)) {
      result.failed = true;
      result.diagnostic = "non-finite training loss at epoch " + std::to_string(epoch + 1);
      break;
    }
    // Same samples for every validation pass, so epochs compare fairly.
    Rng val_rng = derive_rng(eval_stream, "val");
    const double val = evaluate(eval_pg, state.params, eval_masks.val, spec.metric, val_rng);
    if (improves(val, best, spec.metric)) {
      best = val;
      best_params = snapshot(state.params);
      since_best = 0;
    } else if (++since_best >= spec.patience) {
      ++epoch;
      break;
    }
  }
  result.epochs_run = epoch;
  if (!result.failed) {
    restore(state.params, best_params);
    result.best_val_metric = best;
    Rng test_rng = derive_rng(eval_stream, "test");
    result.test_metric = evaluate(eval_pg, state.params, eval_masks.test, spec.metric, test_rng);
    if (!std::isfinite(result.test_metric) || !std::isfinite(best)) {
      result.failed = true;
      result.diagnostic = "non-finite evaluation metric";
    }
  }
  if (trained != nullptr) *trained = state.params;
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

ExperimentResult run_experiment(const Graph& data, const ExperimentSpec& spec,
                                std::vector<ModelParams>* trained) {
  spec.validate();
  ExperimentResult out;
  out.runs.resize(spec.seeds.size());
  if (trained != nullptr) trained->assign(spec.seeds.size(), ModelParams{});
  std::vector<std::exception_ptr> errors(spec.seeds.size());
  auto run_index = [&](std::size_t i) {
    try {
      out.runs[i] = run_single(data, spec, spec.seeds[i],
                               trained != nullptr ? &(*trained)[i] : nullptr);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t workers = std::min(spec.parallel, spec.seeds.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < spec.seeds.size(); ++i) run_index(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < spec.seeds.size(); i = next++) run_index(i);
      });
    }
    for (std::thread& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  out.summary = summarize(out.runs);
  return out;
}

// ---------------------------------------------------------------------------
// Grid search
// ---------------------------------------------------------------------------

namespace {

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long x = 0;
  try {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    x = std::stoull(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  if (pos != v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return static_cast<std::size_t>(x);
}

double parse_real(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  if (pos != v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return x;
}

}  // namespace

void set_model_field(ModelConfig& c, const std::string& key, const std::string& v) {
  if (key == "arch") {
    if (v == "ghc" || v == "GHC") c.arch = Arch::kGHC;
    else if (v == "ghm" || v == "GHM") c.arch = Arch::kGHM;
    else if (v == "gcn" || v == "GCN") c.arch = Arch::kGCN;
    else if (v == "mlp" || v == "MLP") c.arch = Arch::kMLP;
    else throw ConfigError("arch: unknown architecture '" + v + "'");
  } else if (key == "task") {
    if (v == "vertex_cls") c.task = Task::kVertexClassification;
    else if (v == "graph_cls") c.task = Task::kGraphClassification;
    else if (v == "graph_reg") c.task = Task::kGraphRegression;
    else throw ConfigError("task: expected vertex_cls, graph_cls or graph_reg, got '" + v + "'");
  } else if (key == "readout") {
    if (v == "root") c.readout = Readout::kRoot;
    else if (v == "mean") c.readout = Readout::kMean;
    else throw ConfigError("readout: expected root or mean, got '" + v + "'");
  } else if (key == "depth") c.depth = parse_size(key, v);
  else if (key == "hidden") c.hidden = parse_size(key, v);
  else if (key == "mixing") c.mixing = parse_size(key, v);
  else if (key == "pre_activation") c.pre_activation = parse_bool(key, v);
  else if (key == "pre_norm") c.pre_norm = parse_bool(key, v);
  else if (key == "pre_dropout") c.pre_dropout = parse_real(key, v);
  else if (key == "post_norm") c.post_norm = parse_bool(key, v);
  else if (key == "post_dropout") c.post_dropout = parse_real(key, v);
  else if (key == "mixing_dropout") c.mixing_dropout = parse_real(key, v);
  else if (key == "root_connection") c.root_connection = parse_bool(key, v);
  else if (key == "residual") c.residual = parse_bool(key, v);
  else if (key == "k_hop") c.k_hop = parse_size(key, v);
  else if (key == "subgraph_cap") c.subgraph_cap = parse_size(key, v);
  else if (key == "batch_size") c.batch_size = parse_size(key, v);
  else if (key == "freeze_sampling") c.freeze_sampling = parse_bool(key, v);
  else if (key == "normalize_input") c.normalize_input = parse_bool(key, v);
  else if (key == "self_loops") c.self_loops = parse_bool(key, v);
  else if (key == "undirected") c.undirected = parse_bool(key, v);
  else if (key == "input_dropout") c.input_dropout = parse_real(key, v);
  else if (key == "model_dropout") c.model_dropout = parse_real(key, v);
  else if (key == "lr") c.lr = parse_real(key, v);
  else if (key == "weight_decay") c.weight_decay = parse_real(key, v);
  else throw ConfigError("unknown model key '" + key + "'");
}

std::string architecture_signature(const ModelConfig& config) {
  ModelConfig c = config;
  c.input_dropout = 0.0;
  c.model_dropout = 0.0;
  c.mixing_dropout = 0.0;
  c.weight_decay = 0.0;
  return describe(c);
}

namespace {

struct Scored {
  double mean;
  double std;
};

Scored score(const Graph& data, const ExperimentSpec& base, const ModelConfig& config,
             std::size_t seeds) {
  ExperimentSpec spec = base;
  spec.model = config;
  spec.seeds.resize(std::min(seeds, base.seeds.size()));
  const ExperimentResult r = run_experiment(data, spec);
  const Summary s = summarize_validation(r.runs);
  return {s.mean, s.std};
}

// NaN (all runs failed) never wins.
bool better(double candidate, double incumbent, Metric metric) {
  if (std::isnan(candidate)) return false;
  if (std::isnan(incumbent)) return true;
  return improves(candidate, incumbent, metric);
}

std::vector<ModelConfig> architectural_grid(const ModelConfig& base,
                                            std::span<const SearchAxis> axes) {
  std::vector<ModelConfig> grid{base};
  for (const SearchAxis& axis : axes) {
    if (axis.values.empty()) throw ConfigError("search axis '" + axis.key + "' has no values");
    std::vector<ModelConfig> next;
    for (const ModelConfig& c : grid) {
      for (const std::string& v : axis.values) {
        ModelConfig copy = c;
        set_model_field(copy, axis.key, v);
        next.push_back(copy);
      }
    }
    grid = std::move(next);
  }
  return grid;
}

std::vector<double> or_current(const std::vector<double>& values, double current) {
  return values.empty() ? std::vector<double>{current} : values;
}

}  // namespace

SearchResult grid_search(const Graph& data, const SearchSpace& space, const ExperimentSpec& spec) {
  static const std::vector<std::string> kRegularization = {"input_dropout", "model_dropout",
                                                           "mixing_dropout", "weight_decay"};
  for (const SearchAxis& axis : space.architectural) {
    if (std::find(kRegularization.begin(), kRegularization.end(), axis.key) !=
        kRegularization.end()) {
      throw ConfigError("'" + axis.key + "' is a regularization knob, not an architectural one");
    }
  }
  if (space.stage1_dropout.empty() || space.stage1_weight_decay.empty()) {
    throw ConfigError("stage-1 regularization candidates must be non-empty");
  }
  if (space.stage1_seeds == 0) throw ConfigError("stage1_seeds must be >= 1");

  SearchResult result;
  const Metric metric = spec.metric;

  // Stage 1: architecture, each scored by its best regularization candidate.
  ModelConfig winner;
  double winner_val = std::numeric_limits<double>::quiet_NaN();
  for (const ModelConfig& arch : architectural_grid(spec.model, space.architectural)) {
    for (double dropout : space.stage1_dropout) {
      for (double wd : space.stage1_weight_decay) {
        ModelConfig c = arch;
        c.model_dropout = dropout;
        c.weight_decay = wd;
        const Scored s = score(data, spec, c, space.stage1_seeds);
        result.report.push_back({1, c, s.mean, s.std});
        if (better(s.mean, winner_val, metric) || result.report.size() == 1) {
          winner = c;
          winner_val = s.mean;
        }
      }
    }
  }

  // Stage 2: regularization only, full seeds.
  const std::string signature = architecture_signature(winner);
  result.best = winner;
  result.best_val = std::numeric_limits<double>::quiet_NaN();
  bool first = true;
  for (double in_p : or_current(space.input_dropout, winner.input_dropout)) {
    for (double model_p : or_current(space.model_dropout, winner.model_dropout)) {
      for (double mix_p : or_current(space.mixing_dropout, winner.mixing_dropout)) {
        for (double wd : or_current(space.weight_decay, winner.weight_decay)) {
          ModelConfig c = winner;
          c.input_dropout = in_p;
          c.model_dropout = model_p;
          c.mixing_dropout = mix_p;
          c.weight_decay = wd;
          if (architecture_signature(c) != signature) {
            throw std::logic_error("stage 2 changed an architectural field");
          }
          const Scored s = score(data, spec, c, spec.seeds.size());
          result.report.push_back({2, c, s.mean, s.std});
          if (first || better(s.mean, result.best_val, metric)) {
            result.best = c;
            result.best_val = s.mean;
            first = false;
          }
        }
      }
    }
  }
  return result;
}

}  // namespace hyperagg
