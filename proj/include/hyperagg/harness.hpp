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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hyperagg/adam.hpp"
#include "hyperagg/graph.hpp"
#include "hyperagg/metrics.hpp"
#include "hyperagg/models.hpp"

namespace hyperagg {

enum class Setting { kTransductive, kInductiveStrict, kInductiveProduction };
std::string to_string(Setting s);

// Redraw the train/val masks per seed from the vertex labels; the remaining
// labeled vertices become the test set.
struct SplitRecipe {
  std::size_t train_per_class = 20;
  std::size_t val_per_class = 30;
};

struct ExperimentSpec {
  ModelConfig model;
  Setting setting = Setting::kTransductive;
  std::vector<std::uint64_t> seeds{0};
  std::size_t max_epochs = 1000;
  std::size_t patience = 100;
  Metric metric = Metric::kAccuracy;
  std::optional<SplitRecipe> resplit;
  std::size_t parallel = 1;  // worker threads across seeds

  // Throws ConfigError.
  void validate() const;
};

struct RunResult {
  std::uint64_t seed = 0;
  double best_val_metric = 0.0;
  double test_metric = 0.0;
  std::size_t epochs_run = 0;
  double wall_seconds = 0.0;
  bool failed = false;
  std::string diagnostic;
};

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single run
  std::size_t runs = 0;
  std::vector<std::uint64_t> excluded_seeds;  // failed runs
};

struct ExperimentResult {
  std::vector<RunResult> runs;  // ordered as spec.seeds
  Summary summary;
};

// Mean and sample standard deviation of the test metric over non-failed runs.
Summary summarize(std::span<const RunResult> runs);
// Same statistics over the validation metric.
Summary summarize_validation(std::span<const RunResult> runs);

// Applies undirected / self-loop preprocessing from the config. GCN always
// gets self-loops.
Graph preprocess(const Graph& g, const ModelConfig& config);

// Everything one training run owns. The optimizer points into `params`, so
// the state is pinned in place.
struct TrainState {
  TrainState() = default;
  TrainState(const TrainState&) = delete;
  TrainState& operator=(const TrainState&) = delete;

  ModelParams params;
  std::optional<AdamOptimizer> optimizer;
  PreparedGraph train;
  std::vector<int> labels;       // per prediction row (vertex or graph)
  std::vector<double> targets;   // regression targets per graph
  Mask train_mask;               // per prediction row
  Rng dropout_rng;
  Rng sample_rng;
  Rng batch_rng;
};

// Builds parameters, optimizer and random streams for one seed on the
// (already preprocessed) training graph.
std::unique_ptr<TrainState> make_train_state(const Graph& train_graph, const ModelConfig& config,
                                             std::uint64_t seed);

// One epoch: a single full-batch step, or for GHM one step per minibatch of
// shuffled training roots with fresh samples. Returns the mean batch loss.
double train_epoch(TrainState& state);

// Per-prediction-row masks: vertex masks for vertex tasks, per-graph masks
// (taken from each graph's first vertex) for graph tasks.
Masks prediction_masks(const Graph& g, const ModelConfig& config);

// Inference-mode metric on the rows selected by `mask`. Throws DataError on
// an empty mask.
double evaluate(const PreparedGraph& pg, ModelParams& params, std::span<const std::uint8_t> mask,
                Metric metric, Rng& sample_rng);

// `trained`, when given, receives the restored best-validation parameters.
RunResult run_single(const Graph& data, const ExperimentSpec& spec, std::uint64_t seed,
                     ModelParams* trained = nullptr);
// `trained`, when given, receives one parameter set per seed.
ExperimentResult run_experiment(const Graph& data, const ExperimentSpec& spec,
                                std::vector<ModelParams>* trained = nullptr);

// ---------------------------------------------------------------------------
// Two-stage grid search
// ---------------------------------------------------------------------------

// Axis values are strings understood by set_model_field.
struct SearchAxis {
  std::string key;
  std::vector<std::string> values;
};

struct SearchSpace {
  std::vector<SearchAxis> architectural;
  // Stage-1 regularization candidates, applied to model_dropout and
  // weight_decay.
  std::vector<double> stage1_dropout{0.5};
  std::vector<double> stage1_weight_decay{5e-4};
  std::size_t stage1_seeds = 1;
  // Stage-2 grid; an empty list keeps the stage-1 value.
  std::vector<double> input_dropout;
  std::vector<double> model_dropout;
  std::vector<double> mixing_dropout;
  std::vector<double> weight_decay;
};

struct SearchEntry {
  int stage = 1;
  ModelConfig config;
  double val_mean = 0.0;
  double val_std = 0.0;
};

struct SearchResult {
  ModelConfig best;
  double best_val = 0.0;
  std::vector<SearchEntry> report;
};

// Sets a ModelConfig field from its name and textual value. Throws
// ConfigError for unknown names or unparsable values.
void set_model_field(ModelConfig& config, const std::string& key, const std::string& value);

// Config rendering with the regularization fields blanked; equal for two
// configs that share every architectural choice.
std::string architecture_signature(const ModelConfig& config);

SearchResult grid_search(const Graph& data, const SearchSpace& space, const ExperimentSpec& spec);

}  // namespace hyperagg
