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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "hyperagg/error.hpp"

namespace hyperagg {
namespace {

Graph small_sbm(std::uint64_t seed, double noise = 1.0, std::size_t classes = 4) {
  SbmOptions opts;
  opts.n = 200;
  opts.classes = classes;
  opts.p_in = 0.08;
  opts.p_out = 0.01;
  opts.feat_dim = 6;
  opts.noise = noise;
  opts.train_per_class = 10;
  opts.val_per_class = 10;
  Rng rng(seed);
  return generate_sbm(opts, rng);
}

ExperimentSpec quick_spec(Arch arch) {
  ExperimentSpec spec;
  spec.model.arch = arch;
  spec.model.hidden = 8;
  spec.model.mixing = 4;
  spec.model.batch_size = 16;
  spec.model.subgraph_cap = 6;
  spec.max_epochs = 15;
  spec.patience = 5;
  spec.seeds = {0, 1};
  return spec;
}

std::vector<double> flat_params(ModelParams& p) {
  std::vector<double> out;
  for (const auto& np : p.named_parameters())
    out.insert(out.end(), np.matrix->data().begin(), np.matrix->data().end());
  return out;
}

TEST(Summary, MatchesDirectRecomputation) {
  std::vector<RunResult> runs(4);
  const double values[] = {0.7, 0.8, 0.75, 0.1};
  for (std::size_t i = 0; i < 4; ++i) {
    runs[i].seed = i;
    runs[i].test_metric = values[i];
    runs[i].best_val_metric = values[i] + 1.0;
  }
  runs[3].failed = true;
  const Summary s = summarize(runs);
  const double mean = (0.7 + 0.8 + 0.75) / 3.0;
  const double var = ((0.7 - mean) * (0.7 - mean) + (0.8 - mean) * (0.8 - mean) +
                      (0.75 - mean) * (0.75 - mean)) / 2.0;
  EXPECT_DOUBLE_EQ(s.mean, mean);
  EXPECT_NEAR(s.std, std::sqrt(var), 1e-15);
  EXPECT_EQ(s.runs, 3u);
  EXPECT_EQ(s.excluded_seeds, (std::vector<std::uint64_t>{3}));
  EXPECT_DOUBLE_EQ(summarize_validation(runs).mean, mean + 1.0);
}

TEST(Summary, SingleRunHasZeroStdAndAllFailedIsNan) {
  std::vector<RunResult> one(1);
  one[0].test_metric = 0.4;
  EXPECT_EQ(summarize(one).std, 0.0);
  one[0].failed = true;
  EXPECT_TRUE(std::isnan(summarize(one).mean));
}

TEST(ExperimentSpec, ValidateRejectsBadSpecs) {
  ExperimentSpec spec;
  spec.seeds.clear();
  EXPECT_THROW(spec.validate(), ConfigError);
  spec = ExperimentSpec{};
  spec.patience = spec.max_epochs + 1;
  EXPECT_THROW(spec.validate(), ConfigError);
  spec = ExperimentSpec{};
  spec.metric = Metric::kMae;
  EXPECT_THROW(spec.validate(), ConfigError);
}

TEST(TrainEpoch, LossDecreasesOverFirstTenEpochs) {
  for (Arch arch : {Arch::kGHC, Arch::kGCN, Arch::kMLP, Arch::kGHM}) {
    ModelConfig c = quick_spec(arch).model;
    c.lr = 1e-2;
    c.model_dropout = 0.0;
    const Graph g = preprocess(small_sbm(1), c);
    auto state = make_train_state(g, c, 0);
    const double first = train_epoch(*state);
    double last = first;
    for (int e = 1; e < 10; ++e) last = train_epoch(*state);
    EXPECT_LT(last, first) << to_string(arch);
  }
}

TEST(TrainEpoch, ZeroLearningRateLeavesParametersUnchanged) {
  ModelConfig c = quick_spec(Arch::kGHC).model;
  const Graph g = preprocess(small_sbm(2), c);
  auto state = make_train_state(g, c, 0);
  std::vector<Matrix*> matrices;
  for (const auto& np : state->params.named_parameters()) matrices.push_back(np.matrix);
  state->optimizer.emplace(matrices, AdamOptions{.lr = 0.0, .weight_decay = c.weight_decay});
  const auto before = flat_params(state->params);
  for (int e = 0; e < 3; ++e) train_epoch(*state);
  EXPECT_EQ(flat_params(state->params), before);
}

TEST(TrainEpoch, LabelsOutsideTrainMaskAreIgnored) {
  ModelConfig c = quick_spec(Arch::kGHC).model;
  const Graph g = preprocess(small_sbm(3), c);
  Graph flipped = g;
  for (std::size_t v = 0; v < g.num_vertices; ++v) {
    if (!g.masks.train[v]) flipped.labels[v] = (g.labels[v] + 1) % 4;
  }
  auto a = make_train_state(g, c, 5);
  auto b = make_train_state(flipped, c, 5);
  for (int e = 0; e < 3; ++e) EXPECT_EQ(train_epoch(*a), train_epoch(*b));
  EXPECT_EQ(flat_params(a->params), flat_params(b->params));
}

TEST(TrainState, EmptyTrainMaskIsDataError) {
  ModelConfig c = quick_spec(Arch::kMLP).model;
  Graph g = small_sbm(0);
  std::fill(g.masks.train.begin(), g.masks.train.end(), 0);
  EXPECT_THROW(make_train_state(g, c, 0), DataError);
}

TEST(Evaluate, EmptyMaskIsDataError) {
  ModelConfig c = quick_spec(Arch::kMLP).model;
  const Graph g = small_sbm(0);
  auto state = make_train_state(g, c, 0);
  Rng rng(0);
  const Mask none(g.num_vertices, 0);
  EXPECT_THROW(evaluate(state->train, state->params, none, Metric::kAccuracy, rng), DataError);
}

TEST(RunSingle, SeparableFeaturesGivePerfectMlp) {
  const Graph g = small_sbm(4, /*noise=*/0.0, /*classes=*/2);
  ExperimentSpec spec = quick_spec(Arch::kMLP);
  spec.max_epochs = 100;
  spec.patience = 100;
  const RunResult r = run_single(g, spec, 0);
  EXPECT_FALSE(r.failed) << r.diagnostic;
  EXPECT_DOUBLE_EQ(r.test_metric, 1.0);
}

TEST(RunExperiment, IdenticalSpecsGiveIdenticalResults) {
  const Graph g = small_sbm(5);
  for (Arch arch : {Arch::kGHC, Arch::kGHM}) {
    ExperimentSpec spec = quick_spec(arch);
    const ExperimentResult a = run_experiment(g, spec);
    const ExperimentResult b = run_experiment(g, spec);
    ASSERT_EQ(a.runs.size(), 2u);
    for (std::size_t i = 0; i < a.runs.size(); ++i) {
      EXPECT_EQ(a.runs[i].seed, spec.seeds[i]);
      EXPECT_EQ(a.runs[i].test_metric, b.runs[i].test_metric);
      EXPECT_EQ(a.runs[i].best_val_metric, b.runs[i].best_val_metric);
      EXPECT_EQ(a.runs[i].epochs_run, b.runs[i].epochs_run);
    }
  }
}

TEST(RunExperiment, ParallelWorkersMatchSequential) {
  const Graph g = small_sbm(6);
  ExperimentSpec spec = quick_spec(Arch::kGCN);
  spec.seeds = {3, 4, 5};
  const ExperimentResult seq = run_experiment(g, spec);
  spec.parallel = 3;
  const ExperimentResult par = run_experiment(g, spec);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(par.runs[i].seed, seq.runs[i].seed);
    EXPECT_EQ(par.runs[i].test_metric, seq.runs[i].test_metric);
  }
}

TEST(RunSingle, EarlyStoppingBoundsEpochs) {
  const Graph g = small_sbm(7);
  ExperimentSpec spec = quick_spec(Arch::kMLP);
  spec.max_epochs = 200;
  spec.patience = 3;
  const RunResult r = run_single(g, spec, 0);
  EXPECT_GE(r.epochs_run, 4u);
  EXPECT_LT(r.epochs_run, 200u);
  EXPECT_GE(r.best_val_metric, 0.0);
  EXPECT_LE(r.best_val_metric, 1.0);
}

TEST(RunSingle, StrictInductiveNeverReadsNonTrainFeatures) {
  Graph g = small_sbm(8);
  for (std::size_t v = 0; v < g.num_vertices; ++v) {
    if (g.masks.train[v]) continue;
    for (double& x : g.features.row(v)) x = std::numeric_limits<double>::quiet_NaN();
  }
  for (Arch arch : {Arch::kGHC, Arch::kGCN, Arch::kGHM}) {
    ModelConfig c = quick_spec(arch).model;
    Rng split_rng(0);
    InductiveSplit split = inductive_split(preprocess(g, c), InductiveMode::kStrict, split_rng);
    auto state = make_train_state(split.train_graph, c, 0);
    for (int e = 0; e < 5; ++e) {
      EXPECT_TRUE(std::isfinite(train_epoch(*state))) << to_string(arch);
    }
    for (double w : flat_params(state->params)) ASSERT_TRUE(std::isfinite(w));
  }
}

TEST(RunSingle, DivergenceIsRecordedAsFailure) {
  Graph g = small_sbm(9);
  for (double& x : g.features.data()) x = std::numeric_limits<double>::quiet_NaN();
  ExperimentSpec spec = quick_spec(Arch::kMLP);
  spec.seeds = {0, 1};
  const ExperimentResult r = run_experiment(g, spec);
  EXPECT_TRUE(r.runs[0].failed);
  EXPECT_NE(r.runs[0].diagnostic.find("non-finite"), std::string::npos);
  EXPECT_EQ(r.summary.excluded_seeds, (std::vector<std::uint64_t>{0, 1}));
  EXPECT_TRUE(std::isnan(r.summary.mean));
}

TEST(RunSingle, InductiveSettingsRun) {
  const Graph g = small_sbm(10);
  for (Setting s : {Setting::kInductiveStrict, Setting::kInductiveProduction}) {
    ExperimentSpec spec = quick_spec(Arch::kGHC);
    spec.setting = s;
    const RunResult r = run_single(g, spec, 0);
    EXPECT_FALSE(r.failed) << r.diagnostic;
    EXPECT_GE(r.test_metric, 0.0);
    EXPECT_LE(r.test_metric, 1.0);
  }
}

TEST(GraphTask, RegressionOnMemberGraphs) {
  // Eight 3-vertex paths; the target is the mean first feature of each.
  std::vector<Edge> edges;
  Graph g;
  const std::size_t graphs = 8;
  for (std::size_t k = 0; k < graphs; ++k) {
    edges.emplace_back(3 * k, 3 * k + 1);
    edges.emplace_back(3 * k + 1, 3 * k + 2);
  }
  g = from_edges(3 * graphs, edges);
  g.features = Matrix(3 * graphs, 2);
  g.graph_ids = std::vector<int>(3 * graphs);
  g.masks.train.assign(3 * graphs, 0);
  g.masks.val.assign(3 * graphs, 0);
  g.masks.test.assign(3 * graphs, 0);
  Rng rng(0);
  std::normal_distribution<double> normal;
  for (std::size_t v = 0; v < 3 * graphs; ++v) {
    (*g.graph_ids)[v] = static_cast<int>(v / 3);
    g.features(v, 0) = normal(rng);
    g.features(v, 1) = 1.0;
    const std::size_t k = v / 3;
    (k < 4 ? g.masks.train : k < 6 ? g.masks.val : g.masks.test)[v] = 1;
  }
  for (std::size_t k = 0; k < graphs; ++k) {
    g.graph_targets.push_back(
        (g.features(3 * k, 0) + g.features(3 * k + 1, 0) + g.features(3 * k + 2, 0)) / 3.0);
  }
  const Masks m = prediction_masks(g, ModelConfig{.task = Task::kGraphRegression});
  EXPECT_EQ(m.train, (Mask{1, 1, 1, 1, 0, 0, 0, 0}));
  EXPECT_EQ(m.test, (Mask{0, 0, 0, 0, 0, 0, 1, 1}));

  for (Arch arch : {Arch::kGHC, Arch::kGHM, Arch::kGCN, Arch::kMLP}) {
    ExperimentSpec spec = quick_spec(arch);
    spec.model.task = Task::kGraphRegression;
    spec.metric = Metric::kMae;
    spec.seeds = {0};
    const RunResult r = run_single(g, spec, 0);
    EXPECT_FALSE(r.failed) << to_string(arch) << ": " << r.diagnostic;
    EXPECT_GE(r.test_metric, 0.0);
  }
}

TEST(SetModelField, ParsesKnownKeysAndRejectsOthers) {
  ModelConfig c;
  set_model_field(c, "arch", "ghm");
  set_model_field(c, "hidden", "12");
  set_model_field(c, "readout", "mean");
  set_model_field(c, "residual", "true");
  EXPECT_EQ(c.arch, Arch::kGHM);
  EXPECT_EQ(c.hidden, 12u);
  EXPECT_EQ(c.readout, Readout::kMean);
  EXPECT_TRUE(c.residual);
  EXPECT_THROW(set_model_field(c, "bogus", "1"), ConfigError);
  EXPECT_THROW(set_model_field(c, "hidden", "-3"), ConfigError);
  EXPECT_THROW(set_model_field(c, "arch", "gat"), ConfigError);
}

TEST(GridSearch, SingletonSpaceReturnsThatConfig) {
  const Graph g = small_sbm(11);
  ExperimentSpec spec = quick_spec(Arch::kMLP);
  spec.seeds = {0};
  SearchSpace space;
  space.stage1_dropout = {spec.model.model_dropout};
  space.stage1_weight_decay = {spec.model.weight_decay};
  const SearchResult r = grid_search(g, space, spec);
  EXPECT_EQ(describe(r.best), describe(spec.model));
  EXPECT_EQ(r.report.size(), 2u);
}

TEST(GridSearch, StageTwoKeepsArchitectureAndPicksBestValidation) {
  const Graph g = small_sbm(12);
  ExperimentSpec spec = quick_spec(Arch::kGCN);
  spec.seeds = {0, 1};
  SearchSpace space;
  space.architectural = {{"hidden", {"4", "8"}}, {"depth", {"1", "2"}}};
  space.stage1_dropout = {0.0, 0.5};
  space.model_dropout = {0.0, 0.3};
  space.weight_decay = {0.0, 5e-3};
  const SearchResult r = grid_search(g, space, spec);
  EXPECT_EQ(r.report.size(), 4u * 2 + 2u * 2);

  const SearchEntry* stage1_best = nullptr;
  for (const SearchEntry& e : r.report) {
    if (e.stage == 1 && (!stage1_best || e.val_mean > stage1_best->val_mean)) stage1_best = &e;
  }
  ASSERT_NE(stage1_best, nullptr);
  for (const SearchEntry& e : r.report) {
    if (e.stage != 2) continue;
    EXPECT_EQ(architecture_signature(e.config), architecture_signature(stage1_best->config));
    EXPECT_GE(r.best_val, e.val_mean);
  }
  EXPECT_EQ(architecture_signature(r.best), architecture_signature(stage1_best->config));
}

TEST(GridSearch, RegularizationKeysAreNotArchitectural) {
  const Graph g = small_sbm(13);
  SearchSpace space;
  space.architectural = {{"model_dropout", {"0.1"}}};
  EXPECT_THROW(grid_search(g, space, quick_spec(Arch::kMLP)), ConfigError);
}

}  // namespace
}  // namespace hyperagg
