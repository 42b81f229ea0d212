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

#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "config.hpp"
#include "hyperagg/error.hpp"
#include "hyperagg/graph_io.hpp"

namespace hyperagg::cli {
namespace {

using nlohmann::json;

// Options shared by `train` and `sweep`.
struct RunOptions {
  std::string config_path;
  std::string data_path;
  bool synthetic = false;
  std::vector<std::string> overrides;
  std::optional<std::size_t> seeds;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> parallel;
  std::string out_dir = ".";
  std::string prefix;
  bool no_timing = false;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--config", o.config_path, "Config file ([section] key = value)");
  cmd->add_option("--data", o.data_path, "HAGRAPH dataset file");
  cmd->add_flag("--synthetic", o.synthetic, "Use the synthetic SBM from the [data] section");
  cmd->add_option("--set", o.overrides, "Override section.key=value (repeatable)");
  cmd->add_option("--seeds", o.seeds, "Number of seeds");
  cmd->add_option("--seed", o.seed, "First seed");
  cmd->add_option("--parallel", o.parallel, "Worker threads across seeds");
  cmd->add_option("--out", o.out_dir, "Output directory");
  cmd->add_option("--prefix", o.prefix, "Output file prefix");
  cmd->add_flag("--no-timing", o.no_timing, "Write 0 in the seconds column");
}

std::size_t env_threads() {
  const char* v = std::getenv("HYPERAGG_THREADS");
  if (v == nullptr || *v == '\0') return 1;
  char* end = nullptr;
  const unsigned long n = std::strtoul(v, &end, 10);
  if (*end != '\0' || n == 0) throw ConfigError("HYPERAGG_THREADS must be a positive integer");
  return n;
}

// Defaults, then the config file, then flags, then --set overrides.
RunConfig resolve(const RunOptions& o) {
  RunConfig c;
  c.experiment.parallel = env_threads();
  if (!o.config_path.empty()) load_config(c, o.config_path);
  if (!o.data_path.empty()) {
    c.data.path = o.data_path;
    c.data.synthetic.clear();
  }
  if (o.synthetic) c.data.synthetic = "sbm";
  if (o.seeds) c.num_seeds = *o.seeds;
  if (o.seed) c.base_seed = *o.seed;
  if (o.parallel) c.experiment.parallel = *o.parallel;
  for (const std::string& s : o.overrides) apply_override(c, s);
  c.sync_seeds();
  c.validate();
  return c;
}

std::string format_mean_std(const Summary& s) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << s.mean << "±" << s.std;
  return os.str();
}

json runs_json(std::span<const RunResult> runs) {
  json arr = json::array();
  for (const RunResult& r : runs) {
    arr.push_back({{"seed", r.seed},
                   {"test_metric", r.test_metric},
                   {"best_val_metric", r.best_val_metric},
                   {"epochs", r.epochs_run},
                   {"failed", r.failed},
                   {"diagnostic", r.diagnostic}});
  }
  return arr;
}

json summary_json(const Summary& s) {
  return {{"mean", s.mean}, {"std", s.std}, {"runs", s.runs}, {"excluded_seeds", s.excluded_seeds}};
}

std::filesystem::path output_path(const RunOptions& o, const std::string& fallback,
                                  const std::string& suffix) {
  std::filesystem::create_directories(o.out_dir);
  return std::filesystem::path(o.out_dir) / ((o.prefix.empty() ? fallback : o.prefix) + suffix);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write '" + path.string() + "'");
  f << content;
  if (!f) throw DataError("failed while writing '" + path.string() + "'");
}

void report_failures(const Summary& s, std::ostream& err) {
  for (std::uint64_t seed : s.excluded_seeds) {
    err << "warning: seed " << seed << " diverged and is excluded from the summary\n";
  }
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  RunOptions run;
  std::string checkpoint;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const RunConfig c = resolve(a.run);
  const Graph data = load_dataset(c.data);
  std::vector<ModelParams> trained;
  const ExperimentResult r =
      run_experiment(data, c.experiment, a.checkpoint.empty() ? nullptr : &trained);

  std::ostringstream csv;
  write_runs_csv(csv, r.runs, !a.run.no_timing);
  write_file(output_path(a.run, "results", ".csv"), csv.str());

  json doc = summary_json(r.summary);
  doc["setting"] = to_string(c.experiment.setting);
  doc["metric"] = to_string(c.experiment.metric);
  doc["dataset"] = c.dataset_name();
  doc["seeds"] = runs_json(r.runs);
  doc["config"] = to_json(c);
  write_file(output_path(a.run, "results", ".json"), doc.dump(2) + "\n");

  if (!a.checkpoint.empty()) {
    for (std::size_t i = 0; i < r.runs.size(); ++i) {
      if (!r.runs[i].failed) {
        save_checkpoint(a.checkpoint, trained[i]);
        break;
      }
    }
  }

  report_failures(r.summary, err);
  if (r.summary.runs == 0) {
    err << "error: every run diverged\n";
    return kExitNumerical;
  }
  out << to_string(c.experiment.model.arch) << ' ' << c.dataset_name() << ' '
      << to_string(c.experiment.setting) << ' ' << format_mean_std(r.summary) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
  RunOptions run;
  std::string axis;
  std::vector<std::string> values;
};

// Named ablation toggles: each produces the base config and its flipped
// variant.
struct Toggle {
  const char* name;
  void (*flip)(ModelConfig&);
};

constexpr Toggle kToggles[] = {
    {"make_undirected", [](ModelConfig& m) { m.undirected = !m.undirected; }},
    {"self_loops", [](ModelConfig& m) { m.self_loops = !m.self_loops; }},
    {"normalize_input", [](ModelConfig& m) { m.normalize_input = !m.normalize_input; }},
    {"residual", [](ModelConfig& m) { m.residual = !m.residual; }},
    {"root_connection", [](ModelConfig& m) { m.root_connection = !m.root_connection; }},
    {"mean_aggregate",
     [](ModelConfig& m) {
       m.readout = m.readout == Readout::kRoot ? Readout::kMean : Readout::kRoot;
     }},
    {"trans_ha_input",
     [](ModelConfig& m) {
       m.pre_activation = !m.pre_activation;
       m.pre_norm = !m.pre_norm;
     }},
    {"trans_ha_output", [](ModelConfig& m) { m.post_norm = !m.post_norm; }},
};

const Toggle* find_toggle(const std::string& name) {
  for (const Toggle& t : kToggles)
    if (name == t.name) return &t;
  return nullptr;
}

std::string toggle_label(const std::string& name, const ModelConfig& m) {
  if (name == "make_undirected") return m.undirected ? "yes" : "no";
  if (name == "self_loops") return m.self_loops ? "yes" : "no";
  if (name == "normalize_input") return m.normalize_input ? "yes" : "no";
  if (name == "residual") return m.residual ? "yes" : "no";
  if (name == "root_connection") return m.root_connection ? "yes" : "no";
  if (name == "mean_aggregate") return m.readout == Readout::kMean ? "yes" : "no";
  if (name == "trans_ha_input") {
    return std::string(m.pre_activation ? "act" : "noact") + (m.pre_norm ? "+norm" : "");
  }
  return m.post_norm ? "norm" : "none";
}

std::vector<std::string> split_list(const std::vector<std::string>& raw) {
  std::vector<std::string> values;
  for (const std::string& item : raw) {
    std::stringstream ss(item);
    std::string v;
    while (std::getline(ss, v, ',')) {
      if (!v.empty()) values.push_back(v);
    }
  }
  return values;
}

int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
  if (a.axis.empty()) throw ConfigError("sweep needs --axis");
  const RunConfig base = resolve(a.run);

  struct Point {
    std::string label;
    RunConfig config;
  };
  std::vector<Point> points;
  if (const Toggle* t = find_toggle(a.axis)) {
    if (!a.values.empty()) throw ConfigError("toggle axis '" + a.axis + "' takes no --values");
    RunConfig flipped = base;
    t->flip(flipped.experiment.model);
    points.push_back({toggle_label(a.axis, base.experiment.model), base});
    points.push_back({toggle_label(a.axis, flipped.experiment.model), flipped});
  } else {
    const std::string key = a.axis.find('.') == std::string::npos ? "model." + a.axis : a.axis;
    const auto keys = config_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ConfigError("unknown sweep axis '" + a.axis + "'");
    }
    const std::vector<std::string> values = split_list(a.values);
    if (values.empty()) throw ConfigError("sweep axis '" + a.axis + "' has no values");
    for (const std::string& v : values) {
      RunConfig c = base;
      apply_setting(c, key, v);
      c.validate();
      points.push_back({v, c});
    }
  }

  const Graph data = load_dataset(base.data);
  std::ostringstream runs_csv, summary_csv;
  runs_csv << "axis,value,seed,metric,epochs,seconds\n";
  summary_csv << "axis,value,mean,std,runs,delta\n";
  json doc;
  doc["axis"] = a.axis;
  doc["dataset"] = base.dataset_name();
  doc["setting"] = to_string(base.experiment.setting);
  doc["config"] = to_json(base);
  doc["points"] = json::array();
  double reference = 0.0;
  bool any_ok = false;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Point& p = points[i];
    const ExperimentResult r = run_experiment(data, p.config.experiment);
    report_failures(r.summary, err);
    std::ostringstream rows;
    write_runs_csv(rows, r.runs, !a.run.no_timing);
    std::string line;
    std::istringstream lines(rows.str());
    std::getline(lines, line);  // header
    while (std::getline(lines, line)) runs_csv << a.axis << ',' << p.label << ',' << line << '\n';

    if (i == 0) reference = r.summary.mean;
    const double delta = r.summary.mean - reference;
    any_ok = any_ok || r.summary.runs > 0;
    summary_csv << a.axis << ',' << p.label << ',' << format_double(r.summary.mean) << ','
                << format_double(r.summary.std) << ',' << r.summary.runs << ','
                << format_double(delta) << '\n';
    out << a.axis << '=' << p.label << ' ' << format_mean_std(r.summary) << " delta "
        << std::showpos << std::fixed << std::setprecision(4) << delta << std::noshowpos
        << std::defaultfloat << '\n';
    json point = summary_json(r.summary);
    point["value"] = p.label;
    point["delta"] = delta;
    point["seeds"] = runs_json(r.runs);
    point["config"] = to_json(p.config);
    doc["points"].push_back(point);
  }
  write_file(output_path(a.run, "sweep", "_runs.csv"), runs_csv.str());
  write_file(output_path(a.run, "sweep", "_summary.csv"), summary_csv.str());
  write_file(output_path(a.run, "sweep", ".json"), doc.dump(2) + "\n");
  if (!any_ok) {
    err << "error: every run diverged\n";
    return kExitNumerical;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  SbmOptions sbm;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  Rng rng = derive_rng(a.seed, "sbm");
  const Graph g = generate_sbm(a.sbm, rng);
  save_graph(a.out, g);
  out << "wrote " << a.out << ": " << g.num_vertices << " vertices, " << g.num_edges()
      << " edges\n"
      << "homophily " << format_double(edge_homophily(g)) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct GradcheckArgs {
  std::string arch = "ghc";
  std::size_t depth = 2;
  std::size_t hidden = 4;
  std::size_t mixing = 3;
  std::uint64_t seed = 0;
  std::string corrupt_op;
  double corrupt_factor = 1.5;
};

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  ModelConfig probe;
  set_model_field(probe, "arch", a.arch);
  struct CorruptionGuard {
    ~CorruptionGuard() { debug::corrupt_backward(""); }
  } guard;
  if (!a.corrupt_op.empty()) debug::corrupt_backward(a.corrupt_op, a.corrupt_factor);
  const auto report = gradient_check(probe.arch, a.depth, a.hidden, a.mixing, a.seed);
  constexpr double kTolerance = 1e-4;
  double worst = 0.0;
  for (const GradcheckEntry& e : report) {
    out << std::left << std::setw(28) << e.name << ' ' << std::scientific << std::setprecision(3)
        << e.error << std::defaultfloat << '\n';
    worst = std::max(worst, e.error);
  }
  out << "max relative error " << std::scientific << std::setprecision(3) << worst
      << std::defaultfloat << (worst < kTolerance ? " PASS" : " FAIL") << '\n';
  return worst < kTolerance ? kExitOk : kExitNumerical;
}

}  // namespace

void write_runs_csv(std::ostream& out, std::span<const RunResult> runs, bool timing) {
  out << "seed,metric,epochs,seconds\n";
  for (const RunResult& r : runs) {
    out << r.seed << ',' << (r.failed ? "nan" : format_double(r.test_metric)) << ','
        << r.epochs_run << ',';
    if (timing) {
      std::ostringstream s;
      s << std::fixed << std::setprecision(3) << r.wall_seconds;
      out << s.str();
    } else {
      out << '0';
    }
    out << '\n';
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"HyperAggregation graph learning toolkit", "hyperagg"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a model over several seeds");
  add_run_options(train_cmd, train.run);
  train_cmd->add_option("--checkpoint", train.checkpoint,
                        "Save the first successful seed's parameters here");

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run one experiment per value of an axis");
  add_run_options(sweep_cmd, sweep.run);
  sweep_cmd->add_option("--axis", sweep.axis,
                        "Config key (e.g. model.mixing) or toggle (root_connection, "
                        "self_loops, make_undirected, normalize_input, residual, "
                        "mean_aggregate, trans_ha_input, trans_ha_output)");
  sweep_cmd->add_option("--values", sweep.values, "Comma-separated axis values");

  GenerateArgs gen;
  auto* gen_cmd = app.add_subcommand("generate", "Write a stochastic block model graph");
  gen_cmd->add_option("--out", gen.out, "Output HAGRAPH file")->required();
  gen_cmd->add_option("--n", gen.sbm.n, "Vertices");
  gen_cmd->add_option("--classes", gen.sbm.classes, "Classes (blocks)");
  gen_cmd->add_option("--p-in", gen.sbm.p_in, "Edge probability within a block");
  gen_cmd->add_option("--p-out", gen.sbm.p_out, "Edge probability across blocks");
  gen_cmd->add_option("--feat-dim", gen.sbm.feat_dim, "Feature width");
  gen_cmd->add_option("--noise", gen.sbm.noise, "Feature noise standard deviation");
  gen_cmd->add_option("--train-per-class", gen.sbm.train_per_class, "Training vertices per class");
  gen_cmd->add_option("--val-per-class", gen.sbm.val_per_class, "Validation vertices per class");
  gen_cmd->add_option("--seed", gen.seed, "Random seed");

  GradcheckArgs grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Compare gradients with finite differences");
  grad_cmd->add_option("--arch", grad.arch, "ghc, ghm, gcn or mlp");
  grad_cmd->add_option("--depth", grad.depth, "Blocks or hidden layers");
  grad_cmd->add_option("--hidden", grad.hidden, "Hidden width");
  grad_cmd->add_option("--mixing", grad.mixing, "Mixing width");
  grad_cmd->add_option("--seed", grad.seed, "Random seed");
  grad_cmd->add_option("--corrupt-op", grad.corrupt_op,
                       "Deliberately scale one backward rule (negative control)");
  grad_cmd->add_option("--corrupt-factor", grad.corrupt_factor, "Scale for --corrupt-op");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train_cmd) return cmd_train(train, out, err);
    if (*sweep_cmd) return cmd_sweep(sweep, out, err);
    if (*gen_cmd) return cmd_generate(gen, out);
    if (*grad_cmd) return cmd_gradcheck(grad, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DimensionError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitConfig;
}

}  // namespace hyperagg::cli
