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

#include "config.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "hyperagg/error.hpp"
#include "hyperagg/graph_io.hpp"

namespace hyperagg::cli {
namespace {

using nlohmann::json;

struct Key {
  std::string name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<json(const RunConfig&)> get;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  std::uint64_t x = 0;
  try {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    x = std::stoull(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  if (pos != v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return x;
}

double parse_f64(const std::string& key, const std::string& v) {
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

bool parse_flag(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

Key model_key(const std::string& field, std::function<json(const ModelConfig&)> get) {
  return Key{"model." + field,
             [field](RunConfig& c, const std::string& v) {
               set_model_field(c.experiment.model, field, v);
             },
             [get = std::move(get)](const RunConfig& c) { return get(c.experiment.model); }};
}

const std::vector<Key>& key_table() {
  static const std::vector<Key> table = [] {
    std::vector<Key> k;
    using M = const ModelConfig&;
    k.push_back(model_key("arch", [](M m) { return to_string(m.arch); }));
    k.push_back(model_key("task", [](M m) { return to_string(m.task); }));
    k.push_back(model_key("depth", [](M m) { return m.depth; }));
    k.push_back(model_key("hidden", [](M m) { return m.hidden; }));
    k.push_back(model_key("mixing", [](M m) { return m.mixing; }));
    k.push_back(model_key("pre_activation", [](M m) { return m.pre_activation; }));
    k.push_back(model_key("pre_norm", [](M m) { return m.pre_norm; }));
    k.push_back(model_key("pre_dropout", [](M m) { return m.pre_dropout; }));
    k.push_back(model_key("post_norm", [](M m) { return m.post_norm; }));
    k.push_back(model_key("post_dropout", [](M m) { return m.post_dropout; }));
    k.push_back(model_key("mixing_dropout", [](M m) { return m.mixing_dropout; }));
    k.push_back(model_key("root_connection", [](M m) { return m.root_connection; }));
    k.push_back(model_key("residual", [](M m) { return m.residual; }));
    k.push_back(model_key("readout", [](M m) { return to_string(m.readout); }));
    k.push_back(model_key("k_hop", [](M m) { return m.k_hop; }));
    k.push_back(model_key("subgraph_cap", [](M m) { return m.subgraph_cap; }));
    k.push_back(model_key("batch_size", [](M m) { return m.batch_size; }));
    k.push_back(model_key("freeze_sampling", [](M m) { return m.freeze_sampling; }));
    k.push_back(model_key("normalize_input", [](M m) { return m.normalize_input; }));
    k.push_back(model_key("self_loops", [](M m) { return m.self_loops; }));
    k.push_back(model_key("undirected", [](M m) { return m.undirected; }));
    k.push_back(model_key("input_dropout", [](M m) { return m.input_dropout; }));
    k.push_back(model_key("model_dropout", [](M m) { return m.model_dropout; }));
    k.push_back(model_key("lr", [](M m) { return m.lr; }));
    k.push_back(model_key("weight_decay", [](M m) { return m.weight_decay; }));

    k.push_back({"train.setting",
                 [](RunConfig& c, const std::string& v) {
                   auto& s = c.experiment.setting;
                   if (v == "transductive") s = Setting::kTransductive;
                   else if (v == "inductive_strict") s = Setting::kInductiveStrict;
                   else if (v == "inductive_production") s = Setting::kInductiveProduction;
                   else throw ConfigError("train.setting: unknown setting '" + v + "'");
                 },
                 [](const RunConfig& c) { return json(to_string(c.experiment.setting)); }});
    k.push_back({"train.metric",
                 [](RunConfig& c, const std::string& v) {
                   auto& m = c.experiment.metric;
                   if (v == "accuracy") m = Metric::kAccuracy;
                   else if (v == "auroc") m = Metric::kAuroc;
                   else if (v == "mae") m = Metric::kMae;
                   else throw ConfigError("train.metric: unknown metric '" + v + "'");
                 },
                 [](const RunConfig& c) { return json(to_string(c.experiment.metric)); }});
    k.push_back({"train.seed",
                 [](RunConfig& c, const std::string& v) {
                   c.base_seed = parse_u64("train.seed", v);
                 },
                 [](const RunConfig& c) { return json(c.base_seed); }});
    k.push_back({"train.seeds",
                 [](RunConfig& c, const std::string& v) {
                   c.num_seeds = parse_u64("train.seeds", v);
                 },
                 [](const RunConfig& c) { return json(c.num_seeds); }});
    k.push_back({"train.max_epochs",
                 [](RunConfig& c, const std::string& v) {
                   c.experiment.max_epochs = parse_u64("train.max_epochs", v);
                 },
                 [](const RunConfig& c) { return json(c.experiment.max_epochs); }});
    k.push_back({"train.patience",
                 [](RunConfig& c, const std::string& v) {
                   c.experiment.patience = parse_u64("train.patience", v);
                 },
                 [](const RunConfig& c) { return json(c.experiment.patience); }});
    k.push_back({"train.parallel",
                 [](RunConfig& c, const std::string& v) {
                   c.experiment.parallel = parse_u64("train.parallel", v);
                 },
                 [](const RunConfig& c) { return json(c.experiment.parallel); }});
    k.push_back({"train.resplit",
                 [](RunConfig& c, const std::string& v) {
                   if (parse_flag("train.resplit", v)) {
                     if (!c.experiment.resplit) c.experiment.resplit = SplitRecipe{};
                   } else {
                     c.experiment.resplit.reset();
                   }
                 },
                 [](const RunConfig& c) { return json(c.experiment.resplit.has_value()); }});
    k.push_back({"train.train_per_class",
                 [](RunConfig& c, const std::string& v) {
                   if (!c.experiment.resplit) c.experiment.resplit = SplitRecipe{};
                   c.experiment.resplit->train_per_class = parse_u64("train.train_per_class", v);
                 },
                 [](const RunConfig& c) {
                   return json(c.experiment.resplit ? c.experiment.resplit->train_per_class
                                                    : SplitRecipe{}.train_per_class);
                 }});
    k.push_back({"train.val_per_class",
                 [](RunConfig& c, const std::string& v) {
                   if (!c.experiment.resplit) c.experiment.resplit = SplitRecipe{};
                   c.experiment.resplit->val_per_class = parse_u64("train.val_per_class", v);
                 },
                 [](const RunConfig& c) {
                   return json(c.experiment.resplit ? c.experiment.resplit->val_per_class
                                                    : SplitRecipe{}.val_per_class);
                 }});

    k.push_back({"data.path", [](RunConfig& c, const std::string& v) { c.data.path = v; },
                 [](const RunConfig& c) { return json(c.data.path); }});
    k.push_back({"data.synthetic",
                 [](RunConfig& c, const std::string& v) {
                   if (!v.empty() && v != "sbm") {
                     throw ConfigError("data.synthetic: only 'sbm' is available, got '" + v + "'");
                   }
                   c.data.synthetic = v;
                 },
                 [](const RunConfig& c) { return json(c.data.synthetic); }});
    k.push_back({"data.name", [](RunConfig& c, const std::string& v) { c.data.name = v; },
                 [](const RunConfig& c) { return json(c.data.name); }});
    k.push_back({"data.n",
                 [](RunConfig& c, const std::string& v) { c.data.sbm.n = parse_u64("data.n", v); },
                 [](const RunConfig& c) { return json(c.data.sbm.n); }});
    k.push_back({"data.classes",
                 [](RunConfig& c, const std::string& v) {
                   c.data.sbm.classes = parse_u64("data.classes", v);
                 },
                 [](const RunConfig& c) { return json(c.data.sbm.classes); }});
    k.push_back({"data.p_in",
                 [](RunConfig& c, const std::string& v) {
                   c.data.sbm.p_in = parse_f64("data.p_in", v);
                 },
                 [](const RunConfig& c) { return json(c.data.sbm.p_in); }});
    k.push_back({"data.p_out",
                 [](RunConfig& c, const std::string& v) {
                   c.data.sbm.p_out = parse_f64("data.p_out", v);
                 },
                 [](const RunConfig& c) { return json(c.data.sbm.p_out); }});
    k.push_back({"data.feat_dim",
                 [](RunConfig& c, const std::string& v) {
                   c.data.sbm.feat_dim = parse_u64("data.feat_dim", v);
                 },
                 [](const RunConfig& c) { return json(c.data.sbm.feat_dim); }});
    k.push_back({"data.noise",
                 [](RunConfig& c, const std::string& v) {
                   c.data.sbm.noise = parse_f64("data.noise", v);
                 },
                 [](const RunConfig& c) { return json(c.data.sbm.noise); }});
    k.push_back({"data.train_per_class",
                 [](RunConfig& c, const std::string& v) {
                   c.data.sbm.train_per_class = parse_u64("data.train_per_class", v);
                 },
                 [](const RunConfig& c) { return json(c.data.sbm.train_per_class); }});
    k.push_back({"data.val_per_class",
                 [](RunConfig& c, const std::string& v) {
                   c.data.sbm.val_per_class = parse_u64("data.val_per_class", v);
                 },
                 [](const RunConfig& c) { return json(c.data.sbm.val_per_class); }});
    k.push_back({"data.seed",
                 [](RunConfig& c, const std::string& v) {
                   c.data.sbm_seed = parse_u64("data.seed", v);
                 },
                 [](const RunConfig& c) { return json(c.data.sbm_seed); }});
    return k;
  }();
  return table;
}

}  // namespace

void RunConfig::sync_seeds() {
  experiment.seeds.clear();
  for (std::size_t i = 0; i < num_seeds; ++i) experiment.seeds.push_back(base_seed + i);
}

void RunConfig::validate() const {
  const bool has_path = !data.path.empty();
  const bool has_synthetic = !data.synthetic.empty();
  if (has_path == has_synthetic) {
    throw ConfigError("exactly one data source is required: a HAGRAPH path or data.synthetic=sbm");
  }
  if (num_seeds == 0) throw ConfigError("train.seeds must be >= 1");
  experiment.validate();
}

std::string RunConfig::dataset_name() const {
  if (!data.name.empty()) return data.name;
  if (!data.path.empty()) return std::filesystem::path(data.path).stem().string();
  return data.synthetic;
}

void apply_setting(RunConfig& config, const std::string& dotted_key, const std::string& value) {
  for (const Key& k : key_table()) {
    if (k.name == dotted_key) {
      k.set(config, value);
      config.sync_seeds();
      return;
    }
  }
  throw ConfigError("unknown config key '" + dotted_key + "'");
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
  }
  apply_setting(config, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void read_config(RunConfig& config, std::istream& in) {
  std::string line;
  std::string section;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError("config line " + std::to_string(number) + ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(number) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (!section.empty() && key.find('.') == std::string::npos) key = section + "." + key;
    try {
      apply_setting(config, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(number) + ": " + e.what());
    }
  }
}

void load_config(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  read_config(config, in);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> names;
  for (const Key& k : key_table()) names.push_back(k.name);
  return names;
}

nlohmann::json to_json(const RunConfig& config) {
  json out = json::object();
  for (const Key& k : key_table()) {
    const auto dot = k.name.find('.');
    out[k.name.substr(0, dot)][k.name.substr(dot + 1)] = k.get(config);
  }
  return out;
}

Graph load_dataset(const DataSource& data) {
  if (!data.path.empty()) return load_graph(data.path);
  Rng rng = derive_rng(data.sbm_seed, "sbm");
  return generate_sbm(data.sbm, rng);
}

}  // namespace hyperagg::cli
