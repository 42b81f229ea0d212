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

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyperagg/graph.hpp"
#include "hyperagg/harness.hpp"

namespace hyperagg::cli {

struct DataSource {
  std::string path;        // HAGRAPH file
  std::string synthetic;   // "" or "sbm"
  std::string name;        // label used in summaries; defaults to the file stem
  SbmOptions sbm;
  std::uint64_t sbm_seed = 0;
};

// Everything a run needs besides output locations.
struct RunConfig {
  RunConfig() { sync_seeds(); }

  ExperimentSpec experiment;
  DataSource data;
  std::uint64_t base_seed = 0;
  std::size_t num_seeds = 10;

  // Seeds base_seed .. base_seed + num_seeds - 1.
  void sync_seeds();
  // Throws ConfigError unless exactly one data source is set and the
  // experiment spec validates.
  void validate() const;
  std::string dataset_name() const;
};

// Config text: `[section]` headers followed by `key = value` lines; `#`
// starts a comment. Keys may also be written fully qualified
// (`model.hidden = 64`) outside any section.
void apply_setting(RunConfig& config, const std::string& dotted_key, const std::string& value);
void apply_override(RunConfig& config, const std::string& assignment);  // "section.key=value"
void read_config(RunConfig& config, std::istream& in);
void load_config(RunConfig& config, const std::string& path);

// Every accepted key, in canonical order.
std::vector<std::string> config_keys();

// Full effective configuration, grouped by section.
nlohmann::json to_json(const RunConfig& config);

// Loads or generates the dataset. Throws DataError (I/O, parse) or
// ConfigError (invalid synthetic parameters).
Graph load_dataset(const DataSource& data);

}  // namespace hyperagg::cli
