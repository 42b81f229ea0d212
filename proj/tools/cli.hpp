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
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hyperagg/harness.hpp"
#include "hyperagg/models.hpp"

namespace hyperagg::cli {

// Stable process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

// Entry point shared by the executable and the tests. `args` excludes the
// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// `seed,metric,epochs,seconds` rows; seconds are written as 0 when
// `timing` is false so repeated runs compare byte for byte.
void write_runs_csv(std::ostream& out, std::span<const RunResult> runs, bool timing);

// Relative error of an analytic gradient against a reference:
// max|a - f| / max(max|f|, 1e-8).
double relative_error(std::span<const double> analytic, std::span<const double> reference);

struct GradcheckEntry {
  std::string name;
  double error = 0.0;
};

// Central-difference check of every parameter of a small model on a seeded
// 6-vertex graph, with all dropout disabled.
std::vector<GradcheckEntry> gradient_check(Arch arch, std::size_t depth, std::size_t hidden,
                                           std::size_t mixing, std::uint64_t seed);

// Seeded 6-vertex undirected graph with self-loops, 3 features and 2 classes.
Graph gradcheck_graph(std::uint64_t seed);

}  // namespace hyperagg::cli
