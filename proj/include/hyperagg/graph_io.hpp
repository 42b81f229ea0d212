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

#include <iosfwd>
#include <string>

#include "hyperagg/graph.hpp"

namespace hyperagg {

// HAGRAPH text format, see docs/hagraph_format.md. Decimals are written in
// shortest round-trip form, so save followed by load reproduces the graph
// exactly. Errors are reported as ParseError (with line) or DataError.
Graph read_graph(std::istream& in);
void write_graph(std::ostream& out, const Graph& g);

Graph load_graph(const std::string& path);
void save_graph(const std::string& path, const Graph& g);

// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace hyperagg
