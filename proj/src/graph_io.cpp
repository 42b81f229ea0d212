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

#include "hyperagg/graph_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string_view>
#include <vector>

#include "hyperagg/error.hpp"

namespace hyperagg {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next non-empty line; false at end of input.
  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++number_;
      if (!split_ws(line).empty()) return true;
    }
    return false;
  }

  std::size_t number() const noexcept { return number_; }

 private:
  std::istream& in_;
  std::size_t number_ = 0;
};

template <typename T>
T parse_number(std::string_view tok, std::size_t line, const char* what) {
  T value{};
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (!tok.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ParseError(line, std::string("invalid ") + what + " '" + std::string(tok) + "'");
  }
  return value;
}

void expect_keyword(LineReader& r, std::string& line, std::string_view keyword) {
  if (!r.next(line)) {
    throw ParseError(r.number() + 1, "missing " + std::string(keyword) + " block");
  }
  auto tok = split_ws(line);
  if (tok.size() != 1 || tok[0] != keyword) {
    throw ParseError(r.number(), "expected '" + std::string(keyword) + "', found '" + line + "'");
  }
}

bool is_keyword(std::string_view line) {
  auto tok = split_ws(line);
  if (tok.size() != 1) return false;
  for (std::string_view k : {"EDGES", "FEATURES", "LABELS", "MASKS", "GRAPHID", "GTARGETS"}) {
    if (tok[0] == k) return true;
  }
  return false;
}

// Next data line of a block; running into end of input or the next block
// keyword means the block is shorter than declared.
std::string_view block_line(LineReader& r, std::string& line, std::string_view block,
                            std::size_t index, std::size_t total) {
  const bool more = r.next(line);
  if (!more || is_keyword(line)) {
    throw ParseError(more ? r.number() : r.number() + 1,
                     std::string(block) + " block truncated: length " + std::to_string(index) +
                         " of expected " + std::to_string(total));
  }
  return line;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

Graph read_graph(std::istream& in) {
  LineReader r(in);
  std::string line;
  if (!r.next(line)) throw ParseError(1, "empty input, expected HAGRAPH header");
  auto header = split_ws(line);
  if (header.size() != 6 || header[0] != "HAGRAPH") {
    throw ParseError(r.number(),
                     "malformed header, expected 'HAGRAPH 1 <vertices> <edges> <feat_dim> "
                     "<classes|REG>'");
  }
  if (header[1] != "1") {
    throw ParseError(r.number(), "unsupported HAGRAPH version '" + std::string(header[1]) + "'");
  }
  const auto nv = parse_number<std::size_t>(header[2], r.number(), "vertex count");
  const auto ne = parse_number<std::size_t>(header[3], r.number(), "edge count");
  const auto fd = parse_number<std::size_t>(header[4], r.number(), "feature dimension");
  const bool regression = header[5] == "REG";
  const std::size_t classes =
      regression ? 0 : parse_number<std::size_t>(header[5], r.number(), "class count");

  expect_keyword(r, line, "EDGES");
  std::vector<Edge> edges;
  edges.reserve(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    auto tok = split_ws(block_line(r, line, "EDGES", e, ne));
    if (tok.size() != 2) throw ParseError(r.number(), "edge line needs 'src dst'");
    const auto s = parse_number<std::size_t>(tok[0], r.number(), "edge source");
    const auto d = parse_number<std::size_t>(tok[1], r.number(), "edge target");
    if (s >= nv || d >= nv) throw ParseError(r.number(), "edge endpoint out of range");
    edges.emplace_back(s, d);
  }
  Graph g = from_edges(nv, edges);
  g.num_classes = classes;

  expect_keyword(r, line, "FEATURES");
  g.features = Matrix(nv, fd);
  for (std::size_t v = 0; v < nv; ++v) {
    auto tok = split_ws(block_line(r, line, "FEATURES", v, nv));
    if (tok.size() != fd) {
      throw ParseError(r.number(), "feature row length " + std::to_string(tok.size()) +
                                       " does not match feature dimension " + std::to_string(fd));
    }
    for (std::size_t j = 0; j < fd; ++j) {
      g.features(v, j) = parse_number<double>(tok[j], r.number(), "feature value");
    }
  }

  expect_keyword(r, line, "LABELS");
  if (regression) {
    g.targets_reg.resize(nv);
  } else {
    g.labels.resize(nv);
  }
  for (std::size_t v = 0; v < nv; ++v) {
    auto tok = split_ws(block_line(r, line, "LABELS", v, nv));
    if (tok.size() != 1) throw ParseError(r.number(), "label line needs one value");
    if (regression) {
      g.targets_reg[v] = tok[0] == "?" ? std::numeric_limits<double>::quiet_NaN()
                                       : parse_number<double>(tok[0], r.number(), "target");
    } else if (tok[0] == "?") {
      g.labels[v] = -1;
    } else {
      const auto c = parse_number<int>(tok[0], r.number(), "class label");
      if (c < 0 || static_cast<std::size_t>(c) >= classes) {
        throw ParseError(r.number(), "class label " + std::to_string(c) + " outside [0, " +
                                         std::to_string(classes) + ")");
      }
      g.labels[v] = c;
    }
  }

  expect_keyword(r, line, "MASKS");
  g.masks.train.assign(nv, 0);
  g.masks.val.assign(nv, 0);
  g.masks.test.assign(nv, 0);
  g.masks.observed.assign(nv, 0);
  for (std::size_t v = 0; v < nv; ++v) {
    auto tok = split_ws(block_line(r, line, "MASKS", v, nv));
    if (tok.size() != 1) throw ParseError(r.number(), "mask line needs one value");
    if (tok[0] == "train") {
      g.masks.train[v] = 1;
    } else if (tok[0] == "val") {
      g.masks.val[v] = 1;
    } else if (tok[0] == "test") {
      g.masks.test[v] = 1;
    } else if (tok[0] != "none") {
      throw ParseError(r.number(), "mask must be one of train, val, test, none");
    }
  }

  while (r.next(line)) {
    auto tok = split_ws(line);
    if (tok.size() == 1 && tok[0] == "GRAPHID") {
      std::vector<int> ids(nv);
      for (std::size_t v = 0; v < nv; ++v) {
        auto t = split_ws(block_line(r, line, "GRAPHID", v, nv));
        if (t.size() != 1) throw ParseError(r.number(), "graph id line needs one value");
        ids[v] = parse_number<int>(t[0], r.number(), "graph id");
        if (ids[v] < 0) throw ParseError(r.number(), "graph id must be non-negative");
      }
      g.graph_ids = std::move(ids);
    } else if (tok.size() == 1 && tok[0] == "GTARGETS") {
      if (!g.graph_ids) throw ParseError(r.number(), "GTARGETS block requires a GRAPHID block");
      const std::size_t count = g.num_graphs();
      g.graph_targets.resize(count);
      for (std::size_t i = 0; i < count; ++i) {
        auto t = split_ws(block_line(r, line, "GTARGETS", i, count));
        if (t.size() != 1) throw ParseError(r.number(), "graph target line needs one value");
        g.graph_targets[i] = parse_number<double>(t[0], r.number(), "graph target");
      }
    } else {
      throw ParseError(r.number(), "unexpected content '" + line + "'");
    }
  }
  g.validate();
  return g;
}

void write_graph(std::ostream& out, const Graph& g) {
  out << "HAGRAPH 1 " << g.num_vertices << ' ' << g.num_edges() << ' ' << g.features.cols() << ' ';
  if (g.is_regression()) {
    out << "REG\n";
  } else {
    out << g.num_classes << '\n';
  }
  out << "EDGES\n";
  for (const auto& [s, d] : g.edge_list()) out << s << ' ' << d << '\n';
  out << "FEATURES\n";
  for (std::size_t v = 0; v < g.num_vertices; ++v) {
    auto row = g.features.row(v);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << ' ';
      out << format_double(row[j]);
    }
    out << '\n';
  }
  out << "LABELS\n";
  for (std::size_t v = 0; v < g.num_vertices; ++v) {
    if (g.is_regression()) {
      const double t = v < g.targets_reg.size() ? g.targets_reg[v]
                                                : std::numeric_limits<double>::quiet_NaN();
      out << (std::isnan(t) ? std::string("?") : format_double(t)) << '\n';
    } else {
      const int c = v < g.labels.size() ? g.labels[v] : -1;
      if (c < 0) {
        out << "?\n";
      } else {
        out << c << '\n';
      }
    }
  }
  out << "MASKS\n";
  auto flag = [](const Mask& m, std::size_t v) { return v < m.size() && m[v]; };
  for (std::size_t v = 0; v < g.num_vertices; ++v) {
    if (flag(g.masks.train, v)) {
      out << "train\n";
    } else if (flag(g.masks.val, v)) {
      out << "val\n";
    } else if (flag(g.masks.test, v)) {
      out << "test\n";
    } else {
      out << "none\n";
    }
  }
  if (g.graph_ids) {
    out << "GRAPHID\n";
    for (int id : *g.graph_ids) out << id << '\n';
    if (!g.graph_targets.empty()) {
      out << "GTARGETS\n";
      for (double t : g.graph_targets) out << format_double(t) << '\n';
    }
  }
}

Graph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open graph file '" + path + "'");
  return read_graph(in);
}

void save_graph(const std::string& path, const Graph& g) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write graph file '" + path + "'");
  write_graph(out, g);
  if (!out) throw DataError("failed while writing '" + path + "'");
}

}  // namespace hyperagg
