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

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "hyperagg/error.hpp"
#include "hyperagg/graph_io.hpp"
#include "hyperagg/models.hpp"

namespace hyperagg {

std::string describe(const ModelConfig& c) {
  std::ostringstream os;
  auto b = [](bool v) { return v ? "true" : "false"; };
  auto d = [](double v) { return format_double(v); };
  os << "arch=" << to_string(c.arch) << '\n'
     << "task=" << to_string(c.task) << '\n'
     << "depth=" << c.depth << '\n'
     << "hidden=" << c.hidden << '\n'
     << "mixing=" << c.mixing << '\n'
     << "pre_activation=" << b(c.pre_activation) << '\n'
     << "pre_norm=" << b(c.pre_norm) << '\n'
     << "pre_dropout=" << d(c.pre_dropout) << '\n'
     << "post_norm=" << b(c.post_norm) << '\n'
     << "post_dropout=" << d(c.post_dropout) << '\n'
     << "mixing_dropout=" << d(c.mixing_dropout) << '\n'
     << "root_connection=" << b(c.root_connection) << '\n'
     << "residual=" << b(c.residual) << '\n'
     << "readout=" << to_string(c.readout) << '\n'
     << "k_hop=" << c.k_hop << '\n'
     << "subgraph_cap=" << c.subgraph_cap << '\n'
     << "batch_size=" << c.batch_size << '\n'
     << "freeze_sampling=" << b(c.freeze_sampling) << '\n'
     << "normalize_input=" << b(c.normalize_input) << '\n'
     << "self_loops=" << b(c.self_loops) << '\n'
     << "undirected=" << b(c.undirected) << '\n'
     << "input_dropout=" << d(c.input_dropout) << '\n'
     << "model_dropout=" << d(c.model_dropout) << '\n'
     << "lr=" << d(c.lr) << '\n'
     << "weight_decay=" << d(c.weight_decay) << '\n';
  return os.str();
}

namespace {

constexpr std::array<char, 8> kMagic = {'H', 'A', 'G', 'G', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

void put_string(std::ostream& out, const std::string& s) {
  put_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw DataError("checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

std::string get_string(std::istream& in, std::uint64_t limit) {
  const std::uint64_t n = get_u64(in);
  if (n > limit) throw DataError("checkpoint string length out of range");
  std::string s(n, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(n))) throw DataError("checkpoint truncated");
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, ModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint '" + path + "'");
  out.write(kMagic.data(), kMagic.size());
  put_u64(out, kVersion);
  put_string(out, describe(params.config));
  put_u64(out, params.in_dim);
  put_u64(out, params.out_dim);
  auto named = params.named_parameters();
  put_u64(out, named.size());
  for (const auto& [name, m] : named) {
    put_string(out, name);
    put_u64(out, m->rows());
    put_u64(out, m->cols());
    for (double v : m->data()) put_f64(out, v);
  }
  if (!out) throw DataError("failed while writing checkpoint '" + path + "'");
}

void load_checkpoint(const std::string& path, ModelParams& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw DataError("'" + path + "' is not a checkpoint file");
  }
  if (get_u64(in) != kVersion) throw DataError("unsupported checkpoint version");
  const std::string config = get_string(in, 1 << 20);
  if (config != describe(params.config)) {
    throw DataError("checkpoint config does not match the requested model configuration");
  }
  if (get_u64(in) != params.in_dim || get_u64(in) != params.out_dim) {
    throw DataError("checkpoint input/output dimensions do not match");
  }
  auto named = params.named_parameters();
  if (get_u64(in) != named.size()) throw DataError("checkpoint parameter count mismatch");
  for (auto& [name, m] : named) {
    if (get_string(in, 4096) != name) throw DataError("checkpoint parameter order mismatch");
    const std::uint64_t rows = get_u64(in);
    const std::uint64_t cols = get_u64(in);
    if (rows != m->rows() || cols != m->cols()) {
      throw DataError("checkpoint shape mismatch for " + name);
    }
    for (double& v : m->data()) v = std::bit_cast<double>(get_u64(in));
  }
}

}  // namespace hyperagg
