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

#include "hyperagg/tape.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hyperagg/error.hpp"

namespace hyperagg {

namespace {

thread_local std::string g_corrupt_op;
thread_local double g_corrupt_factor = 1.0;

double backward_factor(const char* op) {
  if (g_corrupt_op.empty() || g_corrupt_op != op) return 1.0;
  return g_corrupt_factor;
}

Tape& same_tape(Var a, Var b, const char* op) {
  if (a.tape == nullptr || a.tape != b.tape) {
    throw std::logic_error(std::string(op) + ": operands recorded on different tapes");
  }
  return *a.tape;
}

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + a.shape_string() + " and " +
                       b.shape_string());
}

// c += a * b (plain kernel, skips zero entries of a).
void gemm_acc(const double* a, const double* b, double* c, std::size_t p, std::size_t q,
              std::size_t r) {
  for (std::size_t i = 0; i < p; ++i) {
    double* ci = c + i * r;
    for (std::size_t k = 0; k < q; ++k) {
      const double aik = a[i * q + k];
      if (aik == 0.0) continue;
      const double* bk = b + k * r;
      for (std::size_t j = 0; j < r; ++j) ci[j] += aik * bk[j];
    }
  }
}

// c += a * b^T, with a: p x q, b: r x q.
void gemm_nt_acc(const double* a, const double* b, double* c, std::size_t p, std::size_t q,
                 std::size_t r, double f) {
  for (std::size_t i = 0; i < p; ++i) {
    const double* ai = a + i * q;
    for (std::size_t j = 0; j < r; ++j) {
      const double* bj = b + j * q;
      double acc = 0.0;
      for (std::size_t k = 0; k < q; ++k) acc += ai[k] * bj[k];
      c[i * r + j] += f * acc;
    }
  }
}

// c += a^T * b, with a: q x p, b: q x r.
void gemm_tn_acc(const double* a, const double* b, double* c, std::size_t p, std::size_t q,
                 std::size_t r, double f) {
  for (std::size_t k = 0; k < q; ++k) {
    const double* ak = a + k * p;
    const double* bk = b + k * r;
    for (std::size_t i = 0; i < p; ++i) {
      const double aki = f * ak[i];
      if (aki == 0.0) continue;
      double* ci = c + i * r;
      for (std::size_t j = 0; j < r; ++j) ci[j] += aki * bk[j];
    }
  }
}

}  // namespace

namespace debug {
void corrupt_backward(const std::string& op, double factor) {
  g_corrupt_op = op;
  g_corrupt_factor = factor;
}
}  // namespace debug

const Matrix& Var::value() const { return tape->value(id); }

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, nullptr, {}});
  return Var{this, nodes_.size() - 1};
}

Var Tape::parameter(Matrix& param) {
  if (auto it = param_ids_.find(&param); it != param_ids_.end()) return Var{this, it->second};
  Matrix copy(param.rows(), param.cols(),
              std::vector<double>(param.data().begin(), param.data().end()));
  nodes_.push_back(Node{std::move(copy), {}, recording_ ? &param : nullptr, {}});
  param_ids_.emplace(&param, nodes_.size() - 1);
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(Matrix value, BackwardFn backward) {
  nodes_.push_back(Node{std::move(value), {}, nullptr, recording_ ? std::move(backward) : nullptr});
  return Var{this, nodes_.size() - 1};
}

std::span<double> Tape::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw std::logic_error("backward: loss belongs to another tape");
  if (!recording_) throw std::logic_error("backward: tape was created in inference mode");
  const Matrix& lv = value(loss.id);
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw DimensionError("backward: loss must be 1x1, got " + lv.shape_string());
  }
  for (auto& n : nodes_) n.grad.clear();
  grad(loss.id)[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    if (nodes_[i].backward && !nodes_[i].grad.empty()) nodes_[i].backward(*this, i);
  }
  for (auto& n : nodes_) {
    if (n.param == nullptr) continue;
    auto pg = n.param->grad();
    if (n.grad.empty()) continue;
    for (std::size_t k = 0; k < pg.size(); ++k) pg[k] += n.grad[k];
  }
}

// ---------------------------------------------------------------------------

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b, "matmul");
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  if (A.cols() != B.rows()) shape_error("matmul", A, B);
  const std::size_t p = A.rows(), q = A.cols(), r = B.cols();
  Matrix out(p, r);
  gemm_acc(A.data().data(), B.data().data(), out.data().data(), p, q, r);
  const std::size_t ia = a.id, ib = b.id;
  return t.record(std::move(out), [ia, ib, p, q, r](Tape& t, std::size_t self) {
    const double f = backward_factor("matmul");
    const double* dc = t.grad(self).data();
    // dA = dC B^T, dB = A^T dC
    gemm_nt_acc(dc, t.value(ib).data().data(), t.grad(ia).data(), p, r, q, f);
    gemm_tn_acc(t.value(ia).data().data(), dc, t.grad(ib).data(), q, p, r, f);
  });
}

Var transpose(Var a) {
  Tape& t = *a.tape;
  const Matrix& A = a.value();
  const std::size_t p = A.rows(), q = A.cols();
  Matrix out(q, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < q; ++j) out(j, i) = A(i, j);
  const std::size_t ia = a.id;
  return t.record(std::move(out), [ia, p, q](Tape& t, std::size_t self) {
    auto dout = t.grad(self);
    auto da = t.grad(ia);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < q; ++j) da[i * q + j] += dout[j * p + i];
  });
}

double gelu_scalar(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_derivative(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) * (std::numbers::inv_sqrtpi / std::numbers::sqrt2);
  return cdf + x * pdf;
}

Var gelu(Var a) {
  Tape& t = *a.tape;
  const Matrix& A = a.value();
  Matrix out(A.rows(), A.cols());
  auto src = A.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = gelu_scalar(src[i]);
  const std::size_t ia = a.id;
  return t.record(std::move(out), [ia](Tape& t, std::size_t self) {
    const double f = backward_factor("gelu");
    auto dout = t.grad(self);
    auto x = t.value(ia).data();
    auto da = t.grad(ia);
    for (std::size_t i = 0; i < x.size(); ++i) da[i] += f * dout[i] * gelu_derivative(x[i]);
  });
}

namespace {

bool is_row_broadcast(const Matrix& a, const Matrix& b) {
  return b.rows() == 1 && b.cols() == a.cols() && a.rows() != 1;
}

Var add_scaled(Var a, Var b, double sign, const char* op) {
  Tape& t = same_tape(a, b, op);
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  const bool same = A.rows() == B.rows() && A.cols() == B.cols();
  const bool bcast = !same && is_row_broadcast(A, B);
  if (!same && !bcast) shape_error(op, A, B);
  Matrix out = Matrix(A.rows(), A.cols(), std::vector<double>(A.data().begin(), A.data().end()));
  const std::size_t cols = A.cols();
  auto o = out.data();
  auto bd = B.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += sign * bd[bcast ? i % cols : i];
  const std::size_t ia = a.id, ib = b.id;
  return t.record(std::move(out), [ia, ib, sign, bcast, cols](Tape& t, std::size_t self) {
    auto dout = t.grad(self);
    auto da = t.grad(ia);
    for (std::size_t i = 0; i < dout.size(); ++i) da[i] += dout[i];
    auto db = t.grad(ib);
    for (std::size_t i = 0; i < dout.size(); ++i) db[bcast ? i % cols : i] += sign * dout[i];
  });
}

}  // namespace

Var add(Var a, Var b) { return add_scaled(a, b, 1.0, "add"); }
Var sub(Var a, Var b) { return add_scaled(a, b, -1.0, "sub"); }

Var scale(Var a, double factor) {
  Tape& t = *a.tape;
  const Matrix& A = a.value();
  Matrix out(A.rows(), A.cols());
  for (std::size_t i = 0; i < A.size(); ++i) out.data()[i] = factor * A.data()[i];
  const std::size_t ia = a.id;
  return t.record(std::move(out), [ia, factor](Tape& t, std::size_t self) {
    auto dout = t.grad(self);
    auto da = t.grad(ia);
    for (std::size_t i = 0; i < dout.size(); ++i) da[i] += factor * dout[i];
  });
}

Var elementwise_mul(Var a, Var b) {
  Tape& t = same_tape(a, b, "elementwise_mul");
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  if (A.rows() != B.rows() || A.cols() != B.cols()) shape_error("elementwise_mul", A, B);
  Matrix out(A.rows(), A.cols());
  for (std::size_t i = 0; i < A.size(); ++i) out.data()[i] = A.data()[i] * B.data()[i];
  const std::size_t ia = a.id, ib = b.id;
  return t.record(std::move(out), [ia, ib](Tape& t, std::size_t self) {
    auto dout = t.grad(self);
    auto av = t.value(ia).data();
    auto bv = t.value(ib).data();
    auto da = t.grad(ia);
    for (std::size_t i = 0; i < dout.size(); ++i) da[i] += dout[i] * bv[i];
    auto db = t.grad(ib);
    for (std::size_t i = 0; i < dout.size(); ++i) db[i] += dout[i] * av[i];
  });
}

Var sum(Var a) {
  Tape& t = *a.tape;
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const std::size_t ia = a.id;
  return t.record(Matrix(1, 1, s), [ia](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    for (double& d : t.grad(ia)) d += g;
  });
}

Var mean_rows(Var a) {
  Tape& t = *a.tape;
  const Matrix& A = a.value();
  if (A.rows() == 0) throw DimensionError("mean_rows: empty matrix");
  const std::size_t n = A.rows(), c = A.cols();
  Matrix out(1, c);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) out(0, j) += A(i, j);
  for (double& v : out.data()) v /= static_cast<double>(n);
  const std::size_t ia = a.id;
  return t.record(std::move(out), [ia, n, c](Tape& t, std::size_t self) {
    auto dout = t.grad(self);
    auto da = t.grad(ia);
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < c; ++j) da[i * c + j] += dout[j] * inv;
  });
}

Var concat_cols(Var a, Var b) {
  Tape& t = same_tape(a, b, "concat_cols");
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  if (A.rows() != B.rows()) shape_error("concat_cols", A, B);
  const std::size_t n = A.rows(), ca = A.cols(), cb = B.cols();
  Matrix out(n, ca + cb);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(A.row(i).begin(), A.row(i).end(), out.row(i).begin());
    std::copy(B.row(i).begin(), B.row(i).end(), out.row(i).begin() + ca);
  }
  const std::size_t ia = a.id, ib = b.id;
  return t.record(std::move(out), [ia, ib, n, ca, cb](Tape& t, std::size_t self) {
    auto dout = t.grad(self);
    auto da = t.grad(ia);
    auto db = t.grad(ib);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < ca; ++j) da[i * ca + j] += dout[i * (ca + cb) + j];
      for (std::size_t j = 0; j < cb; ++j) db[i * cb + j] += dout[i * (ca + cb) + ca + j];
    }
  });
}

Var row_select(Var a, std::span<const std::size_t> rows) {
  Tape& t = *a.tape;
  const Matrix& A = a.value();
  const std::size_t c = A.cols();
  Matrix out(rows.size(), c);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= A.rows()) {
      throw DimensionError("row_select: row " + std::to_string(rows[i]) + " out of range for " +
                           A.shape_string());
    }
    auto src = A.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  const std::size_t ia = a.id;
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return t.record(std::move(out), [ia, c, idx = std::move(idx)](Tape& t, std::size_t self) {
    auto dout = t.grad(self);
    auto da = t.grad(ia);
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < c; ++j) da[idx[i] * c + j] += dout[i * c + j];
  });
}

Var stack_rows(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("stack_rows: no inputs");
  Tape& t = *parts.front().tape;
  const std::size_t c = parts.front().cols();
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (p.tape != &t) throw std::logic_error("stack_rows: operands recorded on different tapes");
    if (p.cols() != c) shape_error("stack_rows", parts.front().value(), p.value());
    total += p.rows();
  }
  Matrix out(total, c);
  std::vector<std::size_t> ids;
  ids.reserve(parts.size());
  std::size_t offset = 0;
  for (const Var& p : parts) {
    auto src = p.value().data();
    std::copy(src.begin(), src.end(), out.data().begin() + offset);
    offset += src.size();
    ids.push_back(p.id);
  }
  return t.record(std::move(out), [ids = std::move(ids)](Tape& t, std::size_t self) {
    auto dout = t.grad(self);
    std::size_t offset = 0;
    for (std::size_t id : ids) {
      auto d = t.grad(id);
      for (std::size_t k = 0; k < d.size(); ++k) d[k] += dout[offset + k];
      offset += d.size();
    }
  });
}

Var layer_norm(Var a, Var gain, Var bias, double eps) {
  Tape& t = same_tape(a, gain, "layer_norm");
  same_tape(a, bias, "layer_norm");
  const Matrix& A = a.value();
  const std::size_t n = A.rows(), c = A.cols();
  if (gain.rows() != 1 || gain.cols() != c) shape_error("layer_norm", A, gain.value());
  if (bias.rows() != 1 || bias.cols() != c) shape_error("layer_norm", A, bias.value());
  Matrix out(n, c);
  Matrix xhat(n, c);
  std::vector<double> inv_std(n);
  auto g = gain.value().data();
  auto b = bias.value().data();
  for (std::size_t i = 0; i < n; ++i) {
    auto x = A.row(i);
    double mu = 0.0;
    for (double v : x) mu += v;
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (double v : x) var += (v - mu) * (v - mu);
    var /= static_cast<double>(c);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j) {
      xhat(i, j) = (x[j] - mu) * inv_std[i];
      out(i, j) = xhat(i, j) * g[j] + b[j];
    }
  }
  const std::size_t ia = a.id, ig = gain.id, ib = bias.id;
  return t.record(std::move(out), [ia, ig, ib, n, c, xhat = std::move(xhat),
                                   inv_std = std::move(inv_std)](Tape& t, std::size_t self) {
    const double f = backward_factor("layer_norm");
    auto dout = t.grad(self);
    auto g = t.value(ig).data();
    auto da = t.grad(ia);
    auto dg = t.grad(ig);
    auto db = t.grad(ib);
    std::vector<double> dxhat(c);
    for (std::size_t i = 0; i < n; ++i) {
      double mean_d = 0.0, mean_dx = 0.0;
      for (std::size_t j = 0; j < c; ++j) {
        const double dy = dout[i * c + j];
        dg[j] += dy * xhat(i, j);
        db[j] += dy;
        dxhat[j] = dy * g[j];
        mean_d += dxhat[j];
        mean_dx += dxhat[j] * xhat(i, j);
      }
      mean_d /= static_cast<double>(c);
      mean_dx /= static_cast<double>(c);
      for (std::size_t j = 0; j < c; ++j) {
        da[i * c + j] += f * inv_std[i] * (dxhat[j] - mean_d - xhat(i, j) * mean_dx);
      }
    }
  });
}

Var dropout(Var a, double p, bool training, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw ConfigError("dropout probability must lie in [0, 1), got " + std::to_string(p));
  }
  if (!training || p == 0.0) return a;
  Tape& t = *a.tape;
  const Matrix& A = a.value();
  const double keep_scale = 1.0 / (1.0 - p);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> mask(A.size());
  Matrix out(A.rows(), A.cols());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = u(rng) < p ? 0.0 : keep_scale;
    out.data()[i] = A.data()[i] * mask[i];
  }
  const std::size_t ia = a.id;
  return t.record(std::move(out), [ia, mask = std::move(mask)](Tape& t, std::size_t self) {
    auto dout = t.grad(self);
    auto da = t.grad(ia);
    for (std::size_t i = 0; i < dout.size(); ++i) da[i] += dout[i] * mask[i];
  });
}

Var propagate(const SparseWeights& s, Var a) {
  Tape& t = *a.tape;
  const Matrix& A = a.value();
  if (s.cols != A.rows()) {
    throw DimensionError("propagate: sparse operator has " + std::to_string(s.cols) +
                         " columns but input is " + A.shape_string());
  }
  const std::size_t c = A.cols();
  Matrix out(s.rows, c);
  for (std::size_t v = 0; v < s.rows; ++v) {
    auto dst = out.row(v);
    for (std::size_t e = s.offsets[v]; e < s.offsets[v + 1]; ++e) {
      const double w = s.weights[e];
      auto src = A.row(s.targets[e]);
      for (std::size_t j = 0; j < c; ++j) dst[j] += w * src[j];
    }
  }
  const std::size_t ia = a.id;
  return t.record(std::move(out), [ia, s, c](Tape& t, std::size_t self) {
    auto dout = t.grad(self);
    auto da = t.grad(ia);
    for (std::size_t v = 0; v < s.rows; ++v) {
      for (std::size_t e = s.offsets[v]; e < s.offsets[v + 1]; ++e) {
        const double w = s.weights[e];
        const std::size_t u = s.targets[e];
        for (std::size_t j = 0; j < c; ++j) da[u * c + j] += w * dout[v * c + j];
      }
    }
  });
}

Var segment_mean(Var a, std::span<const int> groups, std::size_t num_groups) {
  Tape& t = *a.tape;
  const Matrix& A = a.value();
  if (groups.size() != A.rows()) {
    throw DimensionError("segment_mean: " + std::to_string(groups.size()) +
                         " group ids for " + A.shape_string());
  }
  const std::size_t c = A.cols();
  std::vector<double> counts(num_groups, 0.0);
  Matrix out(num_groups, c);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i] < 0 || static_cast<std::size_t>(groups[i]) >= num_groups) {
      throw DimensionError("segment_mean: group id " + std::to_string(groups[i]) +
                           " out of range");
    }
    const auto g = static_cast<std::size_t>(groups[i]);
    counts[g] += 1.0;
    for (std::size_t j = 0; j < c; ++j) out(g, j) += A(i, j);
  }
  for (std::size_t g = 0; g < num_groups; ++g) {
    if (counts[g] == 0.0) throw DataError("segment_mean: group " + std::to_string(g) + " is empty");
    for (std::size_t j = 0; j < c; ++j) out(g, j) /= counts[g];
  }
  const std::size_t ia = a.id;
  std::vector<int> ids(groups.begin(), groups.end());
  return t.record(std::move(out), [ia, c, ids = std::move(ids),
                                   counts = std::move(counts)](Tape& t, std::size_t self) {
    auto dout = t.grad(self);
    auto da = t.grad(ia);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto g = static_cast<std::size_t>(ids[i]);
      for (std::size_t j = 0; j < c; ++j) da[i * c + j] += dout[g * c + j] / counts[g];
    }
  });
}

Var softmax_cross_entropy(Var logits, std::span<const int> labels,
                          std::span<const std::uint8_t> mask) {
  Tape& t = *logits.tape;
  const Matrix& L = logits.value();
  const std::size_t n = L.rows(), c = L.cols();
  if (labels.size() != n || mask.size() != n) {
    throw DimensionError("softmax_cross_entropy: labels/mask length does not match " +
                         L.shape_string());
  }
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) count += mask[i] ? 1 : 0;
  if (count == 0) throw DataError("no supervised vertices");
  Matrix probs(n, c);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c) {
      throw DataError("softmax_cross_entropy: label " + std::to_string(labels[i]) +
                      " outside [0, " + std::to_string(c) + ")");
    }
    auto row = L.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    const double log_z = mx + std::log(z);
    for (std::size_t j = 0; j < c; ++j) probs(i, j) = std::exp(row[j] - log_z);
    loss += log_z - row[static_cast<std::size_t>(labels[i])];
  }
  loss /= static_cast<double>(count);
  const std::size_t il = logits.id;
  std::vector<int> lab(labels.begin(), labels.end());
  std::vector<std::uint8_t> msk(mask.begin(), mask.end());
  return t.record(Matrix(1, 1, loss),
                  [il, n, c, count, probs = std::move(probs), lab = std::move(lab),
                   msk = std::move(msk)](Tape& t, std::size_t self) {
                    const double g = t.grad(self)[0] / static_cast<double>(count);
                    auto dl = t.grad(il);
                    for (std::size_t i = 0; i < n; ++i) {
                      if (!msk[i]) continue;
                      for (std::size_t j = 0; j < c; ++j) {
                        const double onehot = static_cast<int>(j) == lab[i] ? 1.0 : 0.0;
                        dl[i * c + j] += g * (probs(i, j) - onehot);
                      }
                    }
                  });
}

Var mean_absolute_error(Var pred, std::span<const double> targets,
                        std::span<const std::uint8_t> mask) {
  Tape& t = *pred.tape;
  const Matrix& P = pred.value();
  if (P.cols() != 1 || targets.size() != P.rows() || mask.size() != P.rows()) {
    throw DimensionError("mean_absolute_error: expected n x 1 predictions matching targets, got " +
                         P.shape_string());
  }
  std::size_t count = 0;
  double loss = 0.0;
  std::vector<double> sign(P.rows(), 0.0);
  for (std::size_t i = 0; i < P.rows(); ++i) {
    if (!mask[i]) continue;
    ++count;
    const double d = P(i, 0) - targets[i];
    loss += std::abs(d);
    sign[i] = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
  }
  if (count == 0) throw DataError("no supervised vertices");
  loss /= static_cast<double>(count);
  const std::size_t ip = pred.id;
  return t.record(Matrix(1, 1, loss),
                  [ip, count, sign = std::move(sign)](Tape& t, std::size_t self) {
                    const double g = t.grad(self)[0] / static_cast<double>(count);
                    auto dp = t.grad(ip);
                    for (std::size_t i = 0; i < sign.size(); ++i) dp[i] += g * sign[i];
                  });
}

}  // namespace hyperagg
