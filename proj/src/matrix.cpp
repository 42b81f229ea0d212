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

#include "hyperagg/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "hyperagg/error.hpp"

namespace hyperagg {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw DimensionError("matrix buffer of length " + std::to_string(data_.size()) +
                         " does not fit shape " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged row list");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

void Matrix::enable_grad() {
  if (!grad_enabled_ || grad_.size() != data_.size()) grad_.assign(data_.size(), 0.0);
  grad_enabled_ = true;
}

void Matrix::zero_grad() {
  enable_grad();
  std::fill(grad_.begin(), grad_.end(), 0.0);
}

std::span<double> Matrix::grad() {
  enable_grad();
  return grad_;
}

std::span<const double> Matrix::grad() const {
  if (!grad_enabled_) throw std::logic_error("matrix has no gradient buffer");
  return grad_;
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Matrix::check_finite(const char* where) const {
  if (!all_finite()) throw NumericalError(std::string("non-finite value in ") + where);
}

std::string Matrix::shape_string() const {
  return "[" + std::to_string(rows_) + "x" + std::to_string(cols_) + "]";
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("max_abs_diff: " + a.shape_string() + " vs " + b.shape_string());
  }
  double worst = 0.0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) worst = std::max(worst, std::abs(da[i] - db[i]));
  return worst;
}

}  // namespace hyperagg
