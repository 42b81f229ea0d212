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

#include "hyperagg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "hyperagg/error.hpp"

namespace hyperagg {

std::string to_string(Metric m) {
  switch (m) {
    case Metric::kAccuracy: return "accuracy";
    case Metric::kAuroc: return "auroc";
    case Metric::kMae: return "mae";
  }
  return "?";
}

bool higher_is_better(Metric m) { return m != Metric::kMae; }

namespace {

void check_lengths(std::size_t rows, std::size_t a, std::size_t b, const char* what) {
  if (a != rows || b != rows) {
    throw DimensionError(std::string(what) + ": label/mask length does not match predictions");
  }
}

}  // namespace

double accuracy(const Matrix& logits, std::span<const int> labels,
                std::span<const std::uint8_t> mask) {
  check_lengths(logits.rows(), labels.size(), mask.size(), "accuracy");
  std::size_t correct = 0, count = 0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    if (!mask[i]) continue;
    ++count;
    auto row = logits.row(i);
    const auto pred = std::max_element(row.begin(), row.end()) - row.begin();
    if (pred == labels[i]) ++correct;
  }
  if (count == 0) throw DataError("accuracy: empty evaluation mask");
  return static_cast<double>(correct) / static_cast<double>(count);
}

double auroc(const Matrix& logits, std::span<const int> labels,
             std::span<const std::uint8_t> mask) {
  check_lengths(logits.rows(), labels.size(), mask.size(), "auroc");
  if (logits.cols() != 2) throw DataError("auroc requires exactly two classes");
  std::vector<std::pair<double, int>> scored;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    if (mask[i]) scored.emplace_back(logits(i, 1) - logits(i, 0), labels[i]);
  }
  if (scored.empty()) throw DataError("auroc: empty evaluation mask");
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  // Average ranks over ties, then Mann-Whitney U.
  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < scored.size();) {
    std::size_t j = i;
    while (j < scored.size() && scored[j].first == scored[i].first) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (scored[k].second == 1) {
        positive_rank_sum += avg_rank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = scored.size() - positives;
  if (positives == 0 || negatives == 0) throw DataError("auroc needs both classes in the mask");
  const double p = static_cast<double>(positives);
  const double n = static_cast<double>(negatives);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

double mean_absolute_error(const Matrix& pred, std::span<const double> targets,
                           std::span<const std::uint8_t> mask) {
  check_lengths(pred.rows(), targets.size(), mask.size(), "mae");
  if (pred.cols() != 1) throw DimensionError("mae expects a single prediction column");
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < pred.rows(); ++i) {
    if (!mask[i]) continue;
    total += std::abs(pred(i, 0) - targets[i]);
    ++count;
  }
  if (count == 0) throw DataError("mae: empty evaluation mask");
  return total / static_cast<double>(count);
}

}  // namespace hyperagg
