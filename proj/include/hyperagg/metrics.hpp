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
#include <span>
#include <string>

#include "hyperagg/matrix.hpp"

namespace hyperagg {

enum class Metric { kAccuracy, kAuroc, kMae };

std::string to_string(Metric m);
// Accuracy and AUROC improve upwards, MAE downwards.
bool higher_is_better(Metric m);

// All metrics average over rows with mask[i] != 0 and throw DataError on an
// empty mask.

// Fraction of masked rows whose argmax (first maximum) equals the label.
double accuracy(const Matrix& logits, std::span<const int> labels,
                std::span<const std::uint8_t> mask);

// Two-class area under the ROC curve from the rank statistic, with ties
// counted as one half. Scores are logit(1) - logit(0).
double auroc(const Matrix& logits, std::span<const int> labels, std::span<const std::uint8_t> mask);

// Mean |prediction - target| for an n x 1 prediction matrix.
double mean_absolute_error(const Matrix& pred, std::span<const double> targets,
                           std::span<const std::uint8_t> mask);

}  // namespace hyperagg
