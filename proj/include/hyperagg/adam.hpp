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

#include <cstddef>
#include <span>
#include <vector>

#include "hyperagg/matrix.hpp"

namespace hyperagg {

struct AdamOptions {
  double lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

/// Moment buffers for one parameter matrix.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::size_t step = 0;
};

/// One Adam update with decoupled weight decay:
///   w <- w - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * w)
/// A learning rate of exactly zero leaves `params` unchanged; negative or
/// non-finite rates throw ConfigError.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamOptions& opts);

/// Adam over a fixed list of parameter matrices (gradients read from each
/// matrix's grad buffer).
class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<Matrix*> params, AdamOptions opts);

  void step();
  void zero_grad();
  const AdamOptions& options() const noexcept { return opts_; }

 private:
  std::vector<Matrix*> params_;
  std::vector<AdamState> states_;
  AdamOptions opts_;
};

}  // namespace hyperagg
