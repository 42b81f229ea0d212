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

#include "hyperagg/adam.hpp"

#include <cmath>
#include <string>

#include "hyperagg/error.hpp"

namespace hyperagg {

namespace {

void validate(const AdamOptions& o) {
  if (!(o.lr >= 0.0) || !std::isfinite(o.lr)) {
    throw ConfigError("learning rate must be a finite non-negative number, got " +
                      std::to_string(o.lr));
  }
  if (!(o.beta1 >= 0.0 && o.beta1 < 1.0) || !(o.beta2 >= 0.0 && o.beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(o.eps > 0.0)) throw ConfigError("Adam eps must be positive");
  if (!(o.weight_decay >= 0.0)) throw ConfigError("weight decay must be non-negative");
}

}  // namespace

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamOptions& opts) {
  validate(opts);
  if (grads.size() != params.size()) {
    throw DimensionError("adam_step: " + std::to_string(grads.size()) + " gradients for " +
                         std::to_string(params.size()) + " parameters");
  }
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw DimensionError("adam_step: optimizer state does not match parameter shape");
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(opts.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(opts.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = opts.beta1 * state.m[i] + (1.0 - opts.beta1) * g;
    state.v[i] = opts.beta2 * state.v[i] + (1.0 - opts.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= opts.lr * (m_hat / (std::sqrt(v_hat) + opts.eps) + opts.weight_decay * params[i]);
  }
}

AdamOptimizer::AdamOptimizer(std::vector<Matrix*> params, AdamOptions opts)
    : params_(std::move(params)), states_(params_.size()), opts_(opts) {
  validate(opts_);
}

void AdamOptimizer::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Matrix& p = *params_[i];
    adam_step(p.data(), p.grad(), states_[i], opts_);
  }
}

void AdamOptimizer::zero_grad() {
  for (Matrix* p : params_) p->zero_grad();
}

}  // namespace hyperagg
