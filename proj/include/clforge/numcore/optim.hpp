/*
 * Copyright 2026 The clforge Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>

#include "clforge/numcore/tensor.hpp"

namespace clforge::num {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment accumulators mirroring the parameter shapes.
class AdamState {
 public:
  explicit AdamState(AdamConfig config = {}) : config_(config) {}

  const AdamConfig& config() const { return config_; }
  std::uint64_t step() const { return step_; }
  const ParamMap& first_moment() const { return m_; }
  const ParamMap& second_moment() const { return v_; }

 private:
  friend void adam_step(ParamMap& params, const GradMap& grads, AdamState& state);

  AdamConfig config_;
  std::uint64_t step_ = 0;
  ParamMap m_;
  ParamMap v_;
};

/// One bias-corrected adaptive-moment update, applied in parameter-name order.
/// Every parameter must have a gradient of the same shape.
void adam_step(ParamMap& params, const GradMap& grads, AdamState& state);

/// Global L2 norm over all gradient entries.
double global_norm(const GradMap& grads);
/// Rescales `grads` in place so their global norm is at most `max_norm`.
/// Returns the norm before clipping.
double clip_global_norm(GradMap& grads, double max_norm);

}  // namespace clforge::num
