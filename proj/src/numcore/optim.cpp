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

#include "clforge/numcore/optim.hpp"

#include <cmath>

#include "clforge/error.hpp"

namespace clforge::num {

void adam_step(ParamMap& params, const GradMap& grads, AdamState& state) {
  if (grads.size() != params.size()) {
    throw NumericError("adam_step: " + std::to_string(grads.size()) + " gradients for " + std::to_string(params.size()) + " parameters");
  }
  for (const auto& [name, p] : params) {
    auto it = grads.find(name);
    if (it == grads.end()) throw NumericError("adam_step: missing gradient for '" + name + "'");
    if (it->second.shape() != p.shape()) {
      throw NumericError("adam_step: shape mismatch for '" + name + "': " + shape_str(p.shape()) + " vs " + shape_str(it->second.shape()));
    }
  }

  const auto& c = state.config_;
  ++state.step_;
  const double t = static_cast<double>(state.step_);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);

  for (auto& [name, p] : params) {
    auto& m = state.m_.try_emplace(name, Tensor::zeros(p.shape())).first->second;
    auto& v = state.v_.try_emplace(name, Tensor::zeros(p.shape())).first->second;
    const auto& g = grads.at(name);
    auto pd = p.mutable_data();
    auto md = m.mutable_data();
    auto vd = v.mutable_data();
    for (std::size_t i = 0; i < pd.size(); ++i) {
      md[i] = c.beta1 * md[i] + (1.0 - c.beta1) * g[i];
      vd[i] = c.beta2 * vd[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double mhat = md[i] / bc1;
      const double vhat = vd[i] / bc2;
      pd[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

double global_norm(const GradMap& grads) {
  double s = 0.0;
  for (const auto& [_, g] : grads) {
    for (double v : g.data()) s += v * v;
  }
  return std::sqrt(s);
}

double clip_global_norm(GradMap& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm > max_norm && norm > 0.0) {
    const double f = max_norm / norm;
    for (auto& [_, g] : grads) {
      for (auto& v : g.mutable_data()) v *= f;
    }
  }
  return norm;
}

}  // namespace clforge::num
