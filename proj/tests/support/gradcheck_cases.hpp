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

// Finite-difference checks shared by the unit and acceptance suites.

#pragma once

#include <functional>
#include <vector>

#include "clforge/numcore/autodiff.hpp"
#include "clforge/numcore/gradcheck.hpp"
#include "clforge/numcore/rng.hpp"

namespace clforge::testing {

using namespace clforge::num;

inline Tensor random_tensor(Rng& rng, Shape shape, double scale = 1.0) {
  auto n = shape_size(shape);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal(0.0, scale);
  return Tensor(std::move(shape), std::move(v));
}

using Builder = std::function<Var(std::vector<Var>&)>;

// Projects a primitive's output onto a fixed random direction so that the
// check covers the full Jacobian, then compares autodiff with central
// differences over all input coordinates.
inline double primitive_gradcheck(const Builder& build, const std::vector<Tensor>& inputs, Rng& rng) {
  Tensor proj;
  {
    Tape probe(false);
    std::vector<Var> vars;
    for (const auto& t : inputs) vars.push_back(probe.constant(t));
    proj = random_tensor(rng, build(vars).shape());
  }

  Tape tape;
  std::vector<Var> vars;
  for (std::size_t i = 0; i < inputs.size(); ++i) vars.push_back(tape.parameter("in" + std::to_string(i), inputs[i]));
  Var out = build(vars);
  Var loss = sum(mul(out, tape.constant(proj)));
  auto grads = backward(loss);

  std::vector<double> analytic, theta;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto& g = grads.at("in" + std::to_string(i));
    analytic.insert(analytic.end(), g.vec().begin(), g.vec().end());
    theta.insert(theta.end(), inputs[i].vec().begin(), inputs[i].vec().end());
  }
  auto f = [&](std::span<const double> th) {
    Tape t(false);
    std::vector<Var> vs;
    std::size_t off = 0;
    for (const auto& in : inputs) {
      std::vector<double> d(th.begin() + off, th.begin() + off + in.size());
      off += in.size();
      vs.push_back(t.constant(Tensor(in.shape(), std::move(d))));
    }
    return sum(mul(build(vs), t.constant(proj))).value().item();
  };
  auto numeric = finite_difference(f, theta, 1e-5);
  return max_relative_error(analytic, numeric);
}

struct PrimitiveCase {
  const char* name;
  std::function<std::vector<Tensor>(Rng&)> inputs;
  Builder build;
};

inline std::vector<PrimitiveCase> primitive_cases() {
  auto mat = [](std::size_t r, std::size_t c) { return [r, c](Rng& g) { return std::vector<Tensor>{random_tensor(g, {r, c})}; }; };
  auto two = [](Shape a, Shape b) { return [a, b](Rng& g) { return std::vector<Tensor>{random_tensor(g, a), random_tensor(g, b)}; }; };
  return {
      {"add", two({3, 4}, {3, 4}), [](auto& v) { return add(v[0], v[1]); }},
      {"sub", two({3, 4}, {3, 4}), [](auto& v) { return sub(v[0], v[1]); }},
      {"mul", two({3, 4}, {3, 4}), [](auto& v) { return mul(v[0], v[1]); }},
      {"scale", mat(2, 5), [](auto& v) { return scale(v[0], -1.7); }},
      {"square", mat(2, 5), [](auto& v) { return square(v[0]); }},
      {"tanh", mat(3, 3), [](auto& v) { return tanh(v[0]); }},
      {"gelu", mat(3, 3), [](auto& v) { return gelu(v[0]); }},
      {"add_row", two({4, 3}, {3}), [](auto& v) { return add_row(v[0], v[1]); }},
      {"matmul", two({3, 4}, {4, 2}), [](auto& v) { return matmul(v[0], v[1]); }},
      {"matmul_nt", two({3, 4}, {5, 4}), [](auto& v) { return matmul_nt(v[0], v[1]); }},
      {"slice_cols", mat(3, 6), [](auto& v) { return slice_cols(v[0], 2, 3); }},
      {"concat_cols", two({3, 2}, {3, 4}), [](auto& v) { return concat_cols(std::span<const Var>(v)); }},
      {"select_rows", mat(5, 3), [](auto& v) { return select_rows(v[0], {4, 0, 4}); }},
      {"embedding", mat(6, 3), [](auto& v) { return embedding(v[0], {1, 5, 1, 0}); }},
      {"softmax", mat(4, 4), [](auto& v) { return softmax(v[0]); }},
      {"causal_softmax", mat(4, 4), [](auto& v) { return masked_softmax(v[0], true); }},
      {"layer_norm",
       [](Rng& g) { return std::vector<Tensor>{random_tensor(g, {3, 5}), random_tensor(g, {5}), random_tensor(g, {5})}; },
       [](auto& v) { return layer_norm(v[0], v[1], v[2]); }},
      {"sum", mat(2, 3), [](auto& v) { return sum(v[0]); }},
      {"mean", mat(2, 3), [](auto& v) { return mean(v[0]); }},
      {"dropout", mat(3, 4), [](auto& v) {
         Rng fixed(5);
         return dropout(v[0], 0.3, fixed);
       }},
      {"cross_entropy", mat(4, 5), [](auto& v) { return cross_entropy(v[0], {0, -1, 4, 2}); }},
  };
}

}  // namespace clforge::testing
