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

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "clforge/numcore/rng.hpp"
#include "clforge/numcore/tensor.hpp"

namespace clforge::num {

class Tape;

/// Handle to a value recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

/// Single-owner record of primitive operations for reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, so the record is topologically
/// sorted by construction. A tape built with `record_grad = false` keeps only
/// forward values and is used for inference.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  explicit Tape(bool record_grad = true) : record_grad_(record_grad) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable leaf identified by `id` in the gradient map.
  Var parameter(std::string id, Tensor value);
  Var constant(Tensor value);

  bool recording() const { return record_grad_; }
  std::size_t size() const { return nodes_.size(); }
  void clear();

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  const char* op_name(std::size_t id) const { return nodes_[id].op; }
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }

  // Used by primitive implementations.
  Var push(const char* op, Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);
  std::span<const double> grad(std::size_t id) const { return grads_[id]; }
  std::span<double> grad_accumulator(std::size_t id);

 private:
  struct Node {
    const char* op;
    Tensor value;
    std::vector<std::size_t> inputs;
    bool needs_grad = false;
    std::string param_id;
    BackwardFn backward;
  };

  friend GradMap backward(Var loss);

  bool record_grad_;
  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
};

/// Reverse-mode gradients of a scalar `loss` for every parameter leaf on its
/// tape. Parameters the loss does not depend on get zero gradients. The tape
/// is cleared afterwards.
GradMap backward(Var loss);

// Elementwise and shape primitives. Binary ops require equal shapes.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var square(Var a);
Var tanh(Var a);
Var gelu(Var a);
/// Adds a length-n bias to every row of an [m, n] matrix.
Var add_row(Var a, Var bias);

Var matmul(Var a, Var b);     // [m,k] x [k,n]
Var matmul_nt(Var a, Var b);  // [m,k] x [n,k]^T
Var slice_cols(Var a, std::size_t start, std::size_t count);
Var concat_cols(std::span<const Var> parts);
Var select_rows(Var a, std::vector<std::size_t> rows);
/// Rows of `table` gathered by token id.
Var embedding(Var table, std::vector<int> ids);

/// Row softmax of a square matrix. With `causal`, entry (i, j) for j > i is
/// excluded and produces probability 0.
Var masked_softmax(Var a, bool causal);
Var softmax(Var a);
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
/// Inverted dropout; identity when p == 0.
Var dropout(Var a, double p, Rng& rng);

Var sum(Var a);
Var mean(Var a);
/// Mean negative log-likelihood of `targets` under row-softmax of `logits`;
/// negative targets are ignored.
Var cross_entropy(Var logits, std::vector<int> targets);

}  // namespace clforge::num
