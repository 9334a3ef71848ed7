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

#include "clforge/numcore/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "clforge/error.hpp"

namespace clforge::num {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto d : shape_) {
    if (d == 0) throw NumericError("tensor dimensions must be positive, got " + shape_str(shape_));
  }
  if (shape_size(shape_) != data_.size()) {
    throw NumericError("tensor shape " + shape_str(shape_) + " does not match " +
                       std::to_string(data_.size()) + " values");
  }
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
  auto n = shape_size(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

std::size_t Tensor::rows() const {
  if (shape_.size() != 2) throw NumericError("rows() needs a rank-2 tensor, got " + shape_str(shape_));
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (shape_.size() == 1) return shape_[0];
  if (shape_.size() != 2) throw NumericError("cols() needs a rank-1 or rank-2 tensor, got " + shape_str(shape_));
  return shape_[1];
}

double Tensor::item() const {
  if (data_.size() != 1) throw NumericError("item() on tensor of shape " + shape_str(shape_));
  return data_[0];
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool Tensor::bitwise_equal(const Tensor& other) const {
  return shape_ == other.shape_ &&
         std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(double)) == 0;
}

std::size_t param_count(const ParamMap& params) {
  std::size_t n = 0;
  for (const auto& [_, t] : params) n += t.size();
  return n;
}

std::vector<double> flatten(const ParamMap& params) {
  std::vector<double> out;
  out.reserve(param_count(params));
  for (const auto& [_, t] : params) out.insert(out.end(), t.vec().begin(), t.vec().end());
  return out;
}

void unflatten(std::span<const double> flat, ParamMap& params) {
  if (flat.size() != param_count(params)) {
    throw NumericError("unflatten: vector of " + std::to_string(flat.size()) + " values for " +
                       std::to_string(param_count(params)) + " parameters");
  }
  std::size_t off = 0;
  for (auto& [_, t] : params) {
    auto dst = t.mutable_data();
    std::copy(flat.begin() + off, flat.begin() + off + dst.size(), dst.begin());
    off += dst.size();
  }
}

std::vector<double> flatten_like(const GradMap& grads, const ParamMap& like) {
  std::vector<double> out;
  out.reserve(param_count(like));
  for (const auto& [name, p] : like) {
    auto it = grads.find(name);
    if (it == grads.end()) {
      out.insert(out.end(), p.size(), 0.0);
      continue;
    }
    if (it->second.size() != p.size()) throw NumericError("gradient for '" + name + "' has wrong size");
    out.insert(out.end(), it->second.vec().begin(), it->second.vec().end());
  }
  return out;
}

}  // namespace clforge::num
