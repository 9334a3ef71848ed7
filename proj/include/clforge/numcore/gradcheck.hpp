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

#include <functional>
#include <span>
#include <vector>

namespace clforge::num {

using ScalarFn = std::function<double(std::span<const double>)>;

/// Central-difference gradient estimate (f(θ+εe_i) − f(θ−εe_i)) / 2ε.
/// Throws NumericError if f returns a non-finite value or ε <= 0.
std::vector<double> finite_difference(const ScalarFn& f, std::span<const double> theta, double eps);

/// max_i |a_i − b_i| / max(|a_i|, |b_i|, floor). The floor keeps entries
/// whose true value is ~0 from turning round-off into huge ratios.
double max_relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-4);

}  // namespace clforge::num
