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
#include <filesystem>
#include <utility>
#include <vector>

#include "json.hpp"

#include "clforge/corpus/sample.hpp"

namespace clforge::corpus {

struct SyntheticConfig {
  std::vector<DomainSpec> domains;
  std::size_t methods_per_domain = 1000;
  std::size_t id_methods = 20000;
  std::pair<std::size_t, std::size_t> length_range{40, 120};  // inclusive token counts
  std::uint64_t seed = 1;
  std::size_t methods_per_interface = 3;
  double id_no_site_fraction = 0.1;
};

/// Parses {"manifests": dir | [dir...] (resolved against `base_dir`),
/// "methods_per_domain", "id_methods", "length_range": [lo, hi], "seed", ...}.
SyntheticConfig synthetic_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

/// Interfaces used by in-distribution methods; disjoint from any shipped domain.
const DomainSpec& id_api_spec();

/// Template-grammar corpus: `id_methods` in-distribution methods followed by
/// `methods_per_domain` single-domain methods per domain, shuffled together.
/// Every method is distinct, and sites come from running extraction over the
/// generated tokens with the imports the generator recorded.
std::vector<MethodSample> gen_synthetic(const SyntheticConfig& config);

}  // namespace clforge::corpus
