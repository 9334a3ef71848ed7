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
#include <span>
#include <string>
#include <vector>

#include "clforge/corpus/sample.hpp"
#include "clforge/numcore/rng.hpp"

namespace clforge::corpus {

/// SHA-256 (lowercase hex) of the tokens joined with single spaces.
std::string content_hash(std::span<const Token> tokens);
std::string sha256_hex(std::string_view bytes);

/// Keeps the first occurrence of each content hash, preserving input order.
std::vector<MethodSample> dedup(std::vector<MethodSample> samples);

struct DomainAssignment {
  std::vector<MethodSample> id_samples;
  std::vector<std::vector<MethodSample>> per_domain;  // aligned with the specs
  std::size_t discarded = 0;
};

/// Routes each sample by the domains its sites touch: none goes to ID, exactly
/// one to that domain (and sets `domain`), several are discarded.
DomainAssignment assign_domains(std::vector<MethodSample> samples, const std::vector<DomainSpec>& specs);

/// Per-API test selection: for every (interface, method) of `spec` used in the
/// domain, ceil(fraction * n) of its n samples (at least one) go to test.
/// A sample picked through several APIs is placed in test once.
SplitSet split_ood(std::vector<MethodSample> domain_samples, const DomainSpec& spec, num::Rng& rng,
                   double test_fraction = 0.10);

/// Uniformly random disjoint test and validation subsets; the rest is train.
SplitSet split_id(std::vector<MethodSample> samples, std::size_t n_test, std::size_t n_valid, num::Rng& rng);

/// Carves ceil(fraction * n) samples of `train` into a validation set.
std::pair<std::vector<MethodSample>, std::vector<MethodSample>> carve_validation(const std::vector<MethodSample>& train,
                                                                                  double fraction, num::Rng& rng);

inline constexpr const char* kReasonDomainApiInId = "domain API in ID";
inline constexpr const char* kReasonMultiDomain = "multi-domain sample";
inline constexpr const char* kReasonCrossSplitDuplicate = "cross-split duplicate";

struct Violation {
  std::string hash;
  std::string reason;
  std::string location;  // split the offending sample was found in
};

struct LeakageReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

LeakageReport leakage_check(const ScenarioData& scenario);

struct ScenarioBuildStats {
  std::size_t input = 0;
  std::size_t after_dedup = 0;
  std::size_t discarded_multi_domain = 0;
};

/// dedup, assign_domains, split_id and one split_ood per spec (in spec order).
/// OOD validation sets stay empty; they are carved at fine-tuning time.
ScenarioData build_scenario(std::vector<MethodSample> samples, const std::vector<DomainSpec>& specs,
                            std::size_t id_test, std::size_t id_valid, std::uint64_t seed,
                            ScenarioBuildStats* stats = nullptr);

}  // namespace clforge::corpus
