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
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace clforge::corpus {

using Token = std::string;
using TokenSeq = std::vector<Token>;

/// One resolved API call inside a method.
///
/// `usage_start..usage_end` is the half-open token span of
/// `Interface . method ( args )`; `call_index` points at the method-name token.
struct ApiSite {
  std::size_t usage_start = 0;
  std::size_t call_index = 0;
  std::size_t usage_end = 0;
  std::string package;
  std::string interface;
  std::string method;

  bool operator==(const ApiSite&) const = default;
};

struct MethodSample {
  TokenSeq tokens;
  std::vector<ApiSite> sites;
  std::string content_hash;  // lowercase hex SHA-256 of the normalized tokens
  std::optional<std::string> domain;

  bool operator==(const MethodSample&) const = default;
};

struct DomainEntry {
  std::string package;
  std::string interface;

  auto operator<=>(const DomainEntry&) const = default;
};

struct DomainSpec {
  std::string name;
  std::vector<DomainEntry> entries;
  std::string notes;

  bool contains(const std::string& package, const std::string& interface) const;
  bool matches(const ApiSite& site) const { return contains(site.package, site.interface); }
};

struct SplitSet {
  std::vector<MethodSample> train;
  std::vector<MethodSample> valid;
  std::vector<MethodSample> test;
};

struct OodDomain {
  DomainSpec spec;
  SplitSet split;
};

struct ScenarioData {
  SplitSet id_split;
  std::vector<OodDomain> ood;

  std::vector<DomainSpec> specs() const;
};

/// Throws DataError when two specs share a (package, interface) pair or a
/// spec lists an interface twice.
void validate_specs(const std::vector<DomainSpec>& specs);

}  // namespace clforge::corpus
