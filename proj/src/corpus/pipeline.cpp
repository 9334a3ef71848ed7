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

#include "clforge/corpus/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "clforge/error.hpp"

namespace clforge::corpus {

bool DomainSpec::contains(const std::string& package, const std::string& interface) const {
  for (const auto& e : entries) {
    if (e.interface == interface && e.package == package) return true;
  }
  return false;
}

std::vector<DomainSpec> ScenarioData::specs() const {
  std::vector<DomainSpec> out;
  for (const auto& d : ood) out.push_back(d.spec);
  return out;
}

void validate_specs(const std::vector<DomainSpec>& specs) {
  std::map<DomainEntry, std::string> owner;
  std::set<std::string> names;
  for (const auto& spec : specs) {
    if (!names.insert(spec.name).second) throw DataError("duplicate domain name '" + spec.name + "'");
    std::set<std::string> interfaces;
    for (const auto& e : spec.entries) {
      if (!interfaces.insert(e.interface).second) {
        throw DataError("domain '" + spec.name + "' lists interface '" + e.interface + "' twice");
      }
      auto [it, inserted] = owner.emplace(e, spec.name);
      if (!inserted) {
        throw DataError("domains '" + it->second + "' and '" + spec.name + "' overlap on " + e.package + "." + e.interface);
      }
    }
  }
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw DataError("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string content_hash(std::span<const Token> tokens) {
  std::string joined;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) joined.push_back(' ');
    joined += tokens[i];
  }
  return sha256_hex(joined);
}

std::vector<MethodSample> dedup(std::vector<MethodSample> samples) {
  std::unordered_set<std::string> seen;
  std::vector<MethodSample> out;
  out.reserve(samples.size());
  for (auto& s : samples) {
    if (seen.insert(s.content_hash).second) out.push_back(std::move(s));
  }
  return out;
}

DomainAssignment assign_domains(std::vector<MethodSample> samples, const std::vector<DomainSpec>& specs) {
  validate_specs(specs);
  DomainAssignment out;
  out.per_domain.resize(specs.size());
  for (auto& s : samples) {
    std::set<std::size_t> hit;
    for (const auto& site : s.sites) {
      for (std::size_t d = 0; d < specs.size(); ++d) {
        if (specs[d].matches(site)) hit.insert(d);
      }
    }
    if (hit.empty()) {
      s.domain.reset();
      out.id_samples.push_back(std::move(s));
    } else if (hit.size() == 1) {
      const auto d = *hit.begin();
      s.domain = specs[d].name;
      out.per_domain[d].push_back(std::move(s));
    } else {
      ++out.discarded;
    }
  }
  return out;
}

SplitSet split_ood(std::vector<MethodSample> domain_samples, const DomainSpec& spec, num::Rng& rng, double test_fraction) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw UsageError("test fraction must lie in (0, 1)");
  if (domain_samples.empty()) throw DataError("domain '" + spec.name + "' has no samples");

  // (interface, method) -> samples using it, each sample listed once per API.
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> by_api;
  for (std::size_t i = 0; i < domain_samples.size(); ++i) {
    std::set<std::pair<std::string, std::string>> apis;
    for (const auto& site : domain_samples[i].sites) {
      if (spec.matches(site)) apis.emplace(site.interface, site.method);
    }
    for (const auto& api : apis) by_api[api].push_back(i);
  }

  std::vector<bool> in_test(domain_samples.size(), false);
  for (const auto& [api, users] : by_api) {
    const auto n = users.size();
    auto k = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * test_fraction - 1e-9));
    k = std::clamp<std::size_t>(k, 1, n);
    for (auto pick : rng.sample_indices(n, k)) in_test[users[pick]] = true;
  }

  SplitSet out;
  for (std::size_t i = 0; i < domain_samples.size(); ++i) {
    (in_test[i] ? out.test : out.train).push_back(std::move(domain_samples[i]));
  }
  return out;
}

SplitSet split_id(std::vector<MethodSample> samples, std::size_t n_test, std::size_t n_valid, num::Rng& rng) {
  if (n_test + n_valid >= samples.size()) {
    throw DataError("ID split needs more than " + std::to_string(n_test + n_valid) + " samples, got " +
                    std::to_string(samples.size()));
  }
  auto picks = rng.sample_indices(samples.size(), n_test + n_valid);
  std::vector<int> role(samples.size(), 0);  // 0 train, 1 test, 2 valid
  for (std::size_t i = 0; i < picks.size(); ++i) role[picks[i]] = i < n_test ? 1 : 2;
  SplitSet out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto& dst = role[i] == 0 ? out.train : role[i] == 1 ? out.test : out.valid;
    dst.push_back(std::move(samples[i]));
  }
  return out;
}

std::pair<std::vector<MethodSample>, std::vector<MethodSample>> carve_validation(const std::vector<MethodSample>& train,
                                                                                  double fraction, num::Rng& rng) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw UsageError("validation fraction must lie in (0, 1)");
  if (train.size() < 2) throw DataError("training set too small to carve a validation split");
  auto k = static_cast<std::size_t>(std::ceil(static_cast<double>(train.size()) * fraction - 1e-9));
  k = std::clamp<std::size_t>(k, 1, train.size() - 1);
  std::vector<bool> is_valid(train.size(), false);
  for (auto i : rng.sample_indices(train.size(), k)) is_valid[i] = true;
  std::pair<std::vector<MethodSample>, std::vector<MethodSample>> out;
  for (std::size_t i = 0; i < train.size(); ++i) (is_valid[i] ? out.second : out.first).push_back(train[i]);
  return out;
}

LeakageReport leakage_check(const ScenarioData& scenario) {
  LeakageReport report;
  const auto specs = scenario.specs();

  struct NamedSplit {
    std::string name;
    const std::vector<MethodSample>* samples;
    bool is_id;
  };
  std::vector<NamedSplit> splits = {{"id/train", &scenario.id_split.train, true},
                                    {"id/valid", &scenario.id_split.valid, true},
                                    {"id/test", &scenario.id_split.test, true}};
  for (const auto& d : scenario.ood) {
    splits.push_back({d.spec.name + "/train", &d.split.train, false});
    splits.push_back({d.spec.name + "/valid", &d.split.valid, false});
    splits.push_back({d.spec.name + "/test", &d.split.test, false});
  }

  std::unordered_map<std::string, std::size_t> first_split;
  for (std::size_t s = 0; s < splits.size(); ++s) {
    for (const auto& sample : *splits[s].samples) {
      std::set<std::size_t> hit;
      for (const auto& site : sample.sites) {
        for (std::size_t d = 0; d < specs.size(); ++d) {
          if (specs[d].matches(site)) hit.insert(d);
        }
      }
      if (splits[s].is_id && !hit.empty()) {
        report.violations.push_back({sample.content_hash, kReasonDomainApiInId, splits[s].name});
      }
      if (!splits[s].is_id && hit.size() > 1) {
        report.violations.push_back({sample.content_hash, kReasonMultiDomain, splits[s].name});
      }
      auto [it, inserted] = first_split.emplace(sample.content_hash, s);
      if (!inserted && it->second != s) {
        report.violations.push_back({sample.content_hash, kReasonCrossSplitDuplicate,
                                     splits[it->second].name + " & " + splits[s].name});
      }
    }
  }
  return report;
}

ScenarioData build_scenario(std::vector<MethodSample> samples, const std::vector<DomainSpec>& specs,
                            std::size_t id_test, std::size_t id_valid, std::uint64_t seed, ScenarioBuildStats* stats) {
  ScenarioBuildStats local;
  local.input = samples.size();
  auto unique = dedup(std::move(samples));
  local.after_dedup = unique.size();
  auto assigned = assign_domains(std::move(unique), specs);
  local.discarded_multi_domain = assigned.discarded;

  const num::Rng root(seed);
  ScenarioData scenario;
  auto id_rng = root.split(0);
  scenario.id_split = split_id(std::move(assigned.id_samples), id_test, id_valid, id_rng);
  for (std::size_t d = 0; d < specs.size(); ++d) {
    auto rng = root.split(d + 1);
    scenario.ood.push_back({specs[d], split_ood(std::move(assigned.per_domain[d]), specs[d], rng)});
  }
  if (stats) *stats = local;
  return scenario;
}

}  // namespace clforge::corpus
