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

#include "clforge/corpus/synthetic.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <unordered_set>

#include "clforge/corpus/extract.hpp"
#include "clforge/corpus/io.hpp"
#include "clforge/corpus/pipeline.hpp"
#include "clforge/error.hpp"
#include "clforge/numcore/rng.hpp"

namespace clforge::corpus {

namespace {

const std::vector<std::string> kVerbs = {"get",   "set",   "add",    "put",   "remove", "read",  "write",
                                         "open",  "close", "init",   "load",  "create", "build", "update",
                                         "reset", "apply", "check",  "find",  "parse",  "compute"};
const std::vector<std::string> kMethodNames = {"run",    "process", "handle", "execute", "compute",
                                               "refresh", "store",  "prepare", "apply",  "verify",
                                               "render", "collect", "dispatch", "visit", "transform"};
const std::vector<std::string> kIntVars = {"a", "b", "c", "n", "total", "count"};
const std::vector<std::string> kStrVars = {"name", "text", "label"};
const std::vector<std::string> kArgPool = {"STR", "NUM", "a", "b", "n", "name", "text", "data", "key", "value"};

struct Api {
  std::string package;
  std::string interface;
  std::vector<std::string> methods;                // protocol order
  std::vector<std::vector<std::string>> arg_sets;  // per method
};

std::vector<Api> make_apis(const DomainSpec& spec, std::size_t methods_per_interface, num::Rng& rng) {
  std::vector<Api> apis;
  for (const auto& e : spec.entries) {
    Api api{e.package, e.interface, {}, {}};
    for (auto v : rng.sample_indices(kVerbs.size(), methods_per_interface)) {
      api.methods.push_back(kVerbs[v] + e.interface);
      std::vector<std::string> args;
      const auto n_args = rng.uniform_index(3);
      for (std::size_t a = 0; a < n_args; ++a) args.push_back(kArgPool[rng.uniform_index(kArgPool.size())]);
      api.arg_sets.push_back(std::move(args));
    }
    apis.push_back(std::move(api));
  }
  return apis;
}

template <typename T>
const T& pick(const std::vector<T>& v, num::Rng& rng) {
  return v[rng.uniform_index(v.size())];
}

TokenSeq base_statement(num::Rng& rng) {
  const auto& x = pick(kIntVars, rng);
  const auto& y = pick(kIntVars, rng);
  switch (rng.uniform_index(8)) {
    case 0:
      return {"int", x, "=", "NUM", ";"};
    case 1:
      return {x, "=", y, pick(std::vector<std::string>{"+", "-", "*"}, rng), "NUM", ";"};
    case 2:
      return {"if", "(", x, ">", "NUM", ")", "{", y, "=", x, "-", "NUM", ";", "}"};
    case 3:
      return {"for", "(", "int", "i", "=", "NUM", ";", "i", "<", x, ";", "i", "++", ")", "{", y, "+=", "i", ";", "}"};
    case 4:
      return {"while", "(", x, "<", "NUM", ")", "{", x, "++", ";", "}"};
    case 5:
      return {"String", pick(kStrVars, rng), "=", "STR", ";"};
    case 6:
      return {"log", "(", pick(kStrVars, rng), ")", ";"};
    default:
      return {x, "+=", "NUM", ";"};
  }
}

TokenSeq usage_statement(const Api& api, std::size_t m, num::Rng& rng) {
  TokenSeq out;
  if (rng.uniform() < 0.5) {
    out.push_back(pick(kIntVars, rng));
    out.push_back("=");
  }
  out.insert(out.end(), {api.interface, ".", api.methods[m], "("});
  const auto& args = api.arg_sets[m];
  for (std::size_t a = 0; a < args.size(); ++a) {
    if (a) out.push_back(",");
    out.push_back(args[a]);
  }
  out.insert(out.end(), {")", ";"});
  return out;
}

class Generator {
 public:
  Generator(const SyntheticConfig& cfg, std::vector<DomainSpec> all_specs) : cfg_(cfg), specs_(std::move(all_specs)) {}

  // `apis` empty yields a method without API calls.
  MethodSample method(const std::vector<const Api*>& apis, num::Rng& rng) {
    const auto [lo, hi] = cfg_.length_range;
    const std::size_t target = lo + rng.uniform_index(hi - lo + 1);
    const bool returns_int = rng.uniform() < 0.5;

    TokenSeq header = {"public", returns_int ? "int" : "void", pick(kMethodNames, rng), "("};
    if (rng.uniform() < 0.5) header.insert(header.end(), {"int", pick(kIntVars, rng)});
    header.insert(header.end(), {")", "{"});
    TokenSeq footer;
    if (returns_int) footer = {"return", pick(kIntVars, rng), ";"};
    footer.push_back("}");
    if (header.size() + footer.size() > target) throw UsageError("length_range too small for a method skeleton");
    std::size_t budget = target - header.size() - footer.size();

    // Each interface is called along its protocol prefix; interfaces interleave.
    std::vector<std::pair<std::size_t, std::size_t>> calls;  // (api slot, method)
    {
      std::vector<std::size_t> remaining;
      for (const auto* api : apis) remaining.push_back(1 + rng.uniform_index(api->methods.size()));
      std::vector<std::size_t> next(apis.size(), 0);
      std::size_t left = 0;
      for (auto r : remaining) left += r;
      while (left > 0) {
        std::size_t slot = rng.uniform_index(apis.size());
        while (next[slot] == remaining[slot]) slot = (slot + 1) % apis.size();
        calls.emplace_back(slot, next[slot]++);
        --left;
      }
    }
    std::vector<TokenSeq> usages;
    std::size_t used = 0;
    for (const auto& [slot, m] : calls) {
      auto stmt = usage_statement(*apis[slot], m, rng);
      if (used + stmt.size() > budget) {
        if (usages.empty()) throw UsageError("length_range too small for an API usage");
        break;
      }
      used += stmt.size();
      usages.push_back(std::move(stmt));
    }
    budget -= used;

    std::vector<TokenSeq> statements;
    for (int misses = 0; misses < 4 && budget > 0;) {
      auto stmt = base_statement(rng);
      if (stmt.size() > budget) {
        ++misses;
        continue;
      }
      budget -= stmt.size();
      statements.push_back(std::move(stmt));
    }
    // Usages go to sorted random slots so their relative order is preserved.
    std::vector<std::size_t> slots;
    for (std::size_t u = 0; u < usages.size(); ++u) slots.push_back(rng.uniform_index(statements.size() + 1));
    std::sort(slots.begin(), slots.end());
    for (std::size_t u = usages.size(); u-- > 0;) {
      statements.insert(statements.begin() + static_cast<std::ptrdiff_t>(slots[u]), std::move(usages[u]));
    }

    TokenSeq tokens = std::move(header);
    for (auto& s : statements) tokens.insert(tokens.end(), s.begin(), s.end());
    tokens.insert(tokens.end(), budget, ";");
    tokens.insert(tokens.end(), footer.begin(), footer.end());

    ImportTable imports;
    for (const auto* api : apis) imports.add(api->package + "." + api->interface);
    return extract_api_usages(std::move(tokens), imports, specs_);
  }

 private:
  const SyntheticConfig& cfg_;
  std::vector<DomainSpec> specs_;
};

std::vector<const Api*> choose_apis(const std::vector<Api>& pool, num::Rng& rng) {
  const std::size_t n = std::min<std::size_t>(pool.size(), 1 + rng.uniform_index(2));
  std::vector<const Api*> out;
  for (auto i : rng.sample_indices(pool.size(), n)) out.push_back(&pool[i]);
  return out;
}

}  // namespace

const DomainSpec& id_api_spec() {
  static const DomainSpec spec{"ID",
                               {{"java.util", "ArrayList"},
                                {"java.util", "HashMap"},
                                {"java.lang", "StringBuilder"},
                                {"java.util", "Collections"},
                                {"java.util", "Arrays"},
                                {"java.io", "File"},
                                {"java.util", "Scanner"},
                                {"java.lang", "Math"},
                                {"java.util", "Random"},
                                {"java.util", "Optional"},
                                {"java.time", "Duration"},
                                {"java.nio.file", "Files"}},
                               "in-distribution APIs of the synthetic generator"};
  return spec;
}

SyntheticConfig synthetic_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  static const std::set<std::string> known = {"manifests",   "methods_per_domain",    "id_methods",
                                              "length_range", "seed",                 "methods_per_interface",
                                              "id_no_site_fraction"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw UsageError("unknown synthetic corpus option '" + key + "'");
  }
  SyntheticConfig cfg;
  try {
    if (j.contains("manifests")) {
      const auto& m = j.at("manifests");
      std::vector<std::string> dirs = m.is_array() ? m.get<std::vector<std::string>>()
                                                   : std::vector<std::string>{m.get<std::string>()};
      for (const auto& d : dirs) {
        auto specs = load_manifest_dir(base_dir / d);
        cfg.domains.insert(cfg.domains.end(), specs.begin(), specs.end());
      }
    }
    cfg.methods_per_domain = j.value("methods_per_domain", cfg.methods_per_domain);
    cfg.id_methods = j.value("id_methods", cfg.id_methods);
    if (j.contains("length_range")) {
      const auto r = j.at("length_range").get<std::vector<std::size_t>>();
      if (r.size() != 2 || r[0] > r[1] || r[0] == 0) throw UsageError("length_range must be [lo, hi] with 0 < lo <= hi");
      cfg.length_range = {r[0], r[1]};
    }
    cfg.seed = j.value("seed", cfg.seed);
    cfg.methods_per_interface = j.value("methods_per_interface", cfg.methods_per_interface);
    cfg.id_no_site_fraction = j.value("id_no_site_fraction", cfg.id_no_site_fraction);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("invalid synthetic corpus config: ") + e.what());
  }
  return cfg;
}

std::vector<MethodSample> gen_synthetic(const SyntheticConfig& cfg) {
  if (cfg.methods_per_interface == 0 || cfg.methods_per_interface > kVerbs.size()) {
    throw UsageError("methods_per_interface must lie in [1, " + std::to_string(kVerbs.size()) + "]");
  }
  // Longest skeleton (8 + 4 tokens) plus the longest usage statement (11).
  constexpr std::size_t kMinLength = 23;
  if (cfg.length_range.first < kMinLength || cfg.length_range.first > cfg.length_range.second) {
    throw UsageError("length_range must satisfy " + std::to_string(kMinLength) + " <= lo <= hi");
  }
  validate_specs(cfg.domains);
  {
    std::set<std::string> names;
    auto claim = [&](const DomainSpec& spec) {
      for (const auto& e : spec.entries) {
        if (!names.insert(e.interface).second) {
          throw DataError("API vocabularies overlap on interface '" + e.interface + "'");
        }
      }
    };
    claim(id_api_spec());
    for (const auto& d : cfg.domains) claim(d);
  }

  const num::Rng root(cfg.seed);
  auto api_rng = root.split(1);
  const auto id_apis = make_apis(id_api_spec(), cfg.methods_per_interface, api_rng);
  std::vector<std::vector<Api>> domain_apis;
  for (const auto& d : cfg.domains) domain_apis.push_back(make_apis(d, cfg.methods_per_interface, api_rng));

  Generator gen(cfg, cfg.domains);
  auto rng = root.split(2);
  std::vector<MethodSample> out;
  std::unordered_set<std::string> seen;
  auto emit = [&](auto&& make) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      auto s = make();
      if (seen.insert(s.content_hash).second) {
        out.push_back(std::move(s));
        return;
      }
    }
    throw UsageError("synthetic generator cannot produce enough distinct methods; widen length_range");
  };

  for (std::size_t i = 0; i < cfg.id_methods; ++i) {
    const bool bare = rng.uniform() < cfg.id_no_site_fraction;
    emit([&] { return gen.method(bare ? std::vector<const Api*>{} : choose_apis(id_apis, rng), rng); });
  }
  for (const auto& apis : domain_apis) {
    for (std::size_t i = 0; i < cfg.methods_per_domain; ++i) emit([&] { return gen.method(choose_apis(apis, rng), rng); });
  }
  auto order_rng = root.split(3);
  order_rng.shuffle(out);
  return out;
}

}  // namespace clforge::corpus
