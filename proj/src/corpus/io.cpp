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

#include "clforge/corpus/io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "clforge/corpus/extract.hpp"
#include "clforge/corpus/pipeline.hpp"
#include "clforge/error.hpp"

namespace clforge::corpus {

namespace fs = std::filesystem;
using nlohmann::json;

json sample_to_json(const MethodSample& s) {
  json sites = json::array();
  for (const auto& site : s.sites) {
    sites.push_back({{"start", site.usage_start},
                     {"call", site.call_index},
                     {"end", site.usage_end},
                     {"package", site.package},
                     {"interface", site.interface},
                     {"method", site.method}});
  }
  json j = {{"tokens", s.tokens}, {"sites", std::move(sites)}, {"hash", s.content_hash}};
  j["domain"] = s.domain ? json(*s.domain) : json(nullptr);
  return j;
}

MethodSample sample_from_json(const json& j) {
  try {
    MethodSample s;
    s.tokens = j.at("tokens").get<TokenSeq>();
    for (const auto& site : j.at("sites")) {
      ApiSite a{site.at("start").get<std::size_t>(), site.at("call").get<std::size_t>(),
                site.at("end").get<std::size_t>(), site.at("package").get<std::string>(),
                site.at("interface").get<std::string>(), site.at("method").get<std::string>()};
      if (!(a.usage_start <= a.call_index && a.call_index < a.usage_end && a.usage_end <= s.tokens.size())) {
        throw DataError("site span out of range");
      }
      s.sites.push_back(std::move(a));
    }
    s.content_hash = j.contains("hash") ? j.at("hash").get<std::string>() : content_hash(s.tokens);
    if (j.contains("domain") && !j.at("domain").is_null()) s.domain = j.at("domain").get<std::string>();
    return s;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed sample: ") + e.what());
  }
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out.flush()) throw DataError("write failed for " + path.string());
}

void write_jsonl(const fs::path& path, const std::vector<MethodSample>& samples) {
  std::string text;
  for (const auto& s : samples) {
    text += sample_to_json(s).dump();
    text.push_back('\n');
  }
  write_text_file(path, text);
}

std::vector<MethodSample> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<MethodSample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(sample_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

json spec_to_json(const DomainSpec& spec) {
  json entries = json::array();
  for (const auto& e : spec.entries) entries.push_back({{"package", e.package}, {"interface", e.interface}});
  json j = {{"name", spec.name}, {"entries", std::move(entries)}};
  if (!spec.notes.empty()) j["notes"] = spec.notes;
  return j;
}

DomainSpec spec_from_json(const json& j) {
  try {
    DomainSpec spec;
    spec.name = j.at("name").get<std::string>();
    for (const auto& e : j.at("entries")) {
      spec.entries.push_back({e.at("package").get<std::string>(), e.at("interface").get<std::string>()});
    }
    if (j.contains("notes")) spec.notes = j.at("notes").get<std::string>();
    if (spec.name.empty() || spec.entries.empty()) throw DataError("domain manifest needs a name and entries");
    validate_specs({spec});
    return spec;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed domain manifest: ") + e.what());
  }
}

DomainSpec load_domain_manifest(const fs::path& path) {
  try {
    return spec_from_json(read_json_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::vector<DomainSpec> load_manifest_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no domain manifests in " + dir.string());
  std::vector<DomainSpec> specs;
  for (const auto& f : files) specs.push_back(load_domain_manifest(f));
  validate_specs(specs);
  return specs;
}

std::vector<MethodSample> ingest_directory(const fs::path& dir, const std::vector<DomainSpec>& specs) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".java") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<MethodSample> out;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) throw DataError("cannot open " + f.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
      auto methods = extract_source(buf.str(), specs);
      out.insert(out.end(), std::make_move_iterator(methods.begin()), std::make_move_iterator(methods.end()));
    } catch (const DataError& e) {
      throw DataError(f.string() + ": " + e.what());
    }
  }
  return out;
}

fs::path save_scenario(const fs::path& dir, const ScenarioData& scenario) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  write_jsonl(dir / "id_train.jsonl", scenario.id_split.train);
  write_jsonl(dir / "id_valid.jsonl", scenario.id_split.valid);
  write_jsonl(dir / "id_test.jsonl", scenario.id_split.test);
  json manifest = {{"id", {{"train", "id_train.jsonl"}, {"valid", "id_valid.jsonl"}, {"test", "id_test.jsonl"}}}};
  json ood = json::array();
  for (std::size_t d = 0; d < scenario.ood.size(); ++d) {
    const auto& dom = scenario.ood[d];
    const auto stem = "ood" + std::to_string(d + 1);
    write_text_file(dir / (stem + "_manifest.json"), spec_to_json(dom.spec).dump(2) + "\n");
    write_jsonl(dir / (stem + "_train.jsonl"), dom.split.train);
    write_jsonl(dir / (stem + "_test.jsonl"), dom.split.test);
    json entry = {{"name", dom.spec.name},
                  {"manifest", stem + "_manifest.json"},
                  {"train", stem + "_train.jsonl"},
                  {"test", stem + "_test.jsonl"}};
    if (!dom.split.valid.empty()) {
      write_jsonl(dir / (stem + "_valid.jsonl"), dom.split.valid);
      entry["valid"] = stem + "_valid.jsonl";
    }
    ood.push_back(std::move(entry));
  }
  manifest["ood"] = std::move(ood);
  const auto path = dir / "scenario.json";
  write_text_file(path, manifest.dump(2) + "\n");
  return path;
}

ScenarioData load_scenario(const fs::path& manifest_path) {
  const auto manifest = read_json_file(manifest_path);
  const auto base = manifest_path.parent_path();
  auto resolve = [&](const json& rel) { return base / rel.get<std::string>(); };
  try {
    ScenarioData scenario;
    const auto& id = manifest.at("id");
    scenario.id_split.train = read_jsonl(resolve(id.at("train")));
    scenario.id_split.valid = read_jsonl(resolve(id.at("valid")));
    scenario.id_split.test = read_jsonl(resolve(id.at("test")));
    for (const auto& entry : manifest.at("ood")) {
      OodDomain dom;
      dom.spec = load_domain_manifest(resolve(entry.at("manifest")));
      if (entry.contains("name") && entry.at("name").get<std::string>() != dom.spec.name) {
        throw DataError("scenario entry name does not match its manifest '" + dom.spec.name + "'");
      }
      dom.split.train = read_jsonl(resolve(entry.at("train")));
      dom.split.test = read_jsonl(resolve(entry.at("test")));
      if (entry.contains("valid")) dom.split.valid = read_jsonl(resolve(entry.at("valid")));
      scenario.ood.push_back(std::move(dom));
    }
    validate_specs(scenario.specs());
    return scenario;
  } catch (const json::exception& e) {
    throw DataError("malformed scenario manifest " + manifest_path.string() + ": " + e.what());
  }
}

}  // namespace clforge::corpus
