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

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "clforge/corpus/sample.hpp"

namespace clforge::corpus {

nlohmann::json sample_to_json(const MethodSample& sample);
MethodSample sample_from_json(const nlohmann::json& j);

void write_jsonl(const std::filesystem::path& path, const std::vector<MethodSample>& samples);
std::vector<MethodSample> read_jsonl(const std::filesystem::path& path);

nlohmann::json spec_to_json(const DomainSpec& spec);
DomainSpec spec_from_json(const nlohmann::json& j);
DomainSpec load_domain_manifest(const std::filesystem::path& path);
/// All `*.json` manifests in `dir`, ordered by file name.
std::vector<DomainSpec> load_manifest_dir(const std::filesystem::path& dir);

/// Writes one JSONL file per split next to `scenario.json` in `dir` and
/// returns the scenario manifest path.
std::filesystem::path save_scenario(const std::filesystem::path& dir, const ScenarioData& scenario);
/// Split paths in the manifest are resolved relative to its directory.
ScenarioData load_scenario(const std::filesystem::path& manifest);

/// Extracts methods from every `*.java` file under `dir` (recursively, in
/// sorted path order). Files that fail to lex raise DataError naming the file.
std::vector<MethodSample> ingest_directory(const std::filesystem::path& dir, const std::vector<DomainSpec>& specs);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace clforge::corpus
