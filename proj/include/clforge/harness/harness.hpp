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

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "clforge/corpus/sample.hpp"
#include "clforge/metrics/metrics.hpp"
#include "clforge/model/checkpoint.hpp"
#include "clforge/model/train.hpp"
#include "clforge/strategies/strategy.hpp"

namespace clforge::harness {

struct FinetuneSchedule {
  std::size_t max_epochs = 10;
  std::size_t patience = 2;
  std::size_t batch = 16;
  double lr = 3e-4;
  double clip_norm = 1.0;
  double valid_fraction = 0.10;
};

struct Seeds {
  std::uint64_t data = 1;
  std::uint64_t model = 1;
  std::uint64_t train = 1;
};

struct EvalOptions {
  std::vector<std::size_t> ks = {1, 5, 10};
  std::size_t max_new = 32;
  metrics::DivisorMode divisor_mode = metrics::DivisorMode::kObserved;
};

struct RunConfig {
  std::string scenario;  // scenario manifest path (may be empty when given on the command line)
  model::ModelConfig model;
  std::size_t vocab_min_freq = 2;
  std::size_t vocab_max_size = 50000;
  model::PretrainSchedule pretrain;
  FinetuneSchedule finetune;
  nlohmann::json strategy = {{"name", "naive"}, {"params", nlohmann::json::object()}};
  Seeds seeds;
  EvalOptions eval;
  std::string output_dir;
};

/// Unknown keys are rejected at every level. Relative scenario paths are
/// resolved against `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json run_config_to_json(const RunConfig& c);
/// SHA-256 of the canonical config JSON without the output directory.
std::string config_hash(const RunConfig& c);
/// CLFORGE_SEED, when set, replaces every seed.
void apply_env_overrides(RunConfig& c);
std::optional<std::uint64_t> env_seed();

// ------------------------------------------------------------------ tasks

enum class TaskKind { kApiCall, kApiUsage };
std::string to_string(TaskKind kind);

struct TaskInstance {
  TaskKind kind = TaskKind::kApiCall;
  corpus::TokenSeq prefix;  // method tokens before the call (or usage) position
  corpus::TokenSeq truth;   // method-name token, or the whole usage span
};

struct TaskSet {
  std::vector<TaskInstance> instances;
  std::size_t skipped_samples = 0;  // samples without API sites
};

TaskSet build_task_instances(const std::vector<corpus::MethodSample>& samples, TaskKind kind);

/// Ranked next-token candidates for a token prefix.
using TopkFn = std::function<std::vector<corpus::Token>(const corpus::TokenSeq& prefix, std::size_t k)>;
/// Generated usage tokens for a token prefix.
using GenerateFn = std::function<corpus::TokenSeq(const corpus::TokenSeq& prefix)>;

TopkFn model_topk(const model::ModelState& state, const model::Vocab& vocab);
GenerateFn model_generate(const model::ModelState& state, const model::Vocab& vocab, std::size_t max_new);

/// {"EM@k": ...} for every k in `ks` over api_call instances.
std::map<std::string, double> evaluate_api_call(const TopkFn& topk, const TaskSet& tasks,
                                                const std::vector<std::size_t>& ks, std::size_t threads);
/// {"BLEU", "EM", "codebleu_lite"} over api_usage instances.
std::map<std::string, double> evaluate_api_usage(const GenerateFn& generate, const TaskSet& tasks,
                                                 std::size_t threads);

// --------------------------------------------------------------- runners

/// Zero-shot table for a decoder checkpoint: ID test first, then every OOD
/// test set and their union, with relative drops against ID.
nlohmann::json run_zeroshot(const model::Checkpoint& ckpt, const corpus::ScenarioData& scenario,
                            const RunConfig& config);

/// Reference numbers from the original large-scale study; reported, never asserted.
nlohmann::json reference_results();

struct ContinualReport {
  std::string model_kind;
  std::string strategy;
  nlohmann::json strategy_params;
  std::vector<std::string> domains;
  metrics::DivisorMode divisor_mode = metrics::DivisorMode::kObserved;
  std::map<std::string, std::map<std::string, metrics::EvalMatrix>> tasks;  // task -> metric -> matrix
  nlohmann::json training_log = nlohmann::json::array();
  std::string config_hash;
};

using ProgressFn = std::function<void(const std::string&)>;

/// Sequential fine-tuning over the scenario's OOD domains with `strategy`
/// (nullptr runs without any strategy object).
ContinualReport run_continual(const model::Checkpoint& ckpt, strategies::Strategy* strategy,
                              const corpus::ScenarioData& scenario, const RunConfig& config,
                              const ProgressFn& progress = {});

/// A per domain and F^T per earlier domain for one matrix.
nlohmann::json metric_summary(const metrics::EvalMatrix& m, const std::vector<std::string>& domains,
                              metrics::DivisorMode mode);
nlohmann::json report_to_json(const ContinualReport& r);
ContinualReport report_from_json(const nlohmann::json& j);

/// Writes report.json (timestamp under "run_metadata"), one heatmap CSV per
/// (model, task, metric) and summary.csv. Returns the written paths.
std::vector<std::filesystem::path> emit_report(const ContinualReport& r, const std::filesystem::path& out_dir);
/// Heatmap CSV text: config-hash comment line, domain header, T rows.
std::string heatmap_csv(const metrics::EvalMatrix& m, const std::vector<std::string>& domains,
                        const std::string& config_hash);

/// Loads every report.json under `run_dirs`, checks that stored A/F match
/// the matrices, and writes comparison.csv and comparison.json to out_dir.
std::vector<std::filesystem::path> merge_reports(const std::vector<std::filesystem::path>& run_dirs,
                                                 const std::filesystem::path& out_dir);

/// {"timestamp": ISO-8601 UTC}.
nlohmann::json run_metadata();

}  // namespace clforge::harness
