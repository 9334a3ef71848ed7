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

#include "clforge/clforge.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "clforge/corpus/io.hpp"
#include "clforge/corpus/pipeline.hpp"
#include "clforge/corpus/synthetic.hpp"
#include "clforge/error.hpp"
#include "clforge/harness/harness.hpp"
#include "clforge/model/checkpoint.hpp"
#include "clforge/model/train.hpp"
#include "clforge/parallel.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

struct clf_config {
  clforge::harness::RunConfig config;
};

struct clf_scenario {
  clforge::corpus::ScenarioData data;
  std::string path;
};

struct clf_checkpoint {
  clforge::model::Checkpoint ckpt;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
clf_status guard(F&& fn) {
  g_last_error.clear();
  try {
    fn();
    return CLF_OK;
  } catch (const clforge::UsageError& e) {
    g_last_error = e.what();
    return CLF_ERR_USAGE;
  } catch (const clforge::DataError& e) {
    g_last_error = e.what();
    return CLF_ERR_DATA;
  } catch (const clforge::TrainingError& e) {
    g_last_error = e.what();
    return CLF_ERR_TRAINING;
  } catch (const json::exception& e) {
    g_last_error = std::string("invalid JSON: ") + e.what();
    return CLF_ERR_DATA;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CLF_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return CLF_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw clforge::UsageError(std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void maybe_out(char** out, const json& j) {
  if (out != nullptr) *out = dup_string(j.dump(2));
}

clforge::harness::ProgressFn progress_adapter(clf_progress_fn fn, void* user) {
  if (fn == nullptr) return {};
  return [fn, user](const std::string& msg) { fn(msg.c_str(), user); };
}

// Pre-training vocabulary: every training split of the scenario.
clforge::model::Vocab scenario_vocab(const clforge::corpus::ScenarioData& s, const clforge::harness::RunConfig& c) {
  std::vector<clforge::corpus::MethodSample> all = s.id_split.train;
  for (const auto& d : s.ood) all.insert(all.end(), d.split.train.begin(), d.split.train.end());
  return clforge::model::build_vocab(all, c.vocab_min_freq, c.vocab_max_size);
}

}  // namespace

extern "C" {

const char* clf_version(void) { return "0.1.0"; }

const char* clf_last_error(void) { return g_last_error.c_str(); }

const char* clf_status_name(clf_status status) {
  switch (status) {
    case CLF_OK: return "ok";
    case CLF_ERR_USAGE: return "usage error";
    case CLF_ERR_DATA: return "data error";
    case CLF_ERR_TRAINING: return "training error";
    case CLF_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void clf_string_free(char* s) { std::free(s); }

clf_status clf_config_default(clf_config** out) {
  return guard([&] {
    require(out, "out");
    *out = new clf_config{};
  });
}

clf_status clf_config_load(const char* path, clf_config** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new clf_config{clforge::harness::load_run_config(path)};
  });
}

clf_status clf_config_parse(const char* text, const char* base_dir, clf_config** out) {
  return guard([&] {
    require(text, "json");
    require(out, "out");
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw clforge::UsageError(std::string("config is not valid JSON: ") + e.what());
    }
    *out = new clf_config{clforge::harness::run_config_from_json(j, base_dir ? fs::path(base_dir) : fs::path())};
  });
}

clf_status clf_config_set_model_kind(clf_config* cfg, const char* kind) {
  return guard([&] {
    require(cfg, "config");
    require(kind, "kind");
    cfg->config.model.kind = clforge::model::model_kind_from_string(kind);
  });
}

clf_status clf_config_set_strategy(clf_config* cfg, const char* name, const char* params_json) {
  return guard([&] {
    require(cfg, "config");
    require(name, "name");
    json block = {{"name", name}, {"params", json::object()}};
    if (params_json != nullptr) {
      try {
        block["params"] = json::parse(params_json);
      } catch (const json::exception& e) {
        throw clforge::UsageError(std::string("strategy params are not valid JSON: ") + e.what());
      }
    }
    clforge::strategies::make_strategy(block, 0);
    cfg->config.strategy = block;
  });
}

clf_status clf_config_apply_env(clf_config* cfg) {
  return guard([&] {
    require(cfg, "config");
    clforge::harness::apply_env_overrides(cfg->config);
  });
}

clf_status clf_config_to_json(const clf_config* cfg, char** out) {
  return guard([&] {
    require(cfg, "config");
    require(out, "out");
    *out = dup_string(clforge::harness::run_config_to_json(cfg->config).dump(2));
  });
}

clf_status clf_config_hash(const clf_config* cfg, char** out) {
  return guard([&] {
    require(cfg, "config");
    require(out, "out");
    *out = dup_string(clforge::harness::config_hash(cfg->config));
  });
}

void clf_config_free(clf_config* cfg) { delete cfg; }

clf_status clf_gen_corpus(const char* config_path, const char* out_dir, size_t* n_methods) {
  return guard([&] {
    require(config_path, "config path");
    require(out_dir, "out dir");
    const fs::path p(config_path);
    auto cfg = clforge::corpus::synthetic_config_from_json(clforge::corpus::read_json_file(p), p.parent_path());
    if (const auto s = clforge::harness::env_seed()) cfg.seed = *s;
    const auto samples = clforge::corpus::gen_synthetic(cfg);
    clforge::corpus::write_jsonl(fs::path(out_dir) / "corpus.jsonl", samples);
    if (n_methods != nullptr) *n_methods = samples.size();
  });
}

clf_status clf_extract(const char* src_dir, const char* manifest_dir, const char* out_dir, size_t* n_methods) {
  return guard([&] {
    require(src_dir, "source dir");
    require(manifest_dir, "manifest dir");
    require(out_dir, "out dir");
    const auto specs = clforge::corpus::load_manifest_dir(manifest_dir);
    const auto samples = clforge::corpus::ingest_directory(src_dir, specs);
    clforge::corpus::write_jsonl(fs::path(out_dir) / "corpus.jsonl", samples);
    if (n_methods != nullptr) *n_methods = samples.size();
  });
}

clf_status clf_split(const char* corpus_path, const char* manifest_dir, size_t id_test, size_t id_valid,
                     uint64_t seed, const char* out_dir, char** stats_json) {
  return guard([&] {
    require(corpus_path, "corpus path");
    require(manifest_dir, "manifest dir");
    require(out_dir, "out dir");
    if (const auto s = clforge::harness::env_seed()) seed = *s;
    const auto specs = clforge::corpus::load_manifest_dir(manifest_dir);
    clforge::corpus::ScenarioBuildStats stats;
    const auto scenario =
        clforge::corpus::build_scenario(clforge::corpus::read_jsonl(corpus_path), specs, id_test, id_valid, seed, &stats);
    const auto manifest = clforge::corpus::save_scenario(out_dir, scenario);
    json j = {{"input", stats.input},
              {"after_dedup", stats.after_dedup},
              {"discarded_multi_domain", stats.discarded_multi_domain},
              {"id", {{"train", scenario.id_split.train.size()},
                      {"valid", scenario.id_split.valid.size()},
                      {"test", scenario.id_split.test.size()}}},
              {"manifest", manifest.string()}};
    json ood = json::array();
    for (const auto& d : scenario.ood) {
      ood.push_back({{"name", d.spec.name}, {"train", d.split.train.size()}, {"test", d.split.test.size()}});
    }
    j["ood"] = ood;
    maybe_out(stats_json, j);
  });
}

clf_status clf_scenario_load(const char* path, clf_scenario** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new clf_scenario{clforge::corpus::load_scenario(path), path};
  });
}

clf_status clf_scenario_domain_count(const clf_scenario* scenario, size_t* out) {
  return guard([&] {
    require(scenario, "scenario");
    require(out, "out");
    *out = scenario->data.ood.size();
  });
}

clf_status clf_scenario_validate(const clf_scenario* scenario, size_t* violations, char** report_json) {
  return guard([&] {
    require(scenario, "scenario");
    const auto report = clforge::corpus::leakage_check(scenario->data);
    json list = json::array();
    for (const auto& v : report.violations) list.push_back({{"hash", v.hash}, {"reason", v.reason}, {"location", v.location}});
    if (violations != nullptr) *violations = report.violations.size();
    maybe_out(report_json, {{"violations", list}, {"ok", report.ok()}});
  });
}

void clf_scenario_free(clf_scenario* scenario) { delete scenario; }

clf_status clf_pretrain(const clf_config* cfg, const clf_scenario* scenario, const char* out_ckpt,
                        clf_progress_fn progress, void* user_data, char** summary_json) {
  return guard([&] {
    require(cfg, "config");
    require(scenario, "scenario");
    require(out_ckpt, "checkpoint path");
    const auto& c = cfg->config;
    const auto say = progress_adapter(progress, user_data);
    const auto vocab = scenario_vocab(scenario->data, c);
    if (say) {
      say("pre-training " + clforge::model::to_string(c.model.kind) + " on " +
          std::to_string(scenario->data.id_split.train.size()) + " methods, vocabulary " + std::to_string(vocab.size()));
    }
    const auto result =
        clforge::model::pretrain(c.model, scenario->data.id_split, vocab, c.pretrain, c.seeds.model, clforge::worker_threads());
    clforge::model::Checkpoint ckpt{result.state, vocab, c.seeds.model, result.best_step};
    clforge::model::save_checkpoint(out_ckpt, ckpt);
    json log = json::array();
    for (const auto& e : result.log) log.push_back({{"step", e.step}, {"train_loss", e.train_loss}, {"valid_loss", e.valid_loss}});
    const json summary = {{"model", clforge::model::to_string(c.model.kind)},
                          {"vocab_size", vocab.size()},
                          {"best_step", result.best_step},
                          {"best_valid_loss", result.best_valid_loss},
                          {"log", log},
                          {"config_hash", clforge::harness::config_hash(c)}};
    clforge::corpus::write_text_file(std::string(out_ckpt) + ".log.json", summary.dump(2) + "\n");
    if (say) say("best validation loss " + std::to_string(result.best_valid_loss) + " at step " + std::to_string(result.best_step));
    maybe_out(summary_json, summary);
  });
}

clf_status clf_checkpoint_load(const char* path, clf_checkpoint** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new clf_checkpoint{clforge::model::load_checkpoint(path)};
  });
}

clf_status clf_checkpoint_info(const clf_checkpoint* ckpt, char** out) {
  return guard([&] {
    require(ckpt, "checkpoint");
    require(out, "out");
    const auto& s = ckpt->ckpt.state;
    *out = dup_string(json{{"config", clforge::model::config_to_json(s.config)},
                           {"parameters", clforge::num::param_count(s.params)},
                           {"vocab_size", ckpt->ckpt.vocab.size()},
                           {"seed", ckpt->ckpt.seed},
                           {"step", ckpt->ckpt.step}}
                          .dump(2));
  });
}

void clf_checkpoint_free(clf_checkpoint* ckpt) { delete ckpt; }

clf_status clf_zeroshot(const clf_checkpoint* ckpt, const clf_scenario* scenario, const clf_config* cfg,
                        const char* out_dir, char** result_json) {
  return guard([&] {
    require(ckpt, "checkpoint");
    require(scenario, "scenario");
    require(cfg, "config");
    auto result = clforge::harness::run_zeroshot(ckpt->ckpt, scenario->data, cfg->config);
    if (out_dir != nullptr) {
      auto file = result;
      file["run_metadata"] = clforge::harness::run_metadata();
      clforge::corpus::write_text_file(fs::path(out_dir) / "zeroshot.json", file.dump(2) + "\n");
    }
    maybe_out(result_json, result);
  });
}

clf_status clf_finetune(const clf_checkpoint* ckpt, const clf_scenario* scenario, const clf_config* cfg,
                        const char* out_dir, clf_progress_fn progress, void* user_data, char** report_json) {
  return guard([&] {
    require(ckpt, "checkpoint");
    require(scenario, "scenario");
    require(cfg, "config");
    const auto& c = cfg->config;
    auto strategy = clforge::strategies::make_strategy(c.strategy, c.seeds.train);
    const auto report = clforge::harness::run_continual(ckpt->ckpt, strategy.get(), scenario->data, c,
                                                        progress_adapter(progress, user_data));
    if (out_dir != nullptr) clforge::harness::emit_report(report, out_dir);
    maybe_out(report_json, clforge::harness::report_to_json(report));
  });
}

clf_status clf_report_merge(const char* const* run_dirs, size_t n_runs, const char* out_dir) {
  return guard([&] {
    require(run_dirs, "run dirs");
    require(out_dir, "out dir");
    std::vector<fs::path> dirs;
    for (size_t i = 0; i < n_runs; ++i) {
      require(run_dirs[i], "run dir");
      dirs.emplace_back(run_dirs[i]);
    }
    clforge::harness::merge_reports(dirs, out_dir);
  });
}

}  // extern "C"
