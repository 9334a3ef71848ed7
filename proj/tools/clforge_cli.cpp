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

// clforge command-line tool. Talks to the library only through the C API.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "clforge/clforge.h"

namespace {

int fail(clf_status s) {
  std::cerr << "clforge: " << clf_status_name(s) << ": " << clf_last_error() << "\n";
  // Exit codes: 1 usage, 2 data, 3 training (internal errors count as training failures).
  return s == CLF_ERR_INTERNAL ? 3 : static_cast<int>(s);
}

void print_progress(const char* msg, void*) { std::cerr << msg << "\n"; }

void print_and_free(char* s) {
  if (s == nullptr) return;
  std::cout << s << "\n";
  clf_string_free(s);
}

// Owns a C handle for the duration of a command.
template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  ~Handle() {
    if (p) Free(p);
  }
};

using Config = Handle<clf_config, clf_config_free>;
using Scenario = Handle<clf_scenario, clf_scenario_free>;
using Ckpt = Handle<clf_checkpoint, clf_checkpoint_free>;

clf_status load_config(const std::string& path, Config& cfg) {
  clf_status s = path.empty() ? clf_config_default(&cfg.p) : clf_config_load(path.c_str(), &cfg.p);
  if (s != CLF_OK) return s;
  return clf_config_apply_env(cfg.p);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"clforge: continual-learning experiments for code completion models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(clf_version()));

  std::string config, out, src, manifests, corpus, scenario, model_kind, ckpt, strategy, strategy_params;
  std::size_t id_test = 0, id_valid = 0;
  std::uint64_t seed = 1;
  std::vector<std::string> runs;

  auto* gen = app.add_subcommand("gen-corpus", "Generate a synthetic Java-like corpus");
  gen->add_option("--config", config, "Generator config JSON")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", out, "Output directory")->required();

  auto* extract = app.add_subcommand("extract", "Extract methods and API sites from Java sources");
  extract->add_option("--src", src, "Source directory")->required()->check(CLI::ExistingDirectory);
  extract->add_option("--manifests", manifests, "Domain manifest directory")->required()->check(CLI::ExistingDirectory);
  extract->add_option("--out", out, "Output directory")->required();

  auto* split = app.add_subcommand("split", "Deduplicate, assign domains and split into a scenario");
  split->add_option("--corpus", corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  split->add_option("--manifests", manifests, "Domain manifest directory")->required()->check(CLI::ExistingDirectory);
  split->add_option("--id-test", id_test, "ID test size")->required();
  split->add_option("--id-valid", id_valid, "ID validation size")->required();
  split->add_option("--seed", seed, "Data seed")->required();
  split->add_option("--out", out, "Output directory")->required();

  auto* pretrain = app.add_subcommand("pretrain", "Pre-train a model on the ID split");
  pretrain->add_option("--scenario", scenario, "Scenario manifest")->required()->check(CLI::ExistingFile);
  pretrain->add_option("--model", model_kind, "Model kind")->required()->check(CLI::IsMember({"decoder", "encoder"}));
  pretrain->add_option("--config", config, "Run config JSON")->required()->check(CLI::ExistingFile);
  pretrain->add_option("--out", out, "Checkpoint path")->required();

  auto* zeroshot = app.add_subcommand("zeroshot", "Zero-shot ID vs OOD evaluation of a decoder");
  zeroshot->add_option("--ckpt", ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  zeroshot->add_option("--scenario", scenario, "Scenario manifest")->required()->check(CLI::ExistingFile);
  zeroshot->add_option("--config", config, "Run config JSON (evaluation settings)")->check(CLI::ExistingFile);
  zeroshot->add_option("--out", out, "Output directory")->required();

  auto* finetune = app.add_subcommand("finetune", "Continual fine-tuning over the OOD domains");
  finetune->add_option("--ckpt", ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  finetune->add_option("--scenario", scenario, "Scenario manifest")->required()->check(CLI::ExistingFile);
  finetune->add_option("--strategy", strategy, "naive, replay, cumulative, ewc, si or rwalk")->required();
  finetune->add_option("--strategy-params", strategy_params, "Strategy parameters as a JSON object");
  finetune->add_option("--config", config, "Run config JSON (schedule, seeds)")->check(CLI::ExistingFile);
  finetune->add_option("--out", out, "Output directory")->required();

  auto* report = app.add_subcommand("report", "Merge run reports into comparison tables");
  report->add_option("--runs", runs, "Run directories")->required()->expected(1, -1);
  report->add_option("--out", out, "Output directory")->required();

  auto* validate = app.add_subcommand("validate", "Check a scenario for leakage");
  validate->add_option("--scenario", scenario, "Scenario manifest")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  clf_status s = CLF_OK;
  if (*gen) {
    std::size_t n = 0;
    if ((s = clf_gen_corpus(config.c_str(), out.c_str(), &n)) != CLF_OK) return fail(s);
    std::cout << "wrote " << n << " methods to " << out << "/corpus.jsonl\n";
  } else if (*extract) {
    std::size_t n = 0;
    if ((s = clf_extract(src.c_str(), manifests.c_str(), out.c_str(), &n)) != CLF_OK) return fail(s);
    std::cout << "wrote " << n << " methods to " << out << "/corpus.jsonl\n";
  } else if (*split) {
    char* stats = nullptr;
    if ((s = clf_split(corpus.c_str(), manifests.c_str(), id_test, id_valid, seed, out.c_str(), &stats)) != CLF_OK) {
      return fail(s);
    }
    print_and_free(stats);
  } else if (*pretrain) {
    Config cfg;
    Scenario sc;
    char* summary = nullptr;
    if ((s = load_config(config, cfg)) != CLF_OK) return fail(s);
    if ((s = clf_config_set_model_kind(cfg.p, model_kind.c_str())) != CLF_OK) return fail(s);
    if ((s = clf_scenario_load(scenario.c_str(), &sc.p)) != CLF_OK) return fail(s);
    if ((s = clf_pretrain(cfg.p, sc.p, out.c_str(), print_progress, nullptr, &summary)) != CLF_OK) return fail(s);
    clf_string_free(summary);
    std::cout << "wrote " << out << "\n";
  } else if (*zeroshot) {
    Config cfg;
    Scenario sc;
    Ckpt ck;
    char* result = nullptr;
    if ((s = load_config(config, cfg)) != CLF_OK) return fail(s);
    if ((s = clf_checkpoint_load(ckpt.c_str(), &ck.p)) != CLF_OK) return fail(s);
    if ((s = clf_scenario_load(scenario.c_str(), &sc.p)) != CLF_OK) return fail(s);
    if ((s = clf_zeroshot(ck.p, sc.p, cfg.p, out.c_str(), &result)) != CLF_OK) return fail(s);
    print_and_free(result);
  } else if (*finetune) {
    Config cfg;
    Scenario sc;
    Ckpt ck;
    if ((s = load_config(config, cfg)) != CLF_OK) return fail(s);
    const char* params = strategy_params.empty() ? nullptr : strategy_params.c_str();
    if ((s = clf_config_set_strategy(cfg.p, strategy.c_str(), params)) != CLF_OK) return fail(s);
    if ((s = clf_checkpoint_load(ckpt.c_str(), &ck.p)) != CLF_OK) return fail(s);
    if ((s = clf_scenario_load(scenario.c_str(), &sc.p)) != CLF_OK) return fail(s);
    if ((s = clf_finetune(ck.p, sc.p, cfg.p, out.c_str(), print_progress, nullptr, nullptr)) != CLF_OK) return fail(s);
    std::cout << "wrote report to " << out << "\n";
  } else if (*report) {
    std::vector<const char*> dirs;
    for (const auto& r : runs) dirs.push_back(r.c_str());
    if ((s = clf_report_merge(dirs.data(), dirs.size(), out.c_str())) != CLF_OK) return fail(s);
    std::cout << "wrote " << out << "/comparison.csv and comparison.json\n";
  } else if (*validate) {
    Scenario sc;
    std::size_t violations = 0;
    char* rep = nullptr;
    if ((s = clf_scenario_load(scenario.c_str(), &sc.p)) != CLF_OK) return fail(s);
    if ((s = clf_scenario_validate(sc.p, &violations, &rep)) != CLF_OK) return fail(s);
    print_and_free(rep);
    if (violations > 0) {
      std::cerr << "clforge: " << violations << " leakage violation(s)\n";
      return 2;
    }
  }
  return 0;
}
