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

#include "clforge/harness/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <numeric>
#include <set>
#include <sstream>

#include "clforge/corpus/io.hpp"
#include "clforge/corpus/pipeline.hpp"
#include "clforge/error.hpp"
#include "clforge/numcore/optim.hpp"
#include "clforge/parallel.hpp"

namespace clforge::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw UsageError(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw UsageError("unknown key '" + key + "' in " + where);
  }
}

std::string metric_file_name(const std::string& metric) {
  std::string out;
  for (char c : metric) {
    if (c == '@') {
      out += "at";
    } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
      out.push_back(c);
    } else {
      out.push_back('_');
    }
  }
  return out;
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

struct CallPredictions {
  std::vector<std::vector<corpus::Token>> candidates;
  std::vector<corpus::Token> truths;
};

struct UsagePredictions {
  std::vector<corpus::TokenSeq> preds;
  std::vector<corpus::TokenSeq> truths;
};

CallPredictions predict_calls(const TopkFn& topk, const TaskSet& tasks, std::size_t kmax, std::size_t threads) {
  CallPredictions out;
  out.candidates.resize(tasks.instances.size());
  out.truths.reserve(tasks.instances.size());
  for (const auto& t : tasks.instances) {
    if (t.kind != TaskKind::kApiCall || t.truth.size() != 1) throw UsageError("expected api_call instances");
    out.truths.push_back(t.truth.front());
  }
  parallel_for(tasks.instances.size(), threads,
               [&](std::size_t i) { out.candidates[i] = topk(tasks.instances[i].prefix, kmax); });
  return out;
}

UsagePredictions predict_usages(const GenerateFn& generate, const TaskSet& tasks, std::size_t threads) {
  UsagePredictions out;
  out.preds.resize(tasks.instances.size());
  for (const auto& t : tasks.instances) {
    if (t.kind != TaskKind::kApiUsage) throw UsageError("expected api_usage instances");
    out.truths.push_back(t.truth);
  }
  parallel_for(tasks.instances.size(), threads,
               [&](std::size_t i) { out.preds[i] = generate(tasks.instances[i].prefix); });
  return out;
}

std::map<std::string, double> call_metrics(const CallPredictions& p, const std::vector<std::size_t>& ks) {
  std::map<std::string, double> out;
  for (auto k : ks) out["EM@" + std::to_string(k)] = metrics::em_at_k(p.candidates, p.truths, k);
  return out;
}

std::map<std::string, double> usage_metrics(const UsagePredictions& p) {
  return {{"BLEU", metrics::bleu(p.preds, p.truths)},
          {"EM", metrics::exact_match(p.preds, p.truths)},
          {"codebleu_lite", metrics::codebleu_lite(p.preds, p.truths)}};
}

std::vector<std::string> call_metric_names(const std::vector<std::size_t>& ks) {
  std::vector<std::string> out;
  for (auto k : ks) out.push_back("EM@" + std::to_string(k));
  return out;
}

const std::vector<std::string> kUsageMetrics = {"BLEU", "EM", "codebleu_lite"};

std::size_t max_k(const std::vector<std::size_t>& ks) {
  std::size_t m = 0;
  for (auto k : ks) m = std::max(m, k);
  return m;
}

}  // namespace

// ---------------------------------------------------------------- config

RunConfig run_config_from_json(const json& j, const fs::path& base_dir) {
  reject_unknown(j, {"scenario", "model", "vocab", "pretrain", "finetune", "strategy", "seeds", "eval", "output_dir"},
                 "run config");
  RunConfig c;
  try {
    if (j.contains("scenario")) {
      fs::path p = j.at("scenario").get<std::string>();
      c.scenario = (p.is_relative() && !base_dir.empty() ? base_dir / p : p).lexically_normal().string();
    }
    if (j.contains("model")) c.model = model::config_from_json(j.at("model"));
    if (j.contains("vocab")) {
      const auto& v = j.at("vocab");
      reject_unknown(v, {"min_freq", "max_size"}, "vocab");
      c.vocab_min_freq = v.value("min_freq", c.vocab_min_freq);
      c.vocab_max_size = v.value("max_size", c.vocab_max_size);
    }
    if (j.contains("pretrain")) {
      const auto& p = j.at("pretrain");
      reject_unknown(p, {"max_steps", "batch", "eval_every", "lr", "clip_norm"}, "pretrain");
      c.pretrain.max_steps = p.value("max_steps", c.pretrain.max_steps);
      c.pretrain.batch = p.value("batch", c.pretrain.batch);
      c.pretrain.eval_every = p.value("eval_every", c.pretrain.eval_every);
      c.pretrain.lr = p.value("lr", c.pretrain.lr);
      c.pretrain.clip_norm = p.value("clip_norm", c.pretrain.clip_norm);
    }
    if (j.contains("finetune")) {
      const auto& f = j.at("finetune");
      reject_unknown(f, {"max_epochs", "patience", "batch", "lr", "clip_norm", "valid_fraction"}, "finetune");
      c.finetune.max_epochs = f.value("max_epochs", c.finetune.max_epochs);
      c.finetune.patience = f.value("patience", c.finetune.patience);
      c.finetune.batch = f.value("batch", c.finetune.batch);
      c.finetune.lr = f.value("lr", c.finetune.lr);
      c.finetune.clip_norm = f.value("clip_norm", c.finetune.clip_norm);
      c.finetune.valid_fraction = f.value("valid_fraction", c.finetune.valid_fraction);
    }
    if (j.contains("strategy")) {
      c.strategy = j.at("strategy");
      if (!c.strategy.contains("params")) c.strategy["params"] = json::object();
    }
    if (j.contains("seeds")) {
      const auto& s = j.at("seeds");
      reject_unknown(s, {"data", "model", "train"}, "seeds");
      c.seeds.data = s.value("data", c.seeds.data);
      c.seeds.model = s.value("model", c.seeds.model);
      c.seeds.train = s.value("train", c.seeds.train);
    }
    if (j.contains("eval")) {
      const auto& e = j.at("eval");
      reject_unknown(e, {"ks", "max_new", "divisor_mode"}, "eval");
      c.eval.ks = e.value("ks", c.eval.ks);
      c.eval.max_new = e.value("max_new", c.eval.max_new);
      if (e.contains("divisor_mode")) c.eval.divisor_mode = metrics::divisor_mode_from_string(e.at("divisor_mode"));
    }
    c.output_dir = j.value("output_dir", c.output_dir);
  } catch (const json::exception& e) {
    throw UsageError(std::string("invalid run config: ") + e.what());
  }
  if (c.finetune.max_epochs == 0 || c.finetune.batch == 0) throw UsageError("finetune max_epochs and batch must be positive");
  if (!(c.finetune.valid_fraction > 0.0 && c.finetune.valid_fraction < 1.0)) {
    throw UsageError("finetune valid_fraction must lie in (0, 1)");
  }
  if (c.eval.ks.empty() || std::find(c.eval.ks.begin(), c.eval.ks.end(), 0u) != c.eval.ks.end()) {
    throw UsageError("eval ks must be positive");
  }
  strategies::make_strategy(c.strategy, 0);  // validates the block
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  return run_config_from_json(corpus::read_json_file(path), path.parent_path());
}

json run_config_to_json(const RunConfig& c) {
  return {{"scenario", c.scenario},
          {"model", model::config_to_json(c.model)},
          {"vocab", {{"min_freq", c.vocab_min_freq}, {"max_size", c.vocab_max_size}}},
          {"pretrain",
           {{"max_steps", c.pretrain.max_steps},
            {"batch", c.pretrain.batch},
            {"eval_every", c.pretrain.eval_every},
            {"lr", c.pretrain.lr},
            {"clip_norm", c.pretrain.clip_norm}}},
          {"finetune",
           {{"max_epochs", c.finetune.max_epochs},
            {"patience", c.finetune.patience},
            {"batch", c.finetune.batch},
            {"lr", c.finetune.lr},
            {"clip_norm", c.finetune.clip_norm},
            {"valid_fraction", c.finetune.valid_fraction}}},
          {"strategy", c.strategy},
          {"seeds", {{"data", c.seeds.data}, {"model", c.seeds.model}, {"train", c.seeds.train}}},
          {"eval", {{"ks", c.eval.ks}, {"max_new", c.eval.max_new}, {"divisor_mode", metrics::to_string(c.eval.divisor_mode)}}},
          {"output_dir", c.output_dir}};
}

std::string config_hash(const RunConfig& c) {
  auto j = run_config_to_json(c);
  j.erase("output_dir");
  return corpus::sha256_hex(j.dump());
}

std::optional<std::uint64_t> env_seed() {
  const char* env = std::getenv("CLFORGE_SEED");
  if (!env || !*env) return std::nullopt;
  try {
    std::size_t used = 0;
    const auto v = std::stoull(env, &used);
    if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw UsageError(std::string("CLFORGE_SEED must be a non-negative integer, got '") + env + "'");
  }
}

void apply_env_overrides(RunConfig& c) {
  if (const auto s = env_seed()) c.seeds = {*s, *s, *s};
}

// ---------------------------------------------------------------- tasks

std::string to_string(TaskKind kind) { return kind == TaskKind::kApiCall ? "api_call" : "api_usage"; }

TaskSet build_task_instances(const std::vector<corpus::MethodSample>& samples, TaskKind kind) {
  TaskSet out;
  for (const auto& s : samples) {
    if (s.sites.empty()) {
      ++out.skipped_samples;
      continue;
    }
    for (const auto& site : s.sites) {
      TaskInstance t;
      t.kind = kind;
      const auto cut = kind == TaskKind::kApiCall ? site.call_index : site.usage_start;
      t.prefix.assign(s.tokens.begin(), s.tokens.begin() + static_cast<std::ptrdiff_t>(cut));
      if (kind == TaskKind::kApiCall) {
        t.truth = {s.tokens[site.call_index]};
      } else {
        t.truth.assign(s.tokens.begin() + static_cast<std::ptrdiff_t>(site.usage_start),
                       s.tokens.begin() + static_cast<std::ptrdiff_t>(site.usage_end));
      }
      out.instances.push_back(std::move(t));
    }
  }
  return out;
}

TopkFn model_topk(const model::ModelState& state, const model::Vocab& vocab) {
  return [&state, &vocab](const corpus::TokenSeq& prefix, std::size_t k) {
    std::vector<corpus::Token> out;
    for (const auto& [id, p] : model::next_token_topk(state, vocab.encode(prefix), k)) out.push_back(vocab.token(id));
    return out;
  };
}

GenerateFn model_generate(const model::ModelState& state, const model::Vocab& vocab, std::size_t max_new) {
  return [&state, &vocab, max_new](const corpus::TokenSeq& prefix) {
    return vocab.decode(model::generate_usage(state, vocab.encode(prefix), vocab.id("("), vocab.id(")"), max_new));
  };
}

std::map<std::string, double> evaluate_api_call(const TopkFn& topk, const TaskSet& tasks,
                                                const std::vector<std::size_t>& ks, std::size_t threads) {
  if (tasks.instances.empty()) throw DataError("no api_call instances to evaluate");
  return call_metrics(predict_calls(topk, tasks, max_k(ks), threads), ks);
}

std::map<std::string, double> evaluate_api_usage(const GenerateFn& generate, const TaskSet& tasks,
                                                 std::size_t threads) {
  if (tasks.instances.empty()) throw DataError("no api_usage instances to evaluate");
  return usage_metrics(predict_usages(generate, tasks, threads));
}

// ---------------------------------------------------------------- zero-shot

json reference_results() {
  return {{"note", "Large-scale decoder results from the original study; desk-scale runs are not expected to match."},
          {"api_call",
           {{"ID", {{"EM@1", 72.88}, {"EM@5", 83.30}, {"EM@10", 85.60}}},
            {"OOD", {{"EM@1", 40.82}, {"EM@5", 51.19}, {"EM@10", 54.17}}}}},
          {"api_usage",
           {{"ID", {{"BLEU", 21.19}, {"EM", 51.54}, {"CodeBLEU", 29.94}}},
            {"OOD", {{"BLEU", 8.57}, {"EM", 33.74}, {"CodeBLEU", 20.03}}}}}};
}

json run_zeroshot(const model::Checkpoint& ckpt, const corpus::ScenarioData& scenario, const RunConfig& config) {
  if (ckpt.state.config.kind != model::ModelKind::kDecoder) throw UsageError("zero-shot is decoder-only");
  const auto threads = worker_threads();
  const auto topk = model_topk(ckpt.state, ckpt.vocab);
  const auto generate = model_generate(ckpt.state, ckpt.vocab, config.eval.max_new);
  const auto kmax = max_k(config.eval.ks);

  struct Row {
    std::string name;
    CallPredictions calls;
    UsagePredictions usages;
    std::size_t skipped = 0;
  };
  std::vector<Row> rows;
  auto evaluate = [&](const std::string& name, const std::vector<corpus::MethodSample>& samples) {
    Row r{name, {}, {}, 0};
    const auto call_tasks = build_task_instances(samples, TaskKind::kApiCall);
    const auto usage_tasks = build_task_instances(samples, TaskKind::kApiUsage);
    if (call_tasks.instances.empty()) throw DataError("test set '" + name + "' has no API sites");
    r.calls = predict_calls(topk, call_tasks, kmax, threads);
    r.usages = predict_usages(generate, usage_tasks, threads);
    r.skipped = call_tasks.skipped_samples;
    return r;
  };
  rows.push_back(evaluate("ID", scenario.id_split.test));
  Row pooled{"OOD", {}, {}, 0};
  std::vector<Row> per_domain;
  for (const auto& dom : scenario.ood) {
    auto r = evaluate(dom.spec.name, dom.split.test);
    auto& c = pooled.calls;
    c.candidates.insert(c.candidates.end(), r.calls.candidates.begin(), r.calls.candidates.end());
    c.truths.insert(c.truths.end(), r.calls.truths.begin(), r.calls.truths.end());
    auto& u = pooled.usages;
    u.preds.insert(u.preds.end(), r.usages.preds.begin(), r.usages.preds.end());
    u.truths.insert(u.truths.end(), r.usages.truths.begin(), r.usages.truths.end());
    pooled.skipped += r.skipped;
    per_domain.push_back(std::move(r));
  }
  if (!scenario.ood.empty()) rows.push_back(std::move(pooled));
  for (auto& r : per_domain) rows.push_back(std::move(r));

  json call_table = json::array(), usage_table = json::array();
  const auto id_call = call_metrics(rows[0].calls, config.eval.ks);
  const auto id_usage = usage_metrics(rows[0].usages);
  for (const auto& r : rows) {
    const auto cm = call_metrics(r.calls, config.eval.ks);
    const auto um = usage_metrics(r.usages);
    json crow = {{"dataset", r.name}, {"instances", r.calls.truths.size()}, {"skipped_samples", r.skipped}};
    json urow = {{"dataset", r.name}, {"instances", r.usages.truths.size()}};
    for (const auto& [k, v] : cm) crow[k] = v;
    for (const auto& [k, v] : um) urow[k] = v;
    if (r.name != "ID") {
      json cdrop = json::object(), udrop = json::object();
      for (const auto& [k, v] : cm) cdrop[k] = id_call.at(k) > 0 ? 100.0 * (id_call.at(k) - v) / id_call.at(k) : 0.0;
      for (const auto& [k, v] : um) udrop[k] = id_usage.at(k) > 0 ? 100.0 * (id_usage.at(k) - v) / id_usage.at(k) : 0.0;
      crow["drop_pct"] = cdrop;
      urow["drop_pct"] = udrop;
    }
    call_table.push_back(std::move(crow));
    usage_table.push_back(std::move(urow));
  }
  return {{"model", "decoder"},
          {"api_call", std::move(call_table)},
          {"api_usage", std::move(usage_table)},
          {"bleu_level", "corpus"},
          {"reference_results", reference_results()},
          {"config_hash", config_hash(config)}};
}

// ---------------------------------------------------------------- continual

ContinualReport run_continual(const model::Checkpoint& ckpt, strategies::Strategy* strategy,
                              const corpus::ScenarioData& scenario, const RunConfig& config,
                              const ProgressFn& progress) {
  const std::size_t T = scenario.ood.size();
  if (T < 2) throw DataError("continual fine-tuning needs at least two OOD domains");
  const auto threads = worker_threads();
  const auto& fs_cfg = config.finetune;
  auto say = [&](const std::string& msg) {
    if (progress) progress(msg);
  };

  ContinualReport report;
  report.model_kind = model::to_string(ckpt.state.config.kind);
  report.strategy = strategy ? strategy->name() : "naive";
  report.strategy_params = strategy ? strategy->params() : json::object();
  report.divisor_mode = config.eval.divisor_mode;
  report.config_hash = config_hash(config);
  for (const auto& d : scenario.ood) report.domains.push_back(d.spec.name);
  for (const auto& m : call_metric_names(config.eval.ks)) report.tasks["api_call"][m] = metrics::EvalMatrix(m, T);
  for (const auto& m : kUsageMetrics) report.tasks["api_usage"][m] = metrics::EvalMatrix(m, T);

  model::ModelState state = ckpt.state;
  const auto& vocab = ckpt.vocab;
  if (state.config.kind == model::ModelKind::kEncoder) {
    auto head_rng = num::Rng(config.seeds.model).split(11);
    model::reinit_added_heads(state, head_rng);
  }
  const auto objective = model::finetune_objective(state.config.kind);
  const num::Rng data_root(config.seeds.data);
  const num::Rng train_root(config.seeds.train);

  std::vector<TaskSet> call_tasks, usage_tasks;
  for (const auto& d : scenario.ood) {
    call_tasks.push_back(build_task_instances(d.split.test, TaskKind::kApiCall));
    usage_tasks.push_back(build_task_instances(d.split.test, TaskKind::kApiUsage));
    if (call_tasks.back().instances.empty()) throw DataError("test set of '" + d.spec.name + "' has no API sites");
  }

  std::size_t cumulative_expected = 0;
  for (std::size_t t = 0; t < T; ++t) {
    const auto& dom = scenario.ood[t];
    auto carve_rng = data_root.split(100 + t);
    auto [train_t, valid_t] = corpus::carve_validation(dom.split.train, fs_cfg.valid_fraction, carve_rng);
    cumulative_expected += train_t.size();

    if (strategy) strategy->before_experience(state, t);
    const auto view = strategy ? strategy->training_view(train_t) : train_t;
    if (report.strategy == "cumulative" && view.size() != cumulative_expected) {
      throw TrainingError("cumulative view holds " + std::to_string(view.size()) + " samples, expected " +
                          std::to_string(cumulative_expected));
    }
    const auto view_enc = model::encode_samples(vocab, view);
    const auto valid_enc = model::encode_samples(vocab, valid_t);
    const std::uint64_t valid_seed = data_root.split(200 + t).next_u64();
    auto order_rng = train_root.split(t).split(1);
    auto step_rng = train_root.split(t).split(2);
    say("step " + std::to_string(t + 1) + "/" + std::to_string(T) + " (" + dom.spec.name + "): " +
        std::to_string(view.size()) + " training samples");

    num::AdamState adam(num::AdamConfig{fs_cfg.lr});
    std::vector<std::size_t> order(view_enc.size());
    std::iota(order.begin(), order.end(), 0);
    model::ModelState best = state;
    double best_loss = 0.0;
    std::size_t best_epoch = 0, since_best = 0, epochs_run = 0;
    json valid_losses = json::array();
    const bool track = strategy != nullptr;

    for (std::size_t epoch = 1; epoch <= fs_cfg.max_epochs; ++epoch) {
      order_rng.shuffle(order);
      for (std::size_t start = 0; start < order.size(); start += fs_cfg.batch) {
        std::vector<const model::EncodedSample*> batch;
        for (std::size_t i = start; i < std::min(order.size(), start + fs_cfg.batch); ++i) batch.push_back(&view_enc[order[i]]);
        try {
          auto br = model::batch_gradients(state, batch, objective, step_rng, state.config.dropout);
          std::vector<double> task_grad;
          if (track) task_grad = num::flatten_like(br.grads, state.params);
          if (track && strategy->has_penalty()) {
            const auto theta = num::flatten(state.params);
            std::vector<double> pg(theta.size(), 0.0);
            strategy->penalty(theta, pg);
            for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += task_grad[i];
            num::GradMap full = state.params;
            num::unflatten(pg, full);
            br.grads = std::move(full);
          }
          num::clip_global_norm(br.grads, fs_cfg.clip_norm);
          std::vector<double> before;
          if (track) before = num::flatten(state.params);
          num::adam_step(state.params, br.grads, adam);
          if (track) strategy->after_step(task_grad, before, num::flatten(state.params));
        } catch (const NumericError& e) {
          throw TrainingError("fine-tuning on '" + dom.spec.name + "' diverged in epoch " + std::to_string(epoch) +
                              ": " + e.what());
        }
      }
      ++epochs_run;
      const double vl = model::dataset_loss(state, valid_enc, objective, valid_seed, threads);
      valid_losses.push_back(vl);
      if (best_epoch == 0 || vl < best_loss) {
        best_loss = vl;
        best_epoch = epoch;
        best = state;
        since_best = 0;
      } else if (++since_best >= fs_cfg.patience) {
        break;
      }
    }
    state = std::move(best);
    const double restored = model::dataset_loss(state, valid_enc, objective, valid_seed, threads);
    if (restored != best_loss) throw TrainingError("restored checkpoint does not reproduce its validation loss");

    json strategy_state = json::object();
    if (strategy) {
      const auto train_enc = model::encode_samples(vocab, train_t);
      strategy->after_experience({state, train_t, train_enc, t, threads});
      strategy_state = strategy->state_summary();
      if (strategy_state.contains("capacity") && strategy_state.at("size").get<std::size_t>() > strategy_state.at("capacity").get<std::size_t>()) {
        throw TrainingError("replay buffer exceeded its capacity");
      }
    }

    const auto topk = model_topk(state, vocab);
    const auto generate = model_generate(state, vocab, config.eval.max_new);
    for (std::size_t i = 0; i <= t; ++i) {
      for (const auto& [name, v] : evaluate_api_call(topk, call_tasks[i], config.eval.ks, threads)) {
        report.tasks["api_call"][name].set(t, i, v);
      }
      for (const auto& [name, v] : evaluate_api_usage(generate, usage_tasks[i], threads)) {
        report.tasks["api_usage"][name].set(t, i, v);
      }
    }
    say("  epochs " + std::to_string(epochs_run) + ", best epoch " + std::to_string(best_epoch) + ", EM@1 on " +
        dom.spec.name + " " + format_value(report.tasks["api_call"].begin()->second.at(t, t)));

    report.training_log.push_back({{"step", t + 1},
                                   {"domain", dom.spec.name},
                                   {"train_size", train_t.size()},
                                   {"view_size", view.size()},
                                   {"valid_size", valid_t.size()},
                                   {"epochs_run", epochs_run},
                                   {"best_epoch", best_epoch},
                                   {"valid_losses", valid_losses},
                                   {"restored_valid_loss", restored},
                                   {"evaluated_domains", t + 1},
                                   {"strategy_state", strategy_state}});
  }
  return report;
}

json metric_summary(const metrics::EvalMatrix& m, const std::vector<std::string>& domains, metrics::DivisorMode mode) {
  const std::size_t T = m.steps();
  json A = json::object(), F = json::object();
  double sum_a = 0.0, sum_f = 0.0;
  for (std::size_t i = 0; i < T; ++i) {
    const double a = metrics::average_metric(m, i, mode);
    A[domains[i]] = a;
    sum_a += a;
    if (i + 1 < T) {
      const double f = metrics::forgetting(m, i, T - 1);
      F[domains[i]] = f;
      sum_f += f;
    }
  }
  return {{"metric", m.metric()},
          {"matrix", m.to_json()},
          {"A", A},
          {"F", F},
          {"mean_A", sum_a / static_cast<double>(T)},
          {"mean_F", sum_f / static_cast<double>(T - 1)},
          {"divisor_mode", metrics::to_string(mode)}};
}

json report_to_json(const ContinualReport& r) {
  json tasks = json::object();
  for (const auto& [task, by_metric] : r.tasks) {
    json list = json::array();
    for (const auto& [name, m] : by_metric) {
      auto s = metric_summary(m, r.domains, r.divisor_mode);
      s["config_hash"] = r.config_hash;
      list.push_back(std::move(s));
    }
    tasks[task] = std::move(list);
  }
  return {{"model", r.model_kind},
          {"strategy", {{"name", r.strategy}, {"params", r.strategy_params}}},
          {"T", r.domains.size()},
          {"domains", r.domains},
          {"divisor_mode", metrics::to_string(r.divisor_mode)},
          {"bleu_level", "corpus"},
          {"tasks", std::move(tasks)},
          {"training_log", r.training_log},
          {"config_hash", r.config_hash}};
}

ContinualReport report_from_json(const json& j) {
  try {
    ContinualReport r;
    r.model_kind = j.at("model").get<std::string>();
    r.strategy = j.at("strategy").at("name").get<std::string>();
    r.strategy_params = j.at("strategy").value("params", json::object());
    r.domains = j.at("domains").get<std::vector<std::string>>();
    r.divisor_mode = metrics::divisor_mode_from_string(j.at("divisor_mode").get<std::string>());
    r.config_hash = j.at("config_hash").get<std::string>();
    r.training_log = j.value("training_log", json::array());
    for (const auto& [task, list] : j.at("tasks").items()) {
      for (const auto& entry : list) {
        const auto name = entry.at("metric").get<std::string>();
        r.tasks[task][name] = metrics::EvalMatrix::from_json(name, entry.at("matrix"));
      }
    }
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
}

std::string heatmap_csv(const metrics::EvalMatrix& m, const std::vector<std::string>& domains,
                        const std::string& config_hash) {
  std::ostringstream out;
  out << "# config_hash: " << config_hash << "\n";
  for (std::size_t i = 0; i < domains.size(); ++i) out << (i ? "," : "") << domains[i];
  out << "\n";
  for (std::size_t j = 0; j < m.steps(); ++j) {
    for (std::size_t i = 0; i < m.steps(); ++i) {
      if (i) out << ",";
      if (m.has(j, i)) out << format_value(m.at(j, i));
    }
    out << "\n";
  }
  return out.str();
}

std::vector<fs::path> emit_report(const ContinualReport& r, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw DataError("cannot create output directory " + out_dir.string());
  std::vector<fs::path> written;
  auto j = report_to_json(r);
  j["run_metadata"] = run_metadata();
  corpus::write_text_file(out_dir / "report.json", j.dump(2) + "\n");
  written.push_back(out_dir / "report.json");

  std::ostringstream summary;
  summary << "# config_hash: " << r.config_hash << "\n";
  summary << "strategy,model,task,metric,domain,A,F\n";
  for (const auto& [task, by_metric] : r.tasks) {
    for (const auto& [name, m] : by_metric) {
      const auto path = out_dir / ("heatmap_" + r.model_kind + "_" + task + "_" + metric_file_name(name) + ".csv");
      corpus::write_text_file(path, heatmap_csv(m, r.domains, r.config_hash));
      written.push_back(path);
      const auto s = metric_summary(m, r.domains, r.divisor_mode);
      for (const auto& d : r.domains) {
        summary << r.strategy << "," << r.model_kind << "," << task << "," << name << "," << d << ","
                << format_value(s["A"][d].get<double>()) << ","
                << (s["F"].contains(d) ? format_value(s["F"][d].get<double>()) : "") << "\n";
      }
      summary << r.strategy << "," << r.model_kind << "," << task << "," << name << ",mean,"
              << format_value(s["mean_A"].get<double>()) << "," << format_value(s["mean_F"].get<double>()) << "\n";
    }
  }
  corpus::write_text_file(out_dir / "summary.csv", summary.str());
  written.push_back(out_dir / "summary.csv");
  return written;
}

std::vector<fs::path> merge_reports(const std::vector<fs::path>& run_dirs, const fs::path& out_dir) {
  if (run_dirs.empty()) throw UsageError("no run directories given");
  json runs = json::array();
  std::ostringstream csv;
  csv << "model,strategy,task,metric,mean_A,mean_F,config_hash\n";
  for (const auto& dir : run_dirs) {
    const auto path = fs::is_directory(dir) ? dir / "report.json" : dir;
    const auto j = corpus::read_json_file(path);
    const auto r = report_from_json(j);
    for (const auto& [task, list] : j.at("tasks").items()) {
      for (const auto& entry : list) {
        const auto name = entry.at("metric").get<std::string>();
        const auto recomputed = metric_summary(r.tasks.at(task).at(name), r.domains, r.divisor_mode);
        if (recomputed["A"] != entry.at("A") || recomputed["F"] != entry.at("F")) {
          throw DataError(path.string() + ": stored A/F for " + task + "/" + name + " do not match the matrix");
        }
        runs.push_back({{"model", r.model_kind},
                        {"strategy", r.strategy},
                        {"task", task},
                        {"metric", name},
                        {"A", recomputed["A"]},
                        {"F", recomputed["F"]},
                        {"mean_A", recomputed["mean_A"]},
                        {"mean_F", recomputed["mean_F"]},
                        {"config_hash", r.config_hash},
                        {"source", path.string()}});
        csv << r.model_kind << "," << r.strategy << "," << task << "," << name << ","
            << format_value(recomputed["mean_A"].get<double>()) << "," << format_value(recomputed["mean_F"].get<double>())
            << "," << r.config_hash << "\n";
      }
    }
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  corpus::write_text_file(out_dir / "comparison.json", json{{"runs", runs}}.dump(2) + "\n");
  corpus::write_text_file(out_dir / "comparison.csv", csv.str());
  return {out_dir / "comparison.json", out_dir / "comparison.csv"};
}

json run_metadata() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return {{"timestamp", buf}};
}

}  // namespace clforge::harness
