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

#include "clforge/strategies/strategy.hpp"

#include <algorithm>
#include <set>

#include "clforge/error.hpp"
#include "clforge/parallel.hpp"

namespace clforge::strategies {

namespace {

void require_same_size(std::span<const double> a, std::size_t n, const char* what) {
  if (a.size() != n) {
    throw UsageError(std::string(what) + ": expected " + std::to_string(n) + " values, got " + std::to_string(a.size()));
  }
}

double anchored_quadratic(std::span<const double> theta, const std::vector<Anchor>& anchors, double coef,
                          std::span<double> grad) {
  // coef * sum_a sum_i imp_i (theta_i - a_i)^2
  double value = 0.0;
  for (const auto& a : anchors) {
    require_same_size(a.theta, theta.size(), "anchor");
    require_same_size(grad, theta.size(), "gradient");
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double d = theta[i] - a.theta[i];
      value += a.importance[i] * d * d;
      grad[i] += 2.0 * coef * a.importance[i] * d;
    }
  }
  return coef * value;
}

}  // namespace

// ---------------------------------------------------------------- replay

std::vector<std::size_t> replay_quotas(std::size_t capacity, const std::vector<std::size_t>& available) {
  std::vector<std::size_t> quota(available.size(), 0);
  std::size_t remaining = capacity;
  for (;;) {
    std::vector<std::size_t> open;
    for (std::size_t j = 0; j < available.size(); ++j) {
      if (quota[j] < available[j]) open.push_back(j);
    }
    if (open.empty() || remaining == 0) break;
    const std::size_t share = remaining / open.size();
    if (share == 0) {
      for (std::size_t k = 0; k < remaining; ++k) ++quota[open[k]];
      break;
    }
    for (auto j : open) {
      const auto give = std::min(share, available[j] - quota[j]);
      quota[j] += give;
      remaining -= give;
    }
  }
  return quota;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw UsageError("replay capacity must be positive");
}

std::vector<std::size_t> ReplayBuffer::counts_per_experience() const {
  std::vector<std::size_t> counts;
  for (const auto& item : items_) {
    if (counts.size() <= item.experience) counts.resize(item.experience + 1, 0);
    ++counts[item.experience];
  }
  return counts;
}

void ReplayBuffer::update(const std::vector<corpus::MethodSample>& experience_train, std::size_t index,
                          num::Rng& rng) {
  auto available = counts_per_experience();
  if (available.size() > index) throw UsageError("replay buffer already holds experience " + std::to_string(index));
  available.resize(index + 1, 0);
  available[index] = experience_train.size();
  const auto quota = replay_quotas(capacity_, available);

  std::vector<BufferItem> next;
  for (std::size_t j = 0; j < index; ++j) {
    std::vector<const BufferItem*> mine;
    for (const auto& item : items_) {
      if (item.experience == j) mine.push_back(&item);
    }
    auto keep = rng.sample_indices(mine.size(), quota[j]);
    std::sort(keep.begin(), keep.end());
    for (auto k : keep) next.push_back(*mine[k]);
  }
  auto picks = rng.sample_indices(experience_train.size(), quota[index]);
  std::sort(picks.begin(), picks.end());
  for (auto k : picks) next.push_back({experience_train[k], index});
  items_ = std::move(next);
}

std::vector<corpus::MethodSample> replay_view(const std::vector<BufferItem>& buffer,
                                              const std::vector<corpus::MethodSample>& current) {
  std::vector<corpus::MethodSample> view = current;
  view.reserve(current.size() + buffer.size());
  for (const auto& item : buffer) view.push_back(item.sample);
  return view;
}

Replay::Replay(std::size_t capacity, std::uint64_t seed) : buffer_(capacity), rng_(seed) {}

std::vector<corpus::MethodSample> Replay::training_view(const std::vector<corpus::MethodSample>& current) {
  return replay_view(buffer_.items(), current);
}

void Replay::after_experience(const ExperienceContext& ctx) { buffer_.update(ctx.train, ctx.index, rng_); }

nlohmann::json Replay::state_summary() const {
  return {{"size", buffer_.items().size()}, {"capacity", buffer_.capacity()}, {"per_experience", buffer_.counts_per_experience()}};
}

std::vector<corpus::MethodSample> Cumulative::training_view(const std::vector<corpus::MethodSample>& current) {
  std::vector<corpus::MethodSample> view = past_;
  view.insert(view.end(), current.begin(), current.end());
  return view;
}

void Cumulative::after_experience(const ExperienceContext& ctx) {
  past_.insert(past_.end(), ctx.train.begin(), ctx.train.end());
}

// ---------------------------------------------------------------- EWC

Vec empirical_fisher(const model::ModelState& model, const std::vector<model::EncodedSample>& samples,
                     std::size_t n_fisher, num::Rng& rng, std::size_t threads) {
  if (samples.empty()) throw DataError("Fisher estimation needs at least one sample");
  if (n_fisher == 0) throw UsageError("n_fisher must be positive");
  std::vector<std::size_t> chosen;
  if (n_fisher >= samples.size()) {
    chosen.resize(samples.size());
    for (std::size_t i = 0; i < chosen.size(); ++i) chosen[i] = i;
  } else {
    chosen = rng.sample_indices(samples.size(), n_fisher);
  }
  const num::Rng sample_root(rng.next_u64());
  const auto objective = model::finetune_objective(model.config.kind);
  const std::size_t dim = num::param_count(model.params);
  Vec fisher(dim, 0.0);

  const std::size_t block = std::max<std::size_t>(1, threads) * 4;
  for (std::size_t start = 0; start < chosen.size(); start += block) {
    const std::size_t count = std::min(block, chosen.size() - start);
    std::vector<Vec> sq(count);
    parallel_for(count, threads, [&](std::size_t k) {
      auto srng = sample_root.split(start + k);
      const model::EncodedSample* one = &samples[chosen[start + k]];
      auto br = model::batch_gradients(model, std::span<const model::EncodedSample* const>(&one, 1), objective, srng, 0.0);
      sq[k] = num::flatten_like(br.grads, model.params);
      for (auto& g : sq[k]) g *= g;
    });
    for (const auto& v : sq) {
      for (std::size_t i = 0; i < dim; ++i) fisher[i] += v[i];
    }
  }
  for (auto& f : fisher) f /= static_cast<double>(chosen.size());
  return fisher;
}

double ewc_penalty(std::span<const double> theta, const std::vector<Anchor>& anchors, double lambda,
                   std::span<double> grad) {
  if (lambda == 0.0 || anchors.empty()) return 0.0;
  return anchored_quadratic(theta, anchors, lambda / 2.0, grad);
}

Ewc::Ewc(double lambda, std::size_t n_fisher, std::uint64_t seed) : lambda_(lambda), n_fisher_(n_fisher), rng_(seed) {
  if (lambda < 0.0) throw UsageError("ewc lambda must be non-negative");
  if (n_fisher == 0) throw UsageError("ewc n_fisher must be positive");
}

double Ewc::penalty(std::span<const double> theta, std::span<double> grad) const {
  return ewc_penalty(theta, anchors_, lambda_, grad);
}

void Ewc::after_experience(const ExperienceContext& ctx) {
  Anchor a;
  a.theta = num::flatten(ctx.model.params);
  a.importance = empirical_fisher(ctx.model, ctx.encoded_train, n_fisher_, rng_, ctx.threads);
  anchors_.push_back(std::move(a));
}

// ---------------------------------------------------------------- SI

void si_after_step(SiState& s, std::span<const double> grad, std::span<const double> before,
                   std::span<const double> after) {
  require_same_size(grad, s.omega.size(), "si gradient");
  require_same_size(before, s.omega.size(), "si parameters");
  require_same_size(after, s.omega.size(), "si parameters");
  for (std::size_t i = 0; i < s.omega.size(); ++i) s.omega[i] += -grad[i] * (after[i] - before[i]);
}

void si_consolidate(SiState& s, std::span<const double> theta_now) {
  require_same_size(theta_now, s.anchor.size(), "si parameters");
  for (std::size_t i = 0; i < s.omega.size(); ++i) {
    const double d = theta_now[i] - s.anchor[i];
    s.importance[i] += std::max(0.0, s.omega[i] / (d * d + s.xi));
    s.omega[i] = 0.0;
    s.anchor[i] = theta_now[i];
  }
}

double si_penalty(std::span<const double> theta, const SiState& s, std::span<double> grad) {
  if (s.c == 0.0 || s.importance.empty()) return 0.0;
  require_same_size(theta, s.anchor.size(), "si parameters");
  require_same_size(grad, s.anchor.size(), "si gradient");
  double value = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double d = theta[i] - s.anchor[i];
    value += s.importance[i] * d * d;
    grad[i] += 2.0 * s.c * s.importance[i] * d;
  }
  return s.c * value;
}

Si::Si(double c, double xi) {
  if (c < 0.0) throw UsageError("si c must be non-negative");
  if (!(xi > 0.0)) throw UsageError("si xi must be positive");
  state_.c = c;
  state_.xi = xi;
}

void Si::before_experience(const model::ModelState& model, std::size_t /*index*/) {
  if (!state_.anchor.empty()) return;
  state_.anchor = num::flatten(model.params);
  state_.omega.assign(state_.anchor.size(), 0.0);
  state_.importance.assign(state_.anchor.size(), 0.0);
}

double Si::penalty(std::span<const double> theta, std::span<double> grad) const {
  return si_penalty(theta, state_, grad);
}

void Si::after_step(std::span<const double> task_grad, std::span<const double> before, std::span<const double> after) {
  si_after_step(state_, task_grad, before, after);
}

void Si::after_experience(const ExperienceContext& ctx) {
  si_consolidate(state_, num::flatten(ctx.model.params));
  consolidated_ = true;
}

// ---------------------------------------------------------------- RWalk

void rwalk_after_step(RwalkState& s, std::span<const double> grad, std::span<const double> before,
                      std::span<const double> after) {
  require_same_size(grad, s.fisher_ema.size(), "rwalk gradient");
  require_same_size(before, s.fisher_ema.size(), "rwalk parameters");
  require_same_size(after, s.fisher_ema.size(), "rwalk parameters");
  for (std::size_t i = 0; i < s.fisher_ema.size(); ++i) {
    s.fisher_ema[i] = s.alpha * s.fisher_ema[i] + (1.0 - s.alpha) * grad[i] * grad[i];
    const double d = after[i] - before[i];
    if (d == 0.0) continue;
    s.score[i] += std::max(0.0, -grad[i] * d) / (0.5 * s.fisher_ema[i] * d * d + s.xi);
  }
}

void rwalk_consolidate(RwalkState& s, std::span<const double> theta_now) {
  require_same_size(theta_now, s.fisher_ema.size(), "rwalk parameters");
  Anchor a;
  a.theta.assign(theta_now.begin(), theta_now.end());
  a.importance.resize(theta_now.size());
  for (std::size_t i = 0; i < theta_now.size(); ++i) {
    const double normalized = (s.score_prev[i] + s.score[i]) / 2.0;
    a.importance[i] = s.fisher_ema[i] + normalized;
    s.score_prev[i] = normalized;
    s.score[i] = 0.0;
  }
  s.anchors.push_back(std::move(a));
}

double rwalk_penalty(std::span<const double> theta, const RwalkState& s, std::span<double> grad) {
  if (s.lambda == 0.0 || s.anchors.empty()) return 0.0;
  return anchored_quadratic(theta, s.anchors, s.lambda, grad);
}

Rwalk::Rwalk(double lambda, double alpha, double xi) {
  if (lambda < 0.0) throw UsageError("rwalk lambda must be non-negative");
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("rwalk alpha must lie in (0, 1)");
  if (!(xi > 0.0)) throw UsageError("rwalk xi must be positive");
  state_.lambda = lambda;
  state_.alpha = alpha;
  state_.xi = xi;
}

void Rwalk::before_experience(const model::ModelState& model, std::size_t /*index*/) {
  if (!state_.fisher_ema.empty()) return;
  const auto n = num::param_count(model.params);
  state_.fisher_ema.assign(n, 0.0);
  state_.score.assign(n, 0.0);
  state_.score_prev.assign(n, 0.0);
}

double Rwalk::penalty(std::span<const double> theta, std::span<double> grad) const {
  return rwalk_penalty(theta, state_, grad);
}

void Rwalk::after_step(std::span<const double> task_grad, std::span<const double> before,
                       std::span<const double> after) {
  rwalk_after_step(state_, task_grad, before, after);
}

void Rwalk::after_experience(const ExperienceContext& ctx) { rwalk_consolidate(state_, num::flatten(ctx.model.params)); }

// ---------------------------------------------------------------- config

const std::vector<std::string>& strategy_names() {
  static const std::vector<std::string> names = {"naive", "replay", "cumulative", "ewc", "si", "rwalk"};
  return names;
}

std::unique_ptr<Strategy> make_strategy(const nlohmann::json& block, std::uint64_t seed) {
  if (!block.is_object() || !block.contains("name")) throw UsageError("strategy block needs a \"name\"");
  for (const auto& [key, _] : block.items()) {
    if (key != "name" && key != "params") throw UsageError("unknown strategy block key '" + key + "'");
  }
  const auto name = block.at("name").get<std::string>();
  const nlohmann::json params = block.value("params", nlohmann::json::object());
  if (!params.is_object()) throw UsageError("strategy params must be an object");

  auto check_keys = [&](std::set<std::string> allowed) {
    for (const auto& [key, _] : params.items()) {
      if (!allowed.count(key)) throw UsageError("unknown parameter '" + key + "' for strategy '" + name + "'");
    }
  };
  try {
    if (name == "naive") {
      check_keys({});
      return std::make_unique<Naive>();
    }
    if (name == "replay") {
      check_keys({"capacity"});
      return std::make_unique<Replay>(params.value("capacity", std::size_t{200}), seed);
    }
    if (name == "cumulative") {
      check_keys({});
      return std::make_unique<Cumulative>();
    }
    if (name == "ewc") {
      check_keys({"lambda", "n_fisher"});
      return std::make_unique<Ewc>(params.value("lambda", 100.0), params.value("n_fisher", std::size_t{256}), seed);
    }
    if (name == "si") {
      check_keys({"c", "xi"});
      return std::make_unique<Si>(params.value("c", 0.1), params.value("xi", 0.1));
    }
    if (name == "rwalk") {
      check_keys({"lambda", "alpha", "xi"});
      return std::make_unique<Rwalk>(params.value("lambda", 1.0), params.value("alpha", 0.9), params.value("xi", 0.1));
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("invalid parameters for strategy '" + name + "': " + e.what());
  }
  throw UsageError("unknown strategy '" + name + "'");
}

}  // namespace clforge::strategies
