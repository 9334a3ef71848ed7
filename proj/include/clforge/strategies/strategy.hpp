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

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "clforge/corpus/sample.hpp"
#include "clforge/model/train.hpp"
#include "clforge/model/transformer.hpp"
#include "clforge/numcore/rng.hpp"

namespace clforge::strategies {

using Vec = std::vector<double>;

/// What a strategy sees when an experience ends.
struct ExperienceContext {
  const model::ModelState& model;
  const std::vector<corpus::MethodSample>& train;
  const std::vector<model::EncodedSample>& encoded_train;
  std::size_t index = 0;
  std::size_t threads = 1;
};

/// Hooks into the fine-tuning loop. Parameter vectors are flattened in
/// parameter-name order. The base class is the Naive strategy.
class Strategy {
 public:
  virtual ~Strategy() = default;

  virtual std::string name() const { return "naive"; }
  virtual nlohmann::json params() const { return nlohmann::json::object(); }

  virtual void before_experience(const model::ModelState& /*model*/, std::size_t /*index*/) {}
  virtual std::vector<corpus::MethodSample> training_view(const std::vector<corpus::MethodSample>& current) {
    return current;
  }
  /// Whether penalty() can be non-zero; when false the loop skips it.
  virtual bool has_penalty() const { return false; }
  /// Penalty value; its gradient is added into `grad`.
  virtual double penalty(std::span<const double> /*theta*/, std::span<double> /*grad*/) const { return 0.0; }
  /// `task_grad` excludes the penalty gradient.
  virtual void after_step(std::span<const double> /*task_grad*/, std::span<const double> /*before*/,
                          std::span<const double> /*after*/) {}
  virtual void after_experience(const ExperienceContext& /*ctx*/) {}

  /// Per-experience bookkeeping for reports (e.g. buffer sizes).
  virtual nlohmann::json state_summary() const { return nlohmann::json::object(); }
};

using Naive = Strategy;

// ---------------------------------------------------------------- replay

struct BufferItem {
  corpus::MethodSample sample;
  std::size_t experience = 0;
};

/// Equal per-experience quotas: `available[j]` items can be held for
/// experience j. Slots left by experiences below their share are handed to
/// the others; any remainder goes to the lowest experience indices.
std::vector<std::size_t> replay_quotas(std::size_t capacity, const std::vector<std::size_t>& available);

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  std::size_t capacity() const { return capacity_; }
  const std::vector<BufferItem>& items() const { return items_; }
  std::vector<std::size_t> counts_per_experience() const;

  /// Rebalances quotas over experiences 0..index and fills this experience's
  /// share by uniform sampling without replacement.
  void update(const std::vector<corpus::MethodSample>& experience_train, std::size_t index, num::Rng& rng);

 private:
  std::size_t capacity_;
  std::vector<BufferItem> items_;
};

/// current followed by every buffered sample.
std::vector<corpus::MethodSample> replay_view(const std::vector<BufferItem>& buffer,
                                              const std::vector<corpus::MethodSample>& current);

class Replay : public Strategy {
 public:
  Replay(std::size_t capacity, std::uint64_t seed);
  std::string name() const override { return "replay"; }
  nlohmann::json params() const override { return {{"capacity", buffer_.capacity()}}; }
  std::vector<corpus::MethodSample> training_view(const std::vector<corpus::MethodSample>& current) override;
  void after_experience(const ExperienceContext& ctx) override;
  nlohmann::json state_summary() const override;
  const ReplayBuffer& buffer() const { return buffer_; }

 private:
  ReplayBuffer buffer_;
  num::Rng rng_;
};

/// Keeps every past training sample.
class Cumulative : public Strategy {
 public:
  std::string name() const override { return "cumulative"; }
  std::vector<corpus::MethodSample> training_view(const std::vector<corpus::MethodSample>& current) override;
  void after_experience(const ExperienceContext& ctx) override;
  nlohmann::json state_summary() const override { return {{"stored", past_.size()}}; }

 private:
  std::vector<corpus::MethodSample> past_;
};

// ---------------------------------------------------------- regularizers

struct Anchor {
  Vec theta;
  Vec importance;
};

/// Mean over up to n_fisher samples (all when fewer) of the squared
/// per-sample gradient of the task loss.
Vec empirical_fisher(const model::ModelState& model, const std::vector<model::EncodedSample>& samples,
                     std::size_t n_fisher, num::Rng& rng, std::size_t threads = 1);

/// (lambda/2) sum_a sum_i F_i (theta_i - theta*_i)^2, gradient added to grad.
double ewc_penalty(std::span<const double> theta, const std::vector<Anchor>& anchors, double lambda,
                   std::span<double> grad);

class Ewc : public Strategy {
 public:
  Ewc(double lambda, std::size_t n_fisher, std::uint64_t seed);
  std::string name() const override { return "ewc"; }
  nlohmann::json params() const override { return {{"lambda", lambda_}, {"n_fisher", n_fisher_}}; }
  bool has_penalty() const override { return lambda_ != 0.0 && !anchors_.empty(); }
  double penalty(std::span<const double> theta, std::span<double> grad) const override;
  void after_experience(const ExperienceContext& ctx) override;
  nlohmann::json state_summary() const override { return {{"anchors", anchors_.size()}}; }
  const std::vector<Anchor>& anchors() const { return anchors_; }

 private:
  double lambda_;
  std::size_t n_fisher_;
  num::Rng rng_;
  std::vector<Anchor> anchors_;
};

struct SiState {
  double c = 0.1;
  double xi = 0.1;
  Vec omega;        // running path integral
  Vec importance;   // consolidated Omega
  Vec anchor;       // theta at last consolidation
};

void si_after_step(SiState& s, std::span<const double> grad, std::span<const double> before,
                   std::span<const double> after);
void si_consolidate(SiState& s, std::span<const double> theta_now);
double si_penalty(std::span<const double> theta, const SiState& s, std::span<double> grad);

class Si : public Strategy {
 public:
  Si(double c, double xi);
  std::string name() const override { return "si"; }
  nlohmann::json params() const override { return {{"c", state_.c}, {"xi", state_.xi}}; }
  void before_experience(const model::ModelState& model, std::size_t index) override;
  bool has_penalty() const override { return state_.c != 0.0 && consolidated_; }
  double penalty(std::span<const double> theta, std::span<double> grad) const override;
  void after_step(std::span<const double> task_grad, std::span<const double> before,
                  std::span<const double> after) override;
  void after_experience(const ExperienceContext& ctx) override;
  const SiState& state() const { return state_; }

 private:
  SiState state_;
  bool consolidated_ = false;
};

struct RwalkState {
  double lambda = 1.0;
  double alpha = 0.9;
  double xi = 0.1;
  Vec fisher_ema;
  Vec score;        // s accumulated during the current experience
  Vec score_prev;   // running average across experiences
  std::vector<Anchor> anchors;
};

void rwalk_after_step(RwalkState& s, std::span<const double> grad, std::span<const double> before,
                      std::span<const double> after);
void rwalk_consolidate(RwalkState& s, std::span<const double> theta_now);
/// lambda sum_a sum_i importance_i (theta_i - theta*_i)^2.
double rwalk_penalty(std::span<const double> theta, const RwalkState& s, std::span<double> grad);

class Rwalk : public Strategy {
 public:
  Rwalk(double lambda, double alpha, double xi);
  std::string name() const override { return "rwalk"; }
  nlohmann::json params() const override {
    return {{"lambda", state_.lambda}, {"alpha", state_.alpha}, {"xi", state_.xi}};
  }
  void before_experience(const model::ModelState& model, std::size_t index) override;
  bool has_penalty() const override { return state_.lambda != 0.0 && !state_.anchors.empty(); }
  double penalty(std::span<const double> theta, std::span<double> grad) const override;
  void after_step(std::span<const double> task_grad, std::span<const double> before,
                  std::span<const double> after) override;
  void after_experience(const ExperienceContext& ctx) override;
  const RwalkState& state() const { return state_; }

 private:
  RwalkState state_;
};

/// Strategy from {"name": ..., "params": {...}}; unknown names or params are
/// rejected with UsageError. `seed` feeds strategies that sample.
std::unique_ptr<Strategy> make_strategy(const nlohmann::json& block, std::uint64_t seed);
/// Names accepted by make_strategy.
const std::vector<std::string>& strategy_names();

}  // namespace clforge::strategies
