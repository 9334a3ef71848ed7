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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "clforge/error.hpp"
#include "clforge/numcore/gradcheck.hpp"
#include "clforge/strategies/strategy.hpp"

using namespace clforge;
using namespace clforge::strategies;

namespace {

Vec random_vec(num::Rng& rng, std::size_t n, double scale = 1.0) {
  Vec v(n);
  for (auto& x : v) x = rng.normal(0.0, scale);
  return v;
}

Vec random_nonneg(num::Rng& rng, std::size_t n) {
  Vec v(n);
  for (auto& x : v) x = std::abs(rng.normal(0.0, 1.0));
  return v;
}

using PenaltyFn = std::function<double(std::span<const double>, std::span<double>)>;

double penalty_fd_error(const PenaltyFn& fn, const Vec& theta) {
  Vec grad(theta.size(), 0.0);
  fn(theta, grad);
  Vec scratch(theta.size());
  const auto numeric = num::finite_difference(
      [&](std::span<const double> th) {
        std::fill(scratch.begin(), scratch.end(), 0.0);
        return fn(th, scratch);
      },
      theta, 1e-5);
  return num::max_relative_error(grad, numeric);
}

corpus::MethodSample sample_named(const std::string& tag) {
  corpus::MethodSample s;
  s.tokens = {tag};
  s.content_hash = tag;
  return s;
}

std::vector<corpus::MethodSample> experience(const std::string& prefix, std::size_t n) {
  std::vector<corpus::MethodSample> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample_named(prefix + std::to_string(i)));
  return out;
}

model::ModelConfig fisher_config() {
  model::ModelConfig c;
  c.layers = 1;
  c.heads = 1;
  c.embed_dim = 2;
  c.ff_dim = 4;
  c.max_seq_len = 4;
  c.vocab_size = 6;
  c.dropout = 0.0;
  return c;
}

}  // namespace

TEST(Naive, HooksAreInert) {
  Naive n;
  EXPECT_EQ(n.name(), "naive");
  EXPECT_FALSE(n.has_penalty());
  const auto cur = experience("a", 3);
  EXPECT_EQ(n.training_view(cur), cur);
  Vec grad{1.0, 2.0};
  EXPECT_EQ(n.penalty(Vec{3.0, 4.0}, grad), 0.0);
  EXPECT_EQ(grad, (Vec{1.0, 2.0}));
}

TEST(ReplayQuotas, ShortfallIsReallocated) {
  EXPECT_EQ(replay_quotas(10, {3, 100}), (std::vector<std::size_t>{3, 7}));
  EXPECT_EQ(replay_quotas(200, {300}), std::vector<std::size_t>{200});
  EXPECT_EQ(replay_quotas(200, {60, 60, 60, 60}), (std::vector<std::size_t>{50, 50, 50, 50}));
  EXPECT_EQ(replay_quotas(10, {5, 5, 5}), (std::vector<std::size_t>{4, 3, 3}));
  EXPECT_EQ(replay_quotas(10, {2, 3}), (std::vector<std::size_t>{2, 3}));
}

TEST(ReplayQuotas, MatchesBruteForceRule) {
  num::Rng rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t cap = 1 + rng.uniform_index(40);
    std::vector<std::size_t> avail(1 + rng.uniform_index(6));
    for (auto& a : avail) a = rng.uniform_index(25);
    const auto q = replay_quotas(cap, avail);
    // Brute force: hand out one slot at a time to the lowest index among the
    // experiences that still have items and hold the fewest slots.
    std::vector<std::size_t> want(avail.size(), 0);
    for (std::size_t slot = 0; slot < cap; ++slot) {
      std::size_t best = avail.size();
      for (std::size_t j = 0; j < avail.size(); ++j) {
        if (want[j] < avail[j] && (best == avail.size() || want[j] < want[best])) best = j;
      }
      if (best == avail.size()) break;
      ++want[best];
    }
    EXPECT_EQ(q, want) << "capacity " << cap;
  }
}

TEST(ReplayBuffer, NeverExceedsCapacityAndBalances) {
  ReplayBuffer buf(200);
  num::Rng rng(3);
  for (std::size_t e = 0; e < 4; ++e) {
    buf.update(experience("e" + std::to_string(e) + "_", 120), e, rng);
    EXPECT_LE(buf.items().size(), 200u);
  }
  EXPECT_EQ(buf.counts_per_experience(), (std::vector<std::size_t>{50, 50, 50, 50}));
  for (const auto& it : buf.items()) {
    EXPECT_EQ(it.sample.tokens[0].substr(0, 2), "e" + std::to_string(it.experience));
  }
}

TEST(ReplayBuffer, FirstExperienceFillsBuffer) {
  ReplayBuffer buf(200);
  num::Rng rng(1);
  buf.update(experience("a", 1000), 0, rng);
  EXPECT_EQ(buf.items().size(), 200u);
}

TEST(ReplayView, ConcatenatesCurrentAndBuffer) {
  const auto cur = experience("c", 1000);
  EXPECT_EQ(replay_view({}, cur), cur);
  ReplayBuffer buf(200);
  num::Rng rng(1);
  buf.update(experience("a", 300), 0, rng);
  const auto view = replay_view(buf.items(), cur);
  ASSERT_EQ(view.size(), 1200u);
  EXPECT_EQ(view.front(), cur.front());
}

TEST(Cumulative, ViewGrowsWithEveryExperience) {
  Cumulative c;
  model::ModelState dummy;
  std::size_t expected = 0;
  for (std::size_t e = 0; e < 3; ++e) {
    const auto cur = experience("x" + std::to_string(e) + "_", 10 + e);
    expected += cur.size();
    EXPECT_EQ(c.training_view(cur).size(), expected);
    std::vector<model::EncodedSample> enc;
    c.after_experience({dummy, cur, enc, e, 1});
  }
}

TEST(Ewc, HandExample) {
  std::vector<Anchor> anchors{{{0.0, 0.0}, {1.0, 2.0}}};
  Vec grad(2, 0.0);
  EXPECT_DOUBLE_EQ(ewc_penalty(Vec{1.0, 1.0}, anchors, 2.0, grad), 3.0);
  EXPECT_EQ(grad, (Vec{2.0, 4.0}));
  Vec g0(2, 0.0);
  EXPECT_EQ(ewc_penalty(Vec{0.0, 0.0}, anchors, 2.0, g0), 0.0);
  EXPECT_EQ(ewc_penalty(Vec{1.0, 1.0}, {}, 2.0, g0), 0.0);
}

TEST(Si, HandExamples) {
  SiState s;
  s.omega = {0.0};
  s.importance = {0.0};
  s.anchor = {0.0};
  si_after_step(s, Vec{0.5}, Vec{1.0}, Vec{0.9});
  EXPECT_NEAR(s.omega[0], 0.05, 1e-15);
  si_after_step(s, Vec{0.5}, Vec{1.0}, Vec{1.0});
  EXPECT_NEAR(s.omega[0], 0.05, 1e-15);

  s.anchor = {0.0};
  si_consolidate(s, Vec{0.2});
  EXPECT_NEAR(s.importance[0], 0.05 / 0.14, 1e-12);
  EXPECT_NEAR(s.importance[0], 0.3571, 1e-4);
  EXPECT_EQ(s.omega[0], 0.0);
  EXPECT_EQ(s.anchor[0], 0.2);

  const double before = s.importance[0];
  s.omega = {-1.0};
  si_consolidate(s, Vec{0.5});
  EXPECT_EQ(s.importance[0], before);
}

TEST(Si, PathIntegralOfGradientDescent) {
  SiState s;
  s.omega = {0.0};
  double theta = 1.0;
  for (int i = 0; i < 3; ++i) {
    const double g = theta;
    const double next = theta - 0.1 * g;
    si_after_step(s, Vec{g}, Vec{theta}, Vec{next});
    theta = next;
  }
  EXPECT_NEAR(s.omega[0], 0.1 * (1.0 + 0.81 + 0.6561), 1e-12);
}

TEST(Si, PenaltyHandExample) {
  SiState s;
  s.c = 0.1;
  s.importance = {2.0};
  s.anchor = {0.0};
  Vec grad{0.0};
  EXPECT_NEAR(si_penalty(Vec{0.5}, s, grad), 0.05, 1e-15);
  EXPECT_NEAR(grad[0], 0.2, 1e-15);
  Vec g0{0.0};
  EXPECT_EQ(si_penalty(Vec{0.0}, s, g0), 0.0);
}

TEST(Rwalk, FisherEmaAndScoreTrace) {
  RwalkState s;
  s.alpha = 0.9;
  s.xi = 0.1;
  s.fisher_ema = {0.0};
  s.score = {0.0};
  s.score_prev = {0.0};
  rwalk_after_step(s, Vec{1.0}, Vec{0.0}, Vec{0.0});
  EXPECT_NEAR(s.fisher_ema[0], 0.1, 1e-15);
  EXPECT_EQ(s.score[0], 0.0);

  // Step 1: g=2, delta=-0.5. F = 0.09 + 0.4 = 0.49; s += 1 / (0.5*0.49*0.25 + 0.1).
  rwalk_after_step(s, Vec{2.0}, Vec{1.0}, Vec{0.5});
  const double f1 = 0.9 * 0.1 + 0.1 * 4.0;
  const double s1 = 1.0 / (0.5 * f1 * 0.25 + 0.1);
  EXPECT_NEAR(s.fisher_ema[0], f1, 1e-15);
  EXPECT_NEAR(s.score[0], s1, 1e-12);
  // Step 2: g=-1, delta=+0.2 (loss decreases). g*delta < 0 so it counts.
  rwalk_after_step(s, Vec{-1.0}, Vec{0.5}, Vec{0.7});
  const double f2 = 0.9 * f1 + 0.1;
  const double s2 = s1 + 0.2 / (0.5 * f2 * 0.04 + 0.1);
  EXPECT_NEAR(s.score[0], s2, 1e-12);
  // Step 3: loss increases, score unchanged.
  rwalk_after_step(s, Vec{1.0}, Vec{0.7}, Vec{0.8});
  EXPECT_NEAR(s.score[0], s2, 1e-12);

  const double f3 = s.fisher_ema[0];
  rwalk_consolidate(s, Vec{0.8});
  ASSERT_EQ(s.anchors.size(), 1u);
  EXPECT_NEAR(s.anchors[0].importance[0], f3 + s2 / 2.0, 1e-12);
  EXPECT_EQ(s.score[0], 0.0);
  EXPECT_NEAR(s.score_prev[0], s2 / 2.0, 1e-12);

  rwalk_consolidate(s, Vec{0.9});
  EXPECT_NEAR(s.anchors[1].importance[0], f3 + s2 / 4.0, 1e-12);
}

TEST(Penalties, GradientsMatchFiniteDifferences) {
  num::Rng rng(2024);
  double worst_ewc = 0.0, worst_si = 0.0, worst_rw = 0.0;
  for (int trial = 0; trial < 120; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(12);
    const Vec theta = random_vec(rng, n);

    std::vector<Anchor> anchors(1 + rng.uniform_index(3));
    for (auto& a : anchors) a = {random_vec(rng, n), random_nonneg(rng, n)};
    const double lambda = std::abs(rng.normal(0.0, 3.0));
    worst_ewc = std::max(worst_ewc, penalty_fd_error([&](auto th, auto g) { return ewc_penalty(th, anchors, lambda, g); }, theta));

    SiState si;
    si.c = std::abs(rng.normal(0.0, 1.0));
    si.importance = random_nonneg(rng, n);
    si.anchor = random_vec(rng, n);
    worst_si = std::max(worst_si, penalty_fd_error([&](auto th, auto g) { return si_penalty(th, si, g); }, theta));

    RwalkState rw;
    rw.lambda = std::abs(rng.normal(0.0, 2.0));
    rw.anchors = anchors;
    worst_rw = std::max(worst_rw, penalty_fd_error([&](auto th, auto g) { return rwalk_penalty(th, rw, g); }, theta));
  }
  EXPECT_LT(worst_ewc, 1e-5);
  EXPECT_LT(worst_si, 1e-5);
  EXPECT_LT(worst_rw, 1e-5);
}

TEST(Penalties, NonNegativeAndZeroAtAnchor) {
  num::Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(8);
    std::vector<Anchor> anchors{{random_vec(rng, n), random_nonneg(rng, n)}};
    Vec g(n, 0.0);
    EXPECT_GE(ewc_penalty(random_vec(rng, n), anchors, 1.5, g), 0.0);
    EXPECT_EQ(ewc_penalty(anchors[0].theta, anchors, 1.5, g), 0.0);
  }
}

TEST(Fisher, ZeroGradientGivesZero) {
  auto c = fisher_config();
  num::Rng rng(1);
  auto s = model::init_model(c, rng);
  for (auto& [_, t] : s.params) {
    for (auto& v : t.mutable_data()) v = 0.0;
  }
  // All-zero weights: only the head bias sees a gradient.
  std::vector<model::EncodedSample> samples{{{5, 5}, {}}};
  num::Rng frng(2);
  const auto f = empirical_fisher(s, samples, 8, frng);
  const auto flat_names = [&] {
    std::vector<std::pair<std::string, std::size_t>> out;
    for (const auto& [name, t] : s.params) out.push_back({name, t.size()});
    return out;
  }();
  std::size_t off = 0;
  for (const auto& [name, size] : flat_names) {
    for (std::size_t i = 0; i < size; ++i) {
      if (name != "lm_head.bias") EXPECT_EQ(f[off + i], 0.0) << name;
      EXPECT_GE(f[off + i], 0.0);
    }
    off += size;
  }
}

TEST(Fisher, MatchesBruteForcePerSampleAverage) {
  auto c = fisher_config();
  num::Rng rng(8);
  auto s = model::init_model(c, rng);
  for (auto& [_, t] : s.params) {
    for (auto& v : t.mutable_data()) v = rng.normal(0.0, 0.7);
  }
  ASSERT_LE(num::param_count(s.params), 100u);
  std::vector<model::EncodedSample> samples;
  for (int i = 0; i < 8; ++i) {
    model::EncodedSample e;
    const std::size_t len = 1 + rng.uniform_index(3);
    for (std::size_t t = 0; t < len; ++t) e.ids.push_back(static_cast<int>(rng.uniform_index(6)));
    samples.push_back(e);
  }
  num::Rng frng(4);
  const auto fisher = empirical_fisher(s, samples, 256, frng, 3);

  Vec brute(num::param_count(s.params), 0.0);
  for (const auto& sample : samples) {
    num::Tape tape;
    auto vars = model::bind_parameters(tape, s.params);
    num::Rng unused(0);
    auto term = model::sample_loss(vars, c, sample, model::Objective::kCausalLm, unused);
    auto grads = num::backward(num::scale(term.nll_sum, 1.0 / static_cast<double>(term.targets)));
    const auto flat = num::flatten_like(grads, s.params);
    for (std::size_t i = 0; i < flat.size(); ++i) brute[i] += flat[i] * flat[i];
  }
  for (auto& b : brute) b /= static_cast<double>(samples.size());
  ASSERT_EQ(fisher.size(), brute.size());
  for (std::size_t i = 0; i < brute.size(); ++i) EXPECT_NEAR(fisher[i], brute[i], 1e-10) << i;
}

TEST(Fisher, SingleParameterIsSquaredGradient) {
  // A one-coordinate check through the anchored form: F = g^2 gives
  // penalty (lambda/2) g^2 d^2.
  std::vector<Anchor> anchors{{{0.0}, {0.3 * 0.3}}};
  Vec g{0.0};
  EXPECT_NEAR(ewc_penalty(Vec{2.0}, anchors, 1.0, g), 0.5 * 0.09 * 4.0, 1e-15);
}

TEST(MakeStrategy, DefaultsAndValidation) {
  EXPECT_EQ(make_strategy({{"name", "ewc"}}, 1)->params()["lambda"], 100.0);
  EXPECT_EQ(make_strategy({{"name", "replay"}}, 1)->params()["capacity"], 200);
  EXPECT_EQ(make_strategy({{"name", "si"}}, 1)->params()["c"], 0.1);
  EXPECT_EQ(make_strategy({{"name", "rwalk"}}, 1)->params()["alpha"], 0.9);
  EXPECT_THROW(make_strategy({{"name", "lwf"}}, 1), UsageError);
  EXPECT_THROW(make_strategy({{"name", "ewc"}, {"params", {{"lamda", 1}}}}, 1), UsageError);
  EXPECT_THROW(make_strategy({{"name", "si"}, {"params", {{"c", -1}}}}, 1), UsageError);
  EXPECT_THROW(make_strategy({{"name", "rwalk"}, {"params", {{"alpha", 1.0}}}}, 1), UsageError);
  for (const auto& n : strategy_names()) EXPECT_EQ(make_strategy({{"name", n}}, 1)->name(), n);
}

TEST(MakeStrategy, ZeroStrengthHasNoPenalty) {
  auto ewc = make_strategy({{"name", "ewc"}, {"params", {{"lambda", 0.0}}}}, 1);
  auto si = make_strategy({{"name", "si"}, {"params", {{"c", 0.0}}}}, 1);
  auto rw = make_strategy({{"name", "rwalk"}, {"params", {{"lambda", 0.0}}}}, 1);
  EXPECT_FALSE(ewc->has_penalty());
  EXPECT_FALSE(si->has_penalty());
  EXPECT_FALSE(rw->has_penalty());
  const auto cur = experience("q", 4);
  EXPECT_EQ(ewc->training_view(cur), cur);
  EXPECT_EQ(si->training_view(cur), cur);
  EXPECT_EQ(rw->training_view(cur), cur);
}
