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

#include "clforge/model/train.hpp"

#include <cmath>
#include <numeric>

#include "clforge/error.hpp"
#include "clforge/numcore/optim.hpp"
#include "clforge/parallel.hpp"

namespace clforge::model {

std::vector<EncodedSample> encode_samples(const Vocab& vocab, const std::vector<corpus::MethodSample>& samples) {
  std::vector<EncodedSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back({vocab.encode(s.tokens), s.sites});
  return out;
}

BatchResult batch_gradients(const ModelState& state, std::span<const EncodedSample* const> batch, Objective objective,
                            num::Rng& rng, double dropout) {
  if (batch.empty()) throw UsageError("empty batch");
  num::Tape tape;
  const auto vars = bind_parameters(tape, state.params);
  ForwardOptions o;
  o.dropout = dropout;
  o.rng = &rng;
  num::Var total;
  std::size_t targets = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto term = sample_loss(vars, state.config, *batch[i], objective, rng, o);
    total = i == 0 ? term.nll_sum : num::add(total, term.nll_sum);
    targets += term.targets;
  }
  num::Var loss = num::scale(total, 1.0 / static_cast<double>(targets));
  BatchResult out;
  out.loss = loss.value().item();
  out.targets = targets;
  out.grads = num::backward(loss);
  return out;
}

double dataset_loss(const ModelState& state, const std::vector<EncodedSample>& samples, Objective objective,
                    std::uint64_t seed, std::size_t threads) {
  if (samples.empty()) throw DataError("cannot compute a loss over an empty set");
  std::vector<double> nll(samples.size());
  std::vector<std::size_t> counts(samples.size());
  const num::Rng root(seed);
  parallel_for(samples.size(), threads, [&](std::size_t i) {
    num::Tape tape(false);
    const auto vars = bind_parameters(tape, state.params);
    auto rng = root.split(i);
    auto term = sample_loss(vars, state.config, samples[i], objective, rng);
    nll[i] = term.nll_sum.value().item();
    counts[i] = term.targets;
  });
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    total += nll[i];
    n += counts[i];
  }
  return total / static_cast<double>(n);
}

PretrainResult pretrain(ModelConfig config, const corpus::SplitSet& data, const Vocab& vocab,
                        const PretrainSchedule& schedule, std::uint64_t seed, std::size_t threads) {
  if (config.vocab_size == 0) config.vocab_size = vocab.size();
  if (config.vocab_size != vocab.size()) throw UsageError("config vocab_size differs from the vocabulary size");
  config.validate();
  if (schedule.max_steps == 0 || schedule.batch == 0 || schedule.eval_every == 0) {
    throw UsageError("max_steps, batch and eval_every must be positive");
  }
  if (data.train.empty()) throw DataError("pre-training needs a non-empty train split");
  if (data.valid.empty()) throw DataError("pre-training needs a non-empty validation split");

  const num::Rng root(seed);
  auto init_rng = root.split(1);
  auto order_rng = root.split(2);
  auto step_rng = root.split(3);
  const std::uint64_t valid_seed = root.split(4).next_u64();

  const auto train = encode_samples(vocab, data.train);
  const auto valid = encode_samples(vocab, data.valid);
  const auto objective = pretrain_objective(config.kind);

  PretrainResult result;
  ModelState state = init_model(config, init_rng);
  num::AdamState adam(num::AdamConfig{schedule.lr});
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  double window_loss = 0.0;
  std::size_t window_steps = 0;
  bool have_best = false;

  for (std::size_t step = 1; step <= schedule.max_steps; ++step) {
    std::vector<const EncodedSample*> batch;
    while (batch.size() < std::min(schedule.batch, train.size())) {
      if (cursor == order.size()) {
        order_rng.shuffle(order);
        cursor = 0;
      }
      batch.push_back(&train[order[cursor++]]);
    }
    try {
      auto br = batch_gradients(state, batch, objective, step_rng, config.dropout);
      if (!std::isfinite(br.loss)) throw NumericError("loss is not finite");
      num::clip_global_norm(br.grads, schedule.clip_norm);
      num::adam_step(state.params, br.grads, adam);
      window_loss += br.loss;
      ++window_steps;
    } catch (const NumericError& e) {
      throw TrainingError("training diverged at step " + std::to_string(step) + ": " + e.what());
    }

    if (step % schedule.eval_every == 0 || step == schedule.max_steps) {
      const double vl = dataset_loss(state, valid, objective, valid_seed, threads);
      result.log.push_back({step, window_loss / static_cast<double>(window_steps), vl});
      window_loss = 0.0;
      window_steps = 0;
      if (!have_best || vl < result.best_valid_loss) {
        have_best = true;
        result.best_valid_loss = vl;
        result.best_step = step;
        result.state = state;
      }
    }
  }
  return result;
}

}  // namespace clforge::model
