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
#include <span>
#include <vector>

#include "clforge/corpus/sample.hpp"
#include "clforge/model/transformer.hpp"
#include "clforge/model/vocab.hpp"
#include "clforge/numcore/rng.hpp"

namespace clforge::model {

std::vector<EncodedSample> encode_samples(const Vocab& vocab, const std::vector<corpus::MethodSample>& samples);

struct BatchResult {
  num::GradMap grads;
  double loss = 0.0;  // mean NLL per target
  std::size_t targets = 0;
};

/// Gradients of the mean per-target task loss over `batch`.
BatchResult batch_gradients(const ModelState& state, std::span<const EncodedSample* const> batch, Objective objective,
                            num::Rng& rng, double dropout);

/// Mean per-target loss over `samples` without dropout. Masking and cut
/// choices are derived from `seed` and the sample index, so repeated calls
/// agree exactly. Work is spread over `threads` workers.
double dataset_loss(const ModelState& state, const std::vector<EncodedSample>& samples, Objective objective,
                    std::uint64_t seed, std::size_t threads = 1);

struct PretrainSchedule {
  std::size_t max_steps = 1000;
  std::size_t batch = 16;
  std::size_t eval_every = 100;
  double lr = 3e-4;
  double clip_norm = 1.0;
};

struct PretrainLogEntry {
  std::size_t step = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
};

struct PretrainResult {
  ModelState state;
  std::size_t best_step = 0;
  double best_valid_loss = 0.0;
  std::vector<PretrainLogEntry> log;
};

/// Trains from random initialization with the kind's pre-training objective
/// and returns the parameters with the lowest validation loss seen at the
/// evaluation points (every eval_every steps and at the last step).
PretrainResult pretrain(ModelConfig config, const corpus::SplitSet& data, const Vocab& vocab,
                        const PretrainSchedule& schedule, std::uint64_t seed, std::size_t threads = 1);

}  // namespace clforge::model
