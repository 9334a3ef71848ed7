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
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "clforge/corpus/sample.hpp"
#include "clforge/numcore/autodiff.hpp"
#include "clforge/numcore/rng.hpp"
#include "clforge/numcore/tensor.hpp"

namespace clforge::model {

enum class ModelKind { kDecoder, kEncoder };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

struct ModelConfig {
  ModelKind kind = ModelKind::kDecoder;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t embed_dim = 128;
  std::size_t ff_dim = 512;
  std::size_t max_seq_len = 256;
  std::size_t vocab_size = 0;
  double dropout = 0.1;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

nlohmann::json config_to_json(const ModelConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
ModelConfig config_from_json(const nlohmann::json& j, ModelConfig base = {});

struct ModelState {
  ModelConfig config;
  num::ParamMap params;
};

/// Parameter names and shapes; a pure function of the config.
std::map<std::string, num::Shape> parameter_shapes(const ModelConfig& config);
/// True for the encoder's next-token head, which is created fresh for fine-tuning.
bool added_at_finetuning(const ModelConfig& config, const std::string& name);

/// Weights ~ N(0, 0.02), biases 0, layer-norm gains 1; drawn in name order.
ModelState init_model(const ModelConfig& config, num::Rng& rng);
/// Re-draws every added-at-fine-tuning parameter.
void reinit_added_heads(ModelState& state, num::Rng& rng);

/// Allowed attention (1) per (query, key) pair for a length-n input.
std::vector<std::vector<int>> attention_mask(ModelKind kind, std::size_t n);

enum class Head { kNextToken, kMasked };

using ParamVars = std::map<std::string, num::Var>;
ParamVars bind_parameters(num::Tape& tape, const num::ParamMap& params);

struct ForwardOptions {
  double dropout = 0.0;
  num::Rng* rng = nullptr;  // required when dropout > 0
  bool last_only = false;
};

/// Logits [n, vocab] (or [1, vocab] with last_only) for input ids whose
/// length must not exceed max_seq_len.
num::Var forward(const ParamVars& params, const ModelConfig& config, const std::vector<int>& ids, Head head,
                 const ForwardOptions& options = {});

enum class Objective { kCausalLm, kMaskedLm, kPrefixLm };

Objective pretrain_objective(ModelKind kind);
Objective finetune_objective(ModelKind kind);

inline constexpr double kMaskProbability = 0.15;
inline constexpr std::size_t kPrefixCutsPerSample = 4;

struct EncodedSample {
  std::vector<int> ids;  // method tokens, no specials
  std::vector<corpus::ApiSite> sites;
};

struct LossTerm {
  num::Var nll_sum;
  std::size_t targets = 0;
};

/// Summed negative log-likelihood of one sample under `objective`. `rng`
/// drives masking and prefix cut selection.
LossTerm sample_loss(const ParamVars& params, const ModelConfig& config, const EncodedSample& sample,
                     Objective objective, num::Rng& rng, const ForwardOptions& options = {});

/// BOS followed by the last max_seq_len - 1 prefix ids.
std::vector<int> model_input(const ModelConfig& config, const std::vector<int>& prefix);

/// Next-token logits after `prefix` (BOS is prepended).
std::vector<double> next_token_logits(const ModelState& state, const std::vector<int>& prefix);

/// Top-k (id, probability) pairs by descending logit, ties by ascending id.
std::vector<std::pair<int, double>> next_token_topk(const ModelState& state, const std::vector<int>& prefix,
                                                    std::size_t k);
std::vector<std::pair<int, double>> topk_from_logits(const std::vector<double>& logits, std::size_t k);

using NextTokenFn = std::function<int(const std::vector<int>& context)>;

/// Greedy decoding from `prefix`; stops after the first generated "(" is
/// balanced, on EOS (not returned), or after max_new tokens.
std::vector<int> generate_usage(const NextTokenFn& next, const std::vector<int>& prefix, int open_paren,
                                int close_paren, std::size_t max_new = 32);
std::vector<int> generate_usage(const ModelState& state, const std::vector<int>& prefix, int open_paren,
                                int close_paren, std::size_t max_new = 32);

}  // namespace clforge::model
