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

#include "clforge/model/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "clforge/error.hpp"
#include "clforge/model/vocab.hpp"

namespace clforge::model {

using num::Shape;
using num::Tensor;
using num::Var;

namespace {

std::string layer_prefix(std::size_t l) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "layer%02zu.", l);
  return buf;
}

bool is_bias_like(const std::string& name) {
  const auto dot = name.rfind('.');
  const auto leaf = dot == std::string::npos ? name : name.substr(dot + 1);
  return leaf.front() == 'b' || leaf == "bias";
}

bool is_gain(const std::string& name) { return name.size() >= 2 && name.substr(name.size() - 2) == ".g"; }

double init_value(const std::string& name, num::Rng& rng) {
  if (is_gain(name)) return 1.0;
  if (is_bias_like(name)) return 0.0;
  return rng.normal(0.0, 0.02);
}

const Var& param(const ParamVars& p, const std::string& name) {
  const auto it = p.find(name);
  if (it == p.end()) throw UsageError("model parameter '" + name + "' missing");
  return it->second;
}

}  // namespace

std::string to_string(ModelKind kind) { return kind == ModelKind::kDecoder ? "decoder" : "encoder"; }

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "decoder") return ModelKind::kDecoder;
  if (s == "encoder") return ModelKind::kEncoder;
  throw UsageError("model kind must be 'decoder' or 'encoder', got '" + s + "'");
}

void ModelConfig::validate() const {
  if (layers == 0 || heads == 0 || embed_dim == 0 || ff_dim == 0 || max_seq_len < 2) {
    throw UsageError("model dimensions must be positive (max_seq_len >= 2)");
  }
  if (embed_dim % heads != 0) throw UsageError("embed_dim must be divisible by heads");
  if (vocab_size <= static_cast<std::size_t>(kNumSpecials)) throw UsageError("vocab_size must exceed the special tokens");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw UsageError("dropout must lie in [0, 1)");
}

nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"kind", to_string(c.kind)}, {"layers", c.layers},       {"heads", c.heads},
          {"embed_dim", c.embed_dim},  {"ff_dim", c.ff_dim},       {"max_seq_len", c.max_seq_len},
          {"vocab_size", c.vocab_size}, {"dropout", c.dropout}};
}

ModelConfig config_from_json(const nlohmann::json& j, ModelConfig c) {
  static const std::set<std::string> known = {"kind",        "layers",     "heads",  "embed_dim",
                                              "ff_dim",      "max_seq_len", "vocab_size", "dropout"};
  if (!j.is_object()) throw UsageError("model config must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw UsageError("unknown model config key '" + key + "'");
  }
  try {
    if (j.contains("kind")) c.kind = model_kind_from_string(j.at("kind").get<std::string>());
    c.layers = j.value("layers", c.layers);
    c.heads = j.value("heads", c.heads);
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.ff_dim = j.value("ff_dim", c.ff_dim);
    c.max_seq_len = j.value("max_seq_len", c.max_seq_len);
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.dropout = j.value("dropout", c.dropout);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("invalid model config: ") + e.what());
  }
  return c;
}

std::map<std::string, Shape> parameter_shapes(const ModelConfig& c) {
  c.validate();
  const auto d = c.embed_dim, f = c.ff_dim, v = c.vocab_size;
  std::map<std::string, Shape> s;
  s["tok_emb"] = {v, d};
  s["pos_emb"] = {c.max_seq_len, d};
  for (std::size_t l = 0; l < c.layers; ++l) {
    const auto p = layer_prefix(l);
    s[p + "ln1.g"] = {d};
    s[p + "ln1.b"] = {d};
    for (const char* w : {"wq", "wk", "wv", "wo"}) s[p + "attn." + w] = {d, d};
    for (const char* b : {"bq", "bk", "bv", "bo"}) s[p + "attn." + b] = {d};
    s[p + "ln2.g"] = {d};
    s[p + "ln2.b"] = {d};
    s[p + "mlp.w1"] = {d, f};
    s[p + "mlp.b1"] = {f};
    s[p + "mlp.w2"] = {f, d};
    s[p + "mlp.b2"] = {d};
  }
  s["ln_f.g"] = {d};
  s["ln_f.b"] = {d};
  if (c.kind == ModelKind::kDecoder) {
    s["lm_head.bias"] = {v};  // weights tied to tok_emb
  } else {
    s["mlm_head.bias"] = {v};  // weights tied to tok_emb
    s["lm_head.w"] = {d, v};
    s["lm_head.bias"] = {v};
  }
  return s;
}

bool added_at_finetuning(const ModelConfig& config, const std::string& name) {
  return config.kind == ModelKind::kEncoder && name.rfind("lm_head.", 0) == 0;
}

ModelState init_model(const ModelConfig& config, num::Rng& rng) {
  ModelState state{config, {}};
  for (const auto& [name, shape] : parameter_shapes(config)) {
    std::vector<double> v(num::shape_size(shape));
    for (auto& x : v) x = init_value(name, rng);
    state.params.emplace(name, Tensor(shape, std::move(v)));
  }
  return state;
}

void reinit_added_heads(ModelState& state, num::Rng& rng) {
  for (auto& [name, t] : state.params) {
    if (!added_at_finetuning(state.config, name)) continue;
    for (auto& x : t.mutable_data()) x = init_value(name, rng);
  }
}

std::vector<std::vector<int>> attention_mask(ModelKind kind, std::size_t n) {
  std::vector<std::vector<int>> m(n, std::vector<int>(n, 1));
  if (kind == ModelKind::kDecoder) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) m[i][j] = 0;
    }
  }
  return m;
}

ParamVars bind_parameters(num::Tape& tape, const num::ParamMap& params) {
  ParamVars vars;
  for (const auto& [name, t] : params) vars.emplace(name, tape.parameter(name, t));
  return vars;
}

Var forward(const ParamVars& p, const ModelConfig& c, const std::vector<int>& ids, Head head, const ForwardOptions& o) {
  const std::size_t n = ids.size();
  if (n == 0 || n > c.max_seq_len) {
    throw UsageError("input length " + std::to_string(n) + " outside [1, " + std::to_string(c.max_seq_len) + "]");
  }
  if (head == Head::kMasked && c.kind != ModelKind::kEncoder) throw UsageError("masked head requires an encoder");
  if (o.dropout > 0.0 && o.rng == nullptr) throw UsageError("dropout requires an rng");
  auto drop = [&](Var x) { return o.dropout > 0.0 ? num::dropout(x, o.dropout, *o.rng) : x; };

  std::vector<int> positions(n);
  std::iota(positions.begin(), positions.end(), 0);
  Var x = drop(num::add(num::embedding(param(p, "tok_emb"), ids), num::embedding(param(p, "pos_emb"), positions)));

  const bool causal = c.kind == ModelKind::kDecoder;
  const std::size_t dh = c.embed_dim / c.heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  for (std::size_t l = 0; l < c.layers; ++l) {
    const auto pre = layer_prefix(l);
    auto w = [&](const std::string& name) -> const Var& { return param(p, pre + name); };

    Var h = num::layer_norm(x, w("ln1.g"), w("ln1.b"));
    Var q = num::add_row(num::matmul(h, w("attn.wq")), w("attn.bq"));
    Var k = num::add_row(num::matmul(h, w("attn.wk")), w("attn.bk"));
    Var v = num::add_row(num::matmul(h, w("attn.wv")), w("attn.bv"));
    std::vector<Var> heads;
    heads.reserve(c.heads);
    for (std::size_t hd = 0; hd < c.heads; ++hd) {
      Var qh = num::slice_cols(q, hd * dh, dh);
      Var kh = num::slice_cols(k, hd * dh, dh);
      Var vh = num::slice_cols(v, hd * dh, dh);
      Var att = drop(num::masked_softmax(num::scale(num::matmul_nt(qh, kh), inv_sqrt), causal));
      heads.push_back(num::matmul(att, vh));
    }
    Var attn = c.heads == 1 ? heads[0] : num::concat_cols(heads);
    x = num::add(x, drop(num::add_row(num::matmul(attn, w("attn.wo")), w("attn.bo"))));

    Var h2 = num::layer_norm(x, w("ln2.g"), w("ln2.b"));
    Var ff = num::gelu(num::add_row(num::matmul(h2, w("mlp.w1")), w("mlp.b1")));
    x = num::add(x, drop(num::add_row(num::matmul(ff, w("mlp.w2")), w("mlp.b2"))));
  }
  x = num::layer_norm(x, param(p, "ln_f.g"), param(p, "ln_f.b"));
  if (o.last_only) x = num::select_rows(x, {n - 1});

  if (c.kind == ModelKind::kDecoder) return num::add_row(num::matmul_nt(x, param(p, "tok_emb")), param(p, "lm_head.bias"));
  if (head == Head::kMasked) return num::add_row(num::matmul_nt(x, param(p, "tok_emb")), param(p, "mlm_head.bias"));
  return num::add_row(num::matmul(x, param(p, "lm_head.w")), param(p, "lm_head.bias"));
}

Objective pretrain_objective(ModelKind kind) {
  return kind == ModelKind::kDecoder ? Objective::kCausalLm : Objective::kMaskedLm;
}

Objective finetune_objective(ModelKind kind) {
  return kind == ModelKind::kDecoder ? Objective::kCausalLm : Objective::kPrefixLm;
}

std::vector<int> model_input(const ModelConfig& config, const std::vector<int>& prefix) {
  const std::size_t keep = std::min(prefix.size(), config.max_seq_len - 1);
  std::vector<int> ids;
  ids.reserve(keep + 1);
  ids.push_back(kBos);
  ids.insert(ids.end(), prefix.end() - static_cast<std::ptrdiff_t>(keep), prefix.end());
  return ids;
}

LossTerm sample_loss(const ParamVars& p, const ModelConfig& c, const EncodedSample& s, Objective objective,
                     num::Rng& rng, const ForwardOptions& o) {
  if (s.ids.empty()) throw DataError("cannot train on an empty sample");
  switch (objective) {
    case Objective::kCausalLm: {
      // BOS t1..tn -> t1..tn EOS, truncated to the model window.
      std::vector<int> input{kBos};
      input.insert(input.end(), s.ids.begin(), s.ids.end());
      std::vector<int> targets(s.ids.begin(), s.ids.end());
      targets.push_back(kEos);
      if (input.size() > c.max_seq_len) {
        input.resize(c.max_seq_len);
        targets.resize(c.max_seq_len);
      }
      Var logits = forward(p, c, input, Head::kNextToken, o);
      const auto n = targets.size();
      return {num::scale(num::cross_entropy(logits, std::move(targets)), static_cast<double>(n)), n};
    }
    case Objective::kMaskedLm: {
      std::vector<int> tokens(s.ids.begin(), s.ids.begin() + static_cast<std::ptrdiff_t>(
                                                                 std::min(s.ids.size(), c.max_seq_len - 1)));
      std::vector<int> targets(tokens.size() + 1, -1);
      std::vector<int> input{kBos};
      std::size_t chosen = 0;
      std::vector<bool> pick(tokens.size(), false);
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        pick[i] = rng.uniform() < kMaskProbability;
        chosen += pick[i];
      }
      if (chosen == 0) {
        pick[rng.uniform_index(tokens.size())] = true;
        chosen = 1;
      }
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        int tok = tokens[i];
        if (pick[i]) {
          targets[i + 1] = tok;
          const double r = rng.uniform();
          if (r < 0.8) {
            tok = kMask;
          } else if (r < 0.9) {
            tok = kNumSpecials + static_cast<int>(rng.uniform_index(c.vocab_size - kNumSpecials));
          }
        }
        input.push_back(tok);
      }
      Var logits = forward(p, c, input, Head::kMasked, o);
      return {num::scale(num::cross_entropy(logits, std::move(targets)), static_cast<double>(chosen)), chosen};
    }
    case Objective::kPrefixLm: {
      // Cut points: API call positions first, then other usage-span
      // positions, then any position; each cut predicts ids[cut].
      std::vector<std::size_t> calls, spans;
      for (const auto& site : s.sites) {
        calls.push_back(site.call_index);
        for (auto i = site.usage_start; i < site.usage_end; ++i) {
          if (i != site.call_index) spans.push_back(i);
        }
      }
      std::vector<std::size_t> cuts;
      auto take = [&](std::vector<std::size_t> pool) {
        rng.shuffle(pool);
        for (auto i : pool) {
          if (cuts.size() == kPrefixCutsPerSample) return;
          if (i < s.ids.size() && std::find(cuts.begin(), cuts.end(), i) == cuts.end()) cuts.push_back(i);
        }
      };
      take(calls);
      take(spans);
      if (cuts.empty()) {
        std::vector<std::size_t> all(s.ids.size());
        std::iota(all.begin(), all.end(), 0);
        take(all);
      }
      std::sort(cuts.begin(), cuts.end());
      Var total;
      for (std::size_t k = 0; k < cuts.size(); ++k) {
        const std::vector<int> prefix(s.ids.begin(), s.ids.begin() + static_cast<std::ptrdiff_t>(cuts[k]));
        ForwardOptions last = o;
        last.last_only = true;
        Var logits = forward(p, c, model_input(c, prefix), Head::kNextToken, last);
        Var nll = num::cross_entropy(logits, {s.ids[cuts[k]]});
        total = k == 0 ? nll : num::add(total, nll);
      }
      return {total, cuts.size()};
    }
  }
  throw UsageError("unknown objective");
}

std::vector<double> next_token_logits(const ModelState& state, const std::vector<int>& prefix) {
  num::Tape tape(false);
  const auto vars = bind_parameters(tape, state.params);
  ForwardOptions o;
  o.last_only = true;
  const Var logits = forward(vars, state.config, model_input(state.config, prefix), Head::kNextToken, o);
  return logits.value().vec();
}

std::vector<std::pair<int, double>> topk_from_logits(const std::vector<double>& logits, std::size_t k) {
  if (k == 0 || k > logits.size()) {
    throw UsageError("k must lie in [1, " + std::to_string(logits.size()) + "], got " + std::to_string(k));
  }
  std::vector<int> order(logits.size());
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), [&](int a, int b) {
    if (logits[a] != logits[b]) return logits[a] > logits[b];
    return a < b;
  });
  const double mx = logits[order[0]];
  double z = 0.0;
  for (double v : logits) z += std::exp(v - mx);
  std::vector<std::pair<int, double>> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.emplace_back(order[i], std::exp(logits[order[i]] - mx) / z);
  return out;
}

std::vector<std::pair<int, double>> next_token_topk(const ModelState& state, const std::vector<int>& prefix,
                                                    std::size_t k) {
  return topk_from_logits(next_token_logits(state, prefix), k);
}

std::vector<int> generate_usage(const NextTokenFn& next, const std::vector<int>& prefix, int open_paren,
                                int close_paren, std::size_t max_new) {
  std::vector<int> context = prefix;
  std::vector<int> out;
  int depth = 0;
  bool opened = false;
  while (out.size() < max_new) {
    const int tok = next(context);
    if (tok == kEos) break;
    out.push_back(tok);
    context.push_back(tok);
    if (tok == open_paren) {
      ++depth;
      opened = true;
    } else if (tok == close_paren && depth > 0) {
      if (--depth == 0 && opened) break;
    }
  }
  return out;
}

std::vector<int> generate_usage(const ModelState& state, const std::vector<int>& prefix, int open_paren,
                                int close_paren, std::size_t max_new) {
  return generate_usage([&](const std::vector<int>& ctx) { return next_token_topk(state, ctx, 1).front().first; },
                        prefix, open_paren, close_paren, max_new);
}

}  // namespace clforge::model
