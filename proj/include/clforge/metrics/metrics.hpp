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

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "clforge/corpus/sample.hpp"

namespace clforge::metrics {

using corpus::Token;
using corpus::TokenSeq;

/// Percentage of cases whose truth is among the first k candidates.
double em_at_k(const std::vector<std::vector<Token>>& candidates, const std::vector<Token>& truths, std::size_t k);
/// Percentage of identical (pred, truth) sequences.
double exact_match(const std::vector<TokenSeq>& preds, const std::vector<TokenSeq>& truths);

/// Corpus BLEU with n-grams up to 4 and a brevity penalty. A zero match count
/// for n >= 2 is smoothed to 1 / (candidates + 1).
double bleu(const std::vector<TokenSeq>& preds, const std::vector<TokenSeq>& truths);

struct CodeBleuComponents {
  double bleu = 0.0;
  double weighted_bleu = 0.0;
  double syntax = 0.0;
  double dataflow = 0.0;
};

/// The four components, each in [0, 100].
CodeBleuComponents codebleu_components(const std::vector<TokenSeq>& preds, const std::vector<TokenSeq>& truths);
/// Weighted sum of codebleu_components; weights must be non-negative and sum to 1.
double codebleu_lite(const std::vector<TokenSeq>& preds, const std::vector<TokenSeq>& truths,
                     const std::array<double, 4>& weights = {0.25, 0.25, 0.25, 0.25});

/// Subtrees of the bracket nesting: one entry per matched (), [] or {} pair,
/// rendered with identifiers abstracted to ID.
std::vector<std::string> bracket_subtrees(const TokenSeq& tokens);
/// (identifier, "def" | "use") pairs in token order.
std::vector<std::pair<std::string, std::string>> def_use_pairs(const TokenSeq& tokens);

/// Lower-triangular step-by-domain matrix; values[j][i] is the metric on
/// domain i after fine-tuning step j (0-based), defined only for j >= i.
class EvalMatrix {
 public:
  EvalMatrix() = default;
  EvalMatrix(std::string metric, std::size_t steps);

  const std::string& metric() const { return metric_; }
  std::size_t steps() const { return values_.size(); }
  void set(std::size_t step, std::size_t domain, double value);
  bool has(std::size_t step, std::size_t domain) const;
  double at(std::size_t step, std::size_t domain) const;
  std::size_t defined_count() const;

  /// T x T rows with null above the diagonal (and where unset).
  nlohmann::json to_json() const;
  static EvalMatrix from_json(const std::string& metric, const nlohmann::json& rows);

 private:
  std::string metric_;
  std::vector<std::vector<std::optional<double>>> values_;
};

enum class DivisorMode { kObserved, kT };

std::string to_string(DivisorMode mode);
DivisorMode divisor_mode_from_string(const std::string& s);

/// Mean of column `domain` over steps domain..T-1 (observed), or the column
/// sum divided by T.
double average_metric(const EvalMatrix& m, std::size_t domain, DivisorMode mode = DivisorMode::kObserved);
/// M_domain(D_domain) - M_step(D_domain); positive means forgetting.
double forgetting(const EvalMatrix& m, std::size_t domain, std::size_t step);
/// first - later.
double forgetting(double first, double later);

}  // namespace clforge::metrics
