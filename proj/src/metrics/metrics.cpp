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

#include "clforge/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "clforge/corpus/lexer.hpp"
#include "clforge/error.hpp"

namespace clforge::metrics {

namespace {

void require_pairs(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw UsageError(std::string(what) + ": " + std::to_string(a) + " predictions for " + std::to_string(b) + " references");
  if (a == 0) throw UsageError(std::string(what) + ": empty input");
}

using NgramCounts = std::map<std::vector<Token>, std::size_t>;

NgramCounts ngrams(const TokenSeq& s, std::size_t n) {
  NgramCounts out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++out[std::vector<Token>(s.begin() + i, s.begin() + i + n)];
  return out;
}

double brevity_penalty(double c, double r) {
  if (c == 0.0) return 0.0;
  return c > r ? 1.0 : std::exp(1.0 - r / c);
}

template <typename T>
std::size_t multiset_overlap(const std::vector<T>& pred, const std::vector<T>& truth,
                                                     std::size_t& pred_total, std::size_t& truth_total) {
  std::map<T, std::size_t> count;
  for (const auto& t : truth) ++count[t];
  std::size_t match = 0;
  for (const auto& p : pred) {
    auto it = count.find(p);
    if (it != count.end() && it->second > 0) {
      --it->second;
      ++match;
    }
  }
  pred_total += pred.size();
  truth_total += truth.size();
  return match;
}

double f1_percent(std::size_t match, std::size_t pred_total, std::size_t truth_total) {
  if (pred_total == 0 && truth_total == 0) return 100.0;
  if (match == 0) return 0.0;
  const double p = static_cast<double>(match) / static_cast<double>(pred_total);
  const double r = static_cast<double>(match) / static_cast<double>(truth_total);
  return 100.0 * 2.0 * p * r / (p + r);
}

bool is_open(const Token& t) { return t == "(" || t == "[" || t == "{"; }
bool is_close(const Token& t) { return t == ")" || t == "]" || t == "}"; }

bool matches(const Token& open, const Token& close) {
  return (open == "(" && close == ")") || (open == "[" && close == "]") || (open == "{" && close == "}");
}

bool is_assignment(const Token& t) {
  return t == "=" || t == "+=" || t == "-=" || t == "*=" || t == "/=" || t == "%=" || t == "&=" || t == "|=" ||
         t == "^=" || t == "<<=" || t == ">>=" || t == ">>>=";
}

}  // namespace

double em_at_k(const std::vector<std::vector<Token>>& candidates, const std::vector<Token>& truths, std::size_t k) {
  require_pairs(candidates.size(), truths.size(), "em_at_k");
  if (k == 0) throw UsageError("em_at_k: k must be positive");
  std::size_t hits = 0;
  for (std::size_t n = 0; n < truths.size(); ++n) {
    if (candidates[n].size() < k) throw UsageError("em_at_k: fewer than k candidates");
    hits += std::find(candidates[n].begin(), candidates[n].begin() + static_cast<std::ptrdiff_t>(k), truths[n]) !=
            candidates[n].begin() + static_cast<std::ptrdiff_t>(k);
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(truths.size());
}

double exact_match(const std::vector<TokenSeq>& preds, const std::vector<TokenSeq>& truths) {
  require_pairs(preds.size(), truths.size(), "exact_match");
  std::size_t same = 0;
  for (std::size_t n = 0; n < preds.size(); ++n) same += preds[n] == truths[n];
  return 100.0 * static_cast<double>(same) / static_cast<double>(preds.size());
}

double bleu(const std::vector<TokenSeq>& preds, const std::vector<TokenSeq>& truths) {
  require_pairs(preds.size(), truths.size(), "bleu");
  std::array<double, 4> match{}, total{};
  double c = 0.0, r = 0.0;
  for (std::size_t s = 0; s < preds.size(); ++s) {
    c += static_cast<double>(preds[s].size());
    r += static_cast<double>(truths[s].size());
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto p = ngrams(preds[s], n);
      const auto t = ngrams(truths[s], n);
      for (const auto& [g, cnt] : p) {
        total[n - 1] += static_cast<double>(cnt);
        const auto it = t.find(g);
        if (it != t.end()) match[n - 1] += static_cast<double>(std::min(cnt, it->second));
      }
    }
  }
  if (match[0] == 0.0) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 0; n < 4; ++n) {
    const double p = (n > 0 && match[n] == 0.0) ? 1.0 / (total[n] + 1.0) : match[n] / total[n];
    log_sum += std::log(p);
  }
  return 100.0 * brevity_penalty(c, r) * std::exp(log_sum / 4.0);
}

std::vector<std::string> bracket_subtrees(const TokenSeq& tokens) {
  std::vector<std::string> out;
  std::vector<std::pair<std::size_t, Token>> stack;  // (index, opener)
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (is_open(tokens[i])) {
      stack.emplace_back(i, tokens[i]);
    } else if (is_close(tokens[i])) {
      if (stack.empty() || !matches(stack.back().second, tokens[i])) continue;
      const auto start = stack.back().first;
      stack.pop_back();
      std::string rendered;
      for (std::size_t j = start; j <= i; ++j) {
        if (!rendered.empty()) rendered.push_back(' ');
        rendered += corpus::is_identifier(tokens[j]) ? "ID" : tokens[j];
      }
      out.push_back(std::move(rendered));
    }
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> def_use_pairs(const TokenSeq& tokens) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!corpus::is_identifier(tokens[i])) continue;
    if (i + 1 < tokens.size() && tokens[i + 1] == "(") continue;  // calls are not data
    const bool next_assign = i + 1 < tokens.size() && (is_assignment(tokens[i + 1]) || tokens[i + 1] == "++" ||
                                                        tokens[i + 1] == "--");
    const bool prev_incr = i > 0 && (tokens[i - 1] == "++" || tokens[i - 1] == "--");
    out.emplace_back(tokens[i], next_assign || prev_incr ? "def" : "use");
  }
  return out;
}

CodeBleuComponents codebleu_components(const std::vector<TokenSeq>& preds, const std::vector<TokenSeq>& truths) {
  require_pairs(preds.size(), truths.size(), "codebleu_lite");
  CodeBleuComponents c;
  c.bleu = bleu(preds, truths);

  // Keyword-weighted unigram precision with brevity penalty.
  double wmatch = 0.0, wtotal = 0.0, len_c = 0.0, len_r = 0.0;
  auto weight = [](const Token& t) { return corpus::is_java_keyword(t) ? 5.0 : 1.0; };
  for (std::size_t s = 0; s < preds.size(); ++s) {
    len_c += static_cast<double>(preds[s].size());
    len_r += static_cast<double>(truths[s].size());
    std::map<Token, std::size_t> ref;
    for (const auto& t : truths[s]) ++ref[t];
    for (const auto& t : preds[s]) {
      wtotal += weight(t);
      auto it = ref.find(t);
      if (it != ref.end() && it->second > 0) {
        --it->second;
        wmatch += weight(t);
      }
    }
  }
  c.weighted_bleu = wtotal == 0.0 ? 0.0 : 100.0 * brevity_penalty(len_c, len_r) * (wmatch / wtotal);

  std::size_t sm = 0, sp = 0, st = 0, dm = 0, dp = 0, dt = 0;
  for (std::size_t s = 0; s < preds.size(); ++s) {
    std::size_t ptot = 0, ttot = 0;
    sm += multiset_overlap(bracket_subtrees(preds[s]), bracket_subtrees(truths[s]), ptot, ttot);
    sp += ptot;
    st += ttot;
    ptot = ttot = 0;
    dm += multiset_overlap(def_use_pairs(preds[s]), def_use_pairs(truths[s]), ptot, ttot);
    dp += ptot;
    dt += ttot;
  }
  c.syntax = f1_percent(sm, sp, st);
  c.dataflow = f1_percent(dm, dp, dt);
  return c;
}

double codebleu_lite(const std::vector<TokenSeq>& preds, const std::vector<TokenSeq>& truths,
                     const std::array<double, 4>& w) {
  double sum = 0.0;
  for (double x : w) {
    if (x < 0.0) throw UsageError("codebleu_lite weights must be non-negative");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw UsageError("codebleu_lite weights must sum to 1");
  const auto c = codebleu_components(preds, truths);
  const double v = w[0] * c.bleu + w[1] * c.weighted_bleu + w[2] * c.syntax + w[3] * c.dataflow;
  return std::clamp(v, 0.0, 100.0);
}

EvalMatrix::EvalMatrix(std::string metric, std::size_t steps)
    : metric_(std::move(metric)), values_(steps, std::vector<std::optional<double>>(steps)) {}

void EvalMatrix::set(std::size_t step, std::size_t domain, double value) {
  if (step >= steps() || domain > step) {
    throw UsageError("evaluation matrix entry (" + std::to_string(step) + ", " + std::to_string(domain) +
                     ") is outside the lower triangle");
  }
  values_[step][domain] = value;
}

bool EvalMatrix::has(std::size_t step, std::size_t domain) const {
  return step < steps() && domain <= step && values_[step][domain].has_value();
}

double EvalMatrix::at(std::size_t step, std::size_t domain) const {
  if (!has(step, domain)) {
    throw DataError("evaluation matrix entry (" + std::to_string(step) + ", " + std::to_string(domain) + ") is missing");
  }
  return *values_[step][domain];
}

std::size_t EvalMatrix::defined_count() const {
  std::size_t n = 0;
  for (const auto& row : values_) {
    for (const auto& v : row) n += v.has_value();
  }
  return n;
}

nlohmann::json EvalMatrix::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : values_) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& v : row) r.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
    rows.push_back(std::move(r));
  }
  return rows;
}

EvalMatrix EvalMatrix::from_json(const std::string& metric, const nlohmann::json& rows) {
  EvalMatrix m(metric, rows.size());
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (rows[j].size() != rows.size()) throw DataError("evaluation matrix must be square");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[j][i].is_null()) continue;
      if (i > j) throw DataError("evaluation matrix has a value above the diagonal");
      m.set(j, i, rows[j][i].get<double>());
    }
  }
  return m;
}

std::string to_string(DivisorMode mode) { return mode == DivisorMode::kObserved ? "observed" : "T"; }

DivisorMode divisor_mode_from_string(const std::string& s) {
  if (s == "observed") return DivisorMode::kObserved;
  if (s == "T") return DivisorMode::kT;
  throw UsageError("divisor mode must be 'observed' or 'T', got '" + s + "'");
}

double average_metric(const EvalMatrix& m, std::size_t domain, DivisorMode mode) {
  const std::size_t T = m.steps();
  if (domain >= T) throw UsageError("domain index out of range");
  double sum = 0.0;
  for (std::size_t j = domain; j < T; ++j) sum += m.at(j, domain);
  const double divisor = mode == DivisorMode::kObserved ? static_cast<double>(T - domain) : static_cast<double>(T);
  return sum / divisor;
}

double forgetting(const EvalMatrix& m, std::size_t domain, std::size_t step) {
  if (domain >= step) throw UsageError("forgetting needs domain < step");
  return forgetting(m.at(domain, domain), m.at(step, domain));
}

double forgetting(double first, double later) { return first - later; }

}  // namespace clforge::metrics
