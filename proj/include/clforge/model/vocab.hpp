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

#include <cstddef>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "clforge/corpus/sample.hpp"

namespace clforge::model {

inline constexpr int kPad = 0;
inline constexpr int kUnk = 1;
inline constexpr int kBos = 2;
inline constexpr int kEos = 3;
inline constexpr int kMask = 4;
inline constexpr int kNumSpecials = 5;

class Vocab {
 public:
  /// Specials only.
  Vocab();
  /// `tokens` lists the non-special tokens in id order starting at 5.
  explicit Vocab(const std::vector<std::string>& tokens);

  std::size_t size() const { return id_to_token_.size(); }
  int id(const std::string& token) const;  // kUnk when absent
  bool contains(const std::string& token) const { return token_to_id_.count(token) > 0; }
  const std::string& token(int id) const;
  /// Non-special tokens in id order.
  std::vector<std::string> regular_tokens() const;

  std::vector<int> encode(const corpus::TokenSeq& tokens) const;
  corpus::TokenSeq decode(const std::vector<int>& ids) const;

  bool operator==(const Vocab& other) const { return id_to_token_ == other.id_to_token_; }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

/// Tokens with frequency >= min_freq, most frequent first, ties broken
/// lexicographically, keeping at most max_size entries including specials.
Vocab build_vocab(const std::vector<corpus::TokenSeq>& corpus, std::size_t min_freq = 2,
                  std::size_t max_size = std::numeric_limits<std::size_t>::max());
Vocab build_vocab(const std::vector<corpus::MethodSample>& samples, std::size_t min_freq = 2,
                  std::size_t max_size = std::numeric_limits<std::size_t>::max());

}  // namespace clforge::model
