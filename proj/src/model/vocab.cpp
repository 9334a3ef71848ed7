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

#include "clforge/model/vocab.hpp"

#include <algorithm>
#include <map>

#include "clforge/error.hpp"

namespace clforge::model {

namespace {
const std::vector<std::string> kSpecialNames = {"<pad>", "<unk>", "<bos>", "<eos>", "<mask>"};
}

Vocab::Vocab() : Vocab(std::vector<std::string>{}) {}

Vocab::Vocab(const std::vector<std::string>& tokens) : id_to_token_(kSpecialNames) {
  id_to_token_.insert(id_to_token_.end(), tokens.begin(), tokens.end());
  for (std::size_t i = 0; i < id_to_token_.size(); ++i) {
    if (!token_to_id_.emplace(id_to_token_[i], static_cast<int>(i)).second) {
      throw DataError("duplicate vocabulary token '" + id_to_token_[i] + "'");
    }
  }
}

int Vocab::id(const std::string& token) const {
  const auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    throw UsageError("token id " + std::to_string(id) + " out of range");
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

std::vector<std::string> Vocab::regular_tokens() const {
  return {id_to_token_.begin() + kNumSpecials, id_to_token_.end()};
}

std::vector<int> Vocab::encode(const corpus::TokenSeq& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

corpus::TokenSeq Vocab::decode(const std::vector<int>& ids) const {
  corpus::TokenSeq out;
  out.reserve(ids.size());
  for (auto i : ids) out.push_back(token(i));
  return out;
}

Vocab build_vocab(const std::vector<corpus::TokenSeq>& corpus, std::size_t min_freq, std::size_t max_size) {
  if (corpus.empty()) throw DataError("cannot build a vocabulary from an empty corpus");
  if (min_freq == 0) throw UsageError("min_freq must be positive");
  if (max_size < static_cast<std::size_t>(kNumSpecials)) throw UsageError("max_size must cover the special tokens");
  std::map<std::string, std::size_t> freq;
  for (const auto& seq : corpus) {
    for (const auto& t : seq) ++freq[t];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [tok, n] : freq) {
    if (n >= min_freq && std::find(kSpecialNames.begin(), kSpecialNames.end(), tok) == kSpecialNames.end()) {
      kept.emplace_back(tok, n);
    }
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  const std::size_t room = max_size - kNumSpecials;
  if (kept.size() > room) kept.resize(room);
  std::vector<std::string> tokens;
  for (auto& [tok, _] : kept) tokens.push_back(std::move(tok));
  return Vocab(tokens);
}

Vocab build_vocab(const std::vector<corpus::MethodSample>& samples, std::size_t min_freq, std::size_t max_size) {
  std::vector<corpus::TokenSeq> corpus;
  corpus.reserve(samples.size());
  for (const auto& s : samples) corpus.push_back(s.tokens);
  return build_vocab(corpus, min_freq, max_size);
}

}  // namespace clforge::model
