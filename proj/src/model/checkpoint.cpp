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

#include "clforge/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "clforge/corpus/io.hpp"
#include "clforge/error.hpp"

namespace clforge::model {

namespace {

constexpr char kMagic[4] = {'C', 'L', 'F', '1'};

void put_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  const auto& params = ckpt.state.params;
  const auto shapes = parameter_shapes(ckpt.state.config);
  nlohmann::json manifest = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& [name, t] : params) {
    const auto it = shapes.find(name);
    if (it == shapes.end() || it->second != t.shape()) throw UsageError("parameter '" + name + "' does not match the config");
    manifest.push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}});
    offset += t.size();
  }
  if (params.size() != shapes.size()) throw UsageError("model is missing parameters");
  const nlohmann::json meta = {{"config", config_to_json(ckpt.state.config)},
                               {"params", std::move(manifest)},
                               {"seed", ckpt.seed},
                               {"step", ckpt.step},
                               {"vocab", ckpt.vocab.regular_tokens()}};
  const std::string text = meta.dump();

  std::string out(kMagic, 4);
  const auto len = static_cast<std::uint32_t>(text.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((len >> (8 * i)) & 0xff));
  out += text;
  out.reserve(out.size() + 8 * offset);
  for (const auto& [name, t] : params) {
    for (double v : t.data()) put_u64_le(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw DataError("not a CLF1 checkpoint");
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t len = raw[4] | (raw[5] << 8) | (raw[6] << 16) | (static_cast<std::uint32_t>(raw[7]) << 24);
  if (bytes.size() < 8 + static_cast<std::size_t>(len)) throw DataError("truncated checkpoint metadata");
  try {
    const auto meta = nlohmann::json::parse(bytes.substr(8, len));
    Checkpoint ckpt;
    ckpt.state.config = config_from_json(meta.at("config"));
    ckpt.vocab = Vocab(meta.at("vocab").get<std::vector<std::string>>());
    ckpt.seed = meta.at("seed").get<std::uint64_t>();
    ckpt.step = meta.at("step").get<std::uint64_t>();
    if (ckpt.vocab.size() != ckpt.state.config.vocab_size) throw DataError("checkpoint vocabulary size mismatch");
    const auto shapes = parameter_shapes(ckpt.state.config);
    const std::size_t data_start = 8 + len;
    std::size_t total = 0;
    for (const auto& entry : meta.at("params")) {
      const auto name = entry.at("name").get<std::string>();
      const auto shape = entry.at("shape").get<num::Shape>();
      const auto offset = entry.at("offset").get<std::size_t>();
      const auto it = shapes.find(name);
      if (it == shapes.end() || it->second != shape) throw DataError("checkpoint parameter '" + name + "' does not match its config");
      const auto n = num::shape_size(shape);
      if (data_start + 8 * (offset + n) > bytes.size()) throw DataError("truncated checkpoint data");
      std::vector<double> values(n);
      for (std::size_t i = 0; i < n; ++i) {
        values[i] = std::bit_cast<double>(get_u64_le(raw + data_start + 8 * (offset + i)));
      }
      ckpt.state.params.emplace(name, num::Tensor(shape, std::move(values)));
      total += n;
    }
    if (ckpt.state.params.size() != shapes.size()) throw DataError("checkpoint is missing parameters");
    if (data_start + 8 * total != bytes.size()) throw DataError("checkpoint has trailing bytes");
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint metadata: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(std::string("invalid checkpoint config: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  corpus::write_text_file(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return deserialize_checkpoint(buf.str());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace clforge::model
