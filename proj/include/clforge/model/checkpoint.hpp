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
#include <filesystem>
#include <string>

#include "clforge/model/transformer.hpp"
#include "clforge/model/vocab.hpp"

namespace clforge::model {

struct Checkpoint {
  ModelState state;
  Vocab vocab;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
};

/// "CLF1", a little-endian u32 metadata length, UTF-8 JSON metadata, then the
/// parameter buffers as little-endian float64 in manifest (name) order.
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace clforge::model
