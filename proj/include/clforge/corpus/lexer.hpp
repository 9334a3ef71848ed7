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

#include <string_view>

#include "clforge/corpus/sample.hpp"

namespace clforge::corpus {

/// Placeholder tokens that replace literal values.
inline constexpr std::string_view kStringLiteral = "STR";
inline constexpr std::string_view kNumberLiteral = "NUM";
inline constexpr std::string_view kCharLiteral = "CHAR";

/// Tokenizes Java-like source. Comments and whitespace are dropped; string,
/// text-block, char and numeric literals collapse to STR, CHAR and NUM.
/// Unterminated comments and literals raise DataError with the line number.
TokenSeq lex_java(std::string_view source);

bool is_java_keyword(std::string_view token);
/// True for identifier tokens; keywords and literal placeholders excluded.
bool is_identifier(std::string_view token);

}  // namespace clforge::corpus
