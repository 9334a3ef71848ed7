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

#include "clforge/corpus/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

#include "clforge/error.hpp"

namespace clforge::corpus {

namespace {

const std::unordered_set<std::string_view>& keywords() {
  static const std::unordered_set<std::string_view> kw = {
      "abstract", "assert",    "boolean",  "break",      "byte",      "case",       "catch",   "char",
      "class",    "const",     "continue", "default",    "do",        "double",     "else",    "enum",
      "extends",  "final",     "finally",  "float",      "for",       "goto",       "if",      "implements",
      "import",   "instanceof", "int",     "interface",  "long",      "native",     "new",     "package",
      "private",  "protected", "public",   "return",     "short",     "static",     "strictfp", "super",
      "switch",   "synchronized", "this",  "throw",      "throws",    "transient",  "try",     "void",
      "volatile", "while",     "true",     "false",      "null"};
  return kw;
}

// Longest operators first.
constexpr std::array<std::string_view, 25> kOperators = {
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "&&", "||", "==", "!=",
    "<=",   ">=",  "+=",  "-=",  "*=",  "/=", "&=", "|=", "^=", "%=", "<<", ">>"};

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c == '$' || c >= 0x80; }
bool ident_part(unsigned char c) { return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80; }

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  TokenSeq run() {
    TokenSeq out;
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '\n') {
        ++line_;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (starts_with("//")) {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (starts_with("/*")) {
        block_comment();
      } else if (starts_with("\"\"\"")) {
        text_block();
        out.emplace_back(kStringLiteral);
      } else if (c == '"') {
        quoted('"', "string");
        out.emplace_back(kStringLiteral);
      } else if (c == '\'') {
        quoted('\'', "character");
        out.emplace_back(kCharLiteral);
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '.' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        number();
        out.emplace_back(kNumberLiteral);
      } else if (ident_start(static_cast<unsigned char>(c))) {
        const auto start = pos_;
        while (pos_ < src_.size() && ident_part(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        out.emplace_back(src_.substr(start, pos_ - start));
      } else {
        out.push_back(op());
      }
    }
    return out;
  }

 private:
  bool starts_with(std::string_view s) const { return src_.substr(pos_, s.size()) == s; }

  [[noreturn]] void fail(const std::string& what, std::size_t line) const {
    throw DataError("lex error: unterminated " + what + " starting at line " + std::to_string(line));
  }

  void block_comment() {
    const auto start_line = line_;
    pos_ += 2;
    while (pos_ < src_.size() && !starts_with("*/")) {
      if (src_[pos_] == '\n') ++line_;
      ++pos_;
    }
    if (pos_ >= src_.size()) fail("comment", start_line);
    pos_ += 2;
  }

  void text_block() {
    const auto start_line = line_;
    pos_ += 3;
    while (pos_ < src_.size() && !starts_with("\"\"\"")) {
      if (src_[pos_] == '\\') ++pos_;
      else if (src_[pos_] == '\n') ++line_;
      ++pos_;
    }
    if (pos_ >= src_.size()) fail("text block", start_line);
    pos_ += 3;
  }

  void quoted(char delim, const char* what) {
    const auto start_line = line_;
    ++pos_;
    while (pos_ < src_.size() && src_[pos_] != delim) {
      if (src_[pos_] == '\n') fail(std::string(what) + " literal", start_line);
      if (src_[pos_] == '\\') ++pos_;
      ++pos_;
    }
    if (pos_ >= src_.size()) fail(std::string(what) + " literal", start_line);
    ++pos_;
  }

  void number() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.') {
        const bool exponent = (c == 'e' || c == 'E' || c == 'p' || c == 'P');
        ++pos_;
        if (exponent && pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      } else {
        break;
      }
    }
  }

  Token op() {
    for (auto o : kOperators) {
      if (starts_with(o)) {
        pos_ += o.size();
        return Token(o);
      }
    }
    return Token(1, src_[pos_++]);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

}  // namespace

TokenSeq lex_java(std::string_view source) { return Lexer(source).run(); }

bool is_java_keyword(std::string_view token) { return keywords().count(token) > 0; }

bool is_identifier(std::string_view token) {
  if (token.empty() || !ident_start(static_cast<unsigned char>(token[0]))) return false;
  if (token == kStringLiteral || token == kNumberLiteral || token == kCharLiteral) return false;
  return !is_java_keyword(token);
}

}  // namespace clforge::corpus
