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

#include "clforge/corpus/extract.hpp"

#include <unordered_map>

#include "clforge/corpus/lexer.hpp"
#include "clforge/corpus/pipeline.hpp"

namespace clforge::corpus {

namespace {

constexpr std::size_t kNpos = static_cast<std::size_t>(-1);

std::size_t find_close(std::span<const Token> t, std::size_t open, std::string_view lp, std::string_view rp) {
  int depth = 0;
  for (std::size_t i = open; i < t.size(); ++i) {
    if (t[i] == lp) {
      ++depth;
    } else if (t[i] == rp) {
      if (--depth == 0) return i;
    }
  }
  return kNpos;
}

// Index just past a generic argument list starting at `i` (which holds "<"),
// or kNpos if the tokens do not look like one.
std::size_t skip_generic_args(std::span<const Token> t, std::size_t i) {
  int depth = 0;
  for (std::size_t j = i; j < t.size() && j < i + 64; ++j) {
    const auto& tok = t[j];
    if (tok == "<") depth += 1;
    else if (tok == ">") depth -= 1;
    else if (tok == ">>") depth -= 2;
    else if (tok == ">>>") depth -= 3;
    else if (!(is_identifier(tok) || tok == "." || tok == "," || tok == "?" || tok == "[" || tok == "]" ||
               tok == "extends" || tok == "super" || tok == "&")) {
      return kNpos;
    }
    if (depth <= 0) return depth == 0 ? j + 1 : kNpos;
  }
  return kNpos;
}

std::unordered_map<std::string, std::string> local_declarations(std::span<const Token> t) {
  std::unordered_map<std::string, std::string> locals;
  for (std::size_t i = 0; i + 2 < t.size(); ++i) {
    if (!is_identifier(t[i])) continue;
    std::size_t j = i + 1;
    if (t[j] == "<") {
      j = skip_generic_args(t, j);
      if (j == kNpos) continue;
    }
    while (j + 1 < t.size() && t[j] == "[" && t[j + 1] == "]") j += 2;
    if (j + 1 >= t.size() || !is_identifier(t[j])) continue;
    const auto& next = t[j + 1];
    if (next == "=" || next == ";" || next == "," || next == ")" || next == ":") locals[t[j]] = t[i];
  }
  return locals;
}

bool resolve_type(const std::string& type, const ImportTable& imports, const std::vector<DomainSpec>& specs,
                  std::string& package) {
  if (auto it = imports.explicit_imports.find(type); it != imports.explicit_imports.end()) {
    const auto dot = it->second.rfind('.');
    package = dot == std::string::npos ? std::string() : it->second.substr(0, dot);
    return true;
  }
  for (const auto& pkg : imports.wildcard_packages) {
    for (const auto& spec : specs) {
      if (spec.contains(pkg, type)) {
        package = pkg;
        return true;
      }
    }
  }
  return false;
}

}  // namespace

void ImportTable::add(const std::string& qualified_name) {
  const auto dot = qualified_name.rfind('.');
  if (dot == std::string::npos) return;
  const auto simple = qualified_name.substr(dot + 1);
  if (simple == "*") {
    wildcard_packages.push_back(qualified_name.substr(0, dot));
  } else {
    explicit_imports[simple] = qualified_name;
  }
}

ImportTable parse_imports(std::span<const Token> tokens) {
  ImportTable table;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] != "import" || (i > 0 && tokens[i - 1] == ".")) continue;
    std::size_t j = i + 1;
    if (j < tokens.size() && tokens[j] == "static") continue;  // member imports carry no type
    std::string name;
    while (j < tokens.size() && tokens[j] != ";") {
      if (!(is_identifier(tokens[j]) || tokens[j] == "." || tokens[j] == "*")) {
        name.clear();
        break;
      }
      name += tokens[j];
      ++j;
    }
    if (!name.empty()) table.add(name);
    i = j;
  }
  return table;
}

std::vector<MethodRange> find_methods(std::span<const Token> t) {
  enum class Frame { kClass, kBlock };
  std::vector<Frame> stack{Frame::kClass};
  std::vector<MethodRange> out;
  std::size_t member_start = 0;
  bool pending_class = false;

  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& tok = t[i];
    const bool at_class_level = stack.back() == Frame::kClass;
    if ((tok == "class" || tok == "interface" || tok == "enum") && (i == 0 || t[i - 1] != ".")) {
      pending_class = true;
    } else if (tok == "{") {
      stack.push_back(pending_class && at_class_level ? Frame::kClass : Frame::kBlock);
      if (pending_class && at_class_level) member_start = i + 1;
      pending_class = false;
    } else if (tok == "}") {
      if (stack.size() > 1) stack.pop_back();
      if (stack.back() == Frame::kClass) member_start = i + 1;
    } else if (tok == ";") {
      if (at_class_level) member_start = i + 1;
      pending_class = false;
    } else if (at_class_level && !pending_class && is_identifier(tok) && i + 1 < t.size() && t[i + 1] == "(" &&
               (i == 0 || (t[i - 1] != "new" && t[i - 1] != "." && t[i - 1] != "@"))) {
      const auto close = find_close(t, i + 1, "(", ")");
      if (close == kNpos) break;
      std::size_t k = close + 1;
      if (k < t.size() && t[k] == "throws") {
        ++k;
        while (k < t.size() && (is_identifier(t[k]) || t[k] == "." || t[k] == ",")) ++k;
      }
      if (k < t.size() && t[k] == "{") {
        const auto body_end = find_close(t, k, "{", "}");
        if (body_end == kNpos) break;
        out.push_back({member_start, body_end + 1});
        i = body_end;
        member_start = body_end + 1;
      } else {
        i = close;
      }
    }
  }
  return out;
}

MethodSample extract_api_usages(TokenSeq tokens, const ImportTable& imports, const std::vector<DomainSpec>& specs) {
  MethodSample sample;
  const std::span<const Token> t(tokens);
  const auto locals = local_declarations(t);

  std::size_t accepted_end = 0;
  for (std::size_t i = 0; i + 3 < t.size(); ++i) {
    if (i < accepted_end) continue;
    if (!is_identifier(t[i]) || t[i + 1] != "." || !is_identifier(t[i + 2]) || t[i + 3] != "(") continue;
    if (i > 0 && (t[i - 1] == "." || t[i - 1] == "new")) continue;

    const auto local = locals.find(t[i]);
    std::string type = local != locals.end() ? local->second : t[i];
    std::string package;
    if (!resolve_type(type, imports, specs, package)) {
      // `T v = recv . m (` with an undeclared receiver: take the declared T.
      if (local != locals.end() || i < 3 || t[i - 1] != "=") continue;
      const auto target = locals.find(t[i - 2]);
      if (target == locals.end() || t[i - 3] != target->second) continue;
      type = target->second;
      if (!resolve_type(type, imports, specs, package)) continue;
    }

    const auto close = find_close(t, i + 3, "(", ")");
    if (close == kNpos) continue;
    sample.sites.push_back(ApiSite{i, i + 2, close + 1, package, type, t[i + 2]});
    accepted_end = close + 1;
  }
  sample.content_hash = content_hash(t);
  sample.tokens = std::move(tokens);
  return sample;
}

std::vector<MethodSample> extract_source(std::string_view source, const std::vector<DomainSpec>& specs) {
  const auto tokens = lex_java(source);
  const auto imports = parse_imports(tokens);
  std::vector<MethodSample> out;
  for (const auto& range : find_methods(tokens)) {
    out.push_back(extract_api_usages(TokenSeq(tokens.begin() + static_cast<std::ptrdiff_t>(range.begin),
                                              tokens.begin() + static_cast<std::ptrdiff_t>(range.end)),
                                     imports, specs));
  }
  return out;
}

}  // namespace clforge::corpus
