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

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clforge/corpus/sample.hpp"

namespace clforge::corpus {

/// Resolved `import` declarations of a compilation unit.
struct ImportTable {
  std::map<std::string, std::string> explicit_imports;  // simple name -> qualified name
  std::vector<std::string> wildcard_packages;           // from `import p.*;`

  void add(const std::string& qualified_name);
};

ImportTable parse_imports(std::span<const Token> tokens);

/// Half-open token range of one method declaration (signature through the
/// closing brace of its body).
struct MethodRange {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Finds method and constructor declarations at class-body level, including
/// those of nested classes. Methods nested in other method bodies (local or
/// anonymous classes) stay part of the enclosing method.
std::vector<MethodRange> find_methods(std::span<const Token> tokens);

/// Syntactic API-usage extraction over one method's tokens.
///
/// A call `recv . name (` whose receiver is not itself qualified is resolved
/// by declared local type (`Type ident`), by treating the receiver as a type
/// (static call), or, for an undeclared receiver initializing a declaration
/// `T v = recv . m (`, as T. The type resolves through explicit
/// imports, or through a wildcard-imported package when that
/// (package, interface) pair appears in one of `specs`. Unresolved receivers
/// and `new T(...)` are skipped. Spans never overlap; a call nested inside an
/// accepted span's arguments is not recorded.
MethodSample extract_api_usages(TokenSeq tokens, const ImportTable& imports, const std::vector<DomainSpec>& specs);

/// Lexes one compilation unit and extracts every method it declares.
std::vector<MethodSample> extract_source(std::string_view source, const std::vector<DomainSpec>& specs);

}  // namespace clforge::corpus
