/*
 * Copyright 2026 The ragcodegen Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ragcg/gateway.hpp"

namespace ragcg::prompts {

/// Fragment included only when IKEC prompting is enabled.
inline constexpr std::string_view kIkecFragment = "ikec";
inline constexpr std::string_view kKeySentenceFragment = "key_sentence";

struct PromptFragment {
  std::string fragment_id;
  std::string text;
};

/// One piece of a parsed template message.
struct Token {
  enum class Kind { Literal, Placeholder, Fragment };
  Kind kind = Kind::Literal;
  std::string value;     // literal text, placeholder name or fragment id
  bool owns_line = false;  // fragment token stood alone on its line (newline belongs to it)
};

struct TemplateMessage {
  llm::Role role = llm::Role::User;
  std::vector<Token> tokens;
};

struct PromptTemplate {
  std::string template_id;
  std::string body;  // file contents after the header comment
  std::vector<TemplateMessage> messages;
  std::set<std::string> required_placeholders;
  std::vector<std::string> fragments;  // in order of first use
};

using Substitutions = std::map<std::string, std::string, std::less<>>;

/// Parses a template body. Sections begin with "@@system", "@@user" or
/// "@@assistant" lines; "{{name}}" is a placeholder and "{{> id}}" includes a
/// fragment. Leading lines starting with "#!" are a header and are dropped.
PromptTemplate parse_template(std::string template_id, std::string_view source);

class PromptLibrary {
 public:
  PromptLibrary() = default;

  /// Loads <dir>/<id>.txt templates and <dir>/fragments/<id>.txt fragments.
  static PromptLibrary load(const std::filesystem::path& dir);
  /// Directory shipped with the project.
  static std::filesystem::path default_dir();

  void add_fragment(PromptFragment fragment);
  void add_template(PromptTemplate tmpl);

  const PromptTemplate& get(std::string_view template_id) const;
  const PromptFragment& fragment(std::string_view fragment_id) const;
  bool has_template(std::string_view template_id) const;
  std::vector<std::string> template_ids() const;

  /// Substitutions must cover required_placeholders exactly. Substituted
  /// text is inserted verbatim and never rescanned.
  std::vector<llm::ChatMessage> render(std::string_view template_id, const Substitutions& subs,
                                       bool ikec_enabled) const;

  /// The exact bytes the IKEC flag adds to a rendered message.
  std::string ikec_block() const;

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
  std::map<std::string, PromptFragment, std::less<>> fragments_;
};

}  // namespace ragcg::prompts
