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

#include "ragcg/prompts.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "ragcg/error.hpp"
#include "ragcg/text.hpp"

#ifndef RAGCG_DEFAULT_PROMPT_DIR
#define RAGCG_DEFAULT_PROMPT_DIR "prompts"
#endif

namespace ragcg::prompts {
namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::UnreadableInput, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool is_name_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

void append_literal(std::vector<Token>& tokens, std::string_view lit) {
  if (lit.empty()) return;
  if (!tokens.empty() && tokens.back().kind == Token::Kind::Literal) {
    tokens.back().value.append(lit);
  } else {
    tokens.push_back({Token::Kind::Literal, std::string(lit), false});
  }
}

/// Tokenizes one message body.
std::vector<Token> tokenize(const std::string& id, std::string_view body) {
  std::vector<Token> tokens;
  std::size_t pos = 0;
  while (pos < body.size()) {
    const std::size_t open = body.find("{{", pos);
    if (open == std::string_view::npos) {
      append_literal(tokens, body.substr(pos));
      break;
    }
    const std::size_t close = body.find("}}", open + 2);
    if (close == std::string_view::npos) {
      throw Error(Errc::TemplateSyntax, fmt::format("{}: unterminated '{{{{'", id));
    }
    std::string inner = text::trim(body.substr(open + 2, close - open - 2));
    Token tok;
    if (!inner.empty() && inner.front() == '>') {
      tok.kind = Token::Kind::Fragment;
      inner = text::trim(inner.substr(1));
    } else {
      tok.kind = Token::Kind::Placeholder;
    }
    if (inner.empty() || !std::all_of(inner.begin(), inner.end(), is_name_char)) {
      throw Error(Errc::TemplateSyntax, fmt::format("{}: bad tag '{}'", id,
                                                    body.substr(open, close + 2 - open)));
    }
    tok.value = inner;
    std::size_t next = close + 2;
    if (tok.kind == Token::Kind::Fragment) {
      const bool at_line_start = open == 0 || body[open - 1] == '\n';
      const bool at_line_end = next < body.size() && body[next] == '\n';
      if (at_line_start && at_line_end) {
        tok.owns_line = true;
        ++next;
      }
    }
    append_literal(tokens, body.substr(pos, open - pos));
    tokens.push_back(std::move(tok));
    pos = next;
  }
  return tokens;
}

}  // namespace

PromptTemplate parse_template(std::string template_id, std::string_view source) {
  PromptTemplate t;
  t.template_id = std::move(template_id);

  auto all = text::lines(source);
  std::size_t first = 0;
  while (first < all.size() && text::starts_with(all[first], "#!")) ++first;
  std::vector<std::string> body_lines(all.begin() + static_cast<std::ptrdiff_t>(first), all.end());
  // lines() yields a trailing empty element for a final newline
  if (!body_lines.empty() && body_lines.back().empty()) body_lines.pop_back();
  t.body = text::join(body_lines, "\n");

  std::optional<llm::Role> role;
  std::string current;
  auto flush = [&] {
    if (!role) {
      if (!text::trim(current).empty()) {
        throw Error(Errc::TemplateSyntax,
                    fmt::format("{}: text before the first @@role line", t.template_id));
      }
      return;
    }
    // a section ends with the newline that precedes the next marker
    if (!current.empty() && current.back() == '\n') current.pop_back();
    t.messages.push_back({*role, tokenize(t.template_id, current)});
  };
  for (const auto& line : body_lines) {
    if (text::starts_with(line, "@@")) {
      flush();
      role = llm::parse_role(text::trim(std::string_view(line).substr(2)));
      current.clear();
      continue;
    }
    current += line;
    current += '\n';
  }
  flush();
  if (t.messages.empty()) {
    throw Error(Errc::TemplateSyntax, fmt::format("{}: no @@role sections", t.template_id));
  }
  for (const auto& m : t.messages) {
    for (const auto& tok : m.tokens) {
      if (tok.kind == Token::Kind::Placeholder) t.required_placeholders.insert(tok.value);
      if (tok.kind == Token::Kind::Fragment &&
          std::find(t.fragments.begin(), t.fragments.end(), tok.value) == t.fragments.end()) {
        t.fragments.push_back(tok.value);
      }
    }
  }
  return t;
}

std::filesystem::path PromptLibrary::default_dir() { return RAGCG_DEFAULT_PROMPT_DIR; }

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(Errc::UnreadableInput, "prompt directory not found: " + dir.string());
  }
  PromptLibrary lib;
  std::vector<std::filesystem::path> files;
  const auto frag_dir = dir / "fragments";
  if (std::filesystem::is_directory(frag_dir)) {
    for (const auto& e : std::filesystem::directory_iterator(frag_dir)) {
      if (e.path().extension() == ".txt") files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::string body = read_file(f);
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
    lib.add_fragment({f.stem().string(), std::move(body)});
  }
  files.clear();
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) lib.add_template(parse_template(f.stem().string(), read_file(f)));
  return lib;
}

void PromptLibrary::add_fragment(PromptFragment fragment) {
  auto id = fragment.fragment_id;
  fragments_.insert_or_assign(std::move(id), std::move(fragment));
}

void PromptLibrary::add_template(PromptTemplate tmpl) {
  for (const auto& f : tmpl.fragments) {
    if (!fragments_.contains(f)) {
      throw Error(Errc::TemplateSyntax,
                  fmt::format("{}: unknown fragment '{}'", tmpl.template_id, f));
    }
  }
  auto id = tmpl.template_id;
  templates_.insert_or_assign(std::move(id), std::move(tmpl));
}

const PromptTemplate& PromptLibrary::get(std::string_view template_id) const {
  auto it = templates_.find(template_id);
  if (it == templates_.end()) {
    throw Error(Errc::UnknownTemplate, fmt::format("no template '{}'", template_id));
  }
  return it->second;
}

const PromptFragment& PromptLibrary::fragment(std::string_view fragment_id) const {
  auto it = fragments_.find(fragment_id);
  if (it == fragments_.end()) {
    throw Error(Errc::UnknownTemplate, fmt::format("no fragment '{}'", fragment_id));
  }
  return it->second;
}

bool PromptLibrary::has_template(std::string_view template_id) const {
  return templates_.find(template_id) != templates_.end();
}

std::vector<std::string> PromptLibrary::template_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, _] : templates_) ids.push_back(id);
  return ids;
}

std::string PromptLibrary::ikec_block() const { return fragment(kIkecFragment).text + "\n"; }

std::vector<llm::ChatMessage> PromptLibrary::render(std::string_view template_id,
                                                    const Substitutions& subs,
                                                    bool ikec_enabled) const {
  const PromptTemplate& t = get(template_id);
  for (const auto& name : t.required_placeholders) {
    if (subs.find(name) == subs.end()) {
      throw Error(Errc::MissingPlaceholder,
                  fmt::format("{}: placeholder '{}' not supplied", template_id, name));
    }
  }
  for (const auto& [name, _] : subs) {
    if (!t.required_placeholders.contains(name)) {
      throw Error(Errc::UnexpectedPlaceholder,
                  fmt::format("{}: template has no placeholder '{}'", template_id, name));
    }
  }
  std::vector<llm::ChatMessage> out;
  out.reserve(t.messages.size());
  for (const auto& m : t.messages) {
    std::string content;
    for (const auto& tok : m.tokens) {
      switch (tok.kind) {
        case Token::Kind::Literal:
          content += tok.value;
          break;
        case Token::Kind::Placeholder:
          content += subs.find(tok.value)->second;
          break;
        case Token::Kind::Fragment:
          if (tok.value == kIkecFragment && !ikec_enabled) break;
          content += fragment(tok.value).text;
          if (tok.owns_line) content += '\n';
          break;
      }
    }
    out.push_back({m.role, std::move(content)});
  }
  return out;
}

}  // namespace ragcg::prompts
