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

#include "ragcg/corpus.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>

#include "ragcg/error.hpp"
#include "ragcg/text.hpp"

namespace ragcg::corpus {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kDocumentsFile = "documents/documents.jsonl";
constexpr const char* kChunksFile = "chunks/chunks.jsonl";
constexpr const char* kScriptsFile = "scripts/scripts.jsonl";

std::string_view source_name(ScriptSource s) {
  return s == ScriptSource::Original ? "original" : "augmented";
}

ScriptSource parse_source(std::string_view s) {
  if (s == "original") return ScriptSource::Original;
  if (s == "augmented") return ScriptSource::Augmented;
  throw Error(Errc::CorruptStore, fmt::format("unknown script source '{}'", s));
}

}  // namespace

std::string_view state_name(ChunkState s) noexcept {
  switch (s) {
    case ChunkState::Raw: return "raw";
    case ChunkState::RenovatedPending: return "renovated_pending";
    case ChunkState::Final: return "final";
  }
  return "raw";
}

ChunkState parse_state(std::string_view s) {
  if (s == "raw") return ChunkState::Raw;
  if (s == "renovated_pending") return ChunkState::RenovatedPending;
  if (s == "final") return ChunkState::Final;
  throw Error(Errc::CorruptStore, fmt::format("unknown chunk state '{}'", s));
}

ordered_json to_json(const Document& d) {
  ordered_json j;
  j["doc_id"] = d.doc_id;
  j["title"] = d.title;
  ordered_json pages = ordered_json::array();
  for (const auto& p : d.pages) {
    ordered_json pj;
    pj["page_no"] = p.page_no;
    pj["text"] = p.text;
    pages.push_back(std::move(pj));
  }
  j["pages"] = std::move(pages);
  return j;
}

Document document_from_json(const json& j) {
  Document d;
  d.doc_id = j.at("doc_id").get<std::string>();
  d.title = j.at("title").get<std::string>();
  for (const auto& pj : j.at("pages")) {
    d.pages.push_back({pj.at("page_no").get<int>(), pj.at("text").get<std::string>()});
  }
  return d;
}

ordered_json to_json(const Chunk& c) {
  ordered_json j;
  j["chunk_id"] = c.chunk_id;
  j["doc_id"] = c.doc_id;
  j["collection"] = c.collection;
  j["page_span"] = {c.page_span.first, c.page_span.last};
  j["topic_label"] = c.topic_label;
  j["state"] = state_name(c.state);
  j["parent_id"] = c.parent_id;
  j["flags"] = c.flags;
  j["text"] = c.text;
  if (c.embedding) {
    j["embedding"] = c.embedding->values;
  } else {
    j["embedding"] = nullptr;
  }
  return j;
}

Chunk chunk_from_json(const json& j) {
  Chunk c;
  c.chunk_id = j.at("chunk_id").get<std::string>();
  c.doc_id = j.at("doc_id").get<std::string>();
  c.collection = j.at("collection").get<std::string>();
  c.page_span = {j.at("page_span").at(0).get<int>(), j.at("page_span").at(1).get<int>()};
  c.topic_label = j.at("topic_label").get<std::string>();
  c.state = parse_state(j.at("state").get<std::string>());
  c.parent_id = j.value("parent_id", std::string{});
  c.flags = j.value("flags", std::vector<std::string>{});
  c.text = j.at("text").get<std::string>();
  if (j.contains("embedding") && !j.at("embedding").is_null()) {
    c.embedding = llm::EmbeddingVector{j.at("embedding").get<std::vector<double>>()};
  }
  return c;
}

ordered_json to_json(const Script& s) {
  ordered_json j;
  j["script_id"] = s.script_id;
  j["source"] = source_name(s.source);
  j["parent_ids"] = s.parent_ids;
  j["text"] = s.text;
  return j;
}

Script script_from_json(const json& j) {
  Script s;
  s.script_id = j.at("script_id").get<std::string>();
  s.source = parse_source(j.at("source").get<std::string>());
  s.parent_ids = j.value("parent_ids", std::vector<std::string>{});
  s.text = j.at("text").get<std::string>();
  return s;
}

void validate(const Chunk& c) {
  if (c.chunk_id.empty()) throw Error(Errc::InvalidRequest, "chunk without id");
  if (c.text.empty()) throw Error(Errc::InvalidRequest, fmt::format("chunk {} has empty text", c.chunk_id));
  if (c.page_span.first > c.page_span.last) {
    throw Error(Errc::InvalidRequest, fmt::format("chunk {} has inverted page span", c.chunk_id));
  }
  if (c.state == ChunkState::Final && !c.embedding) {
    throw Error(Errc::InvalidRequest, fmt::format("final chunk {} has no embedding", c.chunk_id));
  }
}

void validate(const Script& s) {
  if (s.script_id.empty()) throw Error(Errc::InvalidRequest, "script without id");
  if ((s.source == ScriptSource::Augmented) == s.parent_ids.empty()) {
    throw Error(Errc::InvalidRequest,
                fmt::format("script {}: parent_ids must be non-empty exactly for augmented scripts",
                            s.script_id));
  }
}

Document parse_document(std::string_view content, std::string doc_id,
                        const std::optional<std::regex>& page_marker) {
  std::vector<std::string> raw_pages;
  if (page_marker) {
    std::string current;
    for (const auto& line : text::lines(content)) {
      if (std::regex_match(line, *page_marker)) {
        raw_pages.push_back(std::move(current));
        current.clear();
        continue;
      }
      current += line;
      current += '\n';
    }
    raw_pages.push_back(std::move(current));
  } else {
    std::size_t start = 0;
    while (true) {
      const std::size_t ff = content.find('\f', start);
      if (ff == std::string_view::npos) {
        raw_pages.emplace_back(content.substr(start));
        break;
      }
      raw_pages.emplace_back(content.substr(start, ff - start));
      start = ff + 1;
    }
  }
  // a delimiter at the very end does not open a new page
  while (!raw_pages.empty() && text::trim(raw_pages.back()).empty()) raw_pages.pop_back();
  if (raw_pages.empty()) throw Error(Errc::EmptyDocument, fmt::format("document {} has no pages", doc_id));

  Document doc;
  doc.doc_id = std::move(doc_id);
  for (std::size_t i = 0; i < raw_pages.size(); ++i) {
    doc.pages.push_back({static_cast<int>(i + 1), text::trim(raw_pages[i])});
  }
  for (const auto& line : text::lines(doc.pages.front().text)) {
    if (!text::trim(line).empty()) {
      doc.title = text::trim(line);
      break;
    }
  }
  return doc;
}

bool ChunkFilter::matches(const Chunk& c) const {
  if (doc_id && c.doc_id != *doc_id) return false;
  if (state && c.state != *state) return false;
  if (collection && c.collection != *collection) return false;
  return true;
}

// ---------------------------------------------------------------------------

WorkspaceLock::WorkspaceLock(const std::filesystem::path& workspace) {
  std::filesystem::create_directories(workspace);
  const auto path = workspace / ".lock";
  fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw Error(Errc::UnreadableInput, "cannot open " + path.string());
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw Error(Errc::WorkspaceLocked,
                fmt::format("workspace {} is in use by another process", workspace.string()));
  }
}

WorkspaceLock::~WorkspaceLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::UnreadableInput, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::UnreadableInput, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(Errc::UnreadableInput, "write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Workspace::Workspace(std::filesystem::path root) : root_(std::move(root)) {
  std::filesystem::create_directories(root_);
  for (const auto& j : read_jsonl(kDocumentsFile)) documents_.push_back(document_from_json(j));
  for (const auto& j : read_jsonl(kChunksFile)) chunks_.push_back(chunk_from_json(j));
  for (const auto& j : read_jsonl(kScriptsFile)) scripts_.push_back(script_from_json(j));
}

Document Workspace::ingest_document(const std::filesystem::path& path, const std::string& doc_id,
                                    const std::optional<std::regex>& page_marker) {
  Document doc = parse_document(read_file(path), doc_id, page_marker);
  put_document(doc);
  return doc;
}

void Workspace::put_document(Document doc) {
  auto it = std::find_if(documents_.begin(), documents_.end(),
                         [&](const Document& d) { return d.doc_id == doc.doc_id; });
  if (it != documents_.end()) {
    *it = std::move(doc);
  } else {
    documents_.push_back(std::move(doc));
  }
}

const Document& Workspace::document(std::string_view doc_id) const {
  for (const auto& d : documents_) {
    if (d.doc_id == doc_id) return d;
  }
  throw Error(Errc::UnknownId, fmt::format("no document '{}'", doc_id));
}

void Workspace::put_chunks(std::vector<Chunk> chunks) {
  std::unordered_set<std::string> ids;
  for (const auto& c : chunks_) ids.insert(c.chunk_id);
  for (const auto& c : chunks) {
    validate(c);
    if (!ids.insert(c.chunk_id).second) {
      throw Error(Errc::DuplicateChunkId, fmt::format("chunk id '{}' already exists", c.chunk_id));
    }
  }
  for (auto& c : chunks) chunks_.push_back(std::move(c));
}

std::vector<Chunk> Workspace::get_chunks(const ChunkFilter& filter) const {
  std::vector<Chunk> out;
  for (const auto& c : chunks_) {
    if (filter.matches(c)) out.push_back(c);
  }
  return out;
}

const Chunk& Workspace::chunk(std::string_view chunk_id) const {
  for (const auto& c : chunks_) {
    if (c.chunk_id == chunk_id) return c;
  }
  throw Error(Errc::UnknownId, fmt::format("no chunk '{}'", chunk_id));
}

void Workspace::update_chunk(std::string_view chunk_id, const std::function<void(Chunk&)>& fn) {
  for (auto& c : chunks_) {
    if (c.chunk_id != chunk_id) continue;
    Chunk copy = c;
    fn(copy);
    if (copy.text != c.text || copy.chunk_id != c.chunk_id) {
      throw Error(Errc::InvalidRequest, fmt::format("chunk {}: text is immutable", chunk_id));
    }
    validate(copy);
    c = std::move(copy);
    return;
  }
  throw Error(Errc::UnknownId, fmt::format("no chunk '{}'", chunk_id));
}

std::size_t Workspace::remove_chunks(const ChunkFilter& filter) {
  const auto before = chunks_.size();
  std::erase_if(chunks_, [&](const Chunk& c) { return filter.matches(c); });
  return before - chunks_.size();
}

void Workspace::put_script(Script s) {
  validate(s);
  auto it = std::find_if(scripts_.begin(), scripts_.end(),
                         [&](const Script& x) { return x.script_id == s.script_id; });
  if (it != scripts_.end()) {
    *it = std::move(s);
  } else {
    scripts_.push_back(std::move(s));
  }
}

std::vector<Script> Workspace::get_scripts(std::optional<ScriptSource> source) const {
  std::vector<Script> out;
  for (const auto& s : scripts_) {
    if (!source || s.source == *source) out.push_back(s);
  }
  return out;
}

const Script& Workspace::script(std::string_view script_id) const {
  for (const auto& s : scripts_) {
    if (s.script_id == script_id) return s;
  }
  throw Error(Errc::UnknownId, fmt::format("no script '{}'", script_id));
}

std::size_t Workspace::remove_scripts(ScriptSource source) {
  const auto before = scripts_.size();
  std::erase_if(scripts_, [&](const Script& s) { return s.source == source; });
  return before - scripts_.size();
}

std::vector<json> Workspace::read_jsonl(const std::filesystem::path& rel) const {
  std::vector<json> rows;
  const auto path = root_ / rel;
  if (!std::filesystem::exists(path)) return rows;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::UnreadableInput, "cannot read " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(Errc::CorruptStore, fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
    }
  }
  return rows;
}

void Workspace::write_jsonl(const std::filesystem::path& rel,
                            const std::vector<ordered_json>& rows) const {
  std::string out;
  for (const auto& r : rows) {
    out += r.dump();
    out += '\n';
  }
  write_file_atomic(root_ / rel, out);
}

void Workspace::write_text(const std::filesystem::path& rel, std::string_view content) const {
  write_file_atomic(root_ / rel, content);
}

void Workspace::save() const {
  std::vector<ordered_json> rows;
  for (const auto& d : documents_) rows.push_back(to_json(d));
  write_jsonl(kDocumentsFile, rows);
  rows.clear();
  for (const auto& c : chunks_) rows.push_back(to_json(c));
  write_jsonl(kChunksFile, rows);
  rows.clear();
  for (const auto& s : scripts_) rows.push_back(to_json(s));
  write_jsonl(kScriptsFile, rows);
}

}  // namespace ragcg::corpus
