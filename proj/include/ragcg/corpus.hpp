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
#include <functional>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragcg/gateway.hpp"

namespace ragcg::corpus {

struct Page {
  int page_no = 1;
  std::string text;

  friend bool operator==(const Page&, const Page&) = default;
};

struct Document {
  std::string doc_id;
  std::string title;
  std::vector<Page> pages;

  friend bool operator==(const Document&, const Document&) = default;
};

enum class ChunkState { Raw, RenovatedPending, Final };

std::string_view state_name(ChunkState s) noexcept;
ChunkState parse_state(std::string_view s);

struct PageSpan {
  int first = 1;
  int last = 1;

  friend bool operator==(const PageSpan&, const PageSpan&) = default;
};

/// Well-known chunk collections.
namespace collection {
inline constexpr std::string_view kPre = "pre";              // fixed-size split for augmentation
inline constexpr std::string_view kDoc = "doc";              // split document chunks
inline constexpr std::string_view kRenovated = "renovated";  // successors of renovated chunks
inline constexpr std::string_view kScript = "script";        // one chunk per script
}  // namespace collection

struct Chunk {
  std::string chunk_id;
  std::string doc_id;
  std::string collection{collection::kDoc};
  PageSpan page_span;
  std::string text;
  std::string topic_label;
  ChunkState state = ChunkState::Raw;
  std::optional<llm::EmbeddingVector> embedding;
  std::string parent_id;  // chunk this one was derived from, if any
  std::vector<std::string> flags;
};

enum class ScriptSource { Original, Augmented };

struct Script {
  std::string script_id;
  ScriptSource source = ScriptSource::Original;
  std::string text;
  std::vector<std::string> parent_ids;

  friend bool operator==(const Script&, const Script&) = default;
};

nlohmann::ordered_json to_json(const Document& d);
Document document_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const Chunk& c);
Chunk chunk_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const Script& s);
Script script_from_json(const nlohmann::json& j);

/// Throws Errc::InvalidRequest naming the broken invariant.
void validate(const Chunk& c);
void validate(const Script& s);

/// Splits page-delimited text. Pages are separated by form feeds, or by lines
/// matching `page_marker` when given. Throws Errc::EmptyDocument when there is
/// no non-blank page.
Document parse_document(std::string_view content, std::string doc_id,
                        const std::optional<std::regex>& page_marker = std::nullopt);

struct ChunkFilter {
  std::optional<std::string> doc_id;
  std::optional<ChunkState> state;
  std::optional<std::string> collection;

  bool matches(const Chunk& c) const;
};

/// Exclusive advisory lock on a workspace directory, held for the object's
/// lifetime.
class WorkspaceLock {
 public:
  explicit WorkspaceLock(const std::filesystem::path& workspace);
  ~WorkspaceLock();
  WorkspaceLock(const WorkspaceLock&) = delete;
  WorkspaceLock& operator=(const WorkspaceLock&) = delete;

 private:
  int fd_ = -1;
};

/// JSONL-backed collections under one workspace directory. Loaded on open;
/// nothing is written until save().
class Workspace {
 public:
  explicit Workspace(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }

  // documents
  Document ingest_document(const std::filesystem::path& path, const std::string& doc_id,
                           const std::optional<std::regex>& page_marker = std::nullopt);
  void put_document(Document doc);
  const Document& document(std::string_view doc_id) const;
  const std::vector<Document>& documents() const noexcept { return documents_; }

  // chunks
  void put_chunks(std::vector<Chunk> chunks);
  std::vector<Chunk> get_chunks(const ChunkFilter& filter = {}) const;
  const Chunk& chunk(std::string_view chunk_id) const;
  /// Applies `fn` to a stored chunk; the text must not change.
  void update_chunk(std::string_view chunk_id, const std::function<void(Chunk&)>& fn);
  std::size_t remove_chunks(const ChunkFilter& filter);

  // scripts
  void put_script(Script s);
  std::vector<Script> get_scripts(std::optional<ScriptSource> source = std::nullopt) const;
  const Script& script(std::string_view script_id) const;
  std::size_t remove_scripts(ScriptSource source);

  /// Raw JSONL collections owned by other modules (renovation records, index
  /// files), relative to the workspace root.
  std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& rel) const;
  void write_jsonl(const std::filesystem::path& rel,
                   const std::vector<nlohmann::ordered_json>& rows) const;
  void write_text(const std::filesystem::path& rel, std::string_view content) const;

  void save() const;

 private:
  std::filesystem::path root_;
  std::vector<Document> documents_;
  std::vector<Chunk> chunks_;
  std::vector<Script> scripts_;
};

/// Writes via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

}  // namespace ragcg::corpus
