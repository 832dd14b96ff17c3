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

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragcg/corpus.hpp"
#include "ragcg/gateway.hpp"

// Exact cosine retrieval over embedded chunks. Linear scan; no approximation.
namespace ragcg::retrieval {

struct IndexEntry {
  std::string chunk_id;
  llm::EmbeddingVector embedding;  // unit norm
  std::size_t text_chars = 0;
};

struct RetrievalHit {
  std::string chunk_id;
  double score = 0.0;  // cosine similarity
  int rank = 1;        // 1-based

  friend bool operator==(const RetrievalHit&, const RetrievalHit&) = default;
};

/// Named index; workspaces carry "pre" (raw fixed-size chunks) and "final".
struct Index {
  std::string name;
  std::vector<IndexEntry> entries;

  std::size_t size() const noexcept { return entries.size(); }

  std::vector<nlohmann::ordered_json> to_rows() const;
  static Index from_rows(std::string name, const std::vector<nlohmann::json>& rows);
};

std::filesystem::path index_path(std::string_view name);  // relative to the workspace root

/// Embeds every chunk and returns one entry per successfully embedded chunk.
/// Embedded chunks get their embedding attached and move to state final.
/// Chunks whose embedding fails are left untouched and logged.
Index build_index(std::string name, std::vector<corpus::Chunk>& chunks,
                  llm::EmbeddingBackend& embedder, std::size_t workers = 1);

/// Top-k by cosine against the query vector; ties broken by ascending chunk_id.
std::vector<RetrievalHit> rank(const Index& index, const llm::EmbeddingVector& query,
                               std::size_t top_k);

/// Embeds `text` and ranks. Throws Errc::EmptyQuery on blank text and
/// Errc::InvalidRequest when top_k is 0.
std::vector<RetrievalHit> query(const Index& index, std::string_view text, std::size_t top_k,
                                llm::EmbeddingBackend& embedder);

using TextLookup = std::function<std::string(const std::string& chunk_id)>;

/// Concatenates hit texts in rank order, each block headed by its chunk id,
/// keeping the result within `char_cap` characters. Lowest-ranked blocks are
/// dropped first; a lone top block is cut to fit.
std::string format_context(const std::vector<RetrievalHit>& hits, const TextLookup& lookup,
                           std::size_t char_cap);

}  // namespace ragcg::retrieval
