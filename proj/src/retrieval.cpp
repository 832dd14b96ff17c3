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

#include "ragcg/retrieval.hpp"

#include <algorithm>
#include <optional>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "ragcg/error.hpp"
#include "ragcg/parallel.hpp"
#include "ragcg/text.hpp"

namespace ragcg::retrieval {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<ordered_json> Index::to_rows() const {
  std::vector<ordered_json> rows;
  rows.reserve(entries.size());
  for (const auto& e : entries) {
    ordered_json j;
    j["chunk_id"] = e.chunk_id;
    j["text_chars"] = e.text_chars;
    j["dims"] = e.embedding.dims();
    j["embedding"] = e.embedding.values;
    rows.push_back(std::move(j));
  }
  return rows;
}

Index Index::from_rows(std::string name, const std::vector<json>& rows) {
  Index idx{std::move(name), {}};
  for (const auto& j : rows) {
    IndexEntry e;
    e.chunk_id = j.at("chunk_id").get<std::string>();
    e.text_chars = j.at("text_chars").get<std::size_t>();
    e.embedding.values = j.at("embedding").get<std::vector<double>>();
    if (e.embedding.dims() != j.at("dims").get<std::size_t>()) {
      throw Error(Errc::CorruptStore, fmt::format("index entry {} has wrong dims", e.chunk_id));
    }
    idx.entries.push_back(std::move(e));
  }
  return idx;
}

std::filesystem::path index_path(std::string_view name) {
  return std::filesystem::path("index") / (std::string(name) + ".jsonl");
}

Index build_index(std::string name, std::vector<corpus::Chunk>& chunks,
                  llm::EmbeddingBackend& embedder, std::size_t workers) {
  std::vector<std::optional<llm::EmbeddingVector>> vecs(chunks.size());
  parallel_for_index(chunks.size(), workers, [&](std::size_t i) {
    try {
      vecs[i] = embedder.embed(chunks[i].text);
    } catch (const std::exception& e) {
      spdlog::warn("index {}: chunk {} not embedded: {}", name, chunks[i].chunk_id, e.what());
    }
  });
  Index idx{std::move(name), {}};
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (!vecs[i]) continue;
    chunks[i].embedding = *vecs[i];
    chunks[i].state = corpus::ChunkState::Final;
    idx.entries.push_back({chunks[i].chunk_id, *vecs[i], text::count_chars(chunks[i].text)});
  }
  return idx;
}

std::vector<RetrievalHit> rank(const Index& index, const llm::EmbeddingVector& query,
                               std::size_t top_k) {
  std::vector<RetrievalHit> all;
  all.reserve(index.size());
  for (const auto& e : index.entries) all.push_back({e.chunk_id, llm::dot(e.embedding, query), 0});
  const std::size_t k = std::min(top_k, all.size());
  auto better = [](const RetrievalHit& a, const RetrievalHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.chunk_id < b.chunk_id;
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), better);
  all.resize(k);
  for (std::size_t i = 0; i < all.size(); ++i) all[i].rank = static_cast<int>(i + 1);
  return all;
}

std::vector<RetrievalHit> query(const Index& index, std::string_view text, std::size_t top_k,
                                llm::EmbeddingBackend& embedder) {
  if (top_k == 0) throw Error(Errc::InvalidRequest, "top_k must be >= 1");
  if (text::trim(text).empty()) throw Error(Errc::EmptyQuery, "query text is empty");
  if (index.size() == 0) return {};
  return rank(index, embedder.embed(text), top_k);
}

std::string format_context(const std::vector<RetrievalHit>& hits, const TextLookup& lookup,
                           std::size_t char_cap) {
  std::string out;
  std::size_t used = 0;
  for (const auto& hit : hits) {
    const std::string header = "[" + hit.chunk_id + "]\n";
    const std::string body = lookup(hit.chunk_id);
    const std::string sep = out.empty() ? "" : "\n\n";
    const std::size_t need = text::count_chars(sep) + text::count_chars(header) + text::count_chars(body);
    if (used + need <= char_cap) {
      out += sep + header + body;
      used += need;
      continue;
    }
    if (out.empty()) {
      const std::size_t head = text::count_chars(header);
      if (char_cap > head) out = header + text::take_chars(body, char_cap - head);
    }
    break;
  }
  return out;
}

}  // namespace ragcg::retrieval
