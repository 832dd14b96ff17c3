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

#include <gtest/gtest.h>

#include <map>

#include "ragcg/error.hpp"
#include "ragcg/retrieval.hpp"

using namespace ragcg;
using namespace ragcg::retrieval;

namespace {

corpus::Chunk chunk(std::string id, std::string text) {
  corpus::Chunk c;
  c.chunk_id = std::move(id);
  c.doc_id = "d";
  c.text = std::move(text);
  return c;
}

/// Embedder with hand-set vectors, so scores are known exactly.
class TableEmbedder final : public llm::EmbeddingBackend {
 public:
  std::map<std::string, std::vector<double>> table;
  llm::EmbeddingVector embed(std::string_view text) override {
    auto it = table.find(std::string(text));
    if (it == table.end()) throw Error(Errc::TransportFailure, "no vector");
    return llm::EmbeddingVector{it->second}.normalized();
  }
  std::size_t dims() const override { return 2; }
  std::string backend_id() const override { return "table"; }
};

}  // namespace

TEST(Retrieval, RanksByScoreThenId) {
  TableEmbedder e;
  e.table = {{"east", {1, 0}}, {"north", {0, 1}}, {"northeast", {1, 1}}, {"q", {1, 0.2}}};
  std::vector<corpus::Chunk> chunks = {chunk("c", "north"), chunk("b", "east"), chunk("a", "east"),
                                       chunk("d", "northeast")};
  const auto idx = build_index("final", chunks, e);
  ASSERT_EQ(idx.size(), 4u);
  const auto hits = query(idx, "q", 3, e);
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(hits[0].chunk_id, "a");  // tie with b, lower id first
  EXPECT_EQ(hits[1].chunk_id, "b");
  EXPECT_EQ(hits[2].chunk_id, "d");
  EXPECT_EQ(hits[0].score, hits[1].score);
  EXPECT_EQ(hits[2].rank, 3);
  EXPECT_GT(hits[1].score, hits[2].score);
}

TEST(Retrieval, KLargerThanIndex) {
  llm::MockEmbedder e;
  std::vector<corpus::Chunk> chunks = {chunk("a", "layer names"), chunk("b", "via counts")};
  const auto idx = build_index("x", chunks, e);
  EXPECT_EQ(query(idx, "layers", 10, e).size(), 2u);
  EXPECT_THROW(query(idx, "  ", 1, e), Error);
  EXPECT_THROW(query(idx, "layers", 0, e), Error);
  const Index empty{"e", {}};
  EXPECT_TRUE(query(empty, "layers", 3, e).empty());
}

TEST(Retrieval, IndexMarksChunksFinal) {
  TableEmbedder e;
  e.table = {{"ok", {1, 0}}};
  std::vector<corpus::Chunk> chunks = {chunk("a", "ok"), chunk("b", "missing")};
  const auto idx = build_index("x", chunks, e);
  ASSERT_EQ(idx.size(), 1u);
  EXPECT_EQ(chunks[0].state, corpus::ChunkState::Final);
  EXPECT_TRUE(chunks[0].embedding);
  EXPECT_EQ(chunks[1].state, corpus::ChunkState::Raw);
  EXPECT_NO_THROW(corpus::validate(chunks[0]));
}

TEST(Retrieval, RowsRoundTrip) {
  llm::MockEmbedder e;
  std::vector<corpus::Chunk> chunks = {chunk("a", "layer names"), chunk("b", "via counts é")};
  const auto idx = build_index("x", chunks, e);
  std::vector<nlohmann::json> rows;
  for (const auto& r : idx.to_rows()) rows.push_back(nlohmann::json::parse(r.dump()));
  const auto back = Index::from_rows("x", rows);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.entries[1].text_chars, 12u);
  EXPECT_EQ(back.entries[1].embedding.values, idx.entries[1].embedding.values);
  EXPECT_EQ(query(back, "via", 2, e), query(idx, "via", 2, e));
  rows[0]["dims"] = 3;
  EXPECT_THROW(Index::from_rows("x", rows), Error);
}

TEST(Context, DropsLowestRankedFirst) {
  const std::vector<RetrievalHit> hits = {{"a", 0.9, 1}, {"b", 0.8, 2}, {"c", 0.7, 3}};
  const TextLookup lookup = [](const std::string& id) { return std::string(10, id[0]); };
  // each block is "[x]\n" + 10 chars = 14, separators 2
  EXPECT_EQ(format_context(hits, lookup, 1000), "[a]\naaaaaaaaaa\n\n[b]\nbbbbbbbbbb\n\n[c]\ncccccccccc");
  EXPECT_EQ(format_context(hits, lookup, 30), "[a]\naaaaaaaaaa\n\n[b]\nbbbbbbbbbb");
  EXPECT_EQ(format_context(hits, lookup, 29), "[a]\naaaaaaaaaa");
  EXPECT_EQ(format_context(hits, lookup, 8), "[a]\naaaa");
  EXPECT_EQ(format_context(hits, lookup, 4), "");
  EXPECT_EQ(format_context({}, lookup, 100), "");
}
