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

#include "ragcg/corpus.hpp"
#include "ragcg/error.hpp"
#include "support.hpp"

using namespace ragcg;
using ragcg::testing::TempDir;

namespace {

corpus::Chunk chunk(std::string id, std::string doc, std::string text) {
  corpus::Chunk c;
  c.chunk_id = std::move(id);
  c.doc_id = std::move(doc);
  c.text = std::move(text);
  return c;
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::UsageError;
}

}  // namespace

TEST(Corpus, FormFeedPages) {
  const auto d = corpus::parse_document("Title line\nbody\n\f\n page two \n\f\n", "doc");
  ASSERT_EQ(d.pages.size(), 2u);
  EXPECT_EQ(d.title, "Title line");
  EXPECT_EQ(d.pages[1].page_no, 2);
  EXPECT_EQ(d.pages[1].text, "page two");
}

TEST(Corpus, MarkerPages) {
  const auto d = corpus::parse_document("a\n--- page ---\nb\n--- page ---\nc\n", "doc",
                                        std::regex("--- page ---"));
  ASSERT_EQ(d.pages.size(), 3u);
  EXPECT_EQ(d.pages[2].text, "c");
}

TEST(Corpus, EmptyDocument) {
  EXPECT_EQ(code_of([] { corpus::parse_document(" \n\f\n ", "d"); }), Errc::EmptyDocument);
}

TEST(Corpus, ChunkJsonRoundTrip) {
  auto c = chunk("d/c001", "d", "text é");
  c.page_span = {2, 3};
  c.topic_label = "label";
  c.flags = {"fallback_applied"};
  c.parent_id = "d/p";
  c.embedding = llm::EmbeddingVector{{0.6, 0.8}};
  c.state = corpus::ChunkState::Final;
  const auto back = corpus::chunk_from_json(nlohmann::json::parse(corpus::to_json(c).dump()));
  EXPECT_EQ(back.chunk_id, c.chunk_id);
  EXPECT_EQ(back.page_span, c.page_span);
  EXPECT_EQ(back.flags, c.flags);
  EXPECT_EQ(back.parent_id, c.parent_id);
  EXPECT_EQ(back.state, corpus::ChunkState::Final);
  ASSERT_TRUE(back.embedding);
  EXPECT_EQ(back.embedding->values, c.embedding->values);
}

TEST(Corpus, ChunkValidation) {
  EXPECT_NO_THROW(corpus::validate(chunk("a", "d", "t")));
  EXPECT_THROW(corpus::validate(chunk("", "d", "t")), Error);
  EXPECT_THROW(corpus::validate(chunk("a", "d", "")), Error);
  auto inverted = chunk("a", "d", "t");
  inverted.page_span = {3, 2};
  EXPECT_THROW(corpus::validate(inverted), Error);
  auto final_without_vector = chunk("a", "d", "t");
  final_without_vector.state = corpus::ChunkState::Final;
  EXPECT_THROW(corpus::validate(final_without_vector), Error);
}

TEST(Corpus, WorkspacePersistsCollections) {
  TempDir tmp;
  {
    corpus::Workspace ws(tmp.path());
    ws.put_document(corpus::parse_document("Doc\nx", "d1"));
    ws.put_chunks({chunk("d1/a", "d1", "alpha"), chunk("d1/b", "d1", "beta")});
    auto other = chunk("s/a", "s1", "script");
    other.collection = std::string(corpus::collection::kScript);
    ws.put_chunks({other});
    ws.put_script({"s1", corpus::ScriptSource::Original, "print(1)", {}});
    ws.put_script({"aug-001", corpus::ScriptSource::Augmented, "print(2)", {"s1", "s2"}});
    ws.save();
  }
  corpus::Workspace ws(tmp.path());
  EXPECT_EQ(ws.documents().size(), 1u);
  EXPECT_EQ(ws.chunk("d1/b").text, "beta");
  corpus::ChunkFilter docs;
  docs.collection = std::string(corpus::collection::kDoc);
  EXPECT_EQ(ws.get_chunks(docs).size(), 2u);
  EXPECT_EQ(ws.get_scripts(corpus::ScriptSource::Augmented).size(), 1u);
  EXPECT_EQ(ws.script("aug-001").parent_ids.size(), 2u);

  EXPECT_EQ(code_of([&] { ws.put_chunks({chunk("d1/a", "d1", "again")}); }), Errc::DuplicateChunkId);
  EXPECT_EQ(code_of([&] { ws.chunk("nope"); }), Errc::UnknownId);
  EXPECT_EQ(code_of([&] { ws.update_chunk("d1/a", [](corpus::Chunk& c) { c.text = "changed"; }); }),
            Errc::InvalidRequest);
  ws.update_chunk("d1/a", [](corpus::Chunk& c) { c.topic_label = "new"; });
  EXPECT_EQ(ws.chunk("d1/a").topic_label, "new");

  corpus::ChunkFilter d1;
  d1.doc_id = "d1";
  EXPECT_EQ(ws.remove_chunks(d1), 2u);
  EXPECT_EQ(ws.remove_scripts(corpus::ScriptSource::Augmented), 1u);
  EXPECT_EQ(ws.get_scripts().size(), 1u);
}

TEST(Corpus, JsonlHelpers) {
  TempDir tmp;
  corpus::Workspace ws(tmp.path());
  ws.write_jsonl("x/rows.jsonl", {nlohmann::ordered_json{{"a", 1}}, nlohmann::ordered_json{{"a", 2}}});
  const auto rows = ws.read_jsonl("x/rows.jsonl");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1]["a"], 2);
  ragcg::testing::spit(tmp.path() / "x" / "bad.jsonl", "{\"a\":1}\nnot json\n");
  EXPECT_EQ(code_of([&] { ws.read_jsonl("x/bad.jsonl"); }), Errc::CorruptStore);
}

TEST(Corpus, LockIsExclusive) {
  TempDir tmp;
  {
    corpus::WorkspaceLock first(tmp.path());
    EXPECT_EQ(code_of([&] { corpus::WorkspaceLock second(tmp.path()); }), Errc::WorkspaceLocked);
  }
  EXPECT_NO_THROW(corpus::WorkspaceLock again(tmp.path()));
}

TEST(Corpus, AtomicWrite) {
  TempDir tmp;
  corpus::write_file_atomic(tmp.path() / "a" / "f.txt", "one");
  corpus::write_file_atomic(tmp.path() / "a" / "f.txt", "two");
  EXPECT_EQ(corpus::read_file(tmp.path() / "a" / "f.txt"), "two");
  EXPECT_EQ(std::distance(std::filesystem::directory_iterator(tmp.path() / "a"),
                          std::filesystem::directory_iterator{}),
            1);
}
