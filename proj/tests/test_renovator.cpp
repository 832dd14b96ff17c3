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

#include <algorithm>
#include <random>

#include "ragcg/error.hpp"
#include "ragcg/renovator.hpp"
#include "simulated_model.hpp"

using namespace ragcg;
using namespace ragcg::renovator;

namespace {

const prompts::PromptLibrary& library() {
  static const auto lib = prompts::PromptLibrary::load(prompts::PromptLibrary::default_dir());
  return lib;
}

RenovationRecord scored(double conf, double grow, std::string id = "c") {
  RenovationRecord r;
  r.chunk_id = std::move(id);
  r.conf = conf;
  r.grow = grow;
  return r;
}

std::vector<corpus::Chunk> chunks(int n) {
  std::vector<corpus::Chunk> out;
  for (int i = 0; i < n; ++i) {
    corpus::Chunk c;
    c.chunk_id = "d/c00" + std::to_string(i + 1);
    c.doc_id = "d";
    c.text = "get_layer_names(design) returns the names of layer group " + std::to_string(i) + ".";
    out.push_back(c);
  }
  return out;
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

TEST(Growth, CountsCharacters) {
  EXPECT_DOUBLE_EQ(growth_ratio("abcd", "abcdefgh"), 1.0);
  EXPECT_DOUBLE_EQ(growth_ratio("中文", "中"), -0.5);
  EXPECT_DOUBLE_EQ(growth_ratio("same", "same"), 0.0);
  EXPECT_EQ(code_of([] { growth_ratio("", "x"); }), Errc::InvalidRequest);
}

TEST(Confidence, ClampAndRound) {
  bool clamped = false;
  EXPECT_DOUBLE_EQ(quantize_conf(7.25, &clamped), 7.3);
  EXPECT_FALSE(clamped);
  EXPECT_DOUBLE_EQ(quantize_conf(7.24), 7.2);
  EXPECT_DOUBLE_EQ(quantize_conf(12.0, &clamped), 10.0);
  EXPECT_TRUE(clamped);
  EXPECT_DOUBLE_EQ(quantize_conf(-1.0, &clamped), 0.0);
  EXPECT_TRUE(clamped);
}

TEST(Confidence, ParsesReplies) {
  const auto s = parse_codrc_reply(
      "Entities:\n```json\n{\"entities\":[{\"text\":\"returns a list\",\"category\":1},"
      "{\"text\":\"is fast\",\"category\":3}],\"confidence\":\"8.46\"}\n```");
  EXPECT_DOUBLE_EQ(s.conf, 8.5);
  ASSERT_EQ(s.entities.size(), 2u);
  EXPECT_EQ(s.entities[1].category, EntityCategory::NotInferable);
  EXPECT_DOUBLE_EQ(parse_codrc_reply("score: {\"confidence\": 6}").conf, 6.0);
  EXPECT_EQ(code_of([] { parse_codrc_reply("no json"); }), Errc::UnparseableScoreReply);
  EXPECT_EQ(code_of([] { parse_codrc_reply("{\"confidence\": 5, \"entities\":[{\"text\":\"x\",\"category\":4}]}"); }),
            Errc::UnparseableScoreReply);
}

TEST(Adoption, HandComputedBatch) {
  // conf 8, 6 -> mean 7, sd 1; grow 0.5, 1.5 -> mean 1, sd 0.5
  std::vector<RenovationRecord> recs = {scored(8, 0.5, "a"), scored(6, 1.5, "b")};
  const auto stats = compute_stats(recs, 0.0);
  EXPECT_DOUBLE_EQ(stats.mean_conf, 7.0);
  EXPECT_DOUBLE_EQ(stats.std_conf, 1.0);
  EXPECT_DOUBLE_EQ(stats.mean_grow, 1.0);
  EXPECT_DOUBLE_EQ(stats.std_grow, 0.5);
  for (auto& r : recs) decide(r, stats);
  EXPECT_DOUBLE_EQ(*recs[0].cdiff, 1.0);
  EXPECT_DOUBLE_EQ(*recs[0].gdiff, -1.0);
  EXPECT_EQ(recs[0].verdict, Verdict::Accepted);
  EXPECT_EQ(recs[1].verdict, Verdict::Rejected);

  // score difference exactly at the threshold is adopted
  auto edge = recs;
  const auto strict = compute_stats(edge, 2.0);
  decide(edge[0], strict);
  EXPECT_EQ(edge[0].verdict, Verdict::Accepted);
  const auto stricter = compute_stats(edge, 2.0000001);
  decide(edge[0], stricter);
  EXPECT_EQ(edge[0].verdict, Verdict::Rejected);
}

TEST(Adoption, ConstantAxisScoresZero) {
  std::vector<RenovationRecord> recs = {scored(7, 0.1), scored(7, 0.9), scored(7, 0.5)};
  const auto stats = compute_stats(recs, 0.0);
  EXPECT_EQ(stats.std_conf, 0.0);
  for (auto& r : recs) decide(r, stats);
  for (const auto& r : recs) EXPECT_EQ(*r.cdiff, 0.0);
  EXPECT_EQ(recs[0].verdict, Verdict::Accepted);  // lowest growth
  EXPECT_EQ(recs[1].verdict, Verdict::Rejected);
}

TEST(Adoption, Errors) {
  std::vector<RenovationRecord> one = {scored(5, 0.1), RenovationRecord{}};
  EXPECT_EQ(code_of([&] { compute_stats(one, 0.0); }), Errc::InsufficientRecords);
  std::vector<RenovationRecord> two = {scored(5, 0.1), scored(6, 0.2)};
  EXPECT_EQ(code_of([&] { compute_stats(two, std::nan("")); }), Errc::InvalidConstant);
  RenovationRecord unscored;
  decide(unscored, compute_stats(two, 0.0));
  EXPECT_EQ(unscored.verdict, Verdict::Rejected);
  EXPECT_FALSE(unscored.cdiff);
}

TEST(Adoption, DecisionsIgnoreBatchOrder) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<RenovationRecord> recs;
    for (int i = 0; i < 12; ++i) {
      recs.push_back(scored((rng() % 101) / 10.0, (rng() % 300) / 100.0, std::to_string(i)));
    }
    auto shuffled = recs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto s1 = compute_stats(recs, 0.3);
    const auto s2 = compute_stats(shuffled, 0.3);
    for (auto& r : recs) decide(r, s1);
    for (auto& r : shuffled) decide(r, s2);
    for (const auto& r : shuffled) {
      const auto& orig = *std::find_if(recs.begin(), recs.end(),
                                       [&](const auto& o) { return o.chunk_id == r.chunk_id; });
      EXPECT_EQ(orig.verdict, r.verdict);
      EXPECT_NEAR(*orig.cdiff, *r.cdiff, 1e-12);
    }
  }
}

TEST(RenovateCorpus, RunsPhasesAndBuildsSuccessors) {
  auto sim = std::make_shared<sim::SimulatedModel>();
  Options opts;
  const auto input = chunks(6);
  const auto out = renovate_corpus(input, *sim, library(), nullptr, 0.0, opts);
  ASSERT_EQ(out.records.size(), 6u);
  ASSERT_TRUE(out.stats);
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < input.size(); ++i) {
    const auto& rec = out.records[i];
    const auto& succ = out.successors[i];
    EXPECT_TRUE(rec.conf);
    EXPECT_GT(rec.grow, 0.0);
    EXPECT_EQ(succ.chunk_id, input[i].chunk_id + "/r");
    EXPECT_EQ(succ.parent_id, input[i].chunk_id);
    EXPECT_EQ(succ.collection, corpus::collection::kRenovated);
    if (rec.verdict == Verdict::Accepted) {
      ++accepted;
      EXPECT_EQ(succ.text, rec.post_text);
    } else {
      EXPECT_EQ(succ.text, input[i].text);
    }
  }
  EXPECT_GT(accepted, 0u);
  EXPECT_LT(accepted, input.size());
}

TEST(RenovateCorpus, WorkerCountDoesNotChangeResults) {
  auto sim = std::make_shared<sim::SimulatedModel>();
  Options serial, parallel;
  parallel.workers = 4;
  const auto input = chunks(9);
  const auto a = renovate_corpus(input, *sim, library(), nullptr, 0.0, serial);
  const auto b = renovate_corpus(input, *sim, library(), nullptr, 0.0, parallel);
  for (std::size_t i = 0; i < input.size(); ++i) {
    EXPECT_EQ(to_json(a.records[i]).dump(), to_json(b.records[i]).dump());
  }
}

TEST(RenovateCorpus, UngatedAdoptsEverything) {
  auto calls = std::make_shared<llm::CallLog>(std::make_shared<sim::SimulatedModel>());
  Options opts;
  opts.gated = false;
  const auto out = renovate_corpus(chunks(3), *calls, library(), nullptr, 0.0, opts);
  for (const auto& r : out.records) EXPECT_EQ(r.verdict, Verdict::Accepted);
  EXPECT_EQ(calls->size(), 3u);  // no scoring calls
}

TEST(RenovateCorpus, FailuresBecomeRejections) {
  llm::ScriptedBackend broken([](const llm::ChatRequest& r) -> std::string {
    if (r.messages.back().content.find("<<<CHUNK") != std::string::npos &&
        r.messages.back().content.find("group 1.") != std::string::npos) {
      throw Error(Errc::TransportFailure, "down");
    }
    return sim::respond(r);
  });
  const auto out = renovate_corpus(chunks(4), broken, library(), nullptr, 0.0, {});
  EXPECT_EQ(out.records[1].verdict, Verdict::Rejected);
  EXPECT_EQ(out.records[1].flags.back().rfind("renovation_failed", 0), 0u);
  EXPECT_EQ(out.successors[1].text, chunks(4)[1].text);
}

TEST(RenovateCorpus, UnscorableRepliesAreRejected) {
  llm::ScriptedBackend backend([](const llm::ChatRequest& r) -> std::string {
    if (r.messages.back().content.find("<<<POST") != std::string::npos) return "no idea";
    return sim::respond(r);
  });
  Options opts;
  opts.score_retries = 0;
  const auto out = renovate_corpus(chunks(3), backend, library(), nullptr, 0.0, opts);
  EXPECT_FALSE(out.stats);
  for (const auto& r : out.records) EXPECT_EQ(r.verdict, Verdict::Rejected);
}

TEST(Ikec, RenovationPromptGainsOnlyTheBlock) {
  // a backend that answers more richly when asked to expand on what it knows
  const std::string block = library().ikec_block();
  std::vector<std::string> renovation_prompts;
  llm::ScriptedBackend backend([&](const llm::ChatRequest& r) -> std::string {
    const auto& u = r.messages.back().content;
    if (u.find("<<<CHUNK") == std::string::npos) return sim::respond(r);
    renovation_prompts.push_back(u);
    const bool expand = u.find(block) != std::string::npos;
    return "get_layer_names(design) returns the names of layer group 0." +
           std::string(expand ? " It returns a list of strings in stack order, and an empty list for a design "
                                "without layers."
                              : " It returns a list.");
  });
  Options on, off;
  off.ikec = false;
  std::vector<std::string> flags;
  const auto c = chunks(1)[0];
  const auto rich = renovate_chunk(c, "", backend, library(), on, flags);
  const auto plain = renovate_chunk(c, "", backend, library(), off, flags);
  EXPECT_GT(rich.size(), plain.size());
  ASSERT_EQ(renovation_prompts.size(), 2u);
  const auto& with = renovation_prompts[0];
  const auto& without = renovation_prompts[1];
  const auto at = with.find(block);
  ASSERT_NE(at, std::string::npos);
  EXPECT_EQ(with.substr(0, at) + with.substr(at + block.size()), without);
}

TEST(Records, JsonRoundTrip) {
  auto r = scored(7.5, 0.25, "d/c001");
  r.pre_text = "pre";
  r.post_text = "post";
  r.entities = {{"x", EntityCategory::FromPriorInformation}};
  r.cdiff = 0.5;
  r.gdiff = -0.5;
  r.verdict = Verdict::Accepted;
  r.flags = {"f"};
  const auto back = record_from_json(nlohmann::json::parse(to_json(r).dump()));
  EXPECT_EQ(to_json(back).dump(), to_json(r).dump());
  EXPECT_EQ(back.adopted_text(), "post");
}
