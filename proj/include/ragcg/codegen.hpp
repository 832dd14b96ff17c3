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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragcg/gateway.hpp"
#include "ragcg/prompts.hpp"
#include "ragcg/retrieval.hpp"

// Two-stage code generation: a task planner turns the query into a framework
// of comments, then a script generator writes code comment by comment. Both
// stages retrieve context from the final index.
namespace ragcg::codegen {

enum class Difficulty { Easy, Medium, Hard };
std::string_view difficulty_name(Difficulty d) noexcept;
/// Easy 0-4, medium 5-7, hard 8-10.
Difficulty difficulty_band(int score);

struct GenerationTask {
  std::string task_id;
  std::string query;
  std::optional<int> difficulty_score;
  std::optional<std::string> reference_script_id;

  std::optional<Difficulty> difficulty() const;
};

GenerationTask task_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const GenerationTask& t);

struct CommentFramework {
  std::string task_id;
  std::vector<std::string> comments;
  std::string raw_planner_reply;
};

struct StageProvenance {
  std::string stage;         // "plan", "generate", "direct", "react"
  int comment_index = -1;    // generate stage only
  std::string retrieval_query;
  std::vector<retrieval::RetrievalHit> hits;
  std::vector<std::string> flags;
};

struct Segment {
  std::string comment;  // empty for single-stage output
  std::vector<std::string> code_lines;
};

struct GeneratedScript {
  std::string task_id;
  std::vector<Segment> segments;
  std::string full_text;
  std::vector<StageProvenance> provenance;
};

enum class Planner { ChatEda, Direct };
enum class Method { Rag, React };
Planner parse_planner(std::string_view s);
Method parse_method(std::string_view s);
std::string_view planner_name(Planner p) noexcept;
std::string_view method_name(Method m) noexcept;

struct Options {
  std::size_t top_k = 3;
  bool ikec = true;
  std::string comment_marker = "#";
  std::size_t context_chars = 4000;
  std::size_t prompt_chars = 24000;  // cap on every rendered prompt
  std::string model_id;
  Planner planner = Planner::ChatEda;
  Method method = Method::Rag;
  int plan_retries = 1;
  int react_max_steps = 4;
};

struct Context {
  const retrieval::Index* index = nullptr;
  llm::EmbeddingBackend* embedder = nullptr;
  retrieval::TextLookup lookup;
};

/// Comment lines of a planner reply, trimmed, in order. Fence lines and
/// shebangs are ignored.
std::vector<std::string> parse_comments(std::string_view reply, std::string_view marker);

/// Code of a generator reply: the first fenced block when present, otherwise
/// the whole reply; an echoed copy of `comment` on the first line is dropped
/// and surrounding blank lines are removed.
std::vector<std::string> parse_code(std::string_view reply, std::string_view comment);

/// Comments and code concatenated in order, one line each.
std::string assemble(const std::vector<Segment>& segments);

/// Throws Errc::UnparseablePlan when no comment lines come back after retries.
CommentFramework plan(std::string_view task_id, std::string_view query, const Context& ctx,
                      llm::ChatBackend& backend, const prompts::PromptLibrary& prompts,
                      const Options& opts, std::vector<StageProvenance>* provenance = nullptr);

/// Generates code for each comment in order, feeding earlier code into later
/// prompts.
GeneratedScript generate(const CommentFramework& framework, std::string_view query,
                         const Context& ctx, llm::ChatBackend& backend,
                         const prompts::PromptLibrary& prompts, const Options& opts);

/// Plan then generate (or the single-stage variant when opts.planner is
/// Direct); uses the ReAct loop instead of one-shot retrieval when
/// opts.method is React.
GeneratedScript run_task(const GenerationTask& task, const Context& ctx, llm::ChatBackend& backend,
                         const prompts::PromptLibrary& prompts, const Options& opts);

nlohmann::ordered_json provenance_json(const GeneratedScript& script);

}  // namespace ragcg::codegen
