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

#include "ragcg/codegen.hpp"

#include <regex>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "ragcg/error.hpp"
#include "ragcg/text.hpp"

namespace ragcg::codegen {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view difficulty_name(Difficulty d) noexcept {
  switch (d) {
    case Difficulty::Easy: return "easy";
    case Difficulty::Medium: return "medium";
    case Difficulty::Hard: return "hard";
  }
  return "easy";
}

Difficulty difficulty_band(int score) {
  if (score < 0 || score > 10) {
    throw Error(Errc::InvalidRequest, fmt::format("difficulty {} outside 0-10", score));
  }
  if (score <= 4) return Difficulty::Easy;
  if (score <= 7) return Difficulty::Medium;
  return Difficulty::Hard;
}

std::optional<Difficulty> GenerationTask::difficulty() const {
  if (!difficulty_score) return std::nullopt;
  return difficulty_band(*difficulty_score);
}

GenerationTask task_from_json(const json& j) {
  GenerationTask t;
  t.task_id = j.at("task_id").get<std::string>();
  t.query = j.at("query").get<std::string>();
  if (j.contains("difficulty") && !j.at("difficulty").is_null()) {
    t.difficulty_score = j.at("difficulty").get<int>();
    difficulty_band(*t.difficulty_score);
  }
  if (j.contains("reference_script_id") && !j.at("reference_script_id").is_null()) {
    t.reference_script_id = j.at("reference_script_id").get<std::string>();
  }
  if (t.task_id.empty()) throw Error(Errc::InvalidRequest, "task without id");
  return t;
}

ordered_json to_json(const GenerationTask& t) {
  ordered_json j;
  j["task_id"] = t.task_id;
  j["query"] = t.query;
  if (t.difficulty_score) {
    j["difficulty"] = *t.difficulty_score;
  } else {
    j["difficulty"] = nullptr;
  }
  if (t.reference_script_id) {
    j["reference_script_id"] = *t.reference_script_id;
  } else {
    j["reference_script_id"] = nullptr;
  }
  return j;
}

Planner parse_planner(std::string_view s) {
  if (s == "chateda") return Planner::ChatEda;
  if (s == "direct") return Planner::Direct;
  throw Error(Errc::UsageError, fmt::format("unknown planner '{}'", s));
}

Method parse_method(std::string_view s) {
  if (s == "rag") return Method::Rag;
  if (s == "react") return Method::React;
  throw Error(Errc::UsageError, fmt::format("unknown method '{}'", s));
}

std::string_view planner_name(Planner p) noexcept { return p == Planner::ChatEda ? "chateda" : "direct"; }
std::string_view method_name(Method m) noexcept { return m == Method::Rag ? "rag" : "react"; }

namespace {

bool is_fence(std::string_view line) { return text::starts_with(text::trim(line), "```"); }

std::vector<std::string> first_fenced_or_all(std::string_view reply) {
  std::vector<std::string> block;
  bool open = false;
  for (const auto& line : text::lines(reply)) {
    if (is_fence(line)) {
      if (open) return block;
      open = true;
      continue;
    }
    if (open) block.push_back(line);
  }
  if (open) return block;  // unterminated fence: take the rest
  return text::lines(reply);
}

std::vector<retrieval::RetrievalHit> retrieve(const Context& ctx, std::string_view q,
                                              std::size_t top_k) {
  if (!ctx.index || !ctx.embedder || ctx.index->size() == 0) return {};
  return retrieval::query(*ctx.index, q, top_k, *ctx.embedder);
}

std::size_t prompt_chars(const std::vector<llm::ChatMessage>& msgs) {
  std::size_t n = 0;
  for (const auto& m : msgs) n += text::count_chars(m.content);
  return n;
}

/// Renders with as much retrieved context as the prompt cap allows.
std::vector<llm::ChatMessage> render_budgeted(const prompts::PromptLibrary& prompts,
                                              std::string_view id, prompts::Substitutions subs,
                                              const std::vector<retrieval::RetrievalHit>& hits,
                                              const Context& ctx, const Options& opts) {
  subs["context"] = "";
  const std::size_t base = prompt_chars(prompts.render(id, subs, opts.ikec));
  if (base > opts.prompt_chars) {
    throw Error(Errc::PromptBudgetExceeded,
                fmt::format("{} prompt needs {} characters before context; cap is {}", id, base,
                            opts.prompt_chars));
  }
  const std::size_t cap = std::min(opts.context_chars, opts.prompt_chars - base);
  if (!hits.empty() && ctx.lookup) subs["context"] = retrieval::format_context(hits, ctx.lookup, cap);
  return prompts.render(id, subs, opts.ikec);
}

llm::ChatRequest make_request(std::vector<llm::ChatMessage> msgs, const Options& opts) {
  llm::ChatRequest req;
  req.model_id = opts.model_id;
  req.messages = std::move(msgs);
  return req;
}

/// Reason/act loop against the retrieval tool. Returns the final answer text.
std::string react_loop(std::string_view goal, std::string_view seed_query, const Context& ctx,
                       llm::ChatBackend& backend, const prompts::PromptLibrary& prompts,
                       const Options& opts, std::vector<StageProvenance>& provenance) {
  static const std::regex action_re(R"(Action:\s*search\[(.*)\])");
  std::string transcript;
  std::string last_reply;
  // first observation comes from the goal itself, as in plain retrieval
  {
    StageProvenance p{"react", -1, std::string(seed_query), retrieve(ctx, seed_query, opts.top_k), {}};
    const std::string obs = ctx.lookup ? retrieval::format_context(p.hits, ctx.lookup, opts.context_chars) : "";
    transcript = "Observation:\n" + obs + "\n";
    provenance.push_back(std::move(p));
  }
  for (int step = 1; step <= opts.react_max_steps; ++step) {
    auto msgs = prompts.render("react", {{"goal", std::string(goal)}, {"transcript", transcript}},
                               opts.ikec);
    if (prompt_chars(msgs) > opts.prompt_chars) {
      provenance.back().flags.push_back("react_prompt_cap");
      break;
    }
    last_reply = backend.complete(make_request(std::move(msgs), opts));
    const auto final_pos = last_reply.find("Final Answer:");
    if (final_pos != std::string::npos) {
      return last_reply.substr(final_pos + std::string_view("Final Answer:").size());
    }
    std::smatch m;
    if (!std::regex_search(last_reply, m, action_re)) return last_reply;
    const std::string q = text::trim(m[1].str());
    StageProvenance p{"react", -1, q, q.empty() ? std::vector<retrieval::RetrievalHit>{}
                                                : retrieve(ctx, q, opts.top_k), {}};
    const std::string obs = ctx.lookup ? retrieval::format_context(p.hits, ctx.lookup, opts.context_chars) : "";
    transcript += text::trim(last_reply) + "\nObservation:\n" + obs + "\n";
    provenance.push_back(std::move(p));
  }
  provenance.back().flags.push_back("react_step_limit");
  return last_reply;
}

}  // namespace

std::vector<std::string> parse_comments(std::string_view reply, std::string_view marker) {
  std::vector<std::string> out;
  for (const auto& line : text::lines(reply)) {
    const std::string t = text::trim(line);
    if (is_fence(t) || text::starts_with(t, "#!")) continue;
    if (!marker.empty() && text::starts_with(t, marker) && t.size() > marker.size()) out.push_back(t);
  }
  return out;
}

std::vector<std::string> parse_code(std::string_view reply, std::string_view comment) {
  auto ls = first_fenced_or_all(reply);
  while (!ls.empty() && text::trim(ls.front()).empty()) ls.erase(ls.begin());
  if (!ls.empty() && !comment.empty() && text::trim(ls.front()) == text::trim(comment)) {
    ls.erase(ls.begin());
  }
  while (!ls.empty() && text::trim(ls.front()).empty()) ls.erase(ls.begin());
  while (!ls.empty() && text::trim(ls.back()).empty()) ls.pop_back();
  return ls;
}

std::string assemble(const std::vector<Segment>& segments) {
  std::string out;
  for (const auto& s : segments) {
    if (!s.comment.empty()) out += s.comment + "\n";
    for (const auto& l : s.code_lines) out += l + "\n";
  }
  return out;
}

CommentFramework plan(std::string_view task_id, std::string_view query, const Context& ctx,
                      llm::ChatBackend& backend, const prompts::PromptLibrary& prompts,
                      const Options& opts, std::vector<StageProvenance>* provenance) {
  if (text::trim(query).empty()) throw Error(Errc::InvalidRequest, "query is empty");
  CommentFramework fw;
  fw.task_id = std::string(task_id);
  std::vector<StageProvenance> local;
  auto& prov = provenance ? *provenance : local;

  std::string reply;
  if (opts.method == Method::React) {
    const std::string goal = fmt::format(
        "Write the framework of comments for a script that fulfils the user requirement below: "
        "one comment line per step, each starting with \"{}\". No code.\n\n{}",
        opts.comment_marker, query);
    for (int attempt = 0; attempt <= opts.plan_retries && fw.comments.empty(); ++attempt) {
      reply = react_loop(goal, query, ctx, backend, prompts, opts, prov);
      fw.comments = parse_comments(reply, opts.comment_marker);
    }
  } else {
    StageProvenance p{"plan", -1, std::string(query), retrieve(ctx, query, opts.top_k), {}};
    auto req = make_request(
        render_budgeted(prompts, "task_planner",
                        {{"query", std::string(query)}, {"comment_marker", opts.comment_marker}},
                        p.hits, ctx, opts),
        opts);
    for (int attempt = 0; attempt <= opts.plan_retries && fw.comments.empty(); ++attempt) {
      reply = backend.complete(req);
      fw.comments = parse_comments(reply, opts.comment_marker);
    }
    prov.push_back(std::move(p));
  }
  fw.raw_planner_reply = reply;
  if (fw.comments.empty()) {
    throw Error(Errc::UnparseablePlan, fmt::format("task {}: planner returned no comment lines", task_id));
  }
  return fw;
}

GeneratedScript generate(const CommentFramework& framework, std::string_view query,
                         const Context& ctx, llm::ChatBackend& backend,
                         const prompts::PromptLibrary& prompts, const Options& opts) {
  if (framework.comments.empty()) throw Error(Errc::InvalidRequest, "empty comment framework");
  GeneratedScript out;
  out.task_id = framework.task_id;
  const std::string fw_text = text::join(framework.comments, "\n");
  for (std::size_t i = 0; i < framework.comments.size(); ++i) {
    const std::string& comment = framework.comments[i];
    const std::string previous = assemble(out.segments);
    std::string reply;
    if (opts.method == Method::React) {
      const std::string goal = fmt::format(
          "Write the code for the current comment of this framework, continuing the code written "
          "so far. The final answer is only the code for the current comment.\n\nUser requirement:\n{}"
          "\n\nFramework of comments:\n{}\n\nCode written so far:\n{}\n\nCurrent comment:\n{}",
          query, fw_text, previous, comment);
      const std::size_t first = out.provenance.size();
      reply = react_loop(goal, std::string(query) + "\n" + comment, ctx, backend, prompts, opts,
                         out.provenance);
      for (std::size_t k = first; k < out.provenance.size(); ++k) {
        out.provenance[k].comment_index = static_cast<int>(i);
      }
    } else {
      StageProvenance p{"generate", static_cast<int>(i), std::string(query) + "\n" + comment, {}, {}};
      p.hits = retrieve(ctx, p.retrieval_query, opts.top_k);
      auto req = make_request(render_budgeted(prompts, "script_generator",
                                              {{"query", std::string(query)},
                                               {"framework", fw_text},
                                               {"previous_code", previous},
                                               {"comment", comment}},
                                              p.hits, ctx, opts),
                              opts);
      reply = backend.complete(req);
      out.provenance.push_back(std::move(p));
    }
    Segment seg{comment, parse_code(reply, comment)};
    if (seg.code_lines.empty()) out.provenance.back().flags.push_back("empty_code_block");
    out.segments.push_back(std::move(seg));
  }
  out.full_text = assemble(out.segments);
  return out;
}

GeneratedScript run_task(const GenerationTask& task, const Context& ctx, llm::ChatBackend& backend,
                         const prompts::PromptLibrary& prompts, const Options& opts) {
  if (opts.planner == Planner::ChatEda) {
    std::vector<StageProvenance> plan_prov;
    CommentFramework fw = plan(task.task_id, task.query, ctx, backend, prompts, opts, &plan_prov);
    GeneratedScript script = generate(fw, task.query, ctx, backend, prompts, opts);
    plan_prov.insert(plan_prov.end(), std::make_move_iterator(script.provenance.begin()),
                     std::make_move_iterator(script.provenance.end()));
    script.provenance = std::move(plan_prov);
    return script;
  }

  if (text::trim(task.query).empty()) throw Error(Errc::InvalidRequest, "query is empty");
  GeneratedScript out;
  out.task_id = task.task_id;
  std::string reply;
  if (opts.method == Method::React) {
    const std::string goal = fmt::format(
        "Write a complete script that fulfils the user requirement below. The final answer is "
        "only the script.\n\n{}", task.query);
    reply = react_loop(goal, task.query, ctx, backend, prompts, opts, out.provenance);
  } else {
    StageProvenance p{"direct", -1, task.query, retrieve(ctx, task.query, opts.top_k), {}};
    auto req = make_request(
        render_budgeted(prompts, "direct_codegen", {{"query", task.query}}, p.hits, ctx, opts), opts);
    reply = backend.complete(req);
    out.provenance.push_back(std::move(p));
  }
  Segment seg{"", parse_code(reply, "")};
  if (seg.code_lines.empty()) out.provenance.back().flags.push_back("empty_code_block");
  out.segments.push_back(std::move(seg));
  out.full_text = assemble(out.segments);
  return out;
}

ordered_json provenance_json(const GeneratedScript& script) {
  ordered_json j;
  j["task_id"] = script.task_id;
  ordered_json segs = ordered_json::array();
  for (const auto& s : script.segments) {
    ordered_json sj;
    sj["comment"] = s.comment;
    sj["code_lines"] = s.code_lines.size();
    segs.push_back(std::move(sj));
  }
  j["segments"] = std::move(segs);
  ordered_json stages = ordered_json::array();
  for (const auto& p : script.provenance) {
    ordered_json pj;
    pj["stage"] = p.stage;
    pj["comment_index"] = p.comment_index;
    pj["retrieval_query"] = p.retrieval_query;
    ordered_json hits = ordered_json::array();
    for (const auto& h : p.hits) {
      ordered_json hj;
      hj["rank"] = h.rank;
      hj["chunk_id"] = h.chunk_id;
      hj["score"] = h.score;
      hits.push_back(std::move(hj));
    }
    pj["hits"] = std::move(hits);
    pj["flags"] = p.flags;
    stages.push_back(std::move(pj));
  }
  j["stages"] = std::move(stages);
  return j;
}

}  // namespace ragcg::codegen
