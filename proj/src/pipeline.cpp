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

#include "ragcg/pipeline.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "ragcg/augmentor.hpp"
#include "ragcg/error.hpp"
#include "ragcg/renovator.hpp"
#include "ragcg/splitter.hpp"
#include "ragcg/text.hpp"

namespace ragcg::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kDocumentSources = "sources/documents";
constexpr const char* kScriptSources = "sources/scripts";
constexpr const char* kTasksFile = "sources/tasks.jsonl";
constexpr const char* kBatchesFile = "scripts/augmentation_batches.jsonl";

const std::vector<std::string> kDerivedDirs = {"documents", "chunks",    "scripts", "index",
                                               "renovations", "generated", "reports"};

std::vector<fs::path> sorted_files(const fs::path& dir, std::string_view ext = {}) {
  std::vector<fs::path> out;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    if (!ext.empty() && e.path().extension() != ext) continue;
    out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void save_index(const corpus::Workspace& ws, const retrieval::Index& idx) {
  ws.write_jsonl(retrieval::index_path(idx.name), idx.to_rows());
}

/// Attaches embeddings from a freshly built index to the stored chunks.
void store_embeddings(corpus::Workspace& ws, const std::vector<corpus::Chunk>& embedded) {
  for (const auto& c : embedded) {
    if (!c.embedding) continue;
    ws.update_chunk(c.chunk_id, [&](corpus::Chunk& stored) {
      stored.embedding = c.embedding;
      stored.state = corpus::ChunkState::Final;
    });
  }
}

retrieval::TextLookup lookup_from(std::vector<corpus::Chunk> chunks) {
  auto texts = std::make_shared<std::map<std::string, std::string>>();
  for (auto& c : chunks) texts->emplace(c.chunk_id, std::move(c.text));
  return [texts](const std::string& id) {
    auto it = texts->find(id);
    return it == texts->end() ? std::string() : it->second;
  };
}

std::string pretty(const ordered_json& j) { return j.dump(2) + "\n"; }

corpus::ChunkFilter in(std::string_view collection, const std::string& doc_id = {}) {
  corpus::ChunkFilter f;
  f.collection = std::string(collection);
  if (!doc_id.empty()) f.doc_id = doc_id;
  return f;
}

}  // namespace

Backends make_backends(const config::Config& cfg, const config::Environment& env) {
  Backends b;
  auto api_key = [&] {
    auto it = env.find(cfg.api_key_env);
    return it == env.end() ? std::string() : it->second;
  };
  llm::RetryPolicy retry;
  retry.attempts = cfg.max_attempts;
  auto endpoint = [&](const std::string& url) {
    llm::HttpEndpoint ep;
    ep.url = url;
    ep.api_key = api_key();
    ep.auth_header = cfg.auth_header;
    ep.timeout = std::chrono::seconds(cfg.timeout_s);
    return ep;
  };
  const auto throttle = static_cast<std::ptrdiff_t>(cfg.max_concurrency);

  switch (cfg.backend) {
    case config::BackendMode::Replay:
      b.replay = llm::ReplayBackend::open(config::fixtures_path(cfg));
      b.chat = b.replay;
      break;
    case config::BackendMode::Live:
      b.chat = std::make_shared<llm::ThrottledBackend>(
          std::make_shared<llm::OpenAIChatBackend>(endpoint(cfg.chat_url), retry), throttle);
      break;
    case config::BackendMode::Record:
      b.chat = std::make_shared<llm::ThrottledBackend>(
          std::make_shared<llm::RecordingBackend>(
              std::make_shared<llm::OpenAIChatBackend>(endpoint(cfg.chat_url), retry),
              config::fixtures_path(cfg)),
          throttle);
      break;
  }
  // only chat exchanges are recorded, so replay and record embed locally
  if (cfg.embedder == "live" && cfg.backend == config::BackendMode::Live) {
    b.embedder = std::make_shared<llm::OpenAIEmbeddingBackend>(endpoint(cfg.embed_url),
                                                               cfg.embed_model, cfg.embed_dims, retry);
  } else {
    b.embedder = std::make_shared<llm::MockEmbedder>();
  }
  return b;
}

prompts::PromptLibrary load_prompts(const config::Config& cfg) {
  return prompts::PromptLibrary::load(cfg.prompt_dir.empty() ? prompts::PromptLibrary::default_dir()
                                                             : fs::path(cfg.prompt_dir));
}

IngestSummary ingest(Env& env) {
  IngestSummary s;
  const auto root = env.ws.root();
  std::optional<std::regex> marker;
  if (!env.cfg.page_marker.empty()) {
    try {
      marker.emplace(env.cfg.page_marker);
    } catch (const std::regex_error& e) {
      throw Error(Errc::ConfigError, fmt::format("splitter.page_marker: {}", e.what()));
    }
  }
  for (const auto& p : sorted_files(root / kDocumentSources, ".txt")) {
    env.ws.ingest_document(p, p.stem().string(), marker);
    ++s.documents;
  }
  for (const auto& p : sorted_files(root / kScriptSources)) {
    corpus::Script script;
    script.script_id = p.stem().string();
    script.source = corpus::ScriptSource::Original;
    script.text = corpus::read_file(p);
    corpus::validate(script);
    env.ws.put_script(std::move(script));
    ++s.scripts;
  }
  env.ws.save();
  spdlog::info("ingest: {} documents, {} scripts", s.documents, s.scripts);
  return s;
}

std::size_t build_pre_index(Env& env) {
  env.ws.remove_chunks(in(corpus::collection::kPre));
  splitter::DocumentOptions opts;
  opts.strategy = splitter::Strategy::Fixed;
  opts.chunk_size = env.cfg.pre_chunk_size;
  opts.overlap = env.cfg.pre_overlap;
  opts.unit = splitter::parse_unit(env.cfg.unit);
  opts.collection = std::string(corpus::collection::kPre);
  std::vector<corpus::Chunk> chunks;
  for (const auto& doc : env.ws.documents()) {
    opts.id_prefix = fmt::format("pre/{}/", doc.doc_id);
    auto part = splitter::split_document(doc, opts, nullptr, nullptr);
    chunks.insert(chunks.end(), std::make_move_iterator(part.begin()),
                  std::make_move_iterator(part.end()));
  }
  auto idx = retrieval::build_index("pre", chunks, *env.backends.embedder, env.cfg.workers);
  env.ws.put_chunks(std::move(chunks));
  save_index(env.ws, idx);
  env.ws.save();
  spdlog::info("index pre: {} chunks", idx.size());
  return idx.size();
}

retrieval::Index load_index(const corpus::Workspace& ws, const std::string& name) {
  const auto rel = retrieval::index_path(name);
  std::error_code ec;
  if (!fs::exists(ws.root() / rel, ec)) {
    throw Error(Errc::UnknownId, fmt::format("index '{}' has not been built", name));
  }
  return retrieval::Index::from_rows(name, ws.read_jsonl(rel));
}

retrieval::TextLookup chunk_lookup(const corpus::Workspace& ws) { return lookup_from(ws.get_chunks()); }

AugmentSummary augment(Env& env, std::optional<std::size_t> n) {
  std::error_code ec;
  if (!fs::exists(env.ws.root() / retrieval::index_path("pre"), ec)) build_pre_index(env);
  const auto pre = load_index(env.ws, "pre");

  env.ws.remove_scripts(corpus::ScriptSource::Augmented);
  const auto pool = env.ws.get_scripts(corpus::ScriptSource::Original);

  augmentor::Options opts;
  opts.budget = env.cfg.budget;
  opts.top_k = env.cfg.top_k;
  opts.context_chars = env.cfg.context_chars;
  opts.ikec = env.cfg.ikec;
  opts.model_id = env.cfg.model_id;
  augmentor::ContextSource ctx{&pre, env.backends.embedder.get(), chunk_lookup(env.ws)};

  auto result = augmentor::augment_pool(pool, n.value_or(env.cfg.augment_n), env.cfg.seed,
                                        *env.backends.chat, env.prompts, ctx, opts);
  for (auto& s : result.scripts) env.ws.put_script(std::move(s));

  std::vector<ordered_json> rows;
  for (const auto& b : result.batches) {
    ordered_json j;
    j["output_script_id"] = b.output_script_id;
    j["sampled_script_ids"] = b.sampled_script_ids;
    j["total_chars"] = b.total_chars;
    j["budget"] = b.budget;
    j["rag_context"] = b.rag_context;
    rows.push_back(std::move(j));
  }
  env.ws.write_jsonl(kBatchesFile, rows);
  env.ws.save();

  AugmentSummary s{result.batches.size(), result.attempts, result.skipped, result.target_reached};
  if (!s.target_reached) {
    spdlog::warn("augment: target not reached ({} of {} after {} attempts)", s.generated,
                 n.value_or(env.cfg.augment_n), s.attempts);
  }
  spdlog::info("augment: {} scripts, {} skipped", s.generated, s.skipped);
  return s;
}

std::size_t split(Env& env, const std::string& doc_id) {
  splitter::DocumentOptions opts;
  opts.strategy = splitter::parse_strategy(env.cfg.strategy);
  opts.chunk_size = env.cfg.chunk_size;
  opts.overlap = env.cfg.overlap;
  opts.unit = splitter::parse_unit(env.cfg.unit);
  opts.semantic.retries = env.cfg.split_retries;
  opts.semantic.fallback_chunk_size = env.cfg.chunk_size;
  opts.semantic.model_id = env.cfg.model_id;

  std::size_t total = 0;
  bool found = doc_id.empty();
  for (const auto& doc : env.ws.documents()) {
    if (!doc_id.empty() && doc.doc_id != doc_id) continue;
    found = true;
    env.ws.remove_chunks(in(corpus::collection::kDoc, doc.doc_id));
    env.ws.remove_chunks(
        in(corpus::collection::kRenovated, doc.doc_id));
    auto chunks = splitter::split_document(doc, opts, env.backends.chat.get(), &env.prompts);
    const auto fallbacks = std::count_if(chunks.begin(), chunks.end(), [](const corpus::Chunk& c) {
      return std::find(c.flags.begin(), c.flags.end(), "fallback_applied") != c.flags.end();
    });
    spdlog::info("split {}: {} chunks ({} from fallback)", doc.doc_id, chunks.size(), fallbacks);
    total += chunks.size();
    env.ws.put_chunks(std::move(chunks));
  }
  if (!found) throw Error(Errc::UnknownId, fmt::format("no document '{}'", doc_id));
  env.ws.save();
  return total;
}

RenovateSummary renovate(Env& env, const std::string& doc_id) {
  RenovateSummary s;
  const auto mode = eval::parse_renovation_mode(env.cfg.renovation);
  if (mode == eval::RenovationMode::Off) {
    spdlog::info("renovate: disabled");
    return s;
  }
  std::optional<retrieval::Index> pre;
  std::error_code ec;
  if (fs::exists(env.ws.root() / retrieval::index_path("pre"), ec)) pre = load_index(env.ws, "pre");
  const auto lookup = chunk_lookup(env.ws);
  renovator::ContextProvider context = [&](const corpus::Chunk& c) -> std::string {
    if (!pre || pre->size() == 0 || text::trim(c.text).empty()) return {};
    const auto hits = retrieval::query(*pre, c.text, env.cfg.top_k, *env.backends.embedder);
    return retrieval::format_context(hits, lookup, env.cfg.context_chars);
  };

  renovator::Options opts;
  opts.ikec = env.cfg.ikec;
  opts.gated = mode == eval::RenovationMode::Full;
  opts.score_retries = env.cfg.score_retries;
  opts.model_id = env.cfg.model_id;
  opts.workers = env.cfg.workers;

  bool found = doc_id.empty();
  for (const auto& doc : env.ws.documents()) {
    if (!doc_id.empty() && doc.doc_id != doc_id) continue;
    found = true;
    const auto chunks = env.ws.get_chunks(
        in(corpus::collection::kDoc, doc.doc_id));
    if (chunks.empty()) continue;
    env.ws.remove_chunks(
        in(corpus::collection::kRenovated, doc.doc_id));
    auto result = renovator::renovate_corpus(chunks, *env.backends.chat, env.prompts, context,
                                             env.cfg.constant, opts);
    std::vector<ordered_json> rows;
    for (const auto& r : result.records) {
      rows.push_back(renovator::to_json(r));
      if (r.verdict == renovator::Verdict::Accepted) {
        ++s.accepted;
      } else {
        ++s.rejected;
      }
      const bool degraded = std::any_of(r.flags.begin(), r.flags.end(), [](const std::string& f) {
        return text::starts_with(f, "renovation_failed");
      });
      if (degraded) ++s.degraded;
    }
    env.ws.write_jsonl(fs::path("renovations") / (doc.doc_id + ".jsonl"), rows);
    env.ws.put_chunks(std::move(result.successors));
    spdlog::info("renovate {}: {} records", doc.doc_id, result.records.size());
  }
  if (!found) throw Error(Errc::UnknownId, fmt::format("no document '{}'", doc_id));
  env.ws.save();
  spdlog::info("renovate: {} accepted, {} rejected", s.accepted, s.rejected);
  return s;
}

std::size_t build_final_index(Env& env) {
  env.ws.remove_chunks(in(corpus::collection::kScript));
  std::vector<corpus::Chunk> script_chunks;
  for (const auto& s : env.ws.get_scripts()) {
    if (text::trim(s.text).empty()) continue;
    corpus::Chunk c;
    c.chunk_id = "script/" + s.script_id;
    c.doc_id = s.script_id;
    c.collection = std::string(corpus::collection::kScript);
    c.text = s.text;
    c.topic_label = s.script_id;
    script_chunks.push_back(std::move(c));
  }
  env.ws.put_chunks(std::move(script_chunks));

  std::vector<corpus::Chunk> chunks =
      env.ws.get_chunks(in(corpus::collection::kScript));
  for (const auto& doc : env.ws.documents()) {
    auto renovated = env.ws.get_chunks(
        in(corpus::collection::kRenovated, doc.doc_id));
    auto part = !renovated.empty() ? std::move(renovated)
                                   : env.ws.get_chunks(in(corpus::collection::kDoc, doc.doc_id));
    chunks.insert(chunks.end(), std::make_move_iterator(part.begin()),
                  std::make_move_iterator(part.end()));
  }
  auto idx = retrieval::build_index("final", chunks, *env.backends.embedder, env.cfg.workers);
  store_embeddings(env.ws, chunks);
  save_index(env.ws, idx);
  env.ws.save();
  spdlog::info("index final: {} chunks", idx.size());
  return idx.size();
}

std::vector<codegen::GenerationTask> load_tasks(const corpus::Workspace& ws) {
  std::vector<codegen::GenerationTask> tasks;
  for (const auto& row : ws.read_jsonl(kTasksFile)) {
    try {
      tasks.push_back(codegen::task_from_json(row));
    } catch (const json::exception& e) {
      throw Error(Errc::UnreadableInput, fmt::format("{}: {}", kTasksFile, e.what()));
    }
  }
  return tasks;
}

GenerateSummary generate(Env& env, const std::string& task_id) {
  const auto index = load_index(env.ws, "final");
  codegen::Context ctx{&index, env.backends.embedder.get(), chunk_lookup(env.ws)};
  codegen::Options opts;
  opts.top_k = env.cfg.top_k;
  opts.ikec = env.cfg.ikec;
  opts.comment_marker = env.cfg.comment_marker;
  opts.context_chars = env.cfg.context_chars;
  opts.prompt_chars = env.cfg.prompt_chars;
  opts.model_id = env.cfg.model_id;
  opts.planner = codegen::parse_planner(env.cfg.planner);
  opts.method = codegen::parse_method(env.cfg.method);
  opts.plan_retries = env.cfg.plan_retries;
  opts.react_max_steps = env.cfg.react_max_steps;

  GenerateSummary s;
  bool found = task_id.empty();
  for (const auto& task : load_tasks(env.ws)) {
    if (!task_id.empty() && task.task_id != task_id) continue;
    found = true;
    const fs::path base = fs::path("generated") / task.task_id;
    std::error_code ec;
    fs::remove(env.ws.root() / fs::path(base.string() + ".error.txt"), ec);
    try {
      const auto script = codegen::run_task(task, ctx, *env.backends.chat, env.prompts, opts);
      auto prov = codegen::provenance_json(script);
      prov["config"] = config::snapshot(env.cfg);
      env.ws.write_text(base.string() + ".script", script.full_text);
      env.ws.write_text(base.string() + ".provenance.json", pretty(prov));
      ++s.generated;
    } catch (const Error& e) {
      if (e.family() == ErrorFamily::Usage) throw;
      spdlog::error("task {} failed: {}", task.task_id, e.what());
      env.ws.write_text(base.string() + ".error.txt", std::string(e.what()) + "\n");
      s.failed.push_back(task.task_id);
    }
  }
  if (!found) throw Error(Errc::UnknownId, fmt::format("no task '{}'", task_id));
  spdlog::info("generate: {} scripts, {} failed", s.generated, s.failed.size());
  return s;
}

std::optional<eval::EvalReport> evaluate(Env& env, const std::string& cell) {
  const fs::path path = fs::path(env.cfg.annotations).is_absolute()
                            ? fs::path(env.cfg.annotations)
                            : env.ws.root() / env.cfg.annotations;
  std::error_code ec;
  if (!fs::exists(path, ec)) {
    spdlog::info("eval: no annotations at {}", path.string());
    return std::nullopt;
  }
  std::vector<eval::LineAnnotation> picked;
  for (auto& a : eval::load_annotations(path)) {
    if (a.cell == cell) picked.push_back(std::move(a));
  }
  if (picked.empty()) return std::nullopt;
  auto report = eval::aggregate(picked);
  report.config_snapshot = config::snapshot(env.cfg);
  const fs::path verdicts = env.ws.root() / env.cfg.verdicts;
  if (fs::exists(verdicts, ec)) eval::attach_verdicts(report, eval::load_verdicts(verdicts), cell);

  env.ws.write_text("reports/pcl.csv", eval::report_csv(report));
  env.ws.write_text("reports/pcl.txt", eval::report_table(report));
  env.ws.write_text("reports/pcl.json", pretty(eval::to_json(report)));
  spdlog::info("eval: mean pcl {}% over {} tasks", eval::format_percent(report.mean_pcl),
               report.per_task.size());
  return report;
}

void clear_derived(const corpus::Workspace& ws) {
  for (const auto& d : kDerivedDirs) fs::remove_all(ws.root() / d);
}

RunSummary run(Env& env) {
  const std::size_t misses_before = env.backends.replay_misses();
  clear_derived(env.ws);
  env.ws = corpus::Workspace(env.ws.root());

  RunSummary s;
  s.ingest = ingest(env);
  s.pre_chunks = build_pre_index(env);
  s.augment = augment(env);
  s.split_chunks = split(env);
  s.renovate = renovate(env);
  s.final_chunks = build_final_index(env);
  s.generate = generate(env);
  s.report = evaluate(env);
  s.replay_misses = env.backends.replay_misses() - misses_before;
  return s;
}

std::string summary_text(const RunSummary& s) {
  std::string out;
  out += fmt::format("ingest     {} documents, {} scripts\n", s.ingest.documents, s.ingest.scripts);
  out += fmt::format("pre index  {} chunks\n", s.pre_chunks);
  out += fmt::format("augment    {} scripts ({} attempts, {} skipped{})\n", s.augment.generated,
                     s.augment.attempts, s.augment.skipped,
                     s.augment.target_reached ? "" : ", target not reached");
  out += fmt::format("split      {} chunks\n", s.split_chunks);
  out += fmt::format("renovate   {} accepted, {} rejected, {} degraded\n", s.renovate.accepted,
                     s.renovate.rejected, s.renovate.degraded);
  out += fmt::format("index      {} chunks\n", s.final_chunks);
  out += fmt::format("generate   {} scripts", s.generate.generated);
  if (!s.generate.failed.empty()) {
    out += fmt::format(", failed: {}", text::join(s.generate.failed, ", "));
  }
  out += "\n";
  if (s.report) {
    out += fmt::format("eval       mean pcl {}% over {} tasks\n",
                       eval::format_percent(s.report->mean_pcl), s.report->per_task.size());
  } else {
    out += "eval       no annotations\n";
  }
  if (s.replay_misses) out += fmt::format("replay     {} requests had no fixture\n", s.replay_misses);
  return out;
}

config::Config cell_config(const config::Config& base, const eval::ExperimentConfig& cell) {
  config::Config c = base;
  c.strategy = std::string(eval::splitter_mode_name(cell.splitter));
  c.renovation = std::string(eval::renovation_mode_name(cell.renovation));
  c.planner = cell.planner;
  c.method = cell.method;
  c.chunk_size = cell.chunk_size;
  c.top_k = cell.top_k;
  if (!cell.model_id.empty()) c.model_id = cell.model_id;
  return c;
}

std::vector<eval::MatrixCell> run_matrix(const corpus::Workspace& ws, const config::Config& base,
                                         Backends& backends,
                                         const std::vector<eval::ExperimentConfig>& groups,
                                         const eval::Sweep& sweep) {
  const auto prompts = load_prompts(base);
  return eval::run_matrix(groups, sweep, [&](const eval::ExperimentConfig& cell) {
    const std::string key = eval::cell_key(cell);
    const fs::path dir = ws.root() / "matrix" / key;
    fs::remove_all(dir);
    fs::create_directories(dir);
    fs::copy(ws.root() / "sources", dir / "sources", fs::copy_options::recursive);

    config::Config cfg = cell_config(base, cell);
    cfg.workspace = dir;
    corpus::Workspace cell_ws(dir);
    Env env{cell_ws, cfg, backends, prompts};
    const auto summary = run(env);
    if (summary.replay_misses) {
      throw Error(Errc::NoRecordedResponse,
                  fmt::format("{} requests had no fixture", summary.replay_misses));
    }
    auto report = evaluate(env, key);
    if (!report) throw Error(Errc::EmptySet, fmt::format("no annotations for cell {}", key));
    for (const auto& t : summary.generate.failed) report->per_task.push_back({t, std::nullopt});
    return *report;
  });
}

}  // namespace ragcg::pipeline
