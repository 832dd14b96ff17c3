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

#include "ragcg/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "ragcg/corpus.hpp"
#include "ragcg/error.hpp"
#include "ragcg/evaluator.hpp"
#include "ragcg/pipeline.hpp"
#include "ragcg/text.hpp"

namespace ragcg::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::optional<std::string> workspace;
  std::optional<std::string> config_file;
  std::optional<std::string> backend;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;  // "section.key=value"
  int verbosity = 0;
};

using Flags = std::vector<std::pair<std::string, std::string>>;

template <typename T>
void flag(Flags& flags, const std::string& key, const std::optional<T>& v) {
  if (!v) return;
  if constexpr (std::is_same_v<T, std::string>) {
    flags.emplace_back(key, *v);
  } else {
    flags.emplace_back(key, fmt::format("{}", *v));
  }
}

std::vector<std::size_t> parse_size_list(const std::string& what, const std::string& csv) {
  std::vector<std::size_t> out;
  for (const auto& part : text::split(csv, ',')) {
    const std::string t = text::trim(part);
    try {
      std::size_t used = 0;
      const auto v = std::stoull(t, &used);
      if (used != t.size() || v == 0) throw std::invalid_argument(t);
      out.push_back(v);
    } catch (const std::logic_error&) {
      throw Error(Errc::UsageError, fmt::format("{}: '{}' is not a positive integer", what, t));
    }
  }
  if (out.empty()) throw Error(Errc::UsageError, fmt::format("{} must not be empty", what));
  return out;
}

/// Routes library logging to `err` for the duration of one dispatch.
class LogScope {
 public:
  LogScope(std::ostream& err, int verbosity) : previous_(spdlog::default_logger()) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
    auto logger = std::make_shared<spdlog::logger>("ragcg", sink);
    logger->set_pattern("%l: %v");
    logger->set_level(verbosity >= 2   ? spdlog::level::debug
                      : verbosity == 1 ? spdlog::level::info
                                       : spdlog::level::warn);
    spdlog::set_default_logger(logger);
  }
  ~LogScope() { spdlog::set_default_logger(previous_); }
  LogScope(const LogScope&) = delete;
  LogScope& operator=(const LogScope&) = delete;

 private:
  std::shared_ptr<spdlog::logger> previous_;
};

config::Config resolve_config(const Globals& g, const config::Environment& env, Flags flags) {
  fs::path ws = ".";
  if (auto it = env.find("RAGCG_WORKSPACE_PATH"); it != env.end()) ws = it->second;
  if (g.workspace) ws = *g.workspace;

  std::optional<fs::path> file;
  if (g.config_file) {
    file = *g.config_file;
    std::error_code ec;
    if (!fs::is_regular_file(*file, ec)) {
      throw Error(Errc::ConfigError, fmt::format("config file {} not found", file->string()));
    }
  } else if (std::error_code ec; fs::is_regular_file(ws / "ragcg.ini", ec)) {
    file = ws / "ragcg.ini";
  }

  Flags all;
  if (g.workspace) all.emplace_back("workspace.path", *g.workspace);
  flag(all, "backend.mode", g.backend);
  flag(all, "workspace.seed", g.seed);
  for (const auto& s : g.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::UsageError, fmt::format("--set expects section.key=value, got '{}'", s));
    }
    all.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  all.insert(all.end(), flags.begin(), flags.end());
  auto cfg = config::load(file, env, all);
  if (!g.workspace && cfg.workspace == ".") cfg.workspace = ws;
  return cfg;
}

void print_hits(std::ostream& out, const std::vector<retrieval::RetrievalHit>& hits,
                const retrieval::TextLookup& lookup) {
  for (const auto& h : hits) {
    std::string first;
    for (const auto& line : text::lines(lookup(h.chunk_id))) {
      if (!text::trim(line).empty()) {
        first = text::trim(line);
        break;
      }
    }
    if (text::count_chars(first) > 72) first = text::take_chars(first, 69) + "...";
    out << fmt::format("{:>2}  {:.6f}  {}  {}\n", h.rank, h.score, h.chunk_id, first);
  }
}

int finish(std::ostream& err, const pipeline::Backends& b) {
  if (b.replay_misses()) {
    err << fmt::format("error: {} requests had no recorded response\n", b.replay_misses());
    return kExitStage;
  }
  return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
             const config::Environment& env) {
  CLI::App app{"Retrieval-augmented script generation over documentation corpora", "ragcg"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.set_version_flag("--version", "ragcg 0.1.0");

  Globals g;
  app.add_option("-w,--workspace", g.workspace, "Workspace directory (default: .)");
  app.add_option("-c,--config", g.config_file, "INI file (default: <workspace>/ragcg.ini)");
  app.add_option("--backend", g.backend, "live | replay | record")
      ->check(CLI::IsMember({"live", "replay", "record"}));
  app.add_option("--seed", g.seed, "Seed for all randomness");
  app.add_option("--set", g.sets, "Override any setting: section.key=value");
  app.add_flag("-v,--verbose", g.verbosity, "More logging (repeatable)");

  Flags flags;

  auto* ingest = app.add_subcommand("ingest", "Load sources/ into the workspace");

  auto* split = app.add_subcommand("split", "Split documents into chunks");
  std::string split_doc;
  std::optional<std::string> strategy, unit;
  std::optional<std::size_t> chunk_size;
  std::optional<double> overlap;
  split->add_option("--doc", split_doc, "Only this document");
  split->add_option("--strategy", strategy, "semantic | fixed")
      ->check(CLI::IsMember({"semantic", "fixed"}));
  split->add_option("--chunk-size", chunk_size, "Fixed chunk size / fallback size");
  split->add_option("--overlap", overlap, "Overlap ratio for fixed chunks, in [0, 1)");
  split->add_option("--unit", unit, "chars | words")->check(CLI::IsMember({"chars", "words"}));

  auto* renovate = app.add_subcommand("renovate", "Renovate split chunks and gate them");
  std::string renovate_doc;
  std::optional<double> constant;
  bool no_ikec = false, no_gate = false;
  renovate->add_option("--doc", renovate_doc, "Only this document");
  renovate->add_option("--constant", constant, "Acceptance threshold");
  renovate->add_flag("--no-ikec", no_ikec, "Leave the IKEC fragment out of prompts");
  renovate->add_flag("--no-gate", no_gate, "Adopt every renovation without scoring");

  auto* augment = app.add_subcommand("augment", "Generate new scripts from the originals");
  std::optional<std::size_t> aug_n, budget;
  augment->add_option("--n", aug_n, "Number of scripts to generate");
  augment->add_option("--budget", budget, "Character budget per sampled batch");

  auto* index = app.add_subcommand("index", "Build retrieval indexes");
  std::string which = "final";
  index->add_option("--which", which, "pre | final | both")
      ->check(CLI::IsMember({"pre", "final", "both"}));

  auto* query = app.add_subcommand("query", "Query an index");
  std::string query_text, query_index = "final";
  std::optional<std::size_t> k;
  query->add_option("--text", query_text, "Query text")->required();
  query->add_option("--k", k, "Number of hits");
  query->add_option("--index", query_index, "pre | final")->check(CLI::IsMember({"pre", "final"}));

  auto* generate = app.add_subcommand("generate", "Generate scripts for tasks");
  std::string task_id;
  generate->add_option("--task", task_id, "Only this task");

  auto* evalc = app.add_subcommand("eval", "Evaluation");
  evalc->require_subcommand(1);
  auto* eval_pcl = evalc->add_subcommand("pcl", "Percentage of correct lines");
  std::optional<std::string> annotations;
  std::string cell;
  bool csv = false;
  eval_pcl->add_option("--annotations", annotations, "Annotation JSONL file");
  eval_pcl->add_option("--cell", cell, "Only annotations keyed to this matrix cell");
  eval_pcl->add_flag("--csv", csv, "Print CSV instead of a table");
  auto* eval_matrix = evalc->add_subcommand("matrix", "Run the comparison groups");
  std::string groups = "all", chunk_sizes, top_ks;
  eval_matrix->add_option("--groups", groups, "Comma-separated group ids, or 'all'");
  eval_matrix->add_option("--chunk-sizes", chunk_sizes, "Comma-separated chunk sizes");
  eval_matrix->add_option("--top-k", top_ks, "Comma-separated top_k values");
  eval_matrix->add_flag("--csv", csv, "Print CSV instead of a table");

  auto* pipe = app.add_subcommand("pipeline", "Whole pipeline");
  pipe->require_subcommand(1);
  auto* pipe_run = pipe->add_subcommand("run", "Clear derived state and run every stage");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  LogScope log(err, g.verbosity);
  try {
    flag(flags, "splitter.strategy", strategy);
    flag(flags, "splitter.chunk_size", chunk_size);
    flag(flags, "splitter.overlap", overlap);
    flag(flags, "splitter.unit", unit);
    flag(flags, "renovator.constant", constant);
    if (no_ikec) flags.emplace_back("prompts.ikec", "false");
    if (no_gate) flags.emplace_back("renovator.mode", "no-gate");
    flag(flags, "augmentor.n", aug_n);
    flag(flags, "augmentor.budget", budget);
    flag(flags, "retrieval.top_k", k);
    flag(flags, "eval.annotations", annotations);

    const config::Config cfg = resolve_config(g, env, flags);

    if (eval_pcl->parsed()) {
      const fs::path path = fs::path(cfg.annotations).is_absolute() || annotations
                                ? fs::path(cfg.annotations)
                                : cfg.workspace / cfg.annotations;
      std::vector<eval::LineAnnotation> picked;
      for (auto& a : eval::load_annotations(path)) {
        if (a.cell == cell) picked.push_back(std::move(a));
      }
      const auto report = eval::aggregate(picked);
      out << (csv ? eval::report_csv(report) : eval::report_table(report));
      return kExitOk;
    }

    config::validate(cfg, env);
    corpus::WorkspaceLock lock(cfg.workspace);
    corpus::Workspace ws(cfg.workspace);
    auto backends = pipeline::make_backends(cfg, env);
    const auto prompts = pipeline::load_prompts(cfg);
    pipeline::Env penv{ws, cfg, backends, prompts};

    if (ingest->parsed()) {
      const auto s = pipeline::ingest(penv);
      out << fmt::format("{} documents, {} scripts\n", s.documents, s.scripts);
      return kExitOk;
    }
    if (split->parsed()) {
      out << fmt::format("{} chunks\n", pipeline::split(penv, split_doc));
      return finish(err, backends);
    }
    if (renovate->parsed()) {
      const auto s = pipeline::renovate(penv, renovate_doc);
      out << fmt::format("{} accepted, {} rejected, {} degraded\n", s.accepted, s.rejected,
                         s.degraded);
      return finish(err, backends);
    }
    if (augment->parsed()) {
      const auto s = pipeline::augment(penv);
      out << fmt::format("{} scripts ({} attempts, {} skipped)\n", s.generated, s.attempts,
                         s.skipped);
      if (!s.target_reached) {
        err << "error: " << errc_name(Errc::TargetUnreached) << ": augmentation target not reached\n";
        return kExitStage;
      }
      return finish(err, backends);
    }
    if (index->parsed()) {
      if (which == "pre" || which == "both") {
        out << fmt::format("pre: {} chunks\n", pipeline::build_pre_index(penv));
      }
      if (which == "final" || which == "both") {
        out << fmt::format("final: {} chunks\n", pipeline::build_final_index(penv));
      }
      return kExitOk;
    }
    if (query->parsed()) {
      const auto idx = pipeline::load_index(ws, query_index);
      const auto hits = retrieval::query(idx, query_text, cfg.top_k, *backends.embedder);
      print_hits(out, hits, pipeline::chunk_lookup(ws));
      return kExitOk;
    }
    if (generate->parsed()) {
      const auto s = pipeline::generate(penv, task_id);
      out << fmt::format("{} scripts generated\n", s.generated);
      if (!s.failed.empty()) {
        err << fmt::format("error: failed tasks: {}\n", text::join(s.failed, ", "));
        return kExitStage;
      }
      return finish(err, backends);
    }
    if (eval_matrix->parsed()) {
      std::vector<eval::ExperimentConfig> selected;
      if (groups == "all") {
        selected = eval::experiment_groups();
      } else {
        for (const auto& id : text::split(groups, ',')) selected.push_back(eval::find_group(text::trim(id)));
      }
      eval::Sweep sweep;
      sweep.chunk_sizes = chunk_sizes.empty() ? std::vector<std::size_t>{cfg.chunk_size}
                                              : parse_size_list("--chunk-sizes", chunk_sizes);
      sweep.top_ks = top_ks.empty() ? std::vector<std::size_t>{cfg.top_k}
                                    : parse_size_list("--top-k", top_ks);
      const auto cells = pipeline::run_matrix(ws, cfg, backends, selected, sweep);
      ws.write_text("reports/matrix.csv", eval::matrix_csv(cells));
      ws.write_text("reports/matrix.txt", eval::matrix_table(cells));
      out << (csv ? eval::matrix_csv(cells) : eval::matrix_table(cells));
      return kExitOk;
    }
    if (pipe_run->parsed()) {
      const auto s = pipeline::run(penv);
      out << pipeline::summary_text(s);
      return s.ok() ? kExitOk : kExitStage;
    }
    err << app.help();
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.family() == ErrorFamily::Usage ? kExitUsage : kExitStage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitStage;
  }
}

}  // namespace ragcg::cli
