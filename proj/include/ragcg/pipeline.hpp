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
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ragcg/codegen.hpp"
#include "ragcg/config.hpp"
#include "ragcg/corpus.hpp"
#include "ragcg/evaluator.hpp"
#include "ragcg/gateway.hpp"
#include "ragcg/prompts.hpp"
#include "ragcg/retrieval.hpp"

// Stage wiring over a workspace directory:
//
//   sources/documents/*.txt   page-delimited documentation
//   sources/scripts/*         original example scripts
//   sources/tasks.jsonl       generation tasks
//   sources/annotations.jsonl line annotations (optional)
//
// Derived state lives next to it (documents/, chunks/, scripts/, index/,
// renovations/, generated/, reports/) and is rebuilt by `pipeline run`.
namespace ragcg::pipeline {

struct Backends {
  std::shared_ptr<llm::ChatBackend> chat;
  std::shared_ptr<llm::EmbeddingBackend> embedder;
  std::shared_ptr<llm::ReplayBackend> replay;  // set in replay mode

  std::size_t replay_misses() const { return replay ? replay->misses() : 0; }
};

/// Builds the backend stack for the configured mode. Live calls are throttled
/// to backend.max_concurrency; record mode appends to the fixture store.
Backends make_backends(const config::Config& cfg, const config::Environment& env);

struct Env {
  corpus::Workspace& ws;
  const config::Config& cfg;
  Backends& backends;
  const prompts::PromptLibrary& prompts;
};

prompts::PromptLibrary load_prompts(const config::Config& cfg);

struct IngestSummary {
  std::size_t documents = 0;
  std::size_t scripts = 0;
};
IngestSummary ingest(Env& env);

/// Fixed-size split of every document into collection "pre" and the index
/// over it. Returns the number of indexed chunks.
std::size_t build_pre_index(Env& env);

struct AugmentSummary {
  std::size_t generated = 0;
  std::size_t attempts = 0;
  std::size_t skipped = 0;
  bool target_reached = false;
};
AugmentSummary augment(Env& env, std::optional<std::size_t> n = std::nullopt);

/// Splits one document (or all when doc_id is empty) into collection "doc",
/// replacing earlier chunks of that document.
std::size_t split(Env& env, const std::string& doc_id = {});

struct RenovateSummary {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t degraded = 0;
};
RenovateSummary renovate(Env& env, const std::string& doc_id = {});

/// Index over the chunks that feed generation: scripts plus renovated
/// successors when renovation ran, otherwise the split chunks.
std::size_t build_final_index(Env& env);

retrieval::Index load_index(const corpus::Workspace& ws, const std::string& name);
retrieval::TextLookup chunk_lookup(const corpus::Workspace& ws);

std::vector<codegen::GenerationTask> load_tasks(const corpus::Workspace& ws);

struct GenerateSummary {
  std::size_t generated = 0;
  std::vector<std::string> failed;
};
GenerateSummary generate(Env& env, const std::string& task_id = {});

/// PCL report over the annotations for `cell` (empty: unkeyed annotations).
/// Returns nullopt when there are no annotations.
std::optional<eval::EvalReport> evaluate(Env& env, const std::string& cell = {});

/// Removes every derived directory.
void clear_derived(const corpus::Workspace& ws);

struct RunSummary {
  IngestSummary ingest;
  std::size_t pre_chunks = 0;
  AugmentSummary augment;
  std::size_t split_chunks = 0;
  RenovateSummary renovate;
  std::size_t final_chunks = 0;
  GenerateSummary generate;
  std::optional<eval::EvalReport> report;
  std::size_t replay_misses = 0;

  /// Stage failures that make the run unsuccessful.
  bool ok() const { return generate.failed.empty() && replay_misses == 0; }
};

/// All stages in order: ingest, pre index, augment, split, renovate, final
/// index, generate, eval.
RunSummary run(Env& env);

std::string summary_text(const RunSummary& s);

/// Applies a matrix group and sweep point on top of a base config.
config::Config cell_config(const config::Config& base, const eval::ExperimentConfig& cell);

/// Runs the full pipeline per cell in matrix/<cell_key>/ and scores each
/// with the annotations keyed to that cell.
std::vector<eval::MatrixCell> run_matrix(const corpus::Workspace& ws, const config::Config& base,
                                         Backends& backends,
                                         const std::vector<eval::ExperimentConfig>& groups,
                                         const eval::Sweep& sweep);

}  // namespace ragcg::pipeline
