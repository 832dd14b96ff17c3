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

// Regenerates the replay fixtures under fixtures/ by running the pipeline in
// record mode against the simulated model.
//
//   make_fixtures <fixtures-dir>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <set>
#include <unistd.h>
#include <string>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "ragcg/config.hpp"
#include "ragcg/corpus.hpp"
#include "ragcg/pipeline.hpp"
#include "ragcg/splitter.hpp"
#include "simulated_model.hpp"

namespace fs = std::filesystem;
using namespace ragcg;

namespace {

std::chrono::system_clock::time_point fixed_clock() {
  return std::chrono::system_clock::time_point(std::chrono::seconds(1767225600));  // 2026-01-01
}

/// Rewrites a recorded store keeping one line per fingerprint, in first-seen order.
void compact(const fs::path& raw, const fs::path& out) {
  const auto store = llm::ReplayStore::load(raw);
  std::set<std::string> seen;
  std::string body;
  for (const auto& ex : store.exchanges()) {
    if (!seen.insert(ex.fingerprint).second) continue;
    body += llm::exchange_to_json(ex).dump() + "\n";
  }
  corpus::write_file_atomic(out, body);
  std::cout << fmt::format("{}: {} exchanges\n", out.string(), seen.size());
}

std::string fifty_page_document() {
  static const char* kinds[] = {"layer", "net", "via", "pad", "shape", "rule", "zone", "track"};
  static const char* verbs[] = {"count", "list", "measure", "check", "export", "merge"};
  std::string doc;
  int fn = 0;
  for (int page = 1; page <= 50; ++page) {
    if (page > 1) doc += "\n\f\n";
    // finish the sentence cut at the end of the previous page
    if (page % 4 == 3) doc += "every open design is cheap after the first call.\n\n";
    if (page % 5 == 1) doc += fmt::format("Part {} of the reference\n\n", (page + 4) / 5);
    for (int p = 0; p < 3; ++p, ++fn) {
      const char* kind = kinds[fn % 8];
      const char* verb = verbs[fn % 6];
      doc += fmt::format(
          "{0}_{1}s_{2:03}(design, scope=None) will {0} every {1} of the design inside scope. "
          "The result is a list ordered by {1} name and is empty when nothing matches.\n\n",
          verb, kind, fn);
    }
    if (page % 4 == 2 && page < 50) {
      // cut a sentence across the page break
      doc += fmt::format("Note on page {}: the functions above share one cache, so calling them in a loop over",
                         page);
    } else if (page % 4 == 3) {
      doc += "Cache sizes are configured per session.";
    } else {
      doc += "All functions on this page are read-only.";
    }
  }
  return doc + "\n";
}

void record_splitter_corpus(const fs::path& dir) {
  fs::create_directories(dir);
  const auto text = fifty_page_document();
  corpus::write_file_atomic(dir / "document.txt", text);
  const fs::path raw = dir / "replay.raw.jsonl";
  fs::remove(raw);
  auto rec = std::make_shared<llm::RecordingBackend>(std::make_shared<sim::SimulatedModel>(), raw,
                                                     fixed_clock);
  const auto prompts = prompts::PromptLibrary::load(prompts::PromptLibrary::default_dir());
  const auto doc = corpus::parse_document(text, "reference50");
  splitter::DocumentOptions opts;
  opts.semantic.model_id = "gpt-4";
  const auto chunks = splitter::split_document(doc, opts, rec.get(), &prompts);
  std::cout << fmt::format("splitter corpus: {} pages, {} chunks\n", doc.pages.size(), chunks.size());
  compact(raw, dir / "replay.jsonl");
  fs::remove(raw);
}

void record_workspace(const fs::path& src) {
  const fs::path tmp = fs::temp_directory_path() / fmt::format("ragcg-fixtures-{}", ::getpid());
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  fs::copy(src / "sources", tmp / "sources", fs::copy_options::recursive);
  fs::copy_file(src / "ragcg.ini", tmp / "ragcg.ini");

  auto cfg = config::load(tmp / "ragcg.ini", {}, {});
  cfg.workspace = tmp;
  const fs::path raw = tmp / "replay.raw.jsonl";
  pipeline::Backends backends;
  backends.chat = std::make_shared<llm::RecordingBackend>(std::make_shared<sim::SimulatedModel>(),
                                                          raw, fixed_clock);
  backends.embedder = std::make_shared<llm::MockEmbedder>();
  const auto prompts = pipeline::load_prompts(cfg);

  {
    corpus::Workspace ws(tmp);
    pipeline::Env env{ws, cfg, backends, prompts};
    std::cout << pipeline::summary_text(pipeline::run(env));
  }
  {
    // the ikec-off variant of the default configuration
    auto off = cfg;
    off.ikec = false;
    const fs::path dir = tmp / "ikec-off";
    fs::create_directories(dir);
    fs::copy(tmp / "sources", dir / "sources", fs::copy_options::recursive);
    off.workspace = dir;
    corpus::Workspace ws(dir);
    pipeline::Env env{ws, off, backends, prompts};
    pipeline::run(env);
  }
  {
    corpus::Workspace ws(tmp);
    eval::Sweep sweep{{cfg.chunk_size}, {cfg.top_k}};
    const auto cells = pipeline::run_matrix(ws, cfg, backends, eval::experiment_groups(), sweep);
    std::cout << eval::matrix_table(cells);
  }
  compact(raw, src / "replay.jsonl");
  fs::remove_all(tmp);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixtures <fixtures-dir>\n";
    return 2;
  }
  spdlog::set_level(spdlog::level::warn);
  const fs::path root = argv[1];
  try {
    record_splitter_corpus(root / "splitter50");
    record_workspace(root / "workspace");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
