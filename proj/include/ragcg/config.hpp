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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

// Workspace configuration. Values merge in order: built-in defaults, the INI
// file, RAGCG_<SECTION>_<KEY> environment variables, then command-line flags.
namespace ragcg::config {

enum class BackendMode { Live, Replay, Record };
std::string_view backend_mode_name(BackendMode m) noexcept;

struct Config {
  // [workspace]
  std::filesystem::path workspace = ".";
  std::uint64_t seed = 42;

  // [backend]
  BackendMode backend = BackendMode::Replay;
  std::string fixtures = "replay.jsonl";  // relative to the workspace
  std::string model_id = "gpt-4";
  std::string chat_url = "https://api.openai.com/v1/chat/completions";
  std::string embed_url = "https://api.openai.com/v1/embeddings";
  std::string embedder = "mock";  // mock | live
  std::string embed_model = "text-embedding-ada-002";
  std::size_t embed_dims = 1536;
  std::string api_key_env = "OPENAI_API_KEY";
  std::string auth_header = "Authorization";
  int timeout_s = 120;
  int max_attempts = 3;
  std::size_t max_concurrency = 4;

  // [splitter]
  std::string strategy = "semantic";  // semantic | fixed
  std::size_t chunk_size = 500;
  double overlap = 0.0;
  std::string unit = "chars";  // chars | words
  int split_retries = 2;
  std::size_t pre_chunk_size = 500;
  double pre_overlap = 0.1;
  std::string page_marker;  // regex; empty means form feeds only

  // [renovator]
  std::string renovation = "full";  // off | no-gate | full
  double constant = 0.0;
  int score_retries = 1;
  std::size_t workers = 1;

  // [augmentor]
  std::size_t augment_n = 2;
  std::size_t budget = 5000;

  // [retrieval]
  std::size_t top_k = 3;
  std::size_t context_chars = 4000;

  // [codegen]
  std::string planner = "chateda";  // chateda | direct
  std::string method = "rag";       // rag | react
  std::string comment_marker = "#";
  std::size_t prompt_chars = 24000;
  int plan_retries = 1;
  int react_max_steps = 4;

  // [prompts]
  bool ikec = true;
  std::string prompt_dir;  // empty: the bundled prompts

  // [eval]
  std::string annotations = "sources/annotations.jsonl";
  std::string verdicts = "sources/verdicts.jsonl";
};

/// Names of all recognised keys, "section.key".
std::vector<std::string> keys();

/// Sets one key from its textual form. Throws Errc::ConfigError on unknown
/// keys or unparseable values.
void set(Config& cfg, std::string_view key, std::string_view value);

/// Applies an INI file. Throws Errc::ConfigError.
void apply_file(Config& cfg, const std::filesystem::path& path);

using Environment = std::map<std::string, std::string>;
/// Snapshot of the process environment.
Environment process_environment();
/// Applies RAGCG_<SECTION>_<KEY> overrides (dashes in keys become
/// underscores). Unknown RAGCG_* variables are ignored.
void apply_env(Config& cfg, const Environment& env);

/// Defaults, then `file` when given, then env, then `flags` ("section.key" ->
/// value).
Config load(const std::optional<std::filesystem::path>& file, const Environment& env,
            const std::vector<std::pair<std::string, std::string>>& flags);

/// Checks value ranges and backend prerequisites: replay needs an existing
/// fixture store, live and record need an API key. Throws Errc::ConfigError.
void validate(const Config& cfg, const Environment& env);

/// Every setting that influences outputs, for provenance.
nlohmann::ordered_json snapshot(const Config& cfg);

std::filesystem::path fixtures_path(const Config& cfg);

}  // namespace ragcg::config
