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

#include "ragcg/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "ragcg/error.hpp"
#include "ragcg/text.hpp"

extern char** environ;

namespace ragcg::config {

using nlohmann::ordered_json;

std::string_view backend_mode_name(BackendMode m) noexcept {
  switch (m) {
    case BackendMode::Live: return "live";
    case BackendMode::Replay: return "replay";
    case BackendMode::Record: return "record";
  }
  return "replay";
}

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view want) {
  throw Error(Errc::ConfigError, fmt::format("{}: '{}' is not {}", key, value, want));
}

template <typename T>
T parse_number(std::string_view key, std::string_view value, std::string_view want) {
  const std::string v = text::trim(value);
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size()) bad_value(key, value, want);
  return out;
}

std::size_t parse_size(std::string_view key, std::string_view value) {
  return parse_number<std::size_t>(key, value, "a non-negative integer");
}

int parse_int(std::string_view key, std::string_view value) {
  return parse_number<int>(key, value, "an integer");
}

double parse_double(std::string_view key, std::string_view value) {
  // from_chars for double is missing from older libstdc++
  const std::string v = text::trim(value);
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(d)) bad_value(key, value, "a finite number");
    return d;
  } catch (const std::logic_error&) {
    bad_value(key, value, "a finite number");
  }
}

bool parse_bool(std::string_view key, std::string_view value) {
  std::string v = text::trim(value);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, value, "a boolean");
}

std::string parse_choice(std::string_view key, std::string_view value,
                         std::initializer_list<std::string_view> choices) {
  const std::string v = text::trim(value);
  for (auto c : choices) {
    if (v == c) return v;
  }
  std::vector<std::string> names(choices.begin(), choices.end());
  bad_value(key, value, "one of " + text::join(names, "|"));
}

struct KeyDef {
  std::string name;
  std::function<void(Config&, std::string_view)> set;
  std::function<ordered_json(const Config&)> get;  // null: not part of the snapshot
};

#define RAGCG_SIZE(key, field)                                                         \
  KeyDef{key, [](Config& c, std::string_view v) { c.field = parse_size(key, v); },     \
         [](const Config& c) { return ordered_json(c.field); }}
#define RAGCG_INT(key, field)                                                          \
  KeyDef{key, [](Config& c, std::string_view v) { c.field = parse_int(key, v); },      \
         [](const Config& c) { return ordered_json(c.field); }}
#define RAGCG_DOUBLE(key, field)                                                       \
  KeyDef{key, [](Config& c, std::string_view v) { c.field = parse_double(key, v); },   \
         [](const Config& c) { return ordered_json(c.field); }}
#define RAGCG_BOOL(key, field)                                                         \
  KeyDef{key, [](Config& c, std::string_view v) { c.field = parse_bool(key, v); },     \
         [](const Config& c) { return ordered_json(c.field); }}
#define RAGCG_STRING(key, field)                                                       \
  KeyDef{key, [](Config& c, std::string_view v) { c.field = text::trim(v); },          \
         [](const Config& c) { return ordered_json(c.field); }}
#define RAGCG_CHOICE(key, field, ...)                                                  \
  KeyDef{key,                                                                          \
         [](Config& c, std::string_view v) { c.field = parse_choice(key, v, __VA_ARGS__); }, \
         [](const Config& c) { return ordered_json(c.field); }}

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = {
      KeyDef{"workspace.path",
             [](Config& c, std::string_view v) { c.workspace = text::trim(v); }, nullptr},
      KeyDef{"workspace.seed",
             [](Config& c, std::string_view v) {
               c.seed = parse_number<std::uint64_t>("workspace.seed", v, "an unsigned integer");
             },
             [](const Config& c) { return ordered_json(c.seed); }},

      KeyDef{"backend.mode",
             [](Config& c, std::string_view v) {
               const auto m = parse_choice("backend.mode", v, {"live", "replay", "record"});
               c.backend = m == "live" ? BackendMode::Live
                           : m == "record" ? BackendMode::Record
                                           : BackendMode::Replay;
             },
             nullptr},
      KeyDef{"backend.fixtures", [](Config& c, std::string_view v) { c.fixtures = text::trim(v); },
             nullptr},
      RAGCG_STRING("backend.model_id", model_id),
      KeyDef{"backend.chat_url", [](Config& c, std::string_view v) { c.chat_url = text::trim(v); },
             nullptr},
      KeyDef{"backend.embed_url", [](Config& c, std::string_view v) { c.embed_url = text::trim(v); },
             nullptr},
      RAGCG_CHOICE("backend.embedder", embedder, {"mock", "live"}),
      RAGCG_STRING("backend.embed_model", embed_model),
      RAGCG_SIZE("backend.embed_dims", embed_dims),
      KeyDef{"backend.api_key_env",
             [](Config& c, std::string_view v) { c.api_key_env = text::trim(v); }, nullptr},
      KeyDef{"backend.auth_header",
             [](Config& c, std::string_view v) { c.auth_header = text::trim(v); }, nullptr},
      KeyDef{"backend.timeout_s",
             [](Config& c, std::string_view v) { c.timeout_s = parse_int("backend.timeout_s", v); },
             nullptr},
      KeyDef{"backend.max_attempts",
             [](Config& c, std::string_view v) {
               c.max_attempts = parse_int("backend.max_attempts", v);
             },
             nullptr},
      KeyDef{"backend.max_concurrency",
             [](Config& c, std::string_view v) {
               c.max_concurrency = parse_size("backend.max_concurrency", v);
             },
             nullptr},

      RAGCG_CHOICE("splitter.strategy", strategy, {"semantic", "fixed"}),
      RAGCG_SIZE("splitter.chunk_size", chunk_size),
      RAGCG_DOUBLE("splitter.overlap", overlap),
      RAGCG_CHOICE("splitter.unit", unit, {"chars", "words"}),
      RAGCG_INT("splitter.retries", split_retries),
      RAGCG_SIZE("splitter.pre_chunk_size", pre_chunk_size),
      RAGCG_DOUBLE("splitter.pre_overlap", pre_overlap),
      RAGCG_STRING("splitter.page_marker", page_marker),

      RAGCG_CHOICE("renovator.mode", renovation, {"off", "no-gate", "full"}),
      RAGCG_DOUBLE("renovator.constant", constant),
      RAGCG_INT("renovator.score_retries", score_retries),
      KeyDef{"renovator.workers",
             [](Config& c, std::string_view v) { c.workers = parse_size("renovator.workers", v); },
             nullptr},

      RAGCG_SIZE("augmentor.n", augment_n),
      RAGCG_SIZE("augmentor.budget", budget),

      RAGCG_SIZE("retrieval.top_k", top_k),
      RAGCG_SIZE("retrieval.context_chars", context_chars),

      RAGCG_CHOICE("codegen.planner", planner, {"chateda", "direct"}),
      RAGCG_CHOICE("codegen.method", method, {"rag", "react"}),
      RAGCG_STRING("codegen.comment_marker", comment_marker),
      RAGCG_SIZE("codegen.prompt_chars", prompt_chars),
      RAGCG_INT("codegen.plan_retries", plan_retries),
      RAGCG_INT("codegen.react_max_steps", react_max_steps),

      RAGCG_BOOL("prompts.ikec", ikec),
      KeyDef{"prompts.dir", [](Config& c, std::string_view v) { c.prompt_dir = text::trim(v); },
             nullptr},

      KeyDef{"eval.annotations",
             [](Config& c, std::string_view v) { c.annotations = text::trim(v); }, nullptr},
      KeyDef{"eval.verdicts", [](Config& c, std::string_view v) { c.verdicts = text::trim(v); },
             nullptr},
  };
  return table;
}

#undef RAGCG_SIZE
#undef RAGCG_INT
#undef RAGCG_DOUBLE
#undef RAGCG_BOOL
#undef RAGCG_STRING
#undef RAGCG_CHOICE

std::string env_name(std::string_view key) {
  std::string out = "RAGCG_";
  for (char c : key) {
    out += (c == '.' || c == '-') ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return out;
}

}  // namespace

std::vector<std::string> keys() {
  std::vector<std::string> out;
  for (const auto& k : key_table()) out.push_back(k.name);
  return out;
}

void set(Config& cfg, std::string_view key, std::string_view value) {
  for (const auto& k : key_table()) {
    if (k.name == key) {
      k.set(cfg, value);
      return;
    }
  }
  throw Error(Errc::ConfigError, fmt::format("unknown configuration key '{}'", key));
}

void apply_file(Config& cfg, const std::filesystem::path& path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(Errc::ConfigError, e.what());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw Error(Errc::ConfigError,
                  fmt::format("{}: key '{}' outside any section", path.string(), section));
    }
    for (const auto& [key, value] : body) {
      set(cfg, section + "." + key, value.get_value<std::string>());
    }
  }
}

Environment process_environment() {
  Environment env;
  for (char** e = environ; e && *e; ++e) {
    std::string_view kv(*e);
    const auto eq = kv.find('=');
    if (eq == std::string_view::npos) continue;
    env.emplace(std::string(kv.substr(0, eq)), std::string(kv.substr(eq + 1)));
  }
  return env;
}

void apply_env(Config& cfg, const Environment& env) {
  for (const auto& k : key_table()) {
    auto it = env.find(env_name(k.name));
    if (it != env.end()) k.set(cfg, it->second);
  }
}

Config load(const std::optional<std::filesystem::path>& file, const Environment& env,
            const std::vector<std::pair<std::string, std::string>>& flags) {
  Config cfg;
  if (file) apply_file(cfg, *file);
  apply_env(cfg, env);
  for (const auto& [k, v] : flags) set(cfg, k, v);
  return cfg;
}

std::filesystem::path fixtures_path(const Config& cfg) {
  std::filesystem::path p(cfg.fixtures);
  return p.is_absolute() ? p : cfg.workspace / p;
}

void validate(const Config& cfg, const Environment& env) {
  auto fail = [](std::string msg) { throw Error(Errc::ConfigError, std::move(msg)); };
  if (cfg.chunk_size == 0) fail("splitter.chunk_size must be positive");
  if (cfg.pre_chunk_size == 0) fail("splitter.pre_chunk_size must be positive");
  if (cfg.overlap < 0.0 || cfg.overlap >= 1.0) fail("splitter.overlap must be in [0, 1)");
  if (cfg.pre_overlap < 0.0 || cfg.pre_overlap >= 1.0) fail("splitter.pre_overlap must be in [0, 1)");
  if (cfg.split_retries < 0) fail("splitter.retries must be >= 0");
  if (cfg.top_k == 0) fail("retrieval.top_k must be positive");
  if (cfg.augment_n == 0) fail("augmentor.n must be positive");
  if (cfg.max_concurrency == 0) fail("backend.max_concurrency must be positive");
  if (cfg.workers == 0) fail("renovator.workers must be positive");
  if (cfg.max_attempts < 1) fail("backend.max_attempts must be >= 1");
  if (cfg.comment_marker.empty()) fail("codegen.comment_marker must not be empty");
  if (cfg.react_max_steps < 1) fail("codegen.react_max_steps must be >= 1");

  const bool needs_key = cfg.backend != BackendMode::Replay || cfg.embedder == "live";
  if (needs_key) {
    auto it = env.find(cfg.api_key_env);
    if (it == env.end() || it->second.empty()) {
      fail(fmt::format("{} mode needs an API key in ${}", backend_mode_name(cfg.backend),
                       cfg.api_key_env));
    }
  }
  if (cfg.backend == BackendMode::Replay) {
    const auto p = fixtures_path(cfg);
    std::error_code ec;
    if (!std::filesystem::is_regular_file(p, ec)) {
      fail(fmt::format("replay mode needs a fixture store; {} does not exist", p.string()));
    }
  }
}

ordered_json snapshot(const Config& cfg) {
  ordered_json j;
  for (const auto& k : key_table()) {
    if (k.get) j[k.name] = k.get(cfg);
  }
  return j;
}

}  // namespace ragcg::config
