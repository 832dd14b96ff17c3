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

#include "ragcg/renovator.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "ragcg/error.hpp"
#include "ragcg/parallel.hpp"
#include "ragcg/text.hpp"

namespace ragcg::renovator {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view verdict_name(Verdict v) noexcept {
  switch (v) {
    case Verdict::Pending: return "pending";
    case Verdict::Accepted: return "accepted";
    case Verdict::Rejected: return "rejected";
  }
  return "pending";
}

namespace {

Verdict parse_verdict(std::string_view s) {
  if (s == "pending") return Verdict::Pending;
  if (s == "accepted") return Verdict::Accepted;
  if (s == "rejected") return Verdict::Rejected;
  throw Error(Errc::CorruptStore, fmt::format("unknown verdict '{}'", s));
}

template <typename T>
void put_optional(ordered_json& j, const char* key, const std::optional<T>& v) {
  if (v) {
    j[key] = *v;
  } else {
    j[key] = nullptr;
  }
}

std::optional<double> get_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

/// Contents of every ``` fenced block, in order.
std::vector<std::string> fenced_blocks(std::string_view reply) {
  std::vector<std::string> blocks;
  std::optional<std::string> open;
  for (const auto& line : text::lines(reply)) {
    const std::string t = text::trim(line);
    if (text::starts_with(t, "```")) {
      if (open) {
        blocks.push_back(std::move(*open));
        open.reset();
      } else {
        open.emplace();
      }
      continue;
    }
    if (open) {
      *open += line;
      *open += '\n';
    }
  }
  return blocks;
}

double number_from(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = text::trim(v.get<std::string>());
    std::size_t used = 0;
    double d = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters in number");
    return d;
  }
  throw std::invalid_argument("not a number");
}

CodrcScore score_from_json(const json& j) {
  CodrcScore score;
  const double raw = number_from(j.at("confidence"));
  if (!std::isfinite(raw)) throw std::invalid_argument("confidence is not finite");
  score.conf = quantize_conf(raw, &score.clamped);
  if (j.contains("entities")) {
    for (const auto& e : j.at("entities")) {
      const double cat = number_from(e.at("category"));
      if (cat != 1.0 && cat != 2.0 && cat != 3.0) {
        throw std::invalid_argument(fmt::format("entity category {} not in 1..3", cat));
      }
      score.entities.push_back(
          {e.at("text").get<std::string>(), static_cast<EntityCategory>(static_cast<int>(cat))});
    }
  }
  return score;
}

llm::ChatRequest make_request(std::vector<llm::ChatMessage> messages, const Options& opts) {
  llm::ChatRequest req;
  req.model_id = opts.model_id;
  req.messages = std::move(messages);
  return req;
}

}  // namespace

ordered_json to_json(const RenovationRecord& r) {
  ordered_json j;
  j["chunk_id"] = r.chunk_id;
  j["verdict"] = verdict_name(r.verdict);
  put_optional(j, "conf", r.conf);
  j["grow"] = r.grow;
  put_optional(j, "cdiff", r.cdiff);
  put_optional(j, "gdiff", r.gdiff);
  ordered_json ents = ordered_json::array();
  for (const auto& e : r.entities) {
    ordered_json ej;
    ej["text"] = e.text;
    ej["category"] = static_cast<int>(e.category);
    ents.push_back(std::move(ej));
  }
  j["entities"] = std::move(ents);
  j["flags"] = r.flags;
  j["pre_text"] = r.pre_text;
  j["post_text"] = r.post_text;
  return j;
}

RenovationRecord record_from_json(const json& j) {
  RenovationRecord r;
  r.chunk_id = j.at("chunk_id").get<std::string>();
  r.verdict = parse_verdict(j.at("verdict").get<std::string>());
  r.conf = get_optional(j, "conf");
  r.grow = j.at("grow").get<double>();
  r.cdiff = get_optional(j, "cdiff");
  r.gdiff = get_optional(j, "gdiff");
  for (const auto& e : j.at("entities")) {
    r.entities.push_back({e.at("text").get<std::string>(),
                          static_cast<EntityCategory>(e.at("category").get<int>())});
  }
  r.flags = j.value("flags", std::vector<std::string>{});
  r.pre_text = j.at("pre_text").get<std::string>();
  r.post_text = j.at("post_text").get<std::string>();
  return r;
}

double growth_ratio(std::string_view pre, std::string_view post) {
  const auto pre_n = text::count_chars(pre);
  if (pre_n == 0) throw Error(Errc::InvalidRequest, "growth ratio of empty pre-renovation text");
  const auto post_n = text::count_chars(post);
  return (static_cast<double>(post_n) - static_cast<double>(pre_n)) / static_cast<double>(pre_n);
}

double quantize_conf(double raw, bool* clamped) {
  const double c = std::clamp(raw, 0.0, 10.0);
  if (clamped) *clamped = c != raw;
  return std::floor(c * 10.0 + 0.5) / 10.0;
}

CodrcScore parse_codrc_reply(std::string_view reply) {
  std::vector<std::string> candidates = fenced_blocks(reply);
  candidates.emplace_back(reply);
  const auto open = reply.find('{');
  const auto close = reply.rfind('}');
  if (open != std::string_view::npos && close != std::string_view::npos && close > open) {
    candidates.emplace_back(reply.substr(open, close - open + 1));
  }
  std::string last_error = "no JSON object with a confidence field";
  for (const auto& c : candidates) {
    try {
      const json j = json::parse(c);
      if (!j.is_object() || !j.contains("confidence")) continue;
      return score_from_json(j);
    } catch (const std::exception& e) {
      last_error = e.what();
    }
  }
  throw Error(Errc::UnparseableScoreReply, last_error);
}

std::string renovate_chunk(const corpus::Chunk& chunk, std::string_view context,
                           llm::ChatBackend& backend, const prompts::PromptLibrary& prompts,
                           const Options& opts, std::vector<std::string>& flags) {
  auto req = make_request(
      prompts.render("renovation", {{"chunk", chunk.text}, {"context", std::string(context)}},
                     opts.ikec),
      opts);
  std::string reply = text::trim(backend.complete(req));
  if (reply.empty()) {
    flags.push_back("empty_renovation");
    return chunk.text;
  }
  return reply;
}

CodrcScore score_codrc(std::string_view pre_text, std::string_view post_text,
                       std::string_view context, llm::ChatBackend& backend,
                       const prompts::PromptLibrary& prompts, const Options& opts) {
  if (pre_text.empty() || post_text.empty()) {
    throw Error(Errc::InvalidRequest, "credibility scoring needs both texts");
  }
  auto req = make_request(prompts.render("codrc",
                                         {{"pre", std::string(pre_text)},
                                          {"post", std::string(post_text)},
                                          {"context", std::string(context)}},
                                         false),
                          opts);
  const int attempts = 1 + std::max(0, opts.score_retries);
  std::string last;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    try {
      return parse_codrc_reply(backend.complete(req));
    } catch (const Error& e) {
      if (e.code() != Errc::UnparseableScoreReply) throw;
      last = e.what();
      spdlog::warn("credibility reply attempt {} unparseable: {}", attempt, last);
    }
  }
  throw Error(Errc::UnparseableScoreReply, last);
}

namespace {

/// Mean and population standard deviation; exactly (v, 0) for a constant series.
std::pair<double, double> mean_std(const std::vector<double>& xs) {
  const bool constant = std::all_of(xs.begin(), xs.end(), [&](double x) { return x == xs.front(); });
  if (constant) return {xs.front(), 0.0};
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size()))};
}

}  // namespace

CorpusStats compute_stats(const std::vector<RenovationRecord>& records, double constant) {
  if (!std::isfinite(constant)) throw Error(Errc::InvalidConstant, "constant must be finite");
  std::vector<double> confs;
  std::vector<double> grows;
  for (const auto& r : records) {
    if (!r.conf) continue;
    confs.push_back(*r.conf);
    grows.push_back(r.grow);
  }
  if (confs.size() < 2) {
    throw Error(Errc::InsufficientRecords,
                fmt::format("{} scored record(s); at least 2 are needed", confs.size()));
  }
  CorpusStats s;
  std::tie(s.mean_conf, s.std_conf) = mean_std(confs);
  std::tie(s.mean_grow, s.std_grow) = mean_std(grows);
  s.constant = constant;
  return s;
}

void decide(RenovationRecord& record, const CorpusStats& stats) {
  record.gdiff = stats.std_grow == 0.0 ? 0.0 : (record.grow - stats.mean_grow) / stats.std_grow;
  if (!record.conf) {
    record.cdiff.reset();
    record.verdict = Verdict::Rejected;
    return;
  }
  record.cdiff = stats.std_conf == 0.0 ? 0.0 : (*record.conf - stats.mean_conf) / stats.std_conf;
  record.verdict = (*record.cdiff - *record.gdiff >= stats.constant) ? Verdict::Accepted
                                                                      : Verdict::Rejected;
}

std::string successor_id(std::string_view chunk_id) { return std::string(chunk_id) + "/r"; }

CorpusResult renovate_corpus(const std::vector<corpus::Chunk>& chunks, llm::ChatBackend& backend,
                             const prompts::PromptLibrary& prompts, const ContextProvider& context,
                             double constant, const Options& opts) {
  if (!std::isfinite(constant)) throw Error(Errc::InvalidConstant, "constant must be finite");
  CorpusResult out;
  out.records.resize(chunks.size());

  // phase 1: renovate and score, independently per chunk
  parallel_for_index(chunks.size(), opts.workers, [&](std::size_t i) {
    const auto& chunk = chunks[i];
    RenovationRecord& rec = out.records[i];
    rec.chunk_id = chunk.chunk_id;
    rec.pre_text = chunk.text;
    rec.post_text = chunk.text;
    try {
      const std::string ctx = context ? context(chunk) : std::string{};
      rec.post_text = renovate_chunk(chunk, ctx, backend, prompts, opts, rec.flags);
      rec.grow = growth_ratio(rec.pre_text, rec.post_text);
      if (!opts.gated) return;
      try {
        CodrcScore score = score_codrc(rec.pre_text, rec.post_text, ctx, backend, prompts, opts);
        rec.entities = std::move(score.entities);
        rec.conf = score.conf;
        if (score.clamped) rec.flags.push_back("conf_clamped");
      } catch (const Error& e) {
        if (e.code() != Errc::UnparseableScoreReply) throw;
        rec.flags.push_back("conf_unavailable");
      }
    } catch (const std::exception& e) {
      spdlog::warn("renovation of {} failed: {}", chunk.chunk_id, e.what());
      rec.post_text = rec.pre_text;
      rec.grow = 0.0;
      rec.conf.reset();
      rec.flags.push_back(std::string("renovation_failed: ") + e.what());
    }
  });

  // phase 2: statistics over the complete batch, then decisions
  if (!opts.gated) {
    for (auto& rec : out.records) {
      const bool failed = std::any_of(rec.flags.begin(), rec.flags.end(), [](const std::string& f) {
        return text::starts_with(f, "renovation_failed");
      });
      rec.verdict = failed ? Verdict::Rejected : Verdict::Accepted;
      rec.flags.push_back("ungated");
    }
  } else {
    try {
      out.stats = compute_stats(out.records, constant);
    } catch (const Error& e) {
      if (e.code() != Errc::InsufficientRecords) throw;
      spdlog::warn("renovation batch not decidable: {}", e.what());
    }
    for (auto& rec : out.records) {
      if (out.stats) {
        decide(rec, *out.stats);
      } else {
        rec.verdict = Verdict::Rejected;
        rec.flags.push_back("insufficient_records");
      }
    }
  }

  for (std::size_t i = 0; i < chunks.size(); ++i) {
    const auto& rec = out.records[i];
    corpus::Chunk c = chunks[i];
    c.chunk_id = successor_id(chunks[i].chunk_id);
    c.collection = std::string(corpus::collection::kRenovated);
    c.parent_id = chunks[i].chunk_id;
    c.text = rec.adopted_text();
    c.state = corpus::ChunkState::RenovatedPending;
    c.embedding.reset();
    c.flags = {rec.verdict == Verdict::Accepted ? "renovation_accepted" : "renovation_rejected"};
    out.successors.push_back(std::move(c));
  }
  return out;
}

}  // namespace ragcg::renovator
