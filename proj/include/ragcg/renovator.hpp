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

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragcg/corpus.hpp"
#include "ragcg/gateway.hpp"
#include "ragcg/prompts.hpp"

// Chunk renovation with credibility scoring and corpus-statistical adoption.
//
// Each chunk is rewritten by the model, the rewrite is scored for how much of
// the added content is inferable (confidence 0-10), and the rewrite is adopted
// when the confidence z-score minus the growth z-score meets a threshold:
//
//   grow  = (count(post) - count(pre)) / count(pre)
//   cdiff = (conf - mean_conf) / std_conf
//   gdiff = (grow - mean_grow) / std_grow
//   accept iff cdiff - gdiff >= constant
//
// Statistics are population statistics over the whole batch, and are only
// computed once every record in the batch has been scored.
namespace ragcg::renovator {

/// How a missing entity can be accounted for.
enum class EntityCategory : int {
  FromPriorInformation = 1,
  FromBackgroundKnowledge = 2,
  NotInferable = 3,
};

struct MissingEntity {
  std::string text;
  EntityCategory category = EntityCategory::NotInferable;

  friend bool operator==(const MissingEntity&, const MissingEntity&) = default;
};

enum class Verdict { Pending, Accepted, Rejected };
std::string_view verdict_name(Verdict v) noexcept;

struct RenovationRecord {
  std::string chunk_id;
  std::string pre_text;
  std::string post_text;
  std::vector<MissingEntity> entities;
  std::optional<double> conf;  // unset when no usable score was obtained
  double grow = 0.0;
  std::optional<double> cdiff;
  std::optional<double> gdiff;
  Verdict verdict = Verdict::Pending;
  std::vector<std::string> flags;

  /// Text the corpus keeps: post_text if accepted, pre_text otherwise.
  const std::string& adopted_text() const noexcept {
    return verdict == Verdict::Accepted ? post_text : pre_text;
  }
};

nlohmann::ordered_json to_json(const RenovationRecord& r);
RenovationRecord record_from_json(const nlohmann::json& j);

struct CorpusStats {
  double mean_conf = 0.0;
  double std_conf = 0.0;
  double mean_grow = 0.0;
  double std_grow = 0.0;
  double constant = 0.0;
};

/// Text growth ratio over Unicode scalar counts. `pre` must be non-empty.
double growth_ratio(std::string_view pre, std::string_view post);

/// Clamps to [0, 10] and rounds half-up to one decimal. Sets *clamped when the
/// raw value was out of range.
double quantize_conf(double raw, bool* clamped = nullptr);

struct CodrcScore {
  std::vector<MissingEntity> entities;
  double conf = 0.0;
  bool clamped = false;
};

/// Extracts {"entities": [{text, category}], "confidence": x} from the first
/// fenced JSON block that carries a confidence (or from the bare reply).
/// Throws Errc::UnparseableScoreReply.
CodrcScore parse_codrc_reply(std::string_view reply);

struct Options {
  bool ikec = true;
  /// no-gate adopts every renovation without scoring
  bool gated = true;
  int score_retries = 1;
  std::string model_id;
  std::size_t workers = 1;
};

/// Returns the model's renovated text, or pre_text with an "empty_renovation"
/// flag appended to `flags` when the reply is blank.
std::string renovate_chunk(const corpus::Chunk& chunk, std::string_view context,
                           llm::ChatBackend& backend, const prompts::PromptLibrary& prompts,
                           const Options& opts, std::vector<std::string>& flags);

/// Presents post as the source and pre as its summary, then parses entities
/// and a confidence. Throws Errc::UnparseableScoreReply once retries run out.
CodrcScore score_codrc(std::string_view pre_text, std::string_view post_text,
                       std::string_view context, llm::ChatBackend& backend,
                       const prompts::PromptLibrary& prompts, const Options& opts);

/// Population statistics over records that carry a confidence. A constant
/// axis gets std = 0 exactly. Throws Errc::InsufficientRecords for fewer than
/// two scored records and Errc::InvalidConstant for a non-finite constant.
CorpusStats compute_stats(const std::vector<RenovationRecord>& records, double constant);

/// Fills cdiff/gdiff and the verdict. A zero standard deviation makes that
/// axis's z-score 0 for every record. Records without a confidence are
/// rejected.
void decide(RenovationRecord& record, const CorpusStats& stats);

using ContextProvider = std::function<std::string(const corpus::Chunk&)>;

struct CorpusResult {
  std::vector<RenovationRecord> records;
  /// One successor per input chunk, carrying the adopted text, state
  /// renovated_pending, collection "renovated".
  std::vector<corpus::Chunk> successors;
  std::optional<CorpusStats> stats;
};

/// Phase 1 renovates and scores every chunk; phase 2 computes statistics over
/// the finished batch and decides each record. Per-chunk failures become
/// rejections.
CorpusResult renovate_corpus(const std::vector<corpus::Chunk>& chunks, llm::ChatBackend& backend,
                             const prompts::PromptLibrary& prompts, const ContextProvider& context,
                             double constant, const Options& opts);

std::string successor_id(std::string_view chunk_id);

}  // namespace ragcg::renovator
