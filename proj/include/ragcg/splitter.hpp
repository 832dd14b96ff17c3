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
#include <string>
#include <string_view>
#include <vector>

#include "ragcg/corpus.hpp"
#include "ragcg/gateway.hpp"
#include "ragcg/prompts.hpp"

namespace ragcg::splitter {

struct LabeledText {
  std::string topic_label;
  std::string text;

  friend bool operator==(const LabeledText&, const LabeledText&) = default;
};

struct SplitReply {
  std::vector<LabeledText> chunks;
  std::string carryover;  // trailing incomplete paragraph, possibly empty
};

struct SplitResult {
  std::vector<LabeledText> chunks;
  std::string carryover;
  int source_page = 1;
  bool fallback_applied = false;
  int attempts = 0;
  std::vector<std::string> flags;
};

/// Reply markup: each chunk starts with a line "=== CHUNK: <label> ===" and the
/// trailing incomplete paragraph follows a line "=== INCOMPLETE ===".
/// Throws Errc::UnparseableSplitReply.
SplitReply parse_split_reply(std::string_view reply);

/// Every chunk must be a substring of the whitespace-normalized input and the
/// normalized concatenation of chunks and carryover must equal the normalized
/// input. Throws Errc::ContentLossDetected.
void check_content(const SplitReply& reply, std::string_view input);

/// The text actually split: carryover prepended to the page.
std::string combine(std::string_view carryover, std::string_view segment);

struct SemanticOptions {
  int retries = 2;
  std::size_t fallback_chunk_size = 500;
  std::string model_id;
};

/// Asks the model to split carryover + segment. Malformed or lossy replies are
/// retried; after `retries` retries the fixed-size splitter is used and the
/// result is flagged. Backend errors propagate.
SplitResult split_segment(std::string_view segment_text, std::string_view carryover_in,
                          int source_page, llm::ChatBackend& backend,
                          const prompts::PromptLibrary& prompts, const SemanticOptions& opts = {});

/// A fixed-size chunk with its [begin, end) character positions.
struct FixedChunk {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string text;
};

/// Chunks of at most chunk_size characters; consecutive chunks share
/// floor(chunk_size * overlap_ratio) characters. Requires chunk_size >= 1 and
/// overlap_ratio in [0, 1).
std::vector<FixedChunk> split_fixed(std::string_view text, std::size_t chunk_size,
                                    double overlap_ratio);

/// Same contract measured in whitespace-delimited words; chunk text is the
/// words joined by single spaces and positions are word indices.
std::vector<FixedChunk> split_fixed_words(std::string_view text, std::size_t chunk_size,
                                          double overlap_ratio);

enum class Strategy { Semantic, Fixed };
enum class ChunkUnit { Chars, Words };

Strategy parse_strategy(std::string_view s);
ChunkUnit parse_unit(std::string_view s);

struct DocumentOptions {
  Strategy strategy = Strategy::Semantic;
  std::size_t chunk_size = 500;
  double overlap = 0.0;
  ChunkUnit unit = ChunkUnit::Chars;
  std::string collection{corpus::collection::kDoc};
  std::string id_prefix;  // defaults to "<doc_id>/"
  SemanticOptions semantic;
};

/// Splits a whole document page by page, threading carryover, and returns raw
/// chunks with page spans. The fixed strategy makes no model calls, so
/// `backend` and `prompts` may be null for it.
std::vector<corpus::Chunk> split_document(const corpus::Document& doc, const DocumentOptions& opts,
                                          llm::ChatBackend* backend,
                                          const prompts::PromptLibrary* prompts);

}  // namespace ragcg::splitter
