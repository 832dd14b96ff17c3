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

#include "ragcg/splitter.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "ragcg/error.hpp"
#include "ragcg/text.hpp"

namespace ragcg::splitter {
namespace {

const std::regex& chunk_marker() {
  static const std::regex re(R"(^\s*===\s*CHUNK:\s*(.*?)\s*===\s*$)");
  return re;
}

const std::regex& incomplete_marker() {
  static const std::regex re(R"(^\s*===\s*INCOMPLETE\s*===\s*$)");
  return re;
}

std::vector<std::string> strip_outer_fence(std::vector<std::string> ls) {
  auto first = ls.begin();
  while (first != ls.end() && text::trim(*first).empty()) ++first;
  auto last = ls.end();
  while (last != first && text::trim(*(last - 1)).empty()) --last;
  if (last - first >= 2 && text::starts_with(text::trim(*first), "```") &&
      text::trim(*(last - 1)) == "```") {
    return {first + 1, last - 1};
  }
  return ls;
}

std::size_t overlap_of(std::size_t chunk_size, double overlap_ratio) {
  if (chunk_size < 1) throw Error(Errc::InvalidRequest, "chunk_size must be >= 1");
  if (!(overlap_ratio >= 0.0 && overlap_ratio < 1.0)) {
    throw Error(Errc::InvalidRequest, "overlap ratio must be in [0, 1)");
  }
  return static_cast<std::size_t>(std::floor(static_cast<double>(chunk_size) * overlap_ratio));
}

/// [begin, end) windows over n units.
std::vector<std::pair<std::size_t, std::size_t>> windows(std::size_t n, std::size_t size,
                                                         std::size_t overlap) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t step = size - overlap;
  for (std::size_t start = 0; start < n; start += step) {
    const std::size_t end = std::min(start + size, n);
    out.emplace_back(start, end);
    if (end == n) break;
  }
  return out;
}

std::string chunk_id(const std::string& prefix, char kind, std::size_t i) {
  return fmt::format("{}{}{:03}", prefix, kind, i + 1);
}

/// Fixed split over the whole document; page spans come from character
/// offsets of each page in the joined text.
std::vector<corpus::Chunk> split_document_fixed(const corpus::Document& doc,
                                                const DocumentOptions& opts,
                                                const std::string& prefix) {
  std::vector<corpus::Chunk> out;
  if (opts.unit == ChunkUnit::Words) {
    std::vector<std::string> all_words;
    std::vector<int> word_page;
    for (const auto& p : doc.pages) {
      for (auto& w : text::words(p.text)) {
        all_words.push_back(std::move(w));
        word_page.push_back(p.page_no);
      }
    }
    const auto ov = overlap_of(opts.chunk_size, opts.overlap);
    for (const auto& [b, e] : windows(all_words.size(), opts.chunk_size, ov)) {
      corpus::Chunk c;
      c.chunk_id = chunk_id(prefix, 'f', out.size());
      c.doc_id = doc.doc_id;
      c.collection = opts.collection;
      c.page_span = {word_page[b], word_page[e - 1]};
      c.text = text::join({all_words.begin() + static_cast<std::ptrdiff_t>(b),
                           all_words.begin() + static_cast<std::ptrdiff_t>(e)},
                          " ");
      c.topic_label = fmt::format("fixed {}", out.size() + 1);
      out.push_back(std::move(c));
    }
    return out;
  }

  std::string joined;
  std::vector<std::size_t> page_end;  // exclusive char offset where each page's share ends
  std::size_t chars = 0;
  for (std::size_t i = 0; i < doc.pages.size(); ++i) {
    const std::string piece = (i ? "\n\n" : "") + doc.pages[i].text;
    joined += piece;
    chars += text::count_chars(piece);
    page_end.push_back(chars);
  }
  auto page_at = [&](std::size_t pos) {
    for (std::size_t i = 0; i < page_end.size(); ++i) {
      if (pos < page_end[i]) return doc.pages[i].page_no;
    }
    return doc.pages.back().page_no;
  };
  for (auto& fc : split_fixed(joined, opts.chunk_size, opts.overlap)) {
    if (text::trim(fc.text).empty()) continue;
    corpus::Chunk c;
    c.chunk_id = chunk_id(prefix, 'f', out.size());
    c.doc_id = doc.doc_id;
    c.collection = opts.collection;
    c.page_span = {page_at(fc.begin), page_at(fc.end - 1)};
    c.text = std::move(fc.text);
    c.topic_label = fmt::format("fixed {}", out.size() + 1);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

SplitReply parse_split_reply(std::string_view reply) {
  SplitReply out;
  std::optional<std::string> label;
  bool in_incomplete = false;
  std::vector<std::string> body;
  std::smatch m;

  auto flush = [&] {
    std::string t = text::trim(text::join(body, "\n"));
    body.clear();
    if (in_incomplete) {
      out.carryover = std::move(t);
      return;
    }
    if (!label) {
      if (!t.empty()) throw Error(Errc::UnparseableSplitReply, "text before the first chunk marker");
      return;
    }
    if (t.empty()) throw Error(Errc::UnparseableSplitReply, fmt::format("chunk '{}' is empty", *label));
    out.chunks.push_back({label->empty() ? std::string("untitled") : *label, std::move(t)});
  };

  for (const auto& line : strip_outer_fence(text::lines(reply))) {
    if (std::regex_match(line, m, chunk_marker())) {
      if (in_incomplete) {
        throw Error(Errc::UnparseableSplitReply, "chunk marker after the incomplete marker");
      }
      flush();
      label = m[1].str();
      continue;
    }
    if (std::regex_match(line, incomplete_marker())) {
      if (in_incomplete) throw Error(Errc::UnparseableSplitReply, "repeated incomplete marker");
      flush();
      in_incomplete = true;
      continue;
    }
    body.push_back(line);
  }
  flush();
  if (out.chunks.empty() && out.carryover.empty()) {
    throw Error(Errc::UnparseableSplitReply, "reply contains no chunks");
  }
  return out;
}

void check_content(const SplitReply& reply, std::string_view input) {
  const std::string want = text::normalize_ws(input);
  std::vector<std::string> parts;
  for (const auto& c : reply.chunks) {
    parts.push_back(text::normalize_ws(c.text));
    if (want.find(parts.back()) == std::string::npos) {
      throw Error(Errc::ContentLossDetected,
                  fmt::format("chunk '{}' contains text not present in the input", c.topic_label));
    }
  }
  if (!reply.carryover.empty()) parts.push_back(text::normalize_ws(reply.carryover));
  if (text::join(parts, " ") != want) {
    throw Error(Errc::ContentLossDetected, "chunks do not reproduce the input text");
  }
}

std::string combine(std::string_view carryover, std::string_view segment) {
  const std::string c = text::trim(carryover);
  const std::string s = text::trim(segment);
  if (c.empty()) return s;
  if (s.empty()) return c;
  return c + " " + s;
}

SplitResult split_segment(std::string_view segment_text, std::string_view carryover_in,
                          int source_page, llm::ChatBackend& backend,
                          const prompts::PromptLibrary& prompts, const SemanticOptions& opts) {
  const std::string input = combine(carryover_in, segment_text);
  if (input.empty()) throw Error(Errc::InvalidRequest, "segment and carryover are both empty");

  llm::ChatRequest req;
  req.model_id = opts.model_id;
  req.messages = prompts.render(
      "splitter", {{"segment", input}, {"carryover", text::trim(carryover_in)}}, false);

  SplitResult result;
  result.source_page = source_page;
  const int attempts = 1 + std::max(0, opts.retries);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    result.attempts = attempt;
    const std::string reply = backend.complete(req);
    try {
      SplitReply parsed = parse_split_reply(reply);
      check_content(parsed, input);
      result.chunks = std::move(parsed.chunks);
      result.carryover = std::move(parsed.carryover);
      if (result.chunks.empty()) result.flags.push_back("whole_segment_incomplete");
      return result;
    } catch (const Error& e) {
      spdlog::warn("page {}: split attempt {} rejected: {}", source_page, attempt, e.what());
    }
  }
  result.fallback_applied = true;
  result.flags.push_back("fallback_applied");
  for (auto& fc : split_fixed(input, opts.fallback_chunk_size, 0.0)) {
    result.chunks.push_back({fmt::format("fixed {}", result.chunks.size() + 1), std::move(fc.text)});
  }
  return result;
}

std::vector<FixedChunk> split_fixed(std::string_view text, std::size_t chunk_size,
                                    double overlap_ratio) {
  const std::size_t ov = overlap_of(chunk_size, overlap_ratio);
  const auto bounds = text::char_boundaries(text);
  const std::size_t n = bounds.size() - 1;
  std::vector<FixedChunk> out;
  for (const auto& [b, e] : windows(n, chunk_size, ov)) {
    out.push_back({b, e, std::string(text.substr(bounds[b], bounds[e] - bounds[b]))});
  }
  return out;
}

std::vector<FixedChunk> split_fixed_words(std::string_view text, std::size_t chunk_size,
                                          double overlap_ratio) {
  const std::size_t ov = overlap_of(chunk_size, overlap_ratio);
  const auto ws = text::words(text);
  std::vector<FixedChunk> out;
  for (const auto& [b, e] : windows(ws.size(), chunk_size, ov)) {
    out.push_back({b, e,
                   text::join({ws.begin() + static_cast<std::ptrdiff_t>(b),
                               ws.begin() + static_cast<std::ptrdiff_t>(e)},
                              " ")});
  }
  return out;
}

Strategy parse_strategy(std::string_view s) {
  if (s == "semantic") return Strategy::Semantic;
  if (s == "fixed") return Strategy::Fixed;
  throw Error(Errc::UsageError, fmt::format("unknown split strategy '{}'", s));
}

ChunkUnit parse_unit(std::string_view s) {
  if (s == "chars") return ChunkUnit::Chars;
  if (s == "words") return ChunkUnit::Words;
  throw Error(Errc::UsageError, fmt::format("unknown chunk unit '{}'", s));
}

std::vector<corpus::Chunk> split_document(const corpus::Document& doc, const DocumentOptions& opts,
                                          llm::ChatBackend* backend,
                                          const prompts::PromptLibrary* prompts) {
  const std::string prefix = opts.id_prefix.empty() ? doc.doc_id + "/" : opts.id_prefix;
  if (opts.strategy == Strategy::Fixed) return split_document_fixed(doc, opts, prefix);
  if (!backend || !prompts) throw Error(Errc::InvalidRequest, "semantic split needs a backend");

  std::vector<corpus::Chunk> out;
  auto emit = [&](std::string label, std::string text, corpus::PageSpan span,
                  std::vector<std::string> flags) {
    corpus::Chunk c;
    c.chunk_id = chunk_id(prefix, 'c', out.size());
    c.doc_id = doc.doc_id;
    c.collection = opts.collection;
    c.page_span = span;
    c.topic_label = std::move(label);
    c.text = std::move(text);
    c.flags = std::move(flags);
    out.push_back(std::move(c));
  };

  std::string carry;
  int carry_start = 0;
  std::vector<std::string> carry_flags;  // flags of pages swallowed whole by the carryover
  auto with_carry_flags = [&](std::vector<std::string> flags) {
    for (const auto& f : carry_flags) {
      if (std::find(flags.begin(), flags.end(), f) == flags.end()) flags.push_back(f);
    }
    return flags;
  };
  for (const auto& page : doc.pages) {
    if (text::trim(page.text).empty() && carry.empty()) continue;
    SplitResult r = split_segment(page.text, carry, page.page_no, *backend, *prompts, opts.semantic);
    const std::size_t carry_len = text::normalize_ws(carry).size();
    if (r.fallback_applied) {
      const int first = carry.empty() ? page.page_no : carry_start;
      const auto flags = with_carry_flags(r.flags);
      for (auto& c : r.chunks) {
        emit(std::move(c.topic_label), std::move(c.text), {first, page.page_no}, flags);
      }
      carry.clear();
      carry_flags.clear();
      continue;
    }
    // offsets within the normalized input locate chunks that absorbed the carryover
    std::size_t offset = 0;
    for (auto& c : r.chunks) {
      const std::size_t len = text::normalize_ws(c.text).size();
      const bool absorbs = carry_len > 0 && offset < carry_len;
      const int first = absorbs ? carry_start : page.page_no;
      offset += len + 1;
      emit(std::move(c.topic_label), std::move(c.text), {first, page.page_no},
           absorbs ? with_carry_flags(r.flags) : r.flags);
    }
    const bool still_carried = carry_len > 0 && offset < carry_len;
    if (!r.carryover.empty() && !still_carried) carry_start = page.page_no;
    if (!still_carried) carry_flags.clear();
    if (r.chunks.empty()) {
      for (const auto& f : r.flags) {
        if (std::find(carry_flags.begin(), carry_flags.end(), f) == carry_flags.end()) carry_flags.push_back(f);
      }
    }
    carry = std::move(r.carryover);
  }
  if (!carry.empty()) {
    std::vector<std::string> flags{"terminal_carryover"};
    emit("incomplete paragraph", carry, {carry_start, doc.pages.back().page_no},
         with_carry_flags(std::move(flags)));
  }
  return out;
}

}  // namespace ragcg::splitter
