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

#include "ragcg/augmentor.hpp"

#include <algorithm>
#include <limits>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "ragcg/error.hpp"
#include "ragcg/text.hpp"

namespace ragcg::augmentor {
namespace {

constexpr int kMaxReshuffles = 1000;

std::size_t chars_of(const corpus::Script& s) { return text::count_chars(s.text); }

/// Content of the first fenced block, or the whole reply.
std::string extract_script(std::string_view reply) {
  std::vector<std::string> body;
  bool open = false;
  for (const auto& line : text::lines(reply)) {
    if (text::starts_with(text::trim(line), "```")) {
      if (open) return text::join(body, "\n");
      open = true;
      continue;
    }
    if (open) body.push_back(line);
  }
  return text::trim(reply);
}

}  // namespace

std::uint64_t Rng::below(std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

std::vector<corpus::Script> sample_scripts(const std::vector<corpus::Script>& pool, Rng& rng,
                                           std::size_t budget) {
  std::vector<std::size_t> sizes;
  for (const auto& s : pool) sizes.push_back(chars_of(s));
  std::sort(sizes.begin(), sizes.end());
  if (sizes.size() < kMinSample || sizes[0] + sizes[1] > budget) {
    throw Error(Errc::BudgetInfeasible,
                fmt::format("no two of {} scripts fit within {} characters", pool.size(), budget));
  }

  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int round = 0; round < kMaxReshuffles; ++round) {
    rng.shuffle(order);
    std::vector<corpus::Script> picked;
    std::size_t total = 0;
    for (std::size_t i : order) {
      const std::size_t n = chars_of(pool[i]);
      if (total + n > budget) continue;
      picked.push_back(pool[i]);
      total += n;
      if (picked.size() == kMaxSample) break;
    }
    if (picked.size() >= kMinSample) return picked;
  }
  // feasible but unlucky: the two smallest always fit
  std::vector<std::size_t> by_size = order;
  std::stable_sort(by_size.begin(), by_size.end(),
                   [&](std::size_t a, std::size_t b) { return chars_of(pool[a]) < chars_of(pool[b]); });
  return {pool[by_size[0]], pool[by_size[1]]};
}

std::vector<corpus::Script> sample_scripts(const std::vector<corpus::Script>& pool,
                                           std::uint64_t seed, std::size_t budget) {
  Rng rng(seed);
  return sample_scripts(pool, rng, budget);
}

std::string format_scripts(const std::vector<corpus::Script>& scripts) {
  std::vector<std::string> blocks;
  for (const auto& s : scripts) {
    blocks.push_back(fmt::format("<<<SCRIPT {}\n{}\nSCRIPT>>>", s.script_id, s.text));
  }
  return text::join(blocks, "\n\n");
}

corpus::Script augment(const std::vector<corpus::Script>& parents, std::string output_id,
                       llm::ChatBackend& backend, const prompts::PromptLibrary& prompts,
                       const ContextSource& context, const Options& opts,
                       AugmentationBatch* batch_out) {
  AugmentationBatch batch;
  batch.budget = opts.budget;
  batch.output_script_id = output_id;
  for (const auto& p : parents) {
    batch.sampled_script_ids.push_back(p.script_id);
    batch.total_chars += chars_of(p);
  }
  if (parents.size() < kMinSample || parents.size() > kMaxSample) {
    throw Error(Errc::InvalidRequest,
                fmt::format("augmentation needs {}-{} scripts, got {}", kMinSample, kMaxSample,
                            parents.size()));
  }
  if (batch.total_chars > opts.budget) {
    throw Error(Errc::InvalidRequest, fmt::format("batch of {} characters exceeds budget {}",
                                                  batch.total_chars, opts.budget));
  }

  std::string ctx;
  if (context.index && context.embedder && context.index->size() > 0) {
    std::string query_text;
    for (const auto& p : parents) query_text += p.text + "\n";
    const auto hits = retrieval::query(*context.index, query_text, opts.top_k, *context.embedder);
    for (const auto& h : hits) batch.rag_context.push_back(h.chunk_id);
    ctx = retrieval::format_context(hits, context.lookup, opts.context_chars);
  }

  llm::ChatRequest req;
  req.model_id = opts.model_id;
  req.messages = prompts.render(
      "augmentation", {{"scripts", format_scripts(parents)}, {"context", ctx}}, opts.ikec);

  if (batch_out) *batch_out = batch;
  const int attempts = 1 + std::max(0, opts.degenerate_retries);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    std::string script = extract_script(backend.complete(req));
    const bool degenerate =
        text::trim(script).empty() ||
        std::any_of(parents.begin(), parents.end(),
                    [&](const corpus::Script& p) { return text::trim(p.text) == text::trim(script); });
    if (!degenerate) {
      corpus::Script out;
      out.script_id = std::move(output_id);
      out.source = corpus::ScriptSource::Augmented;
      out.text = std::move(script);
      out.parent_ids = batch.sampled_script_ids;
      return out;
    }
    spdlog::warn("augmentation {} attempt {}: output empty or identical to a parent",
                 batch.output_script_id, attempt);
  }
  throw Error(Errc::DegenerateOutput,
              fmt::format("augmentation {} produced no new script", batch.output_script_id));
}

PoolResult augment_pool(const std::vector<corpus::Script>& pool, std::size_t n_target,
                        std::uint64_t seed, llm::ChatBackend& backend,
                        const prompts::PromptLibrary& prompts, const ContextSource& context,
                        const Options& opts) {
  if (n_target < 1) throw Error(Errc::InvalidRequest, "n_target must be >= 1");
  PoolResult result;
  Rng rng(seed);
  const std::size_t limit = 2 * n_target;
  while (result.scripts.size() < n_target && result.attempts < limit) {
    ++result.attempts;
    auto parents = sample_scripts(pool, rng, opts.budget);
    const std::string id = fmt::format("aug-{:03}", result.scripts.size() + 1);
    AugmentationBatch batch;
    try {
      result.scripts.push_back(augment(parents, id, backend, prompts, context, opts, &batch));
      result.batches.push_back(std::move(batch));
    } catch (const Error& e) {
      if (e.code() != Errc::DegenerateOutput) throw;
      ++result.skipped;
      spdlog::info("skipping batch [{}]: {}", text::join(batch.sampled_script_ids, ", "), e.what());
    }
  }
  result.target_reached = result.scripts.size() >= n_target;
  return result;
}

}  // namespace ragcg::augmentor
