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
#include <random>
#include <string>
#include <vector>

#include "ragcg/corpus.hpp"
#include "ragcg/gateway.hpp"
#include "ragcg/prompts.hpp"
#include "ragcg/retrieval.hpp"

// Script augmentation: sample two or three original scripts under a character
// budget and ask the model to reassemble them into a structurally different
// new script, with retrieved documentation as extra context.
namespace ragcg::augmentor {

inline constexpr std::size_t kDefaultBudget = 5000;
inline constexpr std::size_t kMinSample = 2;
inline constexpr std::size_t kMaxSample = 3;

/// Platform-independent random source (mt19937_64 with explicit rejection
/// sampling, so results do not depend on the standard library).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  /// Uniform in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

struct AugmentationBatch {
  std::vector<std::string> sampled_script_ids;
  std::size_t total_chars = 0;
  std::size_t budget = kDefaultBudget;
  std::vector<std::string> rag_context;  // chunk ids
  std::string output_script_id;
};

/// Shuffles the pool and greedily takes scripts while the running total stays
/// within budget, up to three; fewer than two means reshuffle. Throws
/// Errc::BudgetInfeasible when no two scripts fit together.
std::vector<corpus::Script> sample_scripts(const std::vector<corpus::Script>& pool, Rng& rng,
                                           std::size_t budget = kDefaultBudget);
std::vector<corpus::Script> sample_scripts(const std::vector<corpus::Script>& pool,
                                           std::uint64_t seed, std::size_t budget = kDefaultBudget);

/// Renders scripts as delimited blocks for the augmentation prompt.
std::string format_scripts(const std::vector<corpus::Script>& scripts);

struct Options {
  std::size_t budget = kDefaultBudget;
  std::size_t top_k = 3;
  std::size_t context_chars = 4000;
  bool ikec = true;
  int degenerate_retries = 1;
  std::string model_id;
};

/// Retrieval source for the prompt context: the index over documents that
/// have not been preprocessed.
struct ContextSource {
  const retrieval::Index* index = nullptr;
  llm::EmbeddingBackend* embedder = nullptr;
  retrieval::TextLookup lookup;
};

/// Generates one script from the sampled parents. Throws
/// Errc::DegenerateOutput when the reply stays empty or identical to a parent.
corpus::Script augment(const std::vector<corpus::Script>& parents, std::string output_id,
                       llm::ChatBackend& backend, const prompts::PromptLibrary& prompts,
                       const ContextSource& context, const Options& opts,
                       AugmentationBatch* batch_out = nullptr);

struct PoolResult {
  std::vector<corpus::Script> scripts;
  std::vector<AugmentationBatch> batches;
  std::size_t attempts = 0;
  std::size_t skipped = 0;
  bool target_reached = false;
};

/// Runs sample + augment until n_target scripts exist or 2 * n_target
/// attempts have been made. Output ids are "aug-001", "aug-002", ...
PoolResult augment_pool(const std::vector<corpus::Script>& pool, std::size_t n_target,
                        std::uint64_t seed, llm::ChatBackend& backend,
                        const prompts::PromptLibrary& prompts, const ContextSource& context,
                        const Options& opts);

}  // namespace ragcg::augmentor
