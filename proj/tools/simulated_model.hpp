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

#include <string>

#include "ragcg/gateway.hpp"

// A deterministic stand-in for a chat model, used to record the shipped
// replay fixtures and in tests. It recognises each prompt by its payload
// markers and answers with simple rule-based text: one chunk per paragraph
// for the splitter, appended sentences for renovation, a score derived from
// those sentences for credibility checks, recombined scripts for
// augmentation, and code assembled from API names found in the context.
// The IKEC fragment never changes its answers.
namespace ragcg::sim {

std::string respond(const llm::ChatRequest& request);

class SimulatedModel final : public llm::ChatBackend {
 public:
  std::string complete(const llm::ChatRequest& request) override { return respond(request); }
  std::string backend_id() const override { return "simulated-model"; }
};

}  // namespace ragcg::sim
