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

#include <stdexcept>
#include <string>
#include <string_view>

namespace ragcg {

/// Every failure the library reports. The CLI maps these onto exit codes
/// through family().
enum class Errc {
  // usage / configuration
  UsageError,
  ConfigError,
  // gateway
  NoRecordedResponse,
  TransportFailure,
  MalformedBackendReply,
  EmptyText,
  InvalidRequest,
  // prompts
  UnknownTemplate,
  MissingPlaceholder,
  UnexpectedPlaceholder,
  TemplateSyntax,
  PromptBudgetExceeded,
  // corpus store
  UnreadableInput,
  EmptyDocument,
  DuplicateChunkId,
  UnknownId,
  WorkspaceLocked,
  CorruptStore,
  // splitter
  UnparseableSplitReply,
  ContentLossDetected,
  // renovator
  UnparseableScoreReply,
  InsufficientRecords,
  InvalidConstant,
  // augmentor
  BudgetInfeasible,
  DegenerateOutput,
  TargetUnreached,
  // retrieval
  EmptyQuery,
  // codegen
  UnparseablePlan,
  // evaluator
  ZeroTotal,
  EmptySet,
  UnknownGroup,
};

enum class ErrorFamily { Usage, Stage };

std::string_view errc_name(Errc code) noexcept;

constexpr ErrorFamily family_of(Errc code) noexcept {
  return (code == Errc::UsageError || code == Errc::ConfigError || code == Errc::UnknownGroup)
             ? ErrorFamily::Usage
             : ErrorFamily::Stage;
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }
  ErrorFamily family() const noexcept { return family_of(code_); }

 private:
  Errc code_;
};

}  // namespace ragcg
