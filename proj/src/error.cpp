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

#include "ragcg/error.hpp"

namespace ragcg {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::UsageError: return "UsageError";
    case Errc::ConfigError: return "ConfigError";
    case Errc::NoRecordedResponse: return "NoRecordedResponse";
    case Errc::TransportFailure: return "TransportFailure";
    case Errc::MalformedBackendReply: return "MalformedBackendReply";
    case Errc::EmptyText: return "EmptyText";
    case Errc::InvalidRequest: return "InvalidRequest";
    case Errc::UnknownTemplate: return "UnknownTemplate";
    case Errc::MissingPlaceholder: return "MissingPlaceholder";
    case Errc::UnexpectedPlaceholder: return "UnexpectedPlaceholder";
    case Errc::TemplateSyntax: return "TemplateSyntax";
    case Errc::PromptBudgetExceeded: return "PromptBudgetExceeded";
    case Errc::UnreadableInput: return "UnreadableInput";
    case Errc::EmptyDocument: return "EmptyDocument";
    case Errc::DuplicateChunkId: return "DuplicateChunkId";
    case Errc::UnknownId: return "UnknownId";
    case Errc::WorkspaceLocked: return "WorkspaceLocked";
    case Errc::CorruptStore: return "CorruptStore";
    case Errc::UnparseableSplitReply: return "UnparseableSplitReply";
    case Errc::ContentLossDetected: return "ContentLossDetected";
    case Errc::UnparseableScoreReply: return "UnparseableScoreReply";
    case Errc::InsufficientRecords: return "InsufficientRecords";
    case Errc::InvalidConstant: return "InvalidConstant";
    case Errc::BudgetInfeasible: return "BudgetInfeasible";
    case Errc::DegenerateOutput: return "DegenerateOutput";
    case Errc::TargetUnreached: return "TargetUnreached";
    case Errc::EmptyQuery: return "EmptyQuery";
    case Errc::UnparseablePlan: return "UnparseablePlan";
    case Errc::ZeroTotal: return "ZeroTotal";
    case Errc::EmptySet: return "EmptySet";
    case Errc::UnknownGroup: return "UnknownGroup";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

}  // namespace ragcg
