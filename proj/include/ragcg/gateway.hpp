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

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

// Chat-completion and embedding backends behind one interface: a live
// OpenAI-style HTTP client, a record/replay store keyed by request
// fingerprint, and deterministic in-process backends for tests.
namespace ragcg::llm {

enum class Role { System, User, Assistant };

std::string_view role_name(Role role) noexcept;
Role parse_role(std::string_view name);

struct ChatMessage {
  Role role = Role::User;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  std::string model_id;
  std::optional<std::size_t> max_output_chars;  // nullopt = unlimited

  /// Throws Errc::InvalidRequest when an invariant is broken.
  void validate() const;

  friend bool operator==(const ChatRequest&, const ChatRequest&) = default;
};

/// Fixed field order: model_id, temperature, max_output_chars, messages.
/// Message contents are carried byte-for-byte.
nlohmann::ordered_json to_canonical_json(const ChatRequest& request);
std::string canonicalize(const ChatRequest& request);
ChatRequest request_from_json(const nlohmann::json& j);

/// Hex SHA-256 of the canonical serialization.
std::string fingerprint(const ChatRequest& request);

struct ChatExchange {
  std::string fingerprint;
  ChatRequest request;
  std::string response;
  std::string backend_id;
  std::string timestamp;  // ISO-8601 UTC
};

nlohmann::ordered_json exchange_to_json(const ChatExchange& ex);
ChatExchange exchange_from_json(const nlohmann::json& j);

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
  virtual std::string backend_id() const = 0;
};

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dims() const noexcept { return values.size(); }
  double norm() const noexcept;
  EmbeddingVector normalized() const;
};

double dot(const EmbeddingVector& a, const EmbeddingVector& b);
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  /// Unit-normalized embedding. Throws Errc::EmptyText for empty input.
  virtual EmbeddingVector embed(std::string_view text) = 0;
  virtual std::size_t dims() const = 0;
  virtual std::string backend_id() const = 0;
};

/// Character-trigram hashing into a fixed-width vector, L2-normalized.
/// A pure function of the input text.
class MockEmbedder final : public EmbeddingBackend {
 public:
  static constexpr std::size_t kDims = 256;

  EmbeddingVector embed(std::string_view text) override;
  std::size_t dims() const override { return kDims; }
  std::string backend_id() const override { return "mock-trigram-256"; }
};

// ---------------------------------------------------------------------------
// Record / replay
// ---------------------------------------------------------------------------

/// Append-only JSONL store of ChatExchanges.
class ReplayStore {
 public:
  ReplayStore() = default;
  /// Throws Errc::UnreadableInput if the file is missing and
  /// Errc::CorruptStore on a malformed line.
  static ReplayStore load(const std::filesystem::path& path);

  /// Later entries win when a fingerprint was recorded more than once.
  std::optional<std::string> find(const std::string& fp) const;
  const std::vector<ChatExchange>& exchanges() const noexcept { return exchanges_; }
  void add(ChatExchange ex);

 private:
  std::vector<ChatExchange> exchanges_;
  std::unordered_map<std::string, std::size_t> by_fingerprint_;
};

/// Serves stored responses; never touches the network.
class ReplayBackend final : public ChatBackend {
 public:
  explicit ReplayBackend(ReplayStore store, std::string id = "replay");
  static std::shared_ptr<ReplayBackend> open(const std::filesystem::path& path);

  std::string complete(const ChatRequest& request) override;
  std::string backend_id() const override { return id_; }

  std::size_t calls() const noexcept { return calls_.load(); }
  std::size_t misses() const noexcept { return misses_.load(); }
  const ReplayStore& store() const noexcept { return store_; }

 private:
  ReplayStore store_;
  std::string id_;
  std::atomic<std::size_t> calls_{0};
  std::atomic<std::size_t> misses_{0};
};

/// Forwards to an inner backend and appends every exchange to a JSONL file.
class RecordingBackend final : public ChatBackend {
 public:
  using Clock = std::function<std::chrono::system_clock::time_point()>;

  RecordingBackend(std::shared_ptr<ChatBackend> inner, std::filesystem::path store_path,
                   Clock clock = {});

  std::string complete(const ChatRequest& request) override;
  std::string backend_id() const override { return inner_->backend_id(); }

 private:
  std::shared_ptr<ChatBackend> inner_;
  std::filesystem::path path_;
  Clock clock_;
  std::mutex write_mu_;
};

std::string format_utc(std::chrono::system_clock::time_point tp);

/// In-process backend driven by a callback. Used by tests and by the fixture
/// generator.
class ScriptedBackend final : public ChatBackend {
 public:
  using Responder = std::function<std::string(const ChatRequest&)>;

  explicit ScriptedBackend(Responder responder, std::string id = "scripted");

  std::string complete(const ChatRequest& request) override;
  std::string backend_id() const override { return id_; }

 private:
  Responder responder_;
  std::string id_;
};

/// Keeps a copy of every request that passes through. Thread-safe.
class CallLog final : public ChatBackend {
 public:
  explicit CallLog(std::shared_ptr<ChatBackend> inner);

  std::string complete(const ChatRequest& request) override;
  std::string backend_id() const override { return inner_->backend_id(); }

  std::vector<ChatRequest> requests() const;
  std::size_t size() const;

 private:
  std::shared_ptr<ChatBackend> inner_;
  mutable std::mutex mu_;
  std::vector<ChatRequest> requests_;
};

/// Caps the number of concurrent in-flight completions.
class ThrottledBackend final : public ChatBackend {
 public:
  ThrottledBackend(std::shared_ptr<ChatBackend> inner, std::ptrdiff_t max_in_flight);

  std::string complete(const ChatRequest& request) override;
  std::string backend_id() const override { return inner_->backend_id(); }

 private:
  std::shared_ptr<ChatBackend> inner_;
  std::counting_semaphore<> slots_;
};

// ---------------------------------------------------------------------------
// Live HTTP
// ---------------------------------------------------------------------------

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  /// Replaceable so tests do not sleep.
  std::function<void(std::chrono::milliseconds)> sleep;
};

struct HttpEndpoint {
  std::string url;                      // full URL, e.g. https://host/v1/chat/completions
  std::string api_key;
  std::string auth_header = "Authorization";  // "api-key" for Azure-style deployments
  std::chrono::seconds timeout{120};
};

struct ParsedUrl {
  std::string scheme_host_port;  // "https://host:port"
  std::string path;              // "/v1/...?..."
};
ParsedUrl parse_url(const std::string& url);

/// OpenAI-style chat-completions client. The reply is read from
/// choices[0].message.content.
class OpenAIChatBackend final : public ChatBackend {
 public:
  OpenAIChatBackend(HttpEndpoint endpoint, RetryPolicy retry = {});

  std::string complete(const ChatRequest& request) override;
  std::string backend_id() const override;

  static nlohmann::json request_body(const ChatRequest& request);
  /// Throws Errc::MalformedBackendReply.
  static std::string parse_reply(std::string_view body);

 private:
  HttpEndpoint endpoint_;
  RetryPolicy retry_;
};

/// OpenAI-style embeddings client: POST {model, input}, reads data[0].embedding.
class OpenAIEmbeddingBackend final : public EmbeddingBackend {
 public:
  OpenAIEmbeddingBackend(HttpEndpoint endpoint, std::string model, std::size_t dims,
                         RetryPolicy retry = {});

  EmbeddingVector embed(std::string_view text) override;
  std::size_t dims() const override { return dims_; }
  std::string backend_id() const override;

 private:
  HttpEndpoint endpoint_;
  std::string model_;
  std::size_t dims_;
  RetryPolicy retry_;
};

}  // namespace ragcg::llm
