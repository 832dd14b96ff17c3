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

#include "ragcg/gateway.hpp"

#include <cmath>
#include <ctime>
#include <fstream>
#include <thread>

#include <fmt/format.h>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "ragcg/error.hpp"
#include "ragcg/text.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace ragcg::llm {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view role_name(Role role) noexcept {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

Role parse_role(std::string_view name) {
  if (name == "system") return Role::System;
  if (name == "user") return Role::User;
  if (name == "assistant") return Role::Assistant;
  throw Error(Errc::InvalidRequest, fmt::format("unknown role '{}'", name));
}

void ChatRequest::validate() const {
  if (messages.empty()) throw Error(Errc::InvalidRequest, "request has no messages");
  if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
    throw Error(Errc::InvalidRequest, "temperature must be a finite value >= 0");
  }
  if (max_output_chars && *max_output_chars == 0) {
    throw Error(Errc::InvalidRequest, "max_output_chars must be positive");
  }
  bool seen_assistant = false;
  for (const auto& m : messages) {
    if (m.role == Role::Assistant) seen_assistant = true;
    if (m.role == Role::System && seen_assistant) {
      throw Error(Errc::InvalidRequest, "system message after an assistant message");
    }
    if (m.role != Role::Assistant && m.content.empty()) {
      throw Error(Errc::InvalidRequest,
                  fmt::format("empty content in {} message", role_name(m.role)));
    }
  }
}

ordered_json to_canonical_json(const ChatRequest& request) {
  ordered_json j;
  j["model_id"] = request.model_id;
  j["temperature"] = request.temperature;
  if (request.max_output_chars) {
    j["max_output_chars"] = *request.max_output_chars;
  } else {
    j["max_output_chars"] = nullptr;
  }
  ordered_json msgs = ordered_json::array();
  for (const auto& m : request.messages) {
    ordered_json mj;
    mj["role"] = role_name(m.role);
    mj["content"] = m.content;
    msgs.push_back(std::move(mj));
  }
  j["messages"] = std::move(msgs);
  return j;
}

std::string canonicalize(const ChatRequest& request) { return to_canonical_json(request).dump(); }

ChatRequest request_from_json(const json& j) {
  try {
    ChatRequest r;
    r.model_id = j.value("model_id", std::string{});
    r.temperature = j.value("temperature", 0.0);
    if (j.contains("max_output_chars") && !j.at("max_output_chars").is_null()) {
      r.max_output_chars = j.at("max_output_chars").get<std::size_t>();
    }
    for (const auto& mj : j.at("messages")) {
      r.messages.push_back({parse_role(mj.at("role").get<std::string>()),
                            mj.at("content").get<std::string>()});
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidRequest, e.what());
  }
}

std::string fingerprint(const ChatRequest& request) {
  const std::string canon = canonicalize(request);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(canon.data(), canon.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("EVP_Digest failed");
  }
  std::string hex;
  hex.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

ordered_json exchange_to_json(const ChatExchange& ex) {
  ordered_json j;
  j["fingerprint"] = ex.fingerprint;
  j["request"] = to_canonical_json(ex.request);
  j["response"] = ex.response;
  j["backend_id"] = ex.backend_id;
  j["timestamp"] = ex.timestamp;
  return j;
}

ChatExchange exchange_from_json(const json& j) {
  ChatExchange ex;
  ex.fingerprint = j.at("fingerprint").get<std::string>();
  ex.request = request_from_json(j.at("request"));
  ex.response = j.at("response").get<std::string>();
  ex.backend_id = j.at("backend_id").get<std::string>();
  ex.timestamp = j.at("timestamp").get<std::string>();
  return ex;
}

// ---------------------------------------------------------------------------

double EmbeddingVector::norm() const noexcept {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

EmbeddingVector EmbeddingVector::normalized() const {
  const double n = norm();
  EmbeddingVector out{values};
  if (n > 0.0) {
    for (double& v : out.values) v /= n;
  }
  return out;
}

double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dims() != b.dims()) throw std::invalid_argument("embedding dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.dims(); ++i) s += a.values[i] * b.values[i];
  return s;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  const double denom = a.norm() * b.norm();
  if (denom == 0.0) return 0.0;
  return dot(a, b) / denom;
}

namespace {

std::uint64_t fnv1a(std::string_view bytes) noexcept {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

EmbeddingVector MockEmbedder::embed(std::string_view text) {
  if (text.empty()) throw Error(Errc::EmptyText, "cannot embed empty text");
  EmbeddingVector v{std::vector<double>(kDims, 0.0)};
  const auto bounds = text::char_boundaries(text);
  const std::size_t n = bounds.size() - 1;
  if (n < 3) {
    v.values[fnv1a(text) % kDims] += 1.0;
  } else {
    for (std::size_t i = 0; i + 3 <= n; ++i) {
      const auto gram = text.substr(bounds[i], bounds[i + 3] - bounds[i]);
      v.values[fnv1a(gram) % kDims] += 1.0;
    }
  }
  return v.normalized();
}

// ---------------------------------------------------------------------------

ReplayStore ReplayStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::UnreadableInput, fmt::format("cannot open replay store {}", path.string()));
  ReplayStore store;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      store.add(exchange_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw Error(Errc::CorruptStore,
                  fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
    }
  }
  return store;
}

std::optional<std::string> ReplayStore::find(const std::string& fp) const {
  auto it = by_fingerprint_.find(fp);
  if (it == by_fingerprint_.end()) return std::nullopt;
  return exchanges_[it->second].response;
}

void ReplayStore::add(ChatExchange ex) {
  by_fingerprint_[ex.fingerprint] = exchanges_.size();
  exchanges_.push_back(std::move(ex));
}

ReplayBackend::ReplayBackend(ReplayStore store, std::string id)
    : store_(std::move(store)), id_(std::move(id)) {}

std::shared_ptr<ReplayBackend> ReplayBackend::open(const std::filesystem::path& path) {
  return std::make_shared<ReplayBackend>(ReplayStore::load(path));
}

std::string ReplayBackend::complete(const ChatRequest& request) {
  ++calls_;
  const std::string fp = fingerprint(request);
  if (auto hit = store_.find(fp)) return *hit;
  ++misses_;
  throw Error(Errc::NoRecordedResponse, fmt::format("no recorded response for {}", fp));
}

std::string format_utc(std::chrono::system_clock::time_point tp) {
  const std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RecordingBackend::RecordingBackend(std::shared_ptr<ChatBackend> inner,
                                   std::filesystem::path store_path, Clock clock)
    : inner_(std::move(inner)), path_(std::move(store_path)), clock_(std::move(clock)) {
  if (!clock_) clock_ = [] { return std::chrono::system_clock::now(); };
}

std::string RecordingBackend::complete(const ChatRequest& request) {
  std::string response = inner_->complete(request);
  ChatExchange ex{fingerprint(request), request, response, inner_->backend_id(),
                  format_utc(clock_())};
  const std::string line = exchange_to_json(ex).dump();
  std::lock_guard lock(write_mu_);
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw Error(Errc::UnreadableInput, "cannot append to " + path_.string());
  out << line << '\n';
  return response;
}

ScriptedBackend::ScriptedBackend(Responder responder, std::string id)
    : responder_(std::move(responder)), id_(std::move(id)) {}

std::string ScriptedBackend::complete(const ChatRequest& request) { return responder_(request); }

CallLog::CallLog(std::shared_ptr<ChatBackend> inner) : inner_(std::move(inner)) {}

std::string CallLog::complete(const ChatRequest& request) {
  {
    std::lock_guard lock(mu_);
    requests_.push_back(request);
  }
  return inner_->complete(request);
}

std::vector<ChatRequest> CallLog::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

std::size_t CallLog::size() const {
  std::lock_guard lock(mu_);
  return requests_.size();
}

ThrottledBackend::ThrottledBackend(std::shared_ptr<ChatBackend> inner, std::ptrdiff_t max_in_flight)
    : inner_(std::move(inner)), slots_(max_in_flight < 1 ? 1 : max_in_flight) {}

std::string ThrottledBackend::complete(const ChatRequest& request) {
  slots_.acquire();
  struct Release {
    std::counting_semaphore<>& s;
    ~Release() { s.release(); }
  } release{slots_};
  return inner_->complete(request);
}

// ---------------------------------------------------------------------------

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(Errc::ConfigError, fmt::format("endpoint '{}' is not an absolute URL", url));
  }
  const auto path_begin = url.find('/', scheme_end + 3);
  if (path_begin == std::string::npos) return {url, "/"};
  return {url.substr(0, path_begin), url.substr(path_begin)};
}

namespace {

bool retryable_status(int status) { return status == 429 || status >= 500; }

/// POSTs a JSON body, retrying transport errors and 429/5xx with exponential
/// backoff. Returns the response body of a 2xx reply.
std::string post_with_retry(const HttpEndpoint& ep, const RetryPolicy& retry, const json& body) {
  const ParsedUrl url = parse_url(ep.url);
  httplib::Headers headers;
  if (!ep.api_key.empty()) {
    if (ep.auth_header == "Authorization") {
      headers.emplace("Authorization", "Bearer " + ep.api_key);
    } else {
      headers.emplace(ep.auth_header, ep.api_key);
    }
  }
  const std::string payload = body.dump();
  auto backoff = retry.initial_backoff;
  std::string last_error;
  const int attempts = retry.attempts < 1 ? 1 : retry.attempts;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    httplib::Client client(url.scheme_host_port);
    client.set_connection_timeout(ep.timeout);
    client.set_read_timeout(ep.timeout);
    client.set_write_timeout(ep.timeout);
    auto res = client.Post(url.path, headers, payload, "application/json");
    if (res && res->status >= 200 && res->status < 300) return res->body;
    if (res) {
      last_error = fmt::format("HTTP {} from {}", res->status, ep.url);
      if (!retryable_status(res->status)) break;
    } else {
      last_error = fmt::format("{} ({})", httplib::to_string(res.error()), ep.url);
    }
    if (attempt < attempts) {
      spdlog::warn("request failed: {}; retrying in {} ms", last_error, backoff.count());
      if (retry.sleep) {
        retry.sleep(backoff);
      } else {
        std::this_thread::sleep_for(backoff);
      }
      backoff *= 2;
    }
  }
  throw Error(Errc::TransportFailure, last_error);
}

}  // namespace

OpenAIChatBackend::OpenAIChatBackend(HttpEndpoint endpoint, RetryPolicy retry)
    : endpoint_(std::move(endpoint)), retry_(std::move(retry)) {}

std::string OpenAIChatBackend::backend_id() const { return "openai:" + endpoint_.url; }

json OpenAIChatBackend::request_body(const ChatRequest& request) {
  json body;
  body["model"] = request.model_id;
  body["temperature"] = request.temperature;
  json msgs = json::array();
  for (const auto& m : request.messages) {
    msgs.push_back({{"role", role_name(m.role)}, {"content", m.content}});
  }
  body["messages"] = std::move(msgs);
  return body;
}

std::string OpenAIChatBackend::parse_reply(std::string_view body) {
  try {
    const json j = json::parse(body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw Error(Errc::MalformedBackendReply, "content is not a string");
    return content.get<std::string>();
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedBackendReply, e.what());
  }
}

std::string OpenAIChatBackend::complete(const ChatRequest& request) {
  request.validate();
  std::string reply = parse_reply(post_with_retry(endpoint_, retry_, request_body(request)));
  if (request.max_output_chars && text::count_chars(reply) > *request.max_output_chars) {
    reply = text::take_chars(reply, *request.max_output_chars);
  }
  return reply;
}

OpenAIEmbeddingBackend::OpenAIEmbeddingBackend(HttpEndpoint endpoint, std::string model,
                                               std::size_t dims, RetryPolicy retry)
    : endpoint_(std::move(endpoint)), model_(std::move(model)), dims_(dims), retry_(std::move(retry)) {}

std::string OpenAIEmbeddingBackend::backend_id() const { return "openai-embed:" + model_; }

EmbeddingVector OpenAIEmbeddingBackend::embed(std::string_view text) {
  if (text.empty()) throw Error(Errc::EmptyText, "cannot embed empty text");
  const json body{{"model", model_}, {"input", std::string(text)}};
  const std::string reply = post_with_retry(endpoint_, retry_, body);
  EmbeddingVector v;
  try {
    v.values = json::parse(reply).at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedBackendReply, e.what());
  }
  if (v.values.empty() || (dims_ != 0 && v.values.size() != dims_)) {
    throw Error(Errc::MalformedBackendReply,
                fmt::format("embedding has {} dims, expected {}", v.values.size(), dims_));
  }
  if (v.norm() == 0.0) throw Error(Errc::MalformedBackendReply, "zero embedding vector");
  return v.normalized();
}

}  // namespace ragcg::llm
