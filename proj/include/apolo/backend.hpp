#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "apolo/types.hpp"

namespace apolo {

enum class ChatRole { system, user, assistant };

std::string_view to_string(ChatRole role);

struct ChatMessage {
  ChatRole role = ChatRole::user;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct CompletionResult {
  std::string text;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  bool tokens_estimated = false;
};

/// What a call is for. Together with role, iteration, step and occurrence
/// this forms the replay key of the scripted backend.
enum class CallKind {
  plan,
  risk,
  plausibility,
  question,
  revise,
  verdict,
  refine,
  alignment,
  predict,
  predict_test,
};

std::string_view to_string(CallKind kind);
CallKind call_kind_from_string(std::string_view text);

struct CallTag {
  Role role = Role::planner;
  int iteration = 0;
  int step = 0;
  CallKind kind = CallKind::plan;
  int occurrence = 1;

  auto operator<=>(const CallTag&) const = default;
  bool operator==(const CallTag&) const = default;
};

std::string to_string(const CallTag& tag);

/// ceil(characters / 4); used whenever real token counts are unavailable.
std::int64_t estimate_tokens(std::string_view text);
std::int64_t estimate_tokens(std::span<const ChatMessage> messages);

class Backend {
 public:
  virtual ~Backend() = default;

  /// `messages` must be non-empty and start with a system message.
  /// Implementations must be safe to call concurrently.
  virtual CompletionResult complete(std::span<const ChatMessage> messages,
                                    double temperature, const CallTag& tag) = 0;
};

/// Checks the shared precondition of Backend::complete.
void check_messages(std::span<const ChatMessage> messages);

struct ScriptEntry {
  CallTag key;
  std::string response;
  std::optional<std::int64_t> prompt_tokens;
  std::optional<std::int64_t> completion_tokens;
};

/// Deterministic replay keyed on the call's semantic position. The script
/// is immutable after construction, so lookups need no locking.
class ScriptedBackend final : public Backend {
 public:
  /// Throws ArgumentError on duplicate keys.
  explicit ScriptedBackend(std::vector<ScriptEntry> entries);

  /// Line-delimited JSON: {"role","iteration","step","call_kind",
  /// "occurrence","response","prompt_tokens"?,"completion_tokens"?}.
  static ScriptedBackend from_file(const std::filesystem::path& path);
  static ScriptedBackend parse(const std::string& text);

  CompletionResult complete(std::span<const ChatMessage> messages, double temperature,
                            const CallTag& tag) override;

  std::size_t size() const { return script_.size(); }

 private:
  std::map<CallTag, ScriptEntry> script_;
};

// ---------------------------------------------------------------------------
// Live OpenAI-compatible backend

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// Thrown by transports when no HTTP response was obtained at all.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const std::string& base_url, const std::string& path,
                            const std::vector<std::pair<std::string, std::string>>& headers,
                            const std::string& body) = 0;
};

/// cpp-httplib transport; a fresh client per request.
class HttplibTransport final : public HttpTransport {
 public:
  explicit HttplibTransport(std::chrono::seconds timeout) : timeout_(timeout) {}
  HttpResponse post(const std::string& base_url, const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& headers,
                    const std::string& body) override;

 private:
  std::chrono::seconds timeout_;
};

struct RetryPolicy {
  int max_attempts = 3;
  double base_seconds = 1.0;
  double factor = 2.0;

  /// Upper bound of the full-jitter window before retry number `retry`
  /// (1-based): base * factor^(retry-1).
  double window(int retry) const;
};

bool is_retryable_status(int status);

struct LiveConfig {
  std::string base_url;
  std::string model;
  std::string api_key;
  std::chrono::seconds timeout{60};
  RetryPolicy retry;

  /// APOLO_API_KEY (or OPENAI_API_KEY), APOLO_BASE_URL, APOLO_MODEL.
  /// Throws ConfigError when no key is set. URL and model may be filled in
  /// later; LiveBackend rejects them if still empty.
  static LiveConfig from_environment();
};

/// Request body with a fixed key order: model, messages, temperature.
std::string build_request_body(std::span<const ChatMessage> messages, double temperature,
                               const std::string& model);

/// Reads choices[0].message.content and usage; estimates tokens when the
/// server omits usage. Throws BackendError on a malformed body.
CompletionResult parse_response_body(const std::string& body,
                                     std::span<const ChatMessage> messages);

class LiveBackend final : public Backend {
 public:
  using Sleeper = std::function<void(std::chrono::duration<double>)>;

  LiveBackend(LiveConfig config, std::shared_ptr<HttpTransport> transport = nullptr,
              Sleeper sleeper = nullptr, std::uint64_t jitter_seed = 0);

  CompletionResult complete(std::span<const ChatMessage> messages, double temperature,
                            const CallTag& tag) override;

  const LiveConfig& config() const { return config_; }

 private:
  double jitter(int retry);

  LiveConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  Sleeper sleeper_;
  std::mutex rng_mutex_;
  std::mt19937_64 rng_;
};

}  // namespace apolo
