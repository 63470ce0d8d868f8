#include "apolo/backend.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "apolo/data.hpp"
#include "apolo/errors.hpp"

namespace apolo {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

const char* getenv_nonempty(const char* name) {
  const char* v = std::getenv(name);
  return (v && *v) ? v : nullptr;
}

// Splits "https://host:8080/prefix" into ("https://host:8080", "/prefix").
std::pair<std::string, std::string> split_base_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto path_start = url.find('/', host_start);
  if (path_start == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path_start), prefix};
}

}  // namespace

std::string_view to_string(ChatRole role) {
  switch (role) {
    case ChatRole::system: return "system";
    case ChatRole::user: return "user";
    case ChatRole::assistant: return "assistant";
  }
  return "user";
}

std::string_view to_string(CallKind kind) {
  switch (kind) {
    case CallKind::plan: return "plan";
    case CallKind::risk: return "risk";
    case CallKind::plausibility: return "plausibility";
    case CallKind::question: return "question";
    case CallKind::revise: return "revise";
    case CallKind::verdict: return "verdict";
    case CallKind::refine: return "refine";
    case CallKind::alignment: return "alignment";
    case CallKind::predict: return "predict";
    case CallKind::predict_test: return "predict_test";
  }
  return "plan";
}

CallKind call_kind_from_string(std::string_view text) {
  for (auto k : {CallKind::plan, CallKind::risk, CallKind::plausibility, CallKind::question,
                 CallKind::revise, CallKind::verdict, CallKind::refine, CallKind::alignment,
                 CallKind::predict, CallKind::predict_test}) {
    if (to_string(k) == text) return k;
  }
  throw ArgumentError("unknown call kind '" + std::string(text) + "'");
}

std::string to_string(const CallTag& tag) {
  std::ostringstream ss;
  ss << '(' << to_string(tag.role) << ',' << tag.iteration << ',' << tag.step << ','
     << to_string(tag.kind) << ',' << tag.occurrence << ')';
  return ss.str();
}

std::int64_t estimate_tokens(std::string_view text) {
  return static_cast<std::int64_t>((text.size() + 3) / 4);
}

std::int64_t estimate_tokens(std::span<const ChatMessage> messages) {
  std::size_t chars = 0;
  for (const auto& m : messages) chars += m.content.size();
  return static_cast<std::int64_t>((chars + 3) / 4);
}

void check_messages(std::span<const ChatMessage> messages) {
  if (messages.empty()) throw ArgumentError("completion request has no messages");
  if (messages.front().role != ChatRole::system) {
    throw ArgumentError("first message of a completion request must be the system message");
  }
  for (const auto& m : messages) {
    if (m.role != ChatRole::assistant && m.content.empty()) {
      throw ArgumentError("system/user messages must not be empty");
    }
  }
}

// ---------------------------------------------------------------------------

ScriptedBackend::ScriptedBackend(std::vector<ScriptEntry> entries) {
  for (auto& e : entries) {
    const auto key = e.key;
    if (!script_.emplace(key, std::move(e)).second) {
      throw ArgumentError("duplicate script key " + to_string(key));
    }
  }
}

ScriptedBackend ScriptedBackend::parse(const std::string& text) {
  std::vector<ScriptEntry> entries;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto obj = json::parse(line);
      ScriptEntry e;
      e.key.role = role_from_string(obj.at("role").get<std::string>());
      e.key.iteration = obj.at("iteration").get<int>();
      e.key.step = obj.at("step").get<int>();
      e.key.kind = call_kind_from_string(obj.at("call_kind").get<std::string>());
      e.key.occurrence = obj.value("occurrence", 1);
      e.response = obj.at("response").get<std::string>();
      if (obj.contains("prompt_tokens")) e.prompt_tokens = obj["prompt_tokens"].get<std::int64_t>();
      if (obj.contains("completion_tokens")) {
        e.completion_tokens = obj["completion_tokens"].get<std::int64_t>();
      }
      entries.push_back(std::move(e));
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad script entry: ") + e.what(), lineno);
    } catch (const ArgumentError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  try {
    return ScriptedBackend(std::move(entries));
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("script: ") + e.what());
  }
}

ScriptedBackend ScriptedBackend::from_file(const std::filesystem::path& path) {
  return parse(read_text_file(path));
}

CompletionResult ScriptedBackend::complete(std::span<const ChatMessage> messages,
                                           double /*temperature*/, const CallTag& tag) {
  check_messages(messages);
  auto it = script_.find(tag);
  if (it == script_.end()) throw ScriptMissError("script miss: no entry for " + to_string(tag));
  const auto& e = it->second;
  CompletionResult r;
  r.text = e.response;
  r.tokens_estimated = !e.prompt_tokens || !e.completion_tokens;
  r.prompt_tokens = e.prompt_tokens.value_or(estimate_tokens(messages));
  r.completion_tokens = e.completion_tokens.value_or(estimate_tokens(e.response));
  return r;
}

// ---------------------------------------------------------------------------

HttpResponse HttplibTransport::post(
    const std::string& base_url, const std::string& path,
    const std::vector<std::pair<std::string, std::string>>& headers,
    const std::string& body) {
  httplib::Client client(base_url);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  auto res = client.Post(path, h, body, "application/json");
  if (!res) throw TransportError("HTTP transport failure: " + httplib::to_string(res.error()));
  return {res->status, res->body};
}

double RetryPolicy::window(int retry) const {
  return base_seconds * std::pow(factor, retry - 1);
}

bool is_retryable_status(int status) { return status == 429 || (status >= 500 && status < 600); }

LiveConfig LiveConfig::from_environment() {
  LiveConfig c;
  const char* key = getenv_nonempty("APOLO_API_KEY");
  if (!key) key = getenv_nonempty("OPENAI_API_KEY");
  if (!key) throw ConfigError("no API key: set APOLO_API_KEY or OPENAI_API_KEY");
  c.api_key = key;
  if (const char* url = getenv_nonempty("APOLO_BASE_URL")) c.base_url = url;
  if (const char* model = getenv_nonempty("APOLO_MODEL")) c.model = model;
  return c;
}

std::string build_request_body(std::span<const ChatMessage> messages, double temperature,
                               const std::string& model) {
  ordered_json body;
  body["model"] = model;
  auto& msgs = body["messages"] = ordered_json::array();
  for (const auto& m : messages) {
    ordered_json jm;
    jm["role"] = std::string(to_string(m.role));
    jm["content"] = m.content;
    msgs.push_back(std::move(jm));
  }
  body["temperature"] = temperature;
  return body.dump();
}

CompletionResult parse_response_body(const std::string& body,
                                     std::span<const ChatMessage> messages) {
  CompletionResult r;
  try {
    const auto j = json::parse(body);
    r.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
    const auto usage = j.find("usage");
    if (usage != j.end() && usage->is_object() && usage->contains("prompt_tokens") &&
        usage->contains("completion_tokens")) {
      r.prompt_tokens = usage->at("prompt_tokens").get<std::int64_t>();
      r.completion_tokens = usage->at("completion_tokens").get<std::int64_t>();
    } else {
      r.prompt_tokens = estimate_tokens(messages);
      r.completion_tokens = estimate_tokens(r.text);
      r.tokens_estimated = true;
    }
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed completion response: ") + e.what(), 200);
  }
  return r;
}

LiveBackend::LiveBackend(LiveConfig config, std::shared_ptr<HttpTransport> transport,
                         Sleeper sleeper, std::uint64_t jitter_seed)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      sleeper_(std::move(sleeper)),
      rng_(jitter_seed) {
  if (config_.api_key.empty()) throw ConfigError("live backend: missing API key");
  if (config_.base_url.empty()) throw ConfigError("live backend: missing base URL");
  if (config_.model.empty()) throw ConfigError("live backend: missing model name");
  if (config_.retry.max_attempts < 1) throw ConfigError("live backend: max_attempts must be >= 1");
  if (!transport_) transport_ = std::make_shared<HttplibTransport>(config_.timeout);
  if (!sleeper_) {
    sleeper_ = [](std::chrono::duration<double> d) { std::this_thread::sleep_for(d); };
  }
}

double LiveBackend::jitter(int retry) {
  std::lock_guard lock(rng_mutex_);
  const double unit = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  return unit * config_.retry.window(retry);
}

CompletionResult LiveBackend::complete(std::span<const ChatMessage> messages,
                                       double temperature, const CallTag& tag) {
  check_messages(messages);
  const auto body = build_request_body(messages, temperature, config_.model);
  const auto [host, prefix] = split_base_url(config_.base_url);
  const std::vector<std::pair<std::string, std::string>> headers = {
      {"Authorization", "Bearer " + config_.api_key}};

  std::string last_error;
  for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
    if (attempt > 1) sleeper_(std::chrono::duration<double>(jitter(attempt - 1)));
    try {
      const auto res = transport_->post(host, prefix + "/v1/chat/completions", headers, body);
      if (res.status >= 200 && res.status < 300) return parse_response_body(res.body, messages);
      last_error = "HTTP " + std::to_string(res.status);
      if (!is_retryable_status(res.status)) {
        throw BackendError(to_string(tag) + ": " + last_error + ": " + res.body.substr(0, 200),
                           res.status);
      }
    } catch (const TransportError& e) {
      last_error = e.what();
    }
  }
  throw BackendError(to_string(tag) + ": giving up after " +
                     std::to_string(config_.retry.max_attempts) + " attempts: " + last_error);
}

}  // namespace apolo
