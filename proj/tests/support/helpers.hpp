#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "apolo/backend.hpp"

#ifndef APOLO_SOURCE_DIR
#error "APOLO_SOURCE_DIR must be defined by the build"
#endif

namespace apolo::testing {

inline std::filesystem::path source_path(const std::string& rel) {
  return std::filesystem::path(APOLO_SOURCE_DIR) / rel;
}

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "apolo-test-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path write(const std::string& name, const std::string& content) const {
    const auto p = path_ / name;
    std::filesystem::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << content;
    return p;
  }

 private:
  std::filesystem::path path_;
};

struct RecordedCall {
  CallTag tag;
  std::vector<ChatMessage> messages;
  std::string response;
};

// Wraps a backend and keeps every call keyed by tag.
class RecordingBackend final : public Backend {
 public:
  explicit RecordingBackend(Backend& inner) : inner_(inner) {}

  CompletionResult complete(std::span<const ChatMessage> messages, double temperature,
                            const CallTag& tag) override {
    auto r = inner_.complete(messages, temperature, tag);
    std::lock_guard lock(mutex_);
    calls_.push_back({tag, {messages.begin(), messages.end()}, r.text});
    temperatures_.push_back(temperature);
    return r;
  }

  // Calls sorted by tag, so concurrent arrival order does not matter.
  std::vector<RecordedCall> transcript() const {
    std::lock_guard lock(mutex_);
    auto out = calls_;
    std::stable_sort(out.begin(), out.end(),
                     [](const RecordedCall& a, const RecordedCall& b) { return a.tag < b.tag; });
    return out;
  }

  int count(Role role) const {
    std::lock_guard lock(mutex_);
    int n = 0;
    for (const auto& c : calls_) n += c.tag.role == role;
    return n;
  }

  int count(Role role, CallKind kind) const {
    std::lock_guard lock(mutex_);
    int n = 0;
    for (const auto& c : calls_) n += c.tag.role == role && c.tag.kind == kind;
    return n;
  }

  std::vector<double> temperatures() const {
    std::lock_guard lock(mutex_);
    return temperatures_;
  }

 private:
  Backend& inner_;
  mutable std::mutex mutex_;
  std::vector<RecordedCall> calls_;
  std::vector<double> temperatures_;
};

inline bool same_transcript(const std::vector<RecordedCall>& a, const std::vector<RecordedCall>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].tag != b[i].tag || a[i].messages != b[i].messages || a[i].response != b[i].response) {
      return false;
    }
  }
  return true;
}

}  // namespace apolo::testing
