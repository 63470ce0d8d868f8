#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "apolo/metrics.hpp"
#include "apolo/types.hpp"

namespace apolo {

enum class RunStatus { running, stopped_delta, stopped_max_iter, failed };

std::string_view to_string(RunStatus status);
RunStatus run_status_from_string(std::string_view text);

inline bool is_terminal(RunStatus s) {
  return s == RunStatus::stopped_delta || s == RunStatus::stopped_max_iter;
}

struct IterationRecord {
  int t = 1;
  Prompt final_prompt;
  double reward = 0.0;
  // Absent when the reward comes from the synthetic environment.
  std::optional<MetricReport> metrics;
  std::vector<SocraticTurn> turns;
  TokenUsage tokens;

  bool operator==(const IterationRecord&) const = default;
};

struct FailureInfo {
  std::string kind;  // "backend", "grammar" or "other"
  std::string message;

  bool operator==(const FailureInfo&) const = default;
};

struct RunState {
  RunConfig config;
  Prompt initial_prompt;
  Trajectory trajectory;
  TokenUsage planning_tokens;
  // Spent by iterations that failed before they could be recorded.
  TokenUsage unrecorded_tokens;
  std::vector<IterationRecord> iterations;
  RunStatus status = RunStatus::running;
  Prompt best_prompt;
  Prompt returned_prompt;
  std::optional<FailureInfo> failure;
  std::optional<MetricReport> test_report;
  std::vector<std::string> warnings;

  /// Planning, every recorded iteration, and unrecorded spend.
  TokenUsage total_tokens() const;
  std::optional<std::size_t> best_iteration() const;
  /// Recomputes best_prompt (first argmax of reward) and returned_prompt
  /// (latest final prompt; the initial prompt before any iteration).
  void refresh_prompts();

  bool operator==(const RunState&) const = default;
};

}  // namespace apolo
