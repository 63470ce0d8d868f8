#include "apolo/run_state.hpp"

#include "apolo/errors.hpp"

namespace apolo {

std::string_view to_string(RunStatus status) {
  switch (status) {
    case RunStatus::running: return "running";
    case RunStatus::stopped_delta: return "stopped_delta";
    case RunStatus::stopped_max_iter: return "stopped_max_iter";
    case RunStatus::failed: return "failed";
  }
  return "running";
}

RunStatus run_status_from_string(std::string_view text) {
  for (auto s : {RunStatus::running, RunStatus::stopped_delta, RunStatus::stopped_max_iter,
                 RunStatus::failed}) {
    if (to_string(s) == text) return s;
  }
  throw ArgumentError("unknown run status '" + std::string(text) + "'");
}

TokenUsage RunState::total_tokens() const {
  TokenUsage total = planning_tokens;
  for (const auto& it : iterations) total.merge(it.tokens);
  total.merge(unrecorded_tokens);
  return total;
}

std::optional<std::size_t> RunState::best_iteration() const {
  if (iterations.empty()) return std::nullopt;
  std::size_t best = 0;
  for (std::size_t i = 1; i < iterations.size(); ++i) {
    if (iterations[i].reward > iterations[best].reward) best = i;
  }
  return best;
}

void RunState::refresh_prompts() {
  if (iterations.empty()) {
    best_prompt = initial_prompt;
    returned_prompt = initial_prompt;
    return;
  }
  best_prompt = iterations[*best_iteration()].final_prompt;
  returned_prompt = iterations.back().final_prompt;
}

}  // namespace apolo
