#pragma once

#include <span>
#include <string>
#include <vector>

#include "apolo/agents.hpp"
#include "apolo/types.hpp"

namespace apolo {

/// Alignment score logged when the rater is skipped or unparseable.
inline constexpr double kFallbackAlignment = 0.5;

struct TrajectoryResult {
  Prompt final_prompt;
  std::vector<SocraticTurn> turns;
};

/// Teacher -> Critic -> (one Teacher revision on rejection) -> Student, per
/// sub-goal. Every call is tagged (role, iteration, step = sub-goal index,
/// kind, occurrence); the second Critic verdict of a step uses occurrence 2.
class SocraticEngine {
 public:
  SocraticEngine(AgentClient& client, const TemplateSet& templates, const RunConfig& config)
      : client_(client), templates_(templates), config_(config) {}

  SocraticTurn run_step(const SubGoal& sub_goal, int total_steps, const Prompt& previous,
                        std::span<const SocraticTurn> history, int iteration);

  /// Stores a [0,1] rating of how well the turn's questions and verdicts
  /// address the sub-goal on `turn`. Diagnostic only.
  void alignment_score(SocraticTurn& turn, const SubGoal& sub_goal, int iteration);

  TrajectoryResult run_trajectory(const Trajectory& trajectory, const Prompt& start, int iteration);

 private:
  std::string critic_feedback(const SocraticTurn& turn) const;

  AgentClient& client_;
  const TemplateSet& templates_;
  const RunConfig& config_;
};

}  // namespace apolo
