#pragma once

#include <span>
#include <string>
#include <vector>

#include "apolo/agents.hpp"
#include "apolo/types.hpp"

namespace apolo {

struct CostWeights {
  double length = 1.0 / 3.0;
  double calls = 1.0 / 3.0;
  double time = 1.0 / 3.0;

  static CostWeights from(const RunConfig& config) {
    return {config.alpha_len, config.alpha_call, config.alpha_time};
  }
};

/// Clamp range for self-rated plausibility before taking the log.
inline constexpr double kMinPlausibility = 0.01;
/// Used when the plausibility rater stays unparseable.
inline constexpr double kFallbackPlausibility = 0.5;
/// Risk of a trajectory whose risk ratings could not be parsed.
inline constexpr double kMaxRisk = 2.0;

struct PlannerContext {
  std::string goal;
  std::string input_digest;
  Prompt initial_prompt;
};

/// Summary of the task handed to the Planner: the options list and up to
/// `max_examples` sample texts.
std::string make_input_digest(const LabelSpace& space, std::span<const Sample> samples,
                              std::size_t max_examples = 3);

class Planner {
 public:
  Planner(AgentClient& client, const TemplateSet& templates, std::vector<std::string>* warnings = nullptr)
      : client_(client), templates_(templates), warnings_(warnings) {}

  /// K independent Planner calls; candidate k (1-based) is requested with
  /// occurrence k. Unscored.
  std::vector<Trajectory> generate_candidates(const PlannerContext& ctx, int k);

  /// One Critic-role rater call per sub-goal. Stores ratings on the
  /// sub-goals and returns the aggregate. Falls back to kMaxRisk (every
  /// sub-goal rated 1/1) if any rating stays unparseable.
  double score_risk(Trajectory& trajectory, const PlannerContext& ctx, int candidate, int k);

  /// ln of the clamped self-rated plausibility.
  double likelihood_proxy(const Trajectory& trajectory, const PlannerContext& ctx, int candidate,
                          int k);

  /// The full procedure: generate, score, select.
  Trajectory plan(const PlannerContext& ctx, const RunConfig& config);

 private:
  void warn(std::string msg);

  AgentClient& client_;
  const TemplateSet& templates_;
  std::vector<std::string>* warnings_;
};

/// α_len·n + α_call·3n + α_time·n.
double score_cost(const Trajectory& trajectory, const CostWeights& weights);

/// ln(clamp(s, 0.01, 1)).
double plausibility_to_proxy(double plausibility);

/// Fills `utility` on each candidate and returns the argmax (lowest index on
/// ties). Throws ArgumentError on an empty list.
std::size_t select_index(std::span<Trajectory> candidates, double gamma_risk, double gamma_cost);
Trajectory select(std::vector<Trajectory> candidates, double gamma_risk, double gamma_cost);

/// Single-step trajectory used when the planner is ablated.
Trajectory trivial_trajectory(const std::string& goal, const RunConfig& config);

std::string format_plan(const Trajectory& trajectory);

}  // namespace apolo
