#include "apolo/planner.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "apolo/errors.hpp"

namespace apolo {

std::string make_input_digest(const LabelSpace& space, std::span<const Sample> samples,
                              std::size_t max_examples) {
  std::string out = "Task type: ";
  out += space.mode() == LabelMode::multi ? "multi-label" : "single-label";
  out += " emotion diagnosis\nOptions: [" + space.options_list() + "]";
  const auto n = std::min(max_examples, samples.size());
  for (std::size_t i = 0; i < n; ++i) {
    out += "\nExample " + std::to_string(i + 1) + ": " + samples[i].focus_text;
  }
  return out;
}

std::string format_plan(const Trajectory& trajectory) {
  std::string out = "Total steps: " + std::to_string(trajectory.size());
  for (const auto& g : trajectory.sub_goals) {
    out += "\nStep " + std::to_string(g.index) + ": " + g.description;
  }
  return out;
}

double score_cost(const Trajectory& trajectory, const CostWeights& w) {
  const auto n = static_cast<double>(trajectory.size());
  const double calls = 3.0 * n;  // Teacher + Critic + Student per step
  const double time = n;         // one latency unit per step
  return w.length * n + w.calls * calls + w.time * time;
}

double plausibility_to_proxy(double plausibility) {
  return std::log(std::clamp(plausibility, kMinPlausibility, 1.0));
}

std::size_t select_index(std::span<Trajectory> candidates, double gamma_risk, double gamma_cost) {
  if (candidates.empty()) throw ArgumentError("select: no candidate trajectories");
  std::size_t best = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    auto& c = candidates[i];
    c.utility = trajectory_utility(c.likelihood_proxy, c.risk, c.cost, gamma_risk, gamma_cost);
    if (c.utility > candidates[best].utility) best = i;
  }
  return best;
}

Trajectory select(std::vector<Trajectory> candidates, double gamma_risk, double gamma_cost) {
  const auto i = select_index(candidates, gamma_risk, gamma_cost);
  return std::move(candidates[i]);
}

Trajectory trivial_trajectory(const std::string& /*goal*/, const RunConfig& config) {
  Trajectory t;
  t.sub_goals.push_back(SubGoal{1, "Optimize the entire prompt for the task goal", 0.0, 0.0});
  t.likelihood_proxy = 0.0;
  t.risk = 0.0;
  t.cost = score_cost(t, CostWeights::from(config));
  t.utility = trajectory_utility(t.likelihood_proxy, t.risk, t.cost, config.gamma_risk,
                                 config.gamma_cost);
  return t;
}

void Planner::warn(std::string msg) {
  std::cerr << "warning: " << msg << '\n';
  if (warnings_) warnings_->push_back(std::move(msg));
}

std::vector<Trajectory> Planner::generate_candidates(const PlannerContext& ctx, int k) {
  if (k < 1) throw ArgumentError("generate_candidates: K must be >= 1");
  const auto messages = render(templates_.get("planner"),
                               {{"goal", ctx.goal},
                                {"input_digest", ctx.input_digest},
                                {"initial_prompt", ctx.initial_prompt.text}});
  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int c = 1; c <= k; ++c) {
    CallTag tag{Role::planner, 1, 0, CallKind::plan, c};
    Trajectory t;
    t.sub_goals = client_.ask(messages, tag, k, parse_plan);
    out.push_back(std::move(t));
  }
  return out;
}

double Planner::score_risk(Trajectory& trajectory, const PlannerContext& ctx, int candidate,
                           int k) {
  if (trajectory.sub_goals.empty()) throw ArgumentError("score_risk: empty trajectory");
  const auto& tpl = templates_.get("risk_rater");
  const auto total = std::to_string(trajectory.size());
  for (auto& g : trajectory.sub_goals) {
    const auto messages = render(tpl, {{"goal", ctx.goal},
                                       {"step", std::to_string(g.index)},
                                       {"total_steps", total},
                                       {"sub_goal", g.description}});
    CallTag tag{Role::critic, 1, g.index, CallKind::risk, candidate};
    try {
      const auto rating = client_.ask(messages, tag, k, [](const std::string& text) {
        auto r = parse_risk(text);
        if (!r) throw GrammarError("risk rating needs 'emotional_risk:' and 'safety_risk:' lines in [0,1]");
        return *r;
      });
      g.emo_risk = rating.emo;
      g.safety_risk = rating.safety;
    } catch (const GrammarError& e) {
      warn(std::string("risk rating unparseable, assuming maximal risk: ") + e.what());
      for (auto& each : trajectory.sub_goals) {
        each.emo_risk = 1.0;
        each.safety_risk = 1.0;
      }
      trajectory.risk = kMaxRisk;
      return trajectory.risk;
    }
  }
  trajectory.risk = aggregate_risk(trajectory.sub_goals);
  return trajectory.risk;
}

double Planner::likelihood_proxy(const Trajectory& trajectory, const PlannerContext& ctx,
                                 int candidate, int k) {
  const auto messages = render(templates_.get("plausibility_rater"),
                               {{"goal", ctx.goal},
                                {"initial_prompt", ctx.initial_prompt.text},
                                {"plan", format_plan(trajectory)}});
  CallTag tag{Role::critic, 1, 0, CallKind::plausibility, candidate};
  double s = kFallbackPlausibility;
  try {
    s = client_.ask(messages, tag, k, [](const std::string& text) {
      auto v = parse_score(text);
      if (!v) throw GrammarError("plausibility must be a single number in [0,1]");
      return *v;
    });
  } catch (const GrammarError& e) {
    warn(std::string("plausibility rating unparseable, using 0.5: ") + e.what());
  }
  return plausibility_to_proxy(s);
}

Trajectory Planner::plan(const PlannerContext& ctx, const RunConfig& config) {
  const int k = config.num_candidates;
  auto candidates = generate_candidates(ctx, k);
  const auto weights = CostWeights::from(config);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    auto& c = candidates[i];
    const int candidate = static_cast<int>(i) + 1;
    score_risk(c, ctx, candidate, k);
    c.cost = score_cost(c, weights);
    c.likelihood_proxy = likelihood_proxy(c, ctx, candidate, k);
  }
  return select(std::move(candidates), config.gamma_risk, config.gamma_cost);
}

}  // namespace apolo
