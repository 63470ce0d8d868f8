#include "apolo/socratic.hpp"

#include "apolo/errors.hpp"

namespace apolo {
namespace {

std::string trimmed(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string non_empty(const std::string& text) {
  auto t = trimmed(text);
  if (t.empty()) throw GrammarError("empty answer");
  return t;
}

}  // namespace

std::string SocraticEngine::critic_feedback(const SocraticTurn& turn) const {
  std::string out;
  for (const auto& v : turn.verdicts) {
    if (v.approved || !v.suggestion) continue;
    if (!out.empty()) out += '\n';
    out += *v.suggestion;
  }
  if (out.empty()) return turn.verdicts.empty() ? "(none)" : "[True]";
  return out;
}

SocraticTurn SocraticEngine::run_step(const SubGoal& sub_goal, int total_steps,
                                      const Prompt& previous,
                                      std::span<const SocraticTurn> history, int iteration) {
  if (previous.text.empty()) throw ArgumentError("run_step: previous prompt is empty");
  const int i = sub_goal.index;
  const auto digest = history_digest(history);
  const bool use_critic = !config_.has(Ablation::no_critic);

  SlotValues teacher_slots = {{"step", std::to_string(i)},
                              {"total_steps", std::to_string(total_steps)},
                              {"sub_goal", sub_goal.description},
                              {"current_prompt", previous.text},
                              {"history", digest}};

  SocraticTurn turn;
  turn.step = i;
  turn.question = client_.ask(render(templates_.get("teacher"), teacher_slots),
                              CallTag{Role::teacher, iteration, i, CallKind::question, 1}, 1, non_empty);

  auto judge = [&](int occurrence) {
    const auto msgs = render(templates_.get("critic"), {{"sub_goal", sub_goal.description},
                                                         {"questions", turn.question},
                                                         {"history", digest}});
    return client_.ask(msgs, CallTag{Role::critic, iteration, i, CallKind::verdict, occurrence}, 2,
                       parse_verdict);
  };

  if (use_critic) {
    turn.verdicts.push_back(judge(1));
    if (!turn.verdicts.back().approved) {
      auto revise_slots = teacher_slots;
      revise_slots["previous_questions"] = turn.question;
      revise_slots["suggestion"] = *turn.verdicts.back().suggestion;
      turn.question =
          client_.ask(render(templates_.get("teacher_revise"), revise_slots),
                      CallTag{Role::teacher, iteration, i, CallKind::revise, 1}, 1, non_empty);
      turn.revisions = 1;
      // Single revision per step: proceed whatever the second verdict says.
      turn.verdicts.push_back(judge(2));
    }
  } else {
    turn.verdicts.push_back(CriticVerdict::approve());
  }

  const auto student_msgs = render(templates_.get("student"),
                                   {{"sub_goal", sub_goal.description},
                                    {"questions", turn.question},
                                    {"critic_feedback", use_critic ? critic_feedback(turn) : "(none)"},
                                    {"current_prompt", previous.text},
                                    {"history", digest}});
  auto text = client_.ask(student_msgs, CallTag{Role::student, iteration, i, CallKind::refine, 1}, 1,
                          non_empty);
  turn.result_prompt = Prompt{std::move(text), PromptOrigin::refined, iteration, i};
  return turn;
}

void SocraticEngine::alignment_score(SocraticTurn& turn, const SubGoal& sub_goal, int iteration) {
  turn.alignment = kFallbackAlignment;
  turn.alignment_estimated = true;
  if (!config_.score_alignment || config_.has(Ablation::no_critic)) return;
  const auto msgs = render(templates_.get("alignment_rater"),
                           {{"sub_goal", sub_goal.description},
                            {"questions", turn.question},
                            {"critic_feedback", critic_feedback(turn)}});
  try {
    turn.alignment = client_.ask(
        msgs, CallTag{Role::critic, iteration, sub_goal.index, CallKind::alignment, 1}, 1,
        [](const std::string& text) {
          auto v = parse_score(text);
          if (!v) throw GrammarError("alignment must be a single number in [0,1]");
          return *v;
        });
    turn.alignment_estimated = false;
  } catch (const GrammarError&) {
    // stays at the flagged fallback
  }
}

TrajectoryResult SocraticEngine::run_trajectory(const Trajectory& trajectory, const Prompt& start,
                                                int iteration) {
  if (trajectory.sub_goals.empty()) throw ArgumentError("run_trajectory: empty trajectory");
  TrajectoryResult result{start, {}};
  if (config_.has(Ablation::no_socratic)) return result;
  const int n = static_cast<int>(trajectory.size());
  for (const auto& goal : trajectory.sub_goals) {
    auto turn = run_step(goal, n, result.final_prompt, result.turns, iteration);
    alignment_score(turn, goal, iteration);
    result.final_prompt = turn.result_prompt;
    result.turns.push_back(std::move(turn));
  }
  return result;
}

}  // namespace apolo
