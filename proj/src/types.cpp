#include "apolo/types.hpp"

#include "apolo/errors.hpp"

namespace apolo {

std::string_view to_string(PromptOrigin origin) {
  switch (origin) {
    case PromptOrigin::initial: return "initial";
    case PromptOrigin::refined: return "refined";
    case PromptOrigin::baseline: return "baseline";
  }
  return "initial";
}

PromptOrigin prompt_origin_from_string(std::string_view text) {
  if (text == "initial") return PromptOrigin::initial;
  if (text == "refined") return PromptOrigin::refined;
  if (text == "baseline") return PromptOrigin::baseline;
  throw ArgumentError("unknown prompt origin '" + std::string(text) + "'");
}

Prompt Prompt::initial(std::string text) {
  if (text.empty()) throw ArgumentError("prompt text must not be empty");
  return Prompt{std::move(text), PromptOrigin::initial, 0, 0};
}

double aggregate_risk(const std::vector<SubGoal>& sub_goals) {
  if (sub_goals.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& g : sub_goals) sum += g.emo_risk + g.safety_risk;
  return sum / static_cast<double>(sub_goals.size());
}

double trajectory_utility(double likelihood_proxy, double risk, double cost,
                          double gamma_risk, double gamma_cost) {
  return likelihood_proxy - gamma_risk * risk - gamma_cost * cost;
}

CriticVerdict CriticVerdict::reject(std::string suggestion) {
  if (suggestion.empty()) {
    throw ArgumentError("a rejecting verdict needs a suggestion");
  }
  return {false, std::move(suggestion)};
}

std::string_view to_string(Role role) {
  switch (role) {
    case Role::planner: return "planner";
    case Role::teacher: return "teacher";
    case Role::critic: return "critic";
    case Role::student: return "student";
    case Role::target: return "target";
  }
  return "planner";
}

Role role_from_string(std::string_view text) {
  for (Role r : kAllRoles) {
    if (to_string(r) == text) return r;
  }
  throw ArgumentError("unknown agent role '" + std::string(text) + "'");
}

void TokenUsage::add(Role role, std::int64_t prompt_tokens,
                     std::int64_t completion_tokens) {
  auto& r = of(role);
  r.prompt_tokens += prompt_tokens;
  r.completion_tokens += completion_tokens;
  r.calls += 1;
}

void TokenUsage::merge(const TokenUsage& other) {
  for (std::size_t i = 0; i < per_role_.size(); ++i) {
    per_role_[i].prompt_tokens += other.per_role_[i].prompt_tokens;
    per_role_[i].completion_tokens += other.per_role_[i].completion_tokens;
    per_role_[i].calls += other.per_role_[i].calls;
  }
}

std::int64_t TokenUsage::prompt_total() const {
  std::int64_t sum = 0;
  for (const auto& r : per_role_) sum += r.prompt_tokens;
  return sum;
}

std::int64_t TokenUsage::completion_total() const {
  std::int64_t sum = 0;
  for (const auto& r : per_role_) sum += r.completion_tokens;
  return sum;
}

std::int64_t TokenUsage::calls() const {
  std::int64_t sum = 0;
  for (const auto& r : per_role_) sum += r.calls;
  return sum;
}

std::string_view to_string(RewardMetric metric) {
  switch (metric) {
    case RewardMetric::micro_f1: return "micro_f1";
    case RewardMetric::macro_f1: return "macro_f1";
    case RewardMetric::emr: return "emr";
    case RewardMetric::pma: return "pma";
  }
  return "micro_f1";
}

RewardMetric reward_metric_from_string(std::string_view text) {
  if (text == "micro_f1") return RewardMetric::micro_f1;
  if (text == "macro_f1") return RewardMetric::macro_f1;
  if (text == "emr") return RewardMetric::emr;
  if (text == "pma") return RewardMetric::pma;
  throw ConfigError("unknown reward metric '" + std::string(text) + "'");
}

std::string_view to_string(Ablation ablation) {
  switch (ablation) {
    case Ablation::no_planner: return "no_planner";
    case Ablation::no_critic: return "no_critic";
    case Ablation::no_socratic: return "no_socratic";
  }
  return "no_planner";
}

Ablation ablation_from_string(std::string_view text) {
  std::string t(text);
  for (auto& c : t) {
    if (c == '-') c = '_';
  }
  if (t == "no_planner") return Ablation::no_planner;
  if (t == "no_critic") return Ablation::no_critic;
  if (t == "no_socratic") return Ablation::no_socratic;
  throw ConfigError("unknown ablation '" + std::string(text) + "'");
}

void RunConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError(what); };
  if (!(delta > 0.0)) fail("delta must be > 0");
  if (max_iterations < 1) fail("max_iterations must be >= 1");
  if (num_candidates < 1) fail("num_candidates must be >= 1");
  if (gamma_risk < 0.0) fail("gamma_risk must be >= 0");
  if (gamma_cost < 0.0) fail("gamma_cost must be >= 0");
  if (alpha_len < 0.0 || alpha_call < 0.0 || alpha_time < 0.0) {
    fail("alpha weights must be >= 0");
  }
  if (temperature < 0.0 || temperature > 2.0) fail("temperature must be in [0, 2]");
  if (eval_subset_size && *eval_subset_size < 1) fail("eval_subset_size must be >= 1");
  if (parallelism < 1) fail("parallelism must be >= 1");
  if (goal.empty()) fail("goal must not be empty");
}

}  // namespace apolo
