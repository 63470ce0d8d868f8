#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "apolo/labels.hpp"

namespace apolo {

struct Sample {
  std::string id;
  std::vector<std::string> context;
  std::optional<std::string> title;
  std::string focus_text;
  LabelSet gold;

  bool operator==(const Sample&) const = default;
};

enum class PromptOrigin { initial, refined, baseline };

std::string_view to_string(PromptOrigin origin);
PromptOrigin prompt_origin_from_string(std::string_view text);

struct Prompt {
  std::string text;
  PromptOrigin origin = PromptOrigin::initial;
  int iteration = 0;
  int step = 0;

  /// Throws ArgumentError on empty text.
  static Prompt initial(std::string text);

  bool operator==(const Prompt&) const = default;
};

struct SubGoal {
  int index = 1;
  std::string description;
  double emo_risk = 0.0;
  double safety_risk = 0.0;

  bool operator==(const SubGoal&) const = default;
};

// Mean over sub-goals of (emotional risk + safety risk); range [0, 2].
double aggregate_risk(const std::vector<SubGoal>& sub_goals);

double trajectory_utility(double likelihood_proxy, double risk, double cost,
                          double gamma_risk, double gamma_cost);

struct Trajectory {
  std::vector<SubGoal> sub_goals;
  double likelihood_proxy = 0.0;
  double risk = 0.0;
  double cost = 0.0;
  double utility = 0.0;

  std::size_t size() const { return sub_goals.size(); }
  bool operator==(const Trajectory&) const = default;
};

struct CriticVerdict {
  bool approved = true;
  std::optional<std::string> suggestion;

  static CriticVerdict approve() { return {true, std::nullopt}; }
  /// Throws ArgumentError on an empty suggestion.
  static CriticVerdict reject(std::string suggestion);

  bool operator==(const CriticVerdict&) const = default;
};

struct SocraticTurn {
  int step = 1;
  std::string question;
  int revisions = 0;
  std::vector<CriticVerdict> verdicts;
  Prompt result_prompt;
  double alignment = 0.5;
  bool alignment_estimated = true;

  bool operator==(const SocraticTurn&) const = default;
};

enum class Role : std::uint8_t { planner, teacher, critic, student, target };
inline constexpr std::array<Role, 5> kAllRoles = {
    Role::planner, Role::teacher, Role::critic, Role::student, Role::target};

std::string_view to_string(Role role);
Role role_from_string(std::string_view text);

struct RoleTokens {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  std::int64_t calls = 0;

  std::int64_t total() const { return prompt_tokens + completion_tokens; }
  bool operator==(const RoleTokens&) const = default;
};

class TokenUsage {
 public:
  void add(Role role, std::int64_t prompt_tokens, std::int64_t completion_tokens);
  void merge(const TokenUsage& other);

  const RoleTokens& of(Role role) const {
    return per_role_[static_cast<std::size_t>(role)];
  }
  RoleTokens& of(Role role) { return per_role_[static_cast<std::size_t>(role)]; }

  std::int64_t prompt_total() const;
  std::int64_t completion_total() const;
  std::int64_t total() const { return prompt_total() + completion_total(); }
  std::int64_t calls() const;

  bool operator==(const TokenUsage&) const = default;

 private:
  std::array<RoleTokens, kAllRoles.size()> per_role_{};
};

enum class RewardMetric { micro_f1, macro_f1, emr, pma };

std::string_view to_string(RewardMetric metric);
RewardMetric reward_metric_from_string(std::string_view text);

enum class Ablation { no_planner, no_critic, no_socratic };

std::string_view to_string(Ablation ablation);
/// Accepts both "no_critic" and "no-critic".
Ablation ablation_from_string(std::string_view text);

struct RunConfig {
  double delta = 0.01;
  int max_iterations = 10;
  int num_candidates = 4;
  double gamma_risk = 0.5;
  double gamma_cost = 0.05;
  double alpha_len = 1.0 / 3.0;
  double alpha_call = 1.0 / 3.0;
  double alpha_time = 1.0 / 3.0;
  double temperature = 0.6;
  std::optional<int> eval_subset_size;
  std::uint64_t seed = 0;
  RewardMetric reward_metric = RewardMetric::micro_f1;
  std::set<Ablation> ablations;
  int parallelism = 1;
  std::string goal =
      "Optimize the instruction so the target model identifies every emotion "
      "label expressed in the input as accurately as possible.";
  bool score_alignment = true;

  bool has(Ablation a) const { return ablations.count(a) != 0; }

  /// Throws ConfigError naming the first offending field.
  void validate() const;

  bool operator==(const RunConfig&) const = default;
};

}  // namespace apolo
