#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "apolo/agents.hpp"
#include "apolo/metrics.hpp"
#include "apolo/planner.hpp"
#include "apolo/run_state.hpp"
#include "apolo/socratic.hpp"

namespace apolo {

struct Prediction {
  std::string sample_id;
  std::string raw_text;
  LabelSet labels;
  bool parse_failed = false;
  int dropped = 0;
};

struct Evaluation {
  MetricReport report;
  double reward = 0.0;
  std::vector<Prediction> predictions;  // in sample order
};

/// Target messages for one sample: the prompt under test plus options and
/// the output contract as system text; the sample as user text.
std::vector<ChatMessage> target_messages(const Prompt& prompt, const Sample& sample,
                                         const LabelSpace& space, const TemplateSet& templates);

Prediction predict(const Prompt& prompt, const Sample& sample, const LabelSpace& space,
                   AgentClient& client, const TemplateSet& templates, const CallTag& tag);

/// Fans Target calls out over up to `config.parallelism` threads. Sample j
/// (0-based) is tagged (target, iteration, 0, kind, j + 1); results are
/// joined in sample order, so the outcome is independent of completion
/// order. If any call fails, the error of the lowest failing sample index
/// is rethrown and all partial results are discarded.
Evaluation evaluate_prompt(const Prompt& prompt, std::span<const Sample> samples,
                           const LabelSpace& space, const RunConfig& config, AgentClient& client,
                           const TemplateSet& templates, int iteration,
                           CallKind kind = CallKind::predict);

namespace serial {

// One sample at a time; reference for the parallel fan-out.
Evaluation evaluate_prompt(const Prompt& prompt, std::span<const Sample> samples,
                           const LabelSpace& space, const RunConfig& config, AgentClient& client,
                           const TemplateSet& templates, int iteration,
                           CallKind kind = CallKind::predict);

}  // namespace serial

// ---------------------------------------------------------------------------

struct SyntheticEnv {
  std::map<std::string, double> feature_weights;
  double base_score = 0.0;

  /// Throws ConfigError unless every value lies in [0,1] and
  /// base_score + Σ weights <= 1.
  void validate() const;

  /// {"base_score": 0.3, "feature_weights": {"step-by-step": 0.2, ...}}
  static SyntheticEnv from_file(const std::filesystem::path& path);
  static SyntheticEnv parse(const std::string& json_text);
};

/// base_score plus the weight of every keyword found (case-insensitive) in
/// the prompt text.
double synthetic_reward(const Prompt& prompt, const SyntheticEnv& env);

struct ScoreOutcome {
  double reward = 0.0;
  std::optional<MetricReport> metrics;
};

class PromptScorer {
 public:
  virtual ~PromptScorer() = default;
  virtual ScoreOutcome score(const Prompt& prompt, int iteration) = 0;
};

class TargetScorer final : public PromptScorer {
 public:
  TargetScorer(std::vector<Sample> samples, const LabelSpace& space, const RunConfig& config,
               AgentClient& client, const TemplateSet& templates);

  ScoreOutcome score(const Prompt& prompt, int iteration) override;
  const std::vector<Sample>& samples() const { return samples_; }

 private:
  std::vector<Sample> samples_;
  const LabelSpace& space_;
  const RunConfig& config_;
  AgentClient& client_;
  const TemplateSet& templates_;
};

class SyntheticScorer final : public PromptScorer {
 public:
  explicit SyntheticScorer(SyntheticEnv env) : env_(std::move(env)) { env_.validate(); }
  ScoreOutcome score(const Prompt& prompt, int) override {
    return {synthetic_reward(prompt, env_), std::nullopt};
  }

 private:
  SyntheticEnv env_;
};

// ---------------------------------------------------------------------------

class RunObserver {
 public:
  virtual ~RunObserver() = default;
  virtual void on_planned(const RunState&) {}
  virtual void on_iteration(const RunState&, const IterationRecord&) {}
  virtual void on_finish(const RunState&) {}
};

/// The outer loop: plan once, then refine-evaluate until the reward gain
/// drops to delta (with the reward before iteration 1 taken as 0) or the
/// iteration cap is reached. Errors end the run with status `failed`; they
/// are recorded on the returned state, never thrown.
class Optimizer {
 public:
  Optimizer(const RunConfig& config, AgentClient& client, const TemplateSet& templates,
            PromptScorer& scorer, RunObserver* observer = nullptr);

  RunState optimize(const Prompt& initial_prompt, const PlannerContext& planner_context);

  /// Continues a persisted run from its last completed iteration. Throws
  /// ResumeError for runs that already stopped.
  RunState resume(RunState state);

 private:
  void run_iterations(RunState& state);
  void fail(RunState& state, const std::exception& e);

  const RunConfig& config_;
  AgentClient& client_;
  const TemplateSet& templates_;
  PromptScorer& scorer_;
  RunObserver* observer_;
};

/// "Let's think step by step" prepended to the instruction.
Prompt cot_zero_shot(const Prompt& p0);
/// Zero-shot CoT plus one worked example supplied by the user.
Prompt cot_few_shot(const Prompt& p0, const std::string& example);

}  // namespace apolo
