#include "apolo/evaluator.hpp"

#include <algorithm>
#include <cctype>
#include <exception>

#include <json.hpp>

#include "apolo/data.hpp"
#include "apolo/errors.hpp"

namespace apolo {
namespace {

std::string lowercase(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string join_context(const std::vector<std::string>& context) {
  if (context.empty()) return "(none)";
  std::string out;
  for (std::size_t i = 0; i < context.size(); ++i) {
    if (i) out += '\n';
    out += context[i];
  }
  return out;
}

Evaluation assemble(std::vector<Prediction> predictions, std::span<const Sample> samples,
                    const LabelSpace& space, const RunConfig& config) {
  std::vector<LabelSet> preds;
  std::vector<LabelSet> golds;
  preds.reserve(samples.size());
  golds.reserve(samples.size());
  std::int64_t failures = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    preds.push_back(predictions[i].labels);
    golds.push_back(samples[i].gold);
    failures += predictions[i].parse_failed;
  }
  Evaluation ev;
  ev.report = report(preds, golds, space, failures);
  ev.reward = ev.report.value(config.reward_metric);
  ev.predictions = std::move(predictions);
  return ev;
}

void check_samples(std::span<const Sample> samples) {
  if (samples.empty()) throw ArgumentError("evaluate_prompt: no samples");
}

}  // namespace

std::vector<ChatMessage> target_messages(const Prompt& prompt, const Sample& sample,
                                         const LabelSpace& space, const TemplateSet& templates) {
  if (space.mode() == LabelMode::multi) {
    return render(templates.get("target_multi"), {{"prompt", prompt.text},
                                                   {"options", space.options_list()},
                                                   {"title", sample.title.value_or("(none)")},
                                                   {"text", sample.focus_text}});
  }
  return render(templates.get("target_single"), {{"prompt", prompt.text},
                                                  {"options", space.options_list()},
                                                  {"history", join_context(sample.context)},
                                                  {"utterance", sample.focus_text}});
}

Prediction predict(const Prompt& prompt, const Sample& sample, const LabelSpace& space,
                   AgentClient& client, const TemplateSet& templates, const CallTag& tag) {
  const auto result = client.call(target_messages(prompt, sample, space, templates), tag);
  const auto parsed = space.mode() == LabelMode::multi ? parse_target_multi(result.text, space)
                                                       : parse_target_single(result.text, space);
  Prediction p;
  p.sample_id = sample.id;
  p.raw_text = result.text;
  p.labels = parsed.labels;
  p.parse_failed = parsed.failed;
  p.dropped = parsed.dropped;
  return p;
}

Evaluation evaluate_prompt(const Prompt& prompt, std::span<const Sample> samples,
                           const LabelSpace& space, const RunConfig& config, AgentClient& client,
                           const TemplateSet& templates, int iteration, CallKind kind) {
  check_samples(samples);
  const auto n = static_cast<std::ptrdiff_t>(samples.size());
  std::vector<Prediction> predictions(samples.size());
  std::vector<std::exception_ptr> errors(samples.size());

#pragma omp parallel for num_threads(config.parallelism) schedule(dynamic, 1)
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    const auto i = static_cast<std::size_t>(j);
    try {
      const CallTag tag{Role::target, iteration, 0, kind, static_cast<int>(i) + 1};
      predictions[i] = predict(prompt, samples[i], space, client, templates, tag);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }

  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return assemble(std::move(predictions), samples, space, config);
}

namespace serial {

Evaluation evaluate_prompt(const Prompt& prompt, std::span<const Sample> samples,
                           const LabelSpace& space, const RunConfig& config, AgentClient& client,
                           const TemplateSet& templates, int iteration, CallKind kind) {
  check_samples(samples);
  std::vector<Prediction> predictions;
  predictions.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const CallTag tag{Role::target, iteration, 0, kind, static_cast<int>(i) + 1};
    predictions.push_back(predict(prompt, samples[i], space, client, templates, tag));
  }
  return assemble(std::move(predictions), samples, space, config);
}

}  // namespace serial

// ---------------------------------------------------------------------------

void SyntheticEnv::validate() const {
  if (!(base_score >= 0.0 && base_score <= 1.0)) throw ConfigError("base_score must be in [0,1]");
  double sum = base_score;
  for (const auto& [keyword, w] : feature_weights) {
    if (keyword.empty()) throw ConfigError("synthetic env: empty keyword");
    if (!(w >= 0.0 && w <= 1.0)) throw ConfigError("weight of '" + keyword + "' must be in [0,1]");
    sum += w;
  }
  if (sum > 1.0 + 1e-12) throw ConfigError("base_score + sum of weights must not exceed 1");
}

SyntheticEnv SyntheticEnv::parse(const std::string& json_text) {
  SyntheticEnv env;
  try {
    const auto j = nlohmann::json::parse(json_text);
    env.base_score = j.value("base_score", 0.0);
    if (j.contains("feature_weights")) {
      for (const auto& [k, v] : j.at("feature_weights").items()) {
        env.feature_weights[k] = v.get<double>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synthetic env: ") + e.what());
  }
  env.validate();
  return env;
}

SyntheticEnv SyntheticEnv::from_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError("synthetic env file '" + path.string() + "' does not exist");
  }
  return parse(read_text_file(path));
}

double synthetic_reward(const Prompt& prompt, const SyntheticEnv& env) {
  const auto text = lowercase(prompt.text);
  double r = env.base_score;
  for (const auto& [keyword, w] : env.feature_weights) {
    if (text.find(lowercase(keyword)) != std::string::npos) r += w;
  }
  return std::clamp(r, 0.0, 1.0);
}

TargetScorer::TargetScorer(std::vector<Sample> samples, const LabelSpace& space,
                           const RunConfig& config, AgentClient& client,
                           const TemplateSet& templates)
    : samples_(std::move(samples)),
      space_(space),
      config_(config),
      client_(client),
      templates_(templates) {
  check_samples(samples_);
}

ScoreOutcome TargetScorer::score(const Prompt& prompt, int iteration) {
  auto ev = evaluate_prompt(prompt, samples_, space_, config_, client_, templates_, iteration);
  return {ev.reward, std::move(ev.report)};
}

// ---------------------------------------------------------------------------

Optimizer::Optimizer(const RunConfig& config, AgentClient& client, const TemplateSet& templates,
                     PromptScorer& scorer, RunObserver* observer)
    : config_(config), client_(client), templates_(templates), scorer_(scorer), observer_(observer) {
  config_.validate();
}

void Optimizer::fail(RunState& state, const std::exception& e) {
  state.status = RunStatus::failed;
  std::string kind = "other";
  if (dynamic_cast<const BackendError*>(&e)) kind = "backend";
  if (dynamic_cast<const GrammarError*>(&e)) kind = "grammar";
  state.failure = FailureInfo{kind, e.what()};
}

RunState Optimizer::optimize(const Prompt& initial_prompt, const PlannerContext& planner_context) {
  RunState state;
  state.config = config_;
  state.initial_prompt = initial_prompt;
  state.refresh_prompts();
  client_.take_usage();
  try {
    if (config_.has(Ablation::no_planner)) {
      state.trajectory = trivial_trajectory(planner_context.goal, config_);
    } else {
      Planner planner(client_, templates_, &state.warnings);
      state.trajectory = planner.plan(planner_context, config_);
    }
    state.planning_tokens = client_.take_usage();
    if (observer_) observer_->on_planned(state);
    run_iterations(state);
  } catch (const std::exception& e) {
    state.planning_tokens.merge(client_.take_usage());
    fail(state, e);
  }
  if (observer_) observer_->on_finish(state);
  return state;
}

RunState Optimizer::resume(RunState state) {
  if (is_terminal(state.status)) {
    throw ResumeError("run already finished with status " + std::string(to_string(state.status)) +
                      "; refusing to continue");
  }
  if (state.trajectory.sub_goals.empty()) {
    throw ResumeError("run has no trajectory; start a new run instead");
  }
  state.status = RunStatus::running;
  state.failure.reset();
  client_.take_usage();
  try {
    run_iterations(state);
  } catch (const std::exception& e) {
    fail(state, e);
  }
  if (observer_) observer_->on_finish(state);
  return state;
}

void Optimizer::run_iterations(RunState& state) {
  const double delta = state.config.delta;
  const int max_iter = state.config.max_iterations;
  auto previous_reward = [&state](std::size_t count) {
    return count < 2 ? 0.0 : state.iterations[count - 2].reward;
  };

  // A crash between recording an iteration and updating the status leaves a
  // stopping condition that is already met.
  if (!state.iterations.empty()) {
    const auto count = state.iterations.size();
    if (state.iterations.back().reward - previous_reward(count) <= delta) {
      state.status = RunStatus::stopped_delta;
      return;
    }
  }

  SocraticEngine engine(client_, templates_, state.config);
  for (int t = static_cast<int>(state.iterations.size()) + 1; t <= max_iter; ++t) {
    const Prompt start =
        state.iterations.empty() ? state.initial_prompt : state.iterations.back().final_prompt;
    client_.take_usage();
    IterationRecord record;
    record.t = t;
    try {
      auto refined = engine.run_trajectory(state.trajectory, start, t);
      auto outcome = scorer_.score(refined.final_prompt, t);
      record.final_prompt = std::move(refined.final_prompt);
      record.turns = std::move(refined.turns);
      record.reward = outcome.reward;
      record.metrics = std::move(outcome.metrics);
    } catch (...) {
      state.unrecorded_tokens.merge(client_.take_usage());
      throw;
    }
    record.tokens = client_.take_usage();

    const double gain = record.reward - (state.iterations.empty() ? 0.0 : state.iterations.back().reward);
    state.iterations.push_back(std::move(record));
    state.refresh_prompts();
    if (gain <= delta) state.status = RunStatus::stopped_delta;
    if (observer_) observer_->on_iteration(state, state.iterations.back());
    if (state.status == RunStatus::stopped_delta) return;
  }
  state.status = RunStatus::stopped_max_iter;
}

Prompt cot_zero_shot(const Prompt& p0) {
  return Prompt{"Let's think step by step.\n" + p0.text, PromptOrigin::baseline, 0, 0};
}

Prompt cot_few_shot(const Prompt& p0, const std::string& example) {
  if (example.empty()) throw ArgumentError("few-shot baseline needs a worked example");
  return Prompt{"Let's think step by step.\n" + p0.text + "\n\nExample:\n" + example,
                PromptOrigin::baseline, 0, 0};
}

}  // namespace apolo
