#include <gtest/gtest.h>

#include <deque>

#include "../support/helpers.hpp"
#include "../support/script_builder.hpp"
#include "apolo/errors.hpp"
#include "apolo/evaluator.hpp"

using namespace apolo;
using apolo::testing::RecordingBackend;
using apolo::testing::ScriptBuilder;

namespace {

LabelSpace ab_multi() { return LabelSpace({EmotionLabel("a"), EmotionLabel("b")}, LabelMode::multi); }

LabelSpace single_space() {
  return LabelSpace({EmotionLabel("joy"), EmotionLabel("sadness"), EmotionLabel("anger")}, LabelMode::single);
}

Sample multi_sample(std::string id, std::initializer_list<const char*> gold) {
  Sample s;
  s.id = std::move(id);
  s.focus_text = "text of " + s.id;
  for (auto g : gold) s.gold.insert(EmotionLabel(g));
  return s;
}

Sample single_sample(std::string id, const char* gold) {
  Sample s;
  s.id = std::move(id);
  s.context = {"earlier line"};
  s.focus_text = "utterance " + s.id;
  s.gold = {EmotionLabel(gold)};
  return s;
}

// The three-sample case: preds [{a},{b},{b}] against golds [{a},{a},{b}].
std::vector<Sample> three() { return {multi_sample("s1", {"a"}), multi_sample("s2", {"a"}), multi_sample("s3", {"b"})}; }

ScriptBuilder three_script(int t = 1) {
  ScriptBuilder b;
  b.target(t, 1, "**Emotions**: [a]").target(t, 2, "**Emotions**: [b]").target(t, 3, "**Emotions**: [b]");
  return b;
}

class SequenceScorer final : public PromptScorer {
 public:
  explicit SequenceScorer(std::vector<double> rewards) : rewards_(std::move(rewards)) {}
  ScoreOutcome score(const Prompt&, int iteration) override {
    if (iteration < 1 || iteration > static_cast<int>(rewards_.size())) {
      throw ArgumentError("no reward scripted for iteration " + std::to_string(iteration));
    }
    return {rewards_[static_cast<std::size_t>(iteration - 1)], std::nullopt};
  }

 private:
  std::vector<double> rewards_;
};

struct LoopRig {
  ScriptedBackend backend = ScriptBuilder().build();
  AgentClient client{backend, 0.6};
  TemplateSet templates = TemplateSet::builtin();
  RunConfig config;

  LoopRig() { config.ablations = {Ablation::no_planner, Ablation::no_socratic}; }

  RunState run(std::vector<double> rewards) {
    SequenceScorer scorer(std::move(rewards));
    Optimizer opt(config, client, templates, scorer);
    return opt.optimize(Prompt::initial("p0"), PlannerContext{"g", "d", Prompt::initial("p0")});
  }
};

}  // namespace

TEST(Predict, SingleMultiAndGibberish) {
  const auto templates = TemplateSet::builtin();
  auto backend = ScriptBuilder()
                     .target(1, 1, "sadness")
                     .target(1, 2, "**Emotions**: [a, b]\n**Reasoning**: x")
                     .target(1, 3, "qwerty")
                     .build();
  AgentClient client(backend, 0.6);
  const auto p = Prompt::initial("Classify.");
  auto r = predict(p, single_sample("d1", "joy"), single_space(), client, templates,
                   CallTag{Role::target, 1, 0, CallKind::predict, 1});
  EXPECT_EQ(r.labels, LabelSet{EmotionLabel("sadness")});
  EXPECT_FALSE(r.parse_failed);
  r = predict(p, multi_sample("m", {"a"}), ab_multi(), client, templates,
              CallTag{Role::target, 1, 0, CallKind::predict, 2});
  EXPECT_EQ(r.labels.size(), 2u);
  r = predict(p, single_sample("d3", "joy"), single_space(), client, templates,
              CallTag{Role::target, 1, 0, CallKind::predict, 3});
  EXPECT_TRUE(r.parse_failed);
  EXPECT_TRUE(r.labels.empty());
  EXPECT_EQ(r.raw_text, "qwerty");
}

TEST(TargetMessages, SingleModeCarriesHistoryAndUtterance) {
  const auto msgs = target_messages(Prompt::initial("INSTR"), single_sample("d", "joy"), single_space(),
                                    TemplateSet::builtin());
  EXPECT_EQ(msgs[0].content.find("INSTR"), 0u);
  EXPECT_NE(msgs[0].content.find("joy, sadness, anger"), std::string::npos);
  EXPECT_NE(msgs[1].content.find("earlier line"), std::string::npos);
  EXPECT_NE(msgs[1].content.find("utterance d"), std::string::npos);
}

TEST(Evaluate, ThreeSampleCaseRewards) {
  const auto templates = TemplateSet::builtin();
  const auto samples = three();
  for (auto metric : {RewardMetric::micro_f1, RewardMetric::macro_f1, RewardMetric::emr}) {
    auto backend = three_script().build();
    AgentClient client(backend, 0.6);
    RunConfig cfg;
    cfg.reward_metric = metric;
    const auto ev = evaluate_prompt(Prompt::initial("p"), samples, ab_multi(), cfg, client, templates, 1);
    EXPECT_NEAR(ev.reward, 2.0 / 3.0, 1e-12) << to_string(metric);
  }
}

TEST(Evaluate, PerfectPredictionsGiveOne) {
  auto backend = ScriptBuilder().target(1, 1, "joy").target(1, 2, "anger").build();
  AgentClient client(backend, 0.6);
  const std::vector<Sample> s = {single_sample("x", "joy"), single_sample("y", "anger")};
  const auto ev = evaluate_prompt(Prompt::initial("p"), s, single_space(), RunConfig{}, client,
                                  TemplateSet::builtin(), 1);
  EXPECT_DOUBLE_EQ(ev.reward, 1.0);
  EXPECT_EQ(ev.predictions[1].sample_id, "y");
}

TEST(Evaluate, ParallelMatchesSerial) {
  std::vector<Sample> samples;
  ScriptBuilder b;
  const char* answers[] = {"**Emotions**: [a]", "**Emotions**: [b]", "**Emotions**: [a, b]", "nothing", "b"};
  for (int i = 1; i <= 40; ++i) {
    samples.push_back(multi_sample("s" + std::to_string(i), {i % 2 ? "a" : "b"}));
    b.target(1, i, answers[i % 5]);
  }
  const auto templates = TemplateSet::builtin();
  auto serial_backend = b.build();
  AgentClient serial_client(serial_backend, 0.6);
  const auto ref = serial::evaluate_prompt(Prompt::initial("p"), samples, ab_multi(), RunConfig{},
                                           serial_client, templates, 1);
  for (int threads : {1, 2, 4, 8}) {
    auto backend = b.build();
    AgentClient client(backend, 0.6);
    RunConfig cfg;
    cfg.parallelism = threads;
    const auto ev = evaluate_prompt(Prompt::initial("p"), samples, ab_multi(), cfg, client, templates, 1);
    EXPECT_EQ(ev.report, ref.report) << threads;
    ASSERT_EQ(ev.predictions.size(), ref.predictions.size());
    for (std::size_t i = 0; i < ev.predictions.size(); ++i) {
      EXPECT_EQ(ev.predictions[i].labels, ref.predictions[i].labels);
      EXPECT_EQ(ev.predictions[i].raw_text, ref.predictions[i].raw_text);
    }
    EXPECT_EQ(client.usage(), serial_client.usage());
  }
}

TEST(Evaluate, LowestFailingSampleIsReported) {
  ScriptBuilder b;
  std::vector<Sample> samples;
  for (int i = 1; i <= 12; ++i) {
    samples.push_back(multi_sample("s" + std::to_string(i), {"a"}));
    if (i != 5 && i != 9) b.target(1, i, "a");
  }
  auto backend = b.build();
  AgentClient client(backend, 0.6);
  RunConfig cfg;
  cfg.parallelism = 4;
  try {
    evaluate_prompt(Prompt::initial("p"), samples, ab_multi(), cfg, client, TemplateSet::builtin(), 1);
    FAIL();
  } catch (const ScriptMissError& e) {
    EXPECT_NE(std::string(e.what()).find("(target,1,0,predict,5)"), std::string::npos) << e.what();
  }
  EXPECT_THROW(evaluate_prompt(Prompt::initial("p"), {}, ab_multi(), cfg, client, TemplateSet::builtin(), 1),
               ArgumentError);
}

TEST(Synthetic, AdditiveKeywordScore) {
  const auto env = SyntheticEnv::parse(R"({"base_score":0.3,"feature_weights":{"step-by-step":0.2,"options":0.1}})");
  EXPECT_NEAR(synthetic_reward(Prompt::initial("Think Step-By-Step over the OPTIONS"), env), 0.6, 1e-12);
  EXPECT_NEAR(synthetic_reward(Prompt::initial("plain"), env), 0.3, 1e-12);
  const auto empty = SyntheticEnv::parse(R"({"base_score":0.25,"feature_weights":{}})");
  EXPECT_DOUBLE_EQ(synthetic_reward(Prompt::initial("anything options"), empty), 0.25);
  EXPECT_THROW(SyntheticEnv::parse(R"({"base_score":0.8,"feature_weights":{"x":0.3}})"), ConfigError);
  EXPECT_THROW(SyntheticEnv::parse(R"({"base_score":-0.1})"), ConfigError);
  EXPECT_THROW(SyntheticEnv::from_file("/nonexistent/env.json"), ConfigError);
}

TEST(Loop, StopsAtFirstSmallGain) {
  LoopRig rig;
  const auto s = rig.run({0.50, 0.60, 0.605});
  EXPECT_EQ(s.iterations.size(), 3u);
  EXPECT_EQ(s.status, RunStatus::stopped_delta);
}

TEST(Loop, RisingRewardsRunToTheCap) {
  LoopRig rig;
  std::vector<double> r;
  for (int t = 1; t <= 10; ++t) r.push_back(0.05 * t);
  const auto s = rig.run(r);
  EXPECT_EQ(s.iterations.size(), 10u);
  EXPECT_EQ(s.status, RunStatus::stopped_max_iter);
}

TEST(Loop, FirstRewardBelowDeltaStopsImmediately) {
  LoopRig rig;
  const auto s = rig.run({0.005});
  EXPECT_EQ(s.iterations.size(), 1u);
  EXPECT_EQ(s.status, RunStatus::stopped_delta);
}

TEST(Loop, ReturnedIsLatestAndBestIsArgmax) {
  LoopRig rig;
  rig.config.ablations = {Ablation::no_planner};
  ScriptBuilder b;
  for (int t = 1; t <= 3; ++t) {
    b.add(Role::teacher, t, 1, CallKind::question, 1, "q")
        .add(Role::critic, t, 1, CallKind::verdict, 1, "[True]")
        .add(Role::student, t, 1, CallKind::refine, 1, "prompt " + std::to_string(t))
        .add(Role::critic, t, 1, CallKind::alignment, 1, "0.5");
  }
  auto backend = b.build();
  AgentClient client(backend, 0.6);
  SequenceScorer scorer({0.4, 0.7, 0.5});
  Optimizer opt(rig.config, client, rig.templates, scorer);
  const auto s = opt.optimize(Prompt::initial("p0"), PlannerContext{"g", "d", Prompt::initial("p0")});
  EXPECT_EQ(s.status, RunStatus::stopped_delta);
  EXPECT_EQ(s.returned_prompt.text, "prompt 3");
  EXPECT_EQ(s.best_prompt.text, "prompt 2");
  EXPECT_EQ(s.best_iteration(), 1u);
  EXPECT_GT(s.iterations[0].tokens.total(), 0);
  std::int64_t sum = s.planning_tokens.total() + s.unrecorded_tokens.total();
  for (const auto& it : s.iterations) sum += it.tokens.total();
  EXPECT_EQ(s.total_tokens().total(), sum);
}

TEST(Loop, BackendFailureEndsRunAsFailed) {
  LoopRig rig;
  rig.config.ablations = {Ablation::no_planner};
  auto backend = ScriptBuilder().build();
  AgentClient client(backend, 0.6);
  SequenceScorer scorer({0.5});
  Optimizer opt(rig.config, client, rig.templates, scorer);
  const auto s = opt.optimize(Prompt::initial("p0"), PlannerContext{"g", "d", Prompt::initial("p0")});
  EXPECT_EQ(s.status, RunStatus::failed);
  ASSERT_TRUE(s.failure);
  EXPECT_EQ(s.failure->kind, "backend");
  EXPECT_TRUE(s.iterations.empty());
  EXPECT_EQ(s.returned_prompt.text, "p0");
}

TEST(Loop, ResumeContinuesAndRefusesFinishedRuns) {
  LoopRig rig;
  auto partial = rig.run({0.2, 0.4});
  partial.status = RunStatus::running;
  partial.iterations.pop_back();
  SequenceScorer scorer({0.2, 0.4, 0.41});
  Optimizer opt(rig.config, rig.client, rig.templates, scorer);
  const auto done = opt.resume(partial);
  EXPECT_EQ(done.iterations.size(), 3u);
  EXPECT_EQ(done.status, RunStatus::stopped_delta);
  EXPECT_THROW(opt.resume(done), ResumeError);
}

TEST(Baselines, ChainOfThoughtPrompts) {
  const auto p0 = Prompt::initial("Classify the emotion.");
  const auto zero = cot_zero_shot(p0);
  EXPECT_EQ(zero.text.rfind("Let's think step by step", 0), 0u);
  EXPECT_NE(zero.text.find("Classify the emotion."), std::string::npos);
  EXPECT_EQ(zero.origin, PromptOrigin::baseline);
  const auto few = cot_few_shot(p0, "Text: yay\nLabel: joy");
  EXPECT_EQ(few.text.rfind(zero.text, 0), 0u);
  EXPECT_NE(few.text.find("Label: joy"), std::string::npos);
  EXPECT_THROW(cot_few_shot(p0, ""), ArgumentError);
}
