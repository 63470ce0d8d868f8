#include <gtest/gtest.h>

#include "../support/helpers.hpp"
#include "../support/script_builder.hpp"
#include "apolo/socratic.hpp"

using namespace apolo;
using apolo::testing::RecordingBackend;
using apolo::testing::ScriptBuilder;

namespace {

Trajectory steps(int n) {
  Trajectory t;
  for (int i = 1; i <= n; ++i) t.sub_goals.push_back({i, "sub-goal " + std::to_string(i), 0, 0});
  return t;
}

struct Rig {
  ScriptedBackend scripted;
  RecordingBackend rec;
  AgentClient client;
  TemplateSet templates = TemplateSet::builtin();
  RunConfig config;
  SocraticEngine engine;

  explicit Rig(const ScriptBuilder& b, RunConfig cfg = {})
      : scripted(b.build()), rec(scripted), client(rec, 0.6), config(std::move(cfg)),
        engine(client, templates, config) {}
};

}  // namespace

TEST(RunStep, ApprovePath) {
  Rig rig(ScriptBuilder().approved_step(1, 1, "p1"));
  const auto turn = rig.engine.run_step(steps(1).sub_goals[0], 1, Prompt::initial("p0"), {}, 1);
  EXPECT_EQ(turn.revisions, 0);
  EXPECT_EQ(turn.verdicts.size(), 1u);
  EXPECT_EQ(turn.result_prompt.text, "p1");
  EXPECT_EQ(turn.result_prompt.origin, PromptOrigin::refined);
  EXPECT_EQ(rig.rec.count(Role::teacher), 1);
}

TEST(RunStep, RejectThenApproveRevisesOnce) {
  Rig rig(ScriptBuilder().rejected_step(1, 1, "p1"));
  const auto turn = rig.engine.run_step(steps(1).sub_goals[0], 1, Prompt::initial("p0"), {}, 1);
  EXPECT_EQ(turn.revisions, 1);
  EXPECT_EQ(turn.question, "Revised Q1.1?");
  ASSERT_EQ(turn.verdicts.size(), 2u);
  EXPECT_FALSE(turn.verdicts[0].approved);
  EXPECT_TRUE(turn.verdicts[1].approved);
  EXPECT_EQ(rig.rec.count(Role::teacher), 2);
  // The Student sees the revised question and the suggestion.
  const auto calls = rig.rec.transcript();
  for (const auto& c : calls) {
    if (c.tag.role != Role::student) continue;
    EXPECT_NE(c.messages[1].content.find("Revised Q1.1?"), std::string::npos);
    EXPECT_NE(c.messages[1].content.find("probe the evidence"), std::string::npos);
  }
}

TEST(RunStep, SecondRejectionStillProceeds) {
  Rig rig(ScriptBuilder().rejected_step(1, 1, "p1", "[False]\n[suggestion: still weak]"));
  const auto turn = rig.engine.run_step(steps(1).sub_goals[0], 1, Prompt::initial("p0"), {}, 1);
  EXPECT_EQ(turn.revisions, 1);
  EXPECT_FALSE(turn.verdicts.back().approved);
  EXPECT_EQ(turn.result_prompt.text, "p1");
}

TEST(RunStep, EmptyPreviousPromptRejected) {
  Rig rig(ScriptBuilder{});
  EXPECT_THROW(rig.engine.run_step(steps(1).sub_goals[0], 1, Prompt{}, {}, 1), ArgumentError);
}

TEST(RunTrajectory, ChainsPromptsAndCountsCalls) {
  ScriptBuilder b;
  b.approved_step(1, 1, "p1").rejected_step(1, 2, "p2").approved_step(1, 3, "p3");
  RunConfig cfg;
  cfg.score_alignment = false;
  Rig rig(b, cfg);
  const auto r = rig.engine.run_trajectory(steps(3), Prompt::initial("p0"), 1);
  EXPECT_EQ(r.final_prompt.text, "p3");
  ASSERT_EQ(r.turns.size(), 3u);
  EXPECT_EQ(rig.rec.count(Role::teacher), 4);
  EXPECT_EQ(rig.rec.count(Role::critic), 4);
  EXPECT_EQ(rig.rec.count(Role::student), 3);
  // Turn i's prompt is what the Student of turn i+1 refined.
  const auto calls = rig.rec.transcript();
  for (const auto& c : calls) {
    if (c.tag.role != Role::student || c.tag.step == 1) continue;
    const auto prev = "p" + std::to_string(c.tag.step - 1);
    EXPECT_NE(c.messages[1].content.find(prev), std::string::npos);
  }
  EXPECT_TRUE(r.turns[0].alignment_estimated);
}

TEST(RunTrajectory, NoCriticMakesNoCriticCalls) {
  ScriptBuilder b;
  for (int i = 1; i <= 2; ++i) {
    b.add(Role::teacher, 1, i, CallKind::question, 1, "q?");
    b.add(Role::student, 1, i, CallKind::refine, 1, "p" + std::to_string(i));
  }
  RunConfig cfg;
  cfg.ablations = {Ablation::no_critic};
  Rig rig(b, cfg);
  const auto r = rig.engine.run_trajectory(steps(2), Prompt::initial("p0"), 1);
  EXPECT_EQ(rig.rec.count(Role::critic), 0);
  EXPECT_EQ(r.final_prompt.text, "p2");
  for (const auto& t : r.turns) {
    ASSERT_EQ(t.verdicts.size(), 1u);
    EXPECT_TRUE(t.verdicts[0].approved);
    EXPECT_EQ(t.revisions, 0);
  }
}

TEST(RunTrajectory, NoSocraticReturnsStartUnchanged) {
  RunConfig cfg;
  cfg.ablations = {Ablation::no_socratic};
  Rig rig(ScriptBuilder{}, cfg);
  const auto p0 = Prompt::initial("p0");
  const auto r = rig.engine.run_trajectory(steps(3), p0, 1);
  EXPECT_EQ(r.final_prompt, p0);
  EXPECT_TRUE(r.turns.empty());
}

TEST(Alignment, StoredOrFlaggedFallback) {
  ScriptBuilder b;
  b.approved_step(1, 1, "p1", 0.7);
  b.add(Role::teacher, 1, 2, CallKind::question, 1, "q").add(Role::critic, 1, 2, CallKind::verdict, 1, "[True]");
  b.add(Role::student, 1, 2, CallKind::refine, 1, "p2");
  b.add(Role::critic, 1, 2, CallKind::alignment, 1, "n/a")
      .add(Role::critic, 1, 2, CallKind::alignment, 2, "n/a")
      .add(Role::critic, 1, 2, CallKind::alignment, 3, "n/a");
  Rig rig(b);
  const auto r = rig.engine.run_trajectory(steps(2), Prompt::initial("p0"), 1);
  EXPECT_DOUBLE_EQ(r.turns[0].alignment, 0.7);
  EXPECT_FALSE(r.turns[0].alignment_estimated);
  EXPECT_DOUBLE_EQ(r.turns[1].alignment, kFallbackAlignment);
  EXPECT_TRUE(r.turns[1].alignment_estimated);
}

TEST(RunTrajectory, ScriptedRunsAreByteIdentical) {
  ScriptBuilder b;
  b.approved_step(2, 1, "x1").rejected_step(2, 2, "x2");
  Rig a(b), c(b);
  const auto ra = a.engine.run_trajectory(steps(2), Prompt::initial("p0"), 2);
  const auto rc = c.engine.run_trajectory(steps(2), Prompt::initial("p0"), 2);
  EXPECT_EQ(ra.turns, rc.turns);
  EXPECT_TRUE(apolo::testing::same_transcript(a.rec.transcript(), c.rec.transcript()));
}
