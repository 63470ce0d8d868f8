#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "../support/helpers.hpp"
#include "../support/script_builder.hpp"
#include "apolo/planner.hpp"

using namespace apolo;
using apolo::testing::RecordingBackend;
using apolo::testing::ScriptBuilder;

namespace {

Trajectory traj(int n, double proxy, double risk) {
  Trajectory t;
  for (int i = 1; i <= n; ++i) t.sub_goals.push_back({i, "g", 0, 0});
  t.likelihood_proxy = proxy;
  t.risk = risk;
  t.cost = score_cost(t, CostWeights{});
  return t;
}

PlannerContext ctx() { return {"goal", "digest", Prompt::initial("p0")}; }

}  // namespace

TEST(Cost, HandValues) {
  EXPECT_NEAR(score_cost(traj(2, 0, 0), CostWeights{}), 10.0 / 3.0, 1e-12);
  EXPECT_NEAR(score_cost(traj(1, 0, 0), CostWeights{}), 5.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(score_cost(traj(7, 0, 0), CostWeights{1, 0, 0}), 7.0);
}

TEST(Cost, LinearInEachWeight) {
  const auto t = traj(3, 0, 0);
  for (int w = 0; w < 3; ++w) {
    CostWeights a{0, 0, 0}, b{0, 0, 0};
    double* pa[] = {&a.length, &a.calls, &a.time};
    double* pb[] = {&b.length, &b.calls, &b.time};
    *pa[w] = 0.7;
    *pb[w] = 1.4;
    EXPECT_NEAR(score_cost(t, b), 2 * score_cost(t, a), 1e-12);
  }
}

TEST(Proxy, LogOfClampedPlausibility) {
  EXPECT_DOUBLE_EQ(plausibility_to_proxy(1.0), 0.0);
  EXPECT_NEAR(plausibility_to_proxy(0.8), -0.2231, 1e-4);
  EXPECT_NEAR(plausibility_to_proxy(0.001), std::log(0.01), 1e-12);
  EXPECT_NEAR(plausibility_to_proxy(0.001), -4.6052, 1e-4);
}

TEST(Select, UtilityExampleAndTieBreak) {
  std::vector<Trajectory> c = {traj(2, std::log(0.8), 0.4), traj(1, 0, 0)};
  c[1].likelihood_proxy = -0.7 + 0.05 * c[1].cost;  // U = -0.7
  EXPECT_EQ(select_index(c, 0.5, 0.05), 0u);
  EXPECT_NEAR(c[0].utility, -0.5898, 1e-4);
  EXPECT_NEAR(c[1].utility, -0.7, 1e-12);

  std::vector<Trajectory> tie = {traj(2, -1, 0), traj(2, -1, 0), traj(2, -1, 0)};
  EXPECT_EQ(select_index(tie, 0.5, 0.05), 0u);
  std::vector<Trajectory> one = {traj(3, -2, 1)};
  EXPECT_EQ(select(one, 0.5, 0.05).size(), 3u);
  std::vector<Trajectory> none;
  EXPECT_THROW(select_index(none, 0.5, 0.05), ArgumentError);
}

TEST(Select, InvariantUnderProxyShift) {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> u(0, 2);
  for (int i = 0; i < 200; ++i) {
    std::vector<Trajectory> c;
    for (int k = 0; k < 4; ++k) c.push_back(traj(1 + static_cast<int>(rng() % 4), -u(rng), u(rng)));
    auto shifted = c;
    for (auto& t : shifted) t.likelihood_proxy += 1.25;
    EXPECT_EQ(select_index(c, 0.5, 0.05), select_index(shifted, 0.5, 0.05));
  }
}

TEST(Select, GammaZeroIsLikelihoodMaximization) {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(0, 2);
  for (int i = 0; i < 200; ++i) {
    std::vector<Trajectory> c;
    for (int k = 0; k < 5; ++k) c.push_back(traj(1 + static_cast<int>(rng() % 4), -u(rng), u(rng)));
    std::size_t best = 0;
    for (std::size_t k = 1; k < c.size(); ++k) {
      if (c[k].likelihood_proxy > c[best].likelihood_proxy) best = k;
    }
    EXPECT_EQ(select_index(c, 0, 0), best);
  }
}

TEST(Select, RaisingGammaRiskNeverFavoursRiskierDominatedCandidate) {
  // B is riskier, no more plausible, and no cheaper than A.
  std::mt19937 rng(10);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 200; ++i) {
    auto a = traj(2, -u(rng), u(rng));
    auto b = traj(2 + static_cast<int>(rng() % 2), a.likelihood_proxy - u(rng) * 0.1, a.risk + 0.01 + u(rng));
    for (double g1 : {0.0, 0.5, 1.0}) {
      std::vector<Trajectory> c1 = {a, b}, c2 = {a, b};
      const auto s1 = select_index(c1, g1, 0.05);
      const auto s2 = select_index(c2, g1 + 0.75, 0.05);
      if (s1 == 0) EXPECT_EQ(s2, 0u);
    }
  }
}

TEST(Trivial, SingleStepWithCostOnlyUtility) {
  RunConfig cfg;
  const auto t = trivial_trajectory("anything", cfg);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.sub_goals[0].description, "Optimize the entire prompt for the task goal");
  EXPECT_DOUBLE_EQ(t.risk, 0.0);
  EXPECT_NEAR(t.utility, -cfg.gamma_cost * t.cost, 1e-12);
}

TEST(Planner, GeneratesKCandidatesInCallOrder) {
  ScriptBuilder b;
  b.plan(1, {"a1"}).plan(2, {"b1", "b2"}).plan(3, {"c1", "c2", "c3"});
  auto backend = b.build();
  AgentClient client(backend, 0.6);
  const auto templates = TemplateSet::builtin();
  Planner planner(client, templates);
  const auto c = planner.generate_candidates(ctx(), 3);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[0].size(), 1u);
  EXPECT_EQ(c[1].size(), 2u);
  EXPECT_EQ(c[2].sub_goals[2].description, "c3");
}

TEST(Planner, DefaultKIssuesFourPlannerCalls) {
  ScriptBuilder b;
  for (int k = 1; k <= 4; ++k) b.candidate(k, 2, 0.1, 0.5);
  auto backend = b.build();
  RecordingBackend rec(backend);
  AgentClient client(rec, 0.6);
  const auto templates = TemplateSet::builtin();
  Planner planner(client, templates);
  planner.plan(ctx(), RunConfig{});
  EXPECT_EQ(rec.count(Role::planner), 4);
  EXPECT_EQ(rec.count(Role::critic, CallKind::risk), 8);
  EXPECT_EQ(rec.count(Role::critic, CallKind::plausibility), 4);
}

TEST(Planner, ScoresRiskFromRaterAndFallsBackToMaximum) {
  ScriptBuilder b;
  b.risk(1, 1, 0.2, 0.1).risk(1, 2, 0.4, 0.3);
  for (int occ : {2, 4, 6}) b.add(Role::critic, 1, 1, CallKind::risk, occ, "unclear");
  auto backend = b.build();
  AgentClient client(backend, 0.6);
  const auto templates = TemplateSet::builtin();
  std::vector<std::string> warnings;
  Planner planner(client, templates, &warnings);
  auto t = traj(2, 0, 0);
  EXPECT_DOUBLE_EQ(planner.score_risk(t, ctx(), 1, 2), 0.5);
  EXPECT_DOUBLE_EQ(t.sub_goals[1].safety_risk, 0.3);
  auto u = traj(2, 0, 0);
  EXPECT_DOUBLE_EQ(planner.score_risk(u, ctx(), 2, 2), 2.0);
  EXPECT_DOUBLE_EQ(u.sub_goals[1].emo_risk, 1.0);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Planner, UnparseablePlausibilityUsesHalf) {
  ScriptBuilder b;
  for (int occ : {1, 2, 3}) b.add(Role::critic, 1, 0, CallKind::plausibility, occ, "very plausible");
  auto backend = b.build();
  AgentClient client(backend, 0.6);
  const auto templates = TemplateSet::builtin();
  std::vector<std::string> warnings;
  Planner planner(client, templates, &warnings);
  EXPECT_NEAR(planner.likelihood_proxy(traj(1, 0, 0), ctx(), 1, 1), std::log(0.5), 1e-12);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Planner, GammaZeroPicksMostPlausibleOfThreeScripted) {
  ScriptBuilder b;
  b.candidate(1, 1, 0.0, 0.4).candidate(2, 4, 0.9, 0.9).candidate(3, 2, 0.1, 0.6);
  auto backend = b.build();
  AgentClient client(backend, 0.6);
  const auto templates = TemplateSet::builtin();
  Planner planner(client, templates);
  RunConfig cfg;
  cfg.num_candidates = 3;
  cfg.gamma_risk = 0;
  cfg.gamma_cost = 0;
  EXPECT_EQ(planner.plan(ctx(), cfg).size(), 4u);
  auto backend2 = b.build();
  AgentClient client2(backend2, 0.6);
  Planner planner2(client2, templates);
  cfg.gamma_risk = 0.5;
  cfg.gamma_cost = 0.05;
  EXPECT_EQ(planner2.plan(ctx(), cfg).size(), 2u);
}
