#include <gtest/gtest.h>

#include <sstream>

#include "../support/helpers.hpp"
#include "apolo/cli.hpp"
#include "apolo/data.hpp"
#include "apolo/json_io.hpp"

using namespace apolo;
using apolo::testing::source_path;
using apolo::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string toy(const std::string& name) { return source_path("data/toy/" + name).string(); }

std::vector<std::string> optimize_args(const fs::path& runs_dir) {
  return {"optimize", "--backend", "scripted", "--script", toy("script.jsonl"), "--dataset",
          toy("eval.jsonl"), "--labels", toy("labels.txt"), "--p0",
          "Identify the emotions expressed in the post.", "--candidates", "2", "--max-iter", "3",
          "--runs-dir", runs_dir.string()};
}

std::string only_run(const fs::path& root) {
  std::vector<std::string> ids;
  for (const auto& e : fs::directory_iterator(root / "runs")) ids.push_back(e.path().filename().string());
  EXPECT_EQ(ids.size(), 1u);
  return ids.empty() ? "" : ids[0];
}

std::string line_with(const std::string& text, const std::string& prefix) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(prefix, 0) == 0) return line;
  }
  return "";
}

}  // namespace

TEST(Cli, HelpListsEveryFlagAndUnknownFlagsFail) {
  const auto help = run({"--help"});
  EXPECT_EQ(help.code, 0);
  for (const char* flag : {"--dataset", "--labels", "--p0", "--backend", "--script", "--env", "--base-url",
                           "--model", "--seed", "--delta", "--max-iter", "--candidates", "--gamma-risk",
                           "--gamma-cost", "--alpha-len", "--alpha-call", "--alpha-time", "--temperature",
                           "--eval-subset", "--reward-metric", "--ablate", "--parallelism", "--config",
                           "--baseline", "--resume", "--pred", "--gold", "--run", "--runs", "--runs-dir"}) {
    EXPECT_NE(help.out.find(flag), std::string::npos) << flag;
  }
  EXPECT_EQ(run({"optimize", "--frobnicate"}).code, 1);
  EXPECT_EQ(run({}).code, 1);
}

TEST(Cli, OptimizeToyRunCreatesRunDirectory) {
  TempDir root;
  const auto r = run(optimize_args(root.path()));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("status: stopped_max_iter"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("final reward: 1.000000"), std::string::npos);
  const auto id = only_run(root.path());
  EXPECT_NE(r.out.find("run-id: " + id), std::string::npos);
  const auto report = run({"report", "--run", id, "--runs-dir", root.path().string()});
  EXPECT_EQ(report.code, 0);
  EXPECT_EQ(std::count(report.out.begin(), report.out.end(), '\n'), 4);
}

TEST(Cli, NoCriticAblationHasNoCriticCallsInIterations) {
  TempDir root;
  auto args = optimize_args(root.path());
  args.insert(args.end(), {"--ablate", "no-critic"});
  ASSERT_EQ(run(args).code, 0);
  const auto dir = root.path() / "runs" / only_run(root.path());
  for (int t = 1; t <= 3; ++t) {
    const auto m = json::parse(read_text_file(dir / "iterations" / std::to_string(t) / "metrics.json"));
    EXPECT_EQ(m.at("tokens").at("critic").at("calls"), 0) << t;
    const auto turns = json::parse(read_text_file(dir / "iterations" / std::to_string(t) / "turns.json"));
    for (const auto& turn : turns) EXPECT_EQ(turn.at("revisions"), 0);
  }
}

TEST(Cli, CotZeroBaselineSkipsTheLoop) {
  TempDir root;
  // Iteration-0 target answers for the baseline come from a tiny script.
  std::string script;
  const auto samples = read_text_file(toy("eval.jsonl"));
  for (int j = 1; j <= 10; ++j) {
    script += R"({"role":"target","iteration":0,"step":0,"call_kind":"predict","occurrence":)" +
              std::to_string(j) + R"(,"response":"**Emotions**: [sadness]"})" + "\n";
  }
  const auto script_path = root.write("baseline.jsonl", script);
  const auto r = run({"optimize", "--backend", "scripted", "--script", script_path.string(), "--dataset",
                      toy("eval.jsonl"), "--labels", toy("labels.txt"), "--p0", "Find emotions.",
                      "--baseline", "cot-zero", "--runs-dir", root.path().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("baseline: cot-zero"), std::string::npos);
  EXPECT_FALSE(fs::exists(root.path() / "runs"));
}

TEST(Cli, EvaluateFileMode) {
  TempDir tmp;
  const auto labels = tmp.write("labels.txt", "mode: multi\na\nb\n");
  const auto gold = tmp.write("gold.jsonl",
                              "{\"id\":\"s1\",\"text\":\"x\",\"labels\":[\"a\"]}\n"
                              "{\"id\":\"s2\",\"text\":\"y\",\"labels\":[\"a\"]}\n"
                              "{\"id\":\"s3\",\"text\":\"z\",\"labels\":[\"b\"]}\n");
  const auto pred = tmp.write("pred.jsonl",
                              "{\"id\":\"s1\",\"labels\":[\"a\"]}\n"
                              "{\"id\":\"s2\",\"labels\":[\"b\"]}\n"
                              "{\"id\":\"s3\",\"labels\":[\"b\"]}\n");
  auto r = run({"evaluate", "--pred", pred.string(), "--gold", gold.string(), "--labels", labels.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(line_with(r.out, "emr:"), "emr: 0.666667");
  EXPECT_EQ(line_with(r.out, "micro_f1:"), "micro_f1: 0.666667");

  r = run({"evaluate", "--pred", gold.string(), "--gold", gold.string(), "--labels", labels.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* m : {"macro_f1:", "micro_f1:", "emr:", "pma:"}) {
    EXPECT_EQ(line_with(r.out, m), std::string(m) + " 1.000000");
  }

  const auto bad = tmp.write("bad.jsonl", "{\"id\":\"s1\",\"labels\":[\"zebra\"]}\n");
  r = run({"evaluate", "--pred", bad.string(), "--gold", gold.string(), "--labels", labels.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("zebra"), std::string::npos);

  const auto partial = tmp.write("partial.jsonl", "{\"id\":\"s1\",\"labels\":[\"a\"]}\n");
  r = run({"evaluate", "--pred", partial.string(), "--gold", gold.string(), "--labels", labels.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(line_with(r.out, "parse_failures:"), "parse_failures: 2");
}

TEST(Cli, SimulateKeywordScriptIsNonDecreasing) {
  const auto r = run({"simulate", "--env", toy("env.json"), "--script", toy("sim_script.jsonl"), "--ablate",
                      "no-planner"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("non-decreasing: true"), std::string::npos);
  EXPECT_NE(r.out.find("rewards: 0.300000 0.400000 0.500000 0.600000 0.700000 0.700000"), std::string::npos)
      << r.out;
}

TEST(Cli, SimulateEmptyEnvStopsAtSecondIteration) {
  TempDir tmp;
  const auto env = tmp.write("env.json", R"({"base_score":0.2,"feature_weights":{}})");
  const auto r = run({"simulate", "--env", env.string(), "--script", toy("sim_script.jsonl"), "--ablate",
                      "no-planner"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("rewards: 0.200000 0.200000\n"), std::string::npos) << r.out;
  EXPECT_EQ(run({"simulate", "--env", "/nonexistent.json", "--script", toy("sim_script.jsonl")}).code, 1);
}

TEST(Cli, ReportSummaryAndFailedRuns) {
  TempDir root;
  ASSERT_EQ(run(optimize_args(root.path())).code, 0);
  const auto good = only_run(root.path());

  // Drop iteration 2's target answers so the run fails mid-way.
  std::string script;
  std::istringstream in(read_text_file(toy("script.jsonl")));
  std::string line;
  while (std::getline(in, line)) {
    if (line.find(R"("role": "target", "iteration": 2)") == std::string::npos) script += line + "\n";
  }
  const auto truncated = root.write("truncated.jsonl", script);
  auto args = optimize_args(root.path());
  args[4] = truncated.string();
  args.insert(args.end(), {"--seed", "9"});
  const auto failed = run(args);
  EXPECT_EQ(failed.code, 2) << failed.out;

  std::string bad;
  for (const auto& e : fs::directory_iterator(root.path() / "runs")) {
    if (e.path().filename() != good) bad = e.path().filename().string();
  }
  const auto rep = run({"report", "--run", bad, "--runs-dir", root.path().string()});
  EXPECT_EQ(rep.code, 0);
  EXPECT_EQ(std::count(rep.out.begin(), rep.out.end(), '\n'), 3) << rep.out;
  EXPECT_NE(rep.out.find("# status: failed (backend)"), std::string::npos) << rep.out;

  const auto summary = run({"report", "--runs", good + "," + bad, "--runs-dir", root.path().string()});
  EXPECT_EQ(summary.code, 0);
  EXPECT_EQ(std::count(summary.out.begin(), summary.out.end(), '\n'), 3);
  EXPECT_NE(summary.out.find(good + ",stopped_max_iter,3,"), std::string::npos) << summary.out;
  EXPECT_NE(summary.out.find(bad + ",failed,1,"), std::string::npos) << summary.out;

  EXPECT_EQ(run({"report", "--run", "missing", "--runs-dir", root.path().string()}).code, 1);
}

TEST(Cli, ConfigFilePrecedence) {
  TempDir root;
  const auto cfg = root.write("cfg.json", R"({"delta":0.5,"max_iterations":7,"seed":3})");
  auto args = optimize_args(root.path());
  args.insert(args.end(), {"--config", cfg.string(), "--seed", "4"});
  const auto r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto dir = root.path() / "runs" / only_run(root.path());
  const auto config = json::parse(read_text_file(dir / "config.json")).at("config");
  EXPECT_EQ(config.at("seed"), 4);
  EXPECT_EQ(config.at("max_iterations"), 3);
  EXPECT_EQ(config.at("delta"), 0.5);
  EXPECT_NE(r.out.find("status: stopped_delta"), std::string::npos);

  const auto broken = root.write("broken.json", R"({"lambda":2})");
  args = optimize_args(root.path());
  args.insert(args.end(), {"--config", broken.string()});
  EXPECT_EQ(run(args).code, 1);
}

TEST(Cli, SeededRunsAreBitDeterministic) {
  TempDir a, b;
  ASSERT_EQ(run(optimize_args(a.path())).code, 0);
  ASSERT_EQ(run(optimize_args(b.path())).code, 0);
  const auto da = a.path() / "runs" / only_run(a.path());
  const auto db = b.path() / "runs" / only_run(b.path());
  for (const char* f : {"config.json", "trajectory.json", "report.csv", "tokens.json", "status.json",
                        "iterations/2/turns.json", "iterations/3/metrics.json"}) {
    EXPECT_EQ(read_text_file(da / f), read_text_file(db / f)) << f;
  }
}

TEST(Cli, ResumeRefusesFinishedRun) {
  TempDir root;
  ASSERT_EQ(run(optimize_args(root.path())).code, 0);
  auto args = optimize_args(root.path());
  args.insert(args.end(), {"--resume", only_run(root.path())});
  const auto r = run(args);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("already finished"), std::string::npos);
}
