// Serial reference vs OpenMP kernels.

#include <benchmark/benchmark.h>

#include <chrono>
#include <random>
#include <thread>

#include "apolo/evaluator.hpp"
#include "apolo/metrics.hpp"

using namespace apolo;

namespace {

struct Corpus {
  LabelSpace space;
  std::vector<LabelSet> preds, golds;
};

Corpus make_corpus(std::size_t n) {
  std::vector<EmotionLabel> labels;
  for (int k = 0; k < 12; ++k) labels.emplace_back("label" + std::to_string(k));
  Corpus c{LabelSpace(labels, LabelMode::multi), {}, {}};
  std::mt19937 rng(7);
  for (std::size_t i = 0; i < n; ++i) {
    LabelSet p, g;
    for (const auto& l : labels) {
      if (rng() % 4 == 0) p.insert(l);
      if (rng() % 4 == 0) g.insert(l);
    }
    c.preds.push_back(std::move(p));
    c.golds.push_back(std::move(g));
  }
  return c;
}

void BM_ConfusionSerial(benchmark::State& state) {
  const auto c = make_corpus(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(serial::confusion(c.preds, c.golds, c.space));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ConfusionParallel(benchmark::State& state) {
  const auto c = make_corpus(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(confusion(c.preds, c.golds, c.space));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

// Answers every Target call after a fixed delay, like a remote model would.
class SlowBackend final : public Backend {
 public:
  CompletionResult complete(std::span<const ChatMessage>, double, const CallTag&) override {
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
    return {"**Emotions**: [label1, label3]", 40, 8, false};
  }
};

std::vector<Sample> samples(int n) {
  std::vector<Sample> out;
  for (int i = 0; i < n; ++i) {
    Sample s;
    s.id = "s" + std::to_string(i);
    s.focus_text = "post number " + std::to_string(i);
    s.gold = {EmotionLabel("label1")};
    out.push_back(std::move(s));
  }
  return out;
}

void BM_EvaluatePrompt(benchmark::State& state) {
  const auto c = make_corpus(1);
  const auto data = samples(32);
  const auto templates = TemplateSet::builtin();
  SlowBackend backend;
  AgentClient client(backend, 0.6);
  RunConfig cfg;
  cfg.parallelism = static_cast<int>(state.range(0));
  const auto p = Prompt::initial("Identify the emotions.");
  for (auto _ : state) {
    if (cfg.parallelism == 0) {
      benchmark::DoNotOptimize(serial::evaluate_prompt(p, data, c.space, cfg, client, templates, 1));
    } else {
      benchmark::DoNotOptimize(evaluate_prompt(p, data, c.space, cfg, client, templates, 1));
    }
  }
}

}  // namespace

BENCHMARK(BM_ConfusionSerial)->Arg(1000)->Arg(100000);
BENCHMARK(BM_ConfusionParallel)->Arg(1000)->Arg(100000);
// 0 selects the serial reference.
BENCHMARK(BM_EvaluatePrompt)->Arg(0)->Arg(1)->Arg(4)->Arg(8)->UseRealTime();

BENCHMARK_MAIN();
