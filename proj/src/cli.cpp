#include "apolo/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "apolo/agents.hpp"
#include "apolo/backend.hpp"
#include "apolo/data.hpp"
#include "apolo/errors.hpp"
#include "apolo/evaluator.hpp"
#include "apolo/json_io.hpp"
#include "apolo/persistence.hpp"

namespace apolo::cli {
namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// Flags that override RunConfig fields; unset flags leave the config alone.
struct ConfigFlags {
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::optional<double> delta;
  std::optional<int> max_iter;
  std::optional<int> candidates;
  std::optional<double> gamma_risk;
  std::optional<double> gamma_cost;
  std::optional<double> alpha_len;
  std::optional<double> alpha_call;
  std::optional<double> alpha_time;
  std::optional<double> temperature;
  std::optional<int> eval_subset;
  std::optional<std::string> reward_metric;
  std::vector<std::string> ablate;
  std::optional<int> parallelism;
  std::optional<std::string> goal;
  bool no_alignment = false;

  void add_to(CLI::App& app) {
    app.add_option("--config", config_file, "JSON config file (flags override it)");
    app.add_option("--seed", seed, "Seed for subsampling and retry jitter");
    app.add_option("--delta", delta, "Minimum reward improvement before stopping (default 0.01)");
    app.add_option("--max-iter", max_iter, "Maximum outer iterations (default 10)");
    app.add_option("--candidates", candidates, "Planner candidate trajectories K (default 4)");
    app.add_option("--gamma-risk", gamma_risk, "Risk penalty weight (default 0.5)");
    app.add_option("--gamma-cost", gamma_cost, "Cost penalty weight (default 0.05)");
    app.add_option("--alpha-len", alpha_len, "Cost weight on trajectory length (default 1/3)");
    app.add_option("--alpha-call", alpha_call, "Cost weight on call count (default 1/3)");
    app.add_option("--alpha-time", alpha_time, "Cost weight on latency (default 1/3)");
    app.add_option("--temperature", temperature, "Sampling temperature (default 0.6)");
    app.add_option("--eval-subset", eval_subset, "Evaluate rewards on a fixed seeded subset of this size");
    app.add_option("--reward-metric", reward_metric, "micro_f1 | macro_f1 | emr | pma (default micro_f1)");
    app.add_option("--ablate", ablate, "no-planner | no-critic | no-socratic (repeatable)");
    app.add_option("--parallelism", parallelism, "Concurrent target calls (default 1)");
    app.add_option("--goal", goal, "Optimization goal handed to the planner");
    app.add_flag("--no-alignment", no_alignment, "Skip the alignment diagnostic rater");
  }

  RunConfig resolve() const {
    RunConfig c;
    if (!config_file.empty()) {
      json j;
      try {
        j = json::parse(read_text_file(config_file));
      } catch (const json::exception& e) {
        throw ConfigError("config file '" + config_file + "': " + e.what());
      } catch (const IoError& e) {
        throw ConfigError(e.what());
      }
      from_json(j, c);
    }
    if (seed) c.seed = *seed;
    if (delta) c.delta = *delta;
    if (max_iter) c.max_iterations = *max_iter;
    if (candidates) c.num_candidates = *candidates;
    if (gamma_risk) c.gamma_risk = *gamma_risk;
    if (gamma_cost) c.gamma_cost = *gamma_cost;
    if (alpha_len) c.alpha_len = *alpha_len;
    if (alpha_call) c.alpha_call = *alpha_call;
    if (alpha_time) c.alpha_time = *alpha_time;
    if (temperature) c.temperature = *temperature;
    if (eval_subset) c.eval_subset_size = *eval_subset;
    if (reward_metric) c.reward_metric = reward_metric_from_string(*reward_metric);
    if (!ablate.empty()) {
      c.ablations.clear();
      for (const auto& a : ablate) c.ablations.insert(ablation_from_string(a));
    }
    if (parallelism) c.parallelism = *parallelism;
    if (goal) c.goal = *goal;
    if (no_alignment) c.score_alignment = false;
    c.validate();
    return c;
  }
};

struct BackendFlags {
  std::string kind = "scripted";
  std::string script;
  std::string env;
  std::string base_url;
  std::string model;

  void add_to(CLI::App& app, bool with_synthetic) {
    auto* opt = app.add_option("--backend", kind, "live | scripted" + std::string(with_synthetic ? " | synthetic" : ""));
    if (with_synthetic) {
      opt->check(CLI::IsMember({"live", "scripted", "synthetic"}));
      app.add_option("--env", env, "Synthetic environment JSON (synthetic backend)");
    } else {
      opt->check(CLI::IsMember({"live", "scripted"}));
    }
    app.add_option("--script", script, "Scripted responses, line-delimited JSON");
    app.add_option("--base-url", base_url, "Live backend base URL (else APOLO_BASE_URL)");
    app.add_option("--model", model, "Live backend model name (else APOLO_MODEL)");
  }

  std::unique_ptr<Backend> make(std::uint64_t seed) const {
    if (kind == "live") {
      auto cfg = LiveConfig::from_environment();
      if (!base_url.empty()) cfg.base_url = base_url;
      if (!model.empty()) cfg.model = model;
      return std::make_unique<LiveBackend>(cfg, nullptr, nullptr, seed);
    }
    if (script.empty()) throw ConfigError("--script is required for the " + kind + " backend");
    if (!fs::exists(script)) throw ConfigError("script file '" + script + "' does not exist");
    return std::make_unique<ScriptedBackend>(ScriptedBackend::from_file(script));
  }
};

std::string read_prompt_arg(const std::string& value) {
  if (value.empty()) throw ConfigError("the initial prompt must not be empty");
  std::error_code ec;
  if (fs::is_regular_file(value, ec)) {
    auto text = read_text_file(value);
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    if (text.empty()) throw ConfigError("prompt file '" + value + "' is empty");
    return text;
  }
  return value;
}

TemplateSet load_templates(const std::string& dir) {
  return dir.empty() ? TemplateSet::builtin() : TemplateSet::with_overrides(dir);
}

void print_report(std::ostream& out, const MetricReport& r) {
  out << "samples: " << r.n_samples << '\n';
  out << "parse_failures: " << r.n_parse_failures << '\n';
  out << "macro_f1: " << fmt(r.macro_f1) << '\n';
  out << "micro_f1: " << fmt(r.micro_f1) << '\n';
  if (r.emr) out << "emr: " << fmt(*r.emr) << '\n';
  if (r.pma) out << "pma: " << fmt(*r.pma) << '\n';
  for (std::size_t i = 0; i < r.counts.labels().size(); ++i) {
    const auto& c = r.counts.counts()[i];
    out << "label " << r.counts.labels()[i].token() << ": tp=" << c.tp << " fp=" << c.fp
        << " fn=" << c.fn << '\n';
  }
}

std::vector<Sample> eval_samples(const std::vector<Sample>& all, const RunConfig& config) {
  if (!config.eval_subset_size) return all;
  const auto k = static_cast<std::size_t>(*config.eval_subset_size);
  if (k > all.size()) {
    throw ConfigError("--eval-subset " + std::to_string(k) + " exceeds the " +
                      std::to_string(all.size()) + " available samples");
  }
  return subsample(all, k, config.seed);
}

int exit_code_for(const RunState& state) {
  if (state.status != RunStatus::failed) return kOk;
  return state.failure && state.failure->kind == "backend" ? kBackendError : kRunFailure;
}

void print_run_summary(std::ostream& out, const RunState& state, const std::string& run_id) {
  if (!run_id.empty()) out << "run-id: " << run_id << '\n';
  out << "status: " << to_string(state.status) << '\n';
  if (state.failure) out << "failure: " << state.failure->kind << ": " << state.failure->message << '\n';
  out << "iterations: " << state.iterations.size() << '\n';
  out << "rewards:";
  for (const auto& it : state.iterations) out << ' ' << fmt(it.reward);
  out << '\n';
  if (!state.iterations.empty()) {
    const auto best = *state.best_iteration();
    out << "final reward: " << fmt(state.iterations.back().reward) << '\n';
    out << "best reward: " << fmt(state.iterations[best].reward) << " (iteration "
        << state.iterations[best].t << ")\n";
  }
  out << "tokens: " << state.total_tokens().total() << '\n';
}

// ---------------------------------------------------------------------------

struct OptimizeArgs {
  std::string dataset;
  std::string test_data;
  std::string labels;
  std::string p0;
  std::string runs_dir = ".";
  std::string templates;
  std::string baseline = "none";
  std::string few_shot_example;
  std::string resume_id;
  ConfigFlags config;
  BackendFlags backend;
};

int cmd_optimize(const OptimizeArgs& a, std::ostream& out, std::ostream& err) {
  const bool synthetic = a.backend.kind == "synthetic";
  const auto templates = load_templates(a.templates);

  // Resumption takes config and prompt from the run directory.
  std::optional<RunState> previous;
  std::optional<RunHandle> handle;
  RunConfig config;
  if (!a.resume_id.empty()) {
    handle = find_run(a.runs_dir, a.resume_id);
    previous = resume(a.runs_dir, a.resume_id);
    config = previous->config;
    if (is_terminal(previous->status)) {
      print_run_summary(out, *previous, a.resume_id);
      err << "error: run " << a.resume_id << " already finished (" << to_string(previous->status)
          << "); not continuing\n";
      return kConfigError;
    }
  } else {
    config = a.config.resolve();
  }

  std::optional<LabelSpace> space;
  std::vector<Sample> samples;
  if (!synthetic || a.baseline != "none") {
    if (a.labels.empty() || a.dataset.empty()) throw ConfigError("--labels and --dataset are required");
    space = load_label_space(a.labels);
    DatasetDescriptor desc{fs::path(a.dataset).stem().string(), *space, {{"eval", a.dataset}}};
    if (!a.test_data.empty()) desc.splits["test"] = a.test_data;
    samples = eval_samples(load_samples(desc, "eval"), config);
  }
  if (a.p0.empty() && !previous) throw ConfigError("--p0 is required");
  const Prompt p0 = previous ? previous->initial_prompt : Prompt::initial(read_prompt_arg(a.p0));

  auto backend = a.backend.make(config.seed);
  AgentClient client(*backend, config.temperature);

  auto test_report = [&](const Prompt& prompt) -> std::optional<MetricReport> {
    if (a.test_data.empty() || !space) return std::nullopt;
    const auto test = parse_samples(read_text_file(a.test_data), *space);
    return evaluate_prompt(prompt, test, *space, config, client, templates, 0, CallKind::predict_test).report;
  };

  if (a.baseline != "none") {
    const auto prompt = a.baseline == "cot-zero"
                            ? cot_zero_shot(p0)
                            : cot_few_shot(p0, read_prompt_arg(a.few_shot_example.empty()
                                                                   ? throw ConfigError("--few-shot-example is required for cot-few")
                                                                   : a.few_shot_example));
    const auto ev = evaluate_prompt(prompt, samples, *space, config, client, templates, 0);
    out << "baseline: " << a.baseline << '\n';
    out << "reward: " << fmt(ev.reward) << '\n';
    print_report(out, ev.report);
    if (auto tr = test_report(prompt)) {
      out << "test:\n";
      print_report(out, *tr);
    }
    return kOk;
  }

  std::unique_ptr<PromptScorer> scorer;
  if (synthetic) {
    if (a.backend.env.empty()) throw ConfigError("--env is required for the synthetic backend");
    scorer = std::make_unique<SyntheticScorer>(SyntheticEnv::from_file(a.backend.env));
  } else {
    scorer = std::make_unique<TargetScorer>(samples, *space, config, client, templates);
  }

  if (!handle) handle = open_run(a.runs_dir, config, p0);
  PersistingObserver observer(*handle);
  Optimizer optimizer(config, client, templates, *scorer, &observer);

  RunState state;
  if (previous) {
    state = optimizer.resume(std::move(*previous));
  } else {
    PlannerContext ctx{config.goal,
                       space ? make_input_digest(*space, samples) : "(synthetic environment)", p0};
    state = optimizer.optimize(p0, ctx);
  }

  if (state.status != RunStatus::failed) {
    try {
      state.test_report = test_report(state.returned_prompt);
    } catch (const Error& e) {
      err << "warning: test-split report failed: " << e.what() << '\n';
    }
    if (state.test_report) write_status(*handle, state);
  }

  print_run_summary(out, state, handle->run_id);
  if (state.test_report) {
    out << "test:\n";
    print_report(out, *state.test_report);
  }
  if (state.status == RunStatus::failed) err << "error: run failed\n";
  return exit_code_for(state);
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string pred;
  std::string gold;
  std::string labels;
  std::string prompt;
  std::string dataset;
  std::string templates;
  bool as_json = false;
  ConfigFlags config;
  BackendFlags backend;
};

std::vector<LabelSet> load_predictions(const std::string& path, const std::vector<Sample>& gold,
                                       const LabelSpace& space, std::int64_t& failures) {
  std::map<std::string, LabelSet> by_id;
  std::set<std::string> failed_ids;
  std::istringstream in(read_text_file(path));
  std::string line;
  std::size_t lineno = 0;
  auto to_label = [&space](const std::string& raw) {
    EmotionLabel label(raw);
    if (!space.contains(label)) throw SchemaError("prediction uses unknown label '" + raw + "'");
    return label;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed prediction: ") + e.what(), lineno);
    }
    if (!j.contains("id") || !j["id"].is_string()) throw ParseError("prediction needs an 'id'", lineno);
    const auto id = j["id"].get<std::string>();
    LabelSet set;
    if (j.contains("labels") && j["labels"].is_array()) {
      for (const auto& l : j["labels"]) set.insert(to_label(l.get<std::string>()));
    } else if (j.contains("label") && j["label"].is_string()) {
      set.insert(to_label(j["label"].get<std::string>()));
    }
    if (set.empty() || j.value("parse_failed", false)) failed_ids.insert(id);
    if (!by_id.emplace(id, std::move(set)).second) throw SchemaError("duplicate prediction id '" + id + "'");
  }
  std::vector<LabelSet> preds;
  failures = 0;
  for (const auto& s : gold) {
    auto it = by_id.find(s.id);
    if (it == by_id.end() || failed_ids.count(s.id)) {
      ++failures;
      preds.emplace_back();
      if (it == by_id.end()) continue;
    }
    if (!failed_ids.count(s.id)) preds.push_back(it->second);
    by_id.erase(it);
  }
  if (!by_id.empty()) throw SchemaError("prediction for unknown sample id '" + by_id.begin()->first + "'");
  return preds;
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream&) {
  if (a.labels.empty()) throw ConfigError("--labels is required");
  const auto space = load_label_space(a.labels);
  const auto config = a.config.resolve();
  MetricReport report_value;

  if (!a.pred.empty() || !a.gold.empty()) {
    if (a.pred.empty() || a.gold.empty()) throw ConfigError("--pred and --gold go together");
    const auto gold = parse_samples(read_text_file(a.gold), space);
    std::int64_t failures = 0;
    const auto preds = load_predictions(a.pred, gold, space, failures);
    std::vector<LabelSet> golds;
    for (const auto& s : gold) golds.push_back(s.gold);
    if (golds.empty()) throw ConfigError("gold file has no samples");
    report_value = report(preds, golds, space, failures);
  } else {
    if (a.prompt.empty() || a.dataset.empty()) {
      throw ConfigError("give either --pred/--gold or --prompt/--dataset");
    }
    const auto templates = load_templates(a.templates);
    const auto samples = eval_samples(parse_samples(read_text_file(a.dataset), space), config);
    auto backend = a.backend.make(config.seed);
    AgentClient client(*backend, config.temperature);
    const auto prompt = Prompt::initial(read_prompt_arg(a.prompt));
    report_value = evaluate_prompt(prompt, samples, space, config, client, templates, 0).report;
  }

  if (a.as_json) {
    out << json(report_value).dump(2) << '\n';
  } else {
    print_report(out, report_value);
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string env;
  std::string script;
  std::string p0 = "Classify the emotion expressed in the text.";
  std::string runs_dir;
  std::string templates;
  ConfigFlags config;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  if (a.env.empty()) throw ConfigError("--env is required");
  auto env = SyntheticEnv::from_file(a.env);
  if (a.script.empty()) throw ConfigError("--script is required");
  if (!fs::exists(a.script)) throw ConfigError("script file '" + a.script + "' does not exist");
  const auto config = a.config.resolve();
  const auto templates = load_templates(a.templates);
  ScriptedBackend backend = ScriptedBackend::from_file(a.script);
  AgentClient client(backend, config.temperature);
  SyntheticScorer scorer(std::move(env));
  const auto p0 = Prompt::initial(read_prompt_arg(a.p0));

  std::optional<PersistingObserver> observer;
  std::string run_id;
  if (!a.runs_dir.empty()) {
    observer.emplace(open_run(a.runs_dir, config, p0));
    run_id = observer->handle().run_id;
  }
  Optimizer optimizer(config, client, templates, scorer, observer ? &*observer : nullptr);
  const auto state = optimizer.optimize(p0, PlannerContext{config.goal, "(synthetic environment)", p0});

  print_run_summary(out, state, run_id);
  bool non_decreasing = true;
  for (std::size_t i = 1; i < state.iterations.size(); ++i) {
    non_decreasing = non_decreasing && state.iterations[i].reward >= state.iterations[i - 1].reward;
  }
  out << "non-decreasing: " << (non_decreasing ? "true" : "false") << '\n';
  if (state.status == RunStatus::failed) err << "error: run failed\n";
  return exit_code_for(state);
}

// ---------------------------------------------------------------------------

struct ReportArgs {
  std::string run;
  std::vector<std::string> runs;
  std::string runs_dir = ".";
  std::uint64_t seed = 0;
};

int cmd_report(const ReportArgs& a, std::ostream& out, std::ostream&) {
  if (a.run.empty() == a.runs.empty()) throw ConfigError("give exactly one of --run or --runs");
  if (!a.run.empty()) {
    const auto handle = find_run(a.runs_dir, a.run);
    const auto state = resume(a.runs_dir, a.run);
    out << read_text_file(handle.dir / "report.csv");
    if (!is_terminal(state.status)) {
      out << "# status: " << to_string(state.status);
      if (state.failure) out << " (" << state.failure->kind << "): " << state.failure->message;
      out << '\n';
    }
    return kOk;
  }
  out << "run_id,status,iterations,tokens_total,best_reward\n";
  for (const auto& id : a.runs) {
    const auto state = resume(a.runs_dir, id);
    const auto best = state.best_iteration();
    out << id << ',' << to_string(state.status) << ',' << state.iterations.size() << ','
        << state.total_tokens().total() << ',' << (best ? fmt(state.iterations[*best].reward) : "")
        << '\n';
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"apolo: planner-guided Socratic prompt optimization for emotion diagnosis", "apolo"};
  app.require_subcommand(1);
  app.set_help_flag();
  app.set_help_all_flag("-h,--help", "Print every subcommand and flag, then exit");

  OptimizeArgs opt;
  auto* optimize = app.add_subcommand("optimize", "Run the optimization loop");
  optimize->add_option("--dataset", opt.dataset, "Evaluation split (line-delimited JSON)");
  optimize->add_option("--test-data", opt.test_data, "Optional test split for a final report");
  optimize->add_option("--labels", opt.labels, "Label-space file");
  optimize->add_option("--p0", opt.p0, "Initial prompt: a file path or inline text");
  optimize->add_option("--runs-dir", opt.runs_dir, "Root directory for run artifacts (default .)");
  optimize->add_option("--templates", opt.templates, "Directory of template overrides");
  optimize->add_option("--baseline", opt.baseline, "none | cot-zero | cot-few: evaluate a baseline prompt only")
      ->check(CLI::IsMember({"none", "cot-zero", "cot-few"}));
  optimize->add_option("--few-shot-example", opt.few_shot_example, "Worked example for cot-few (file or text)");
  optimize->add_option("--resume", opt.resume_id, "Continue an unfinished run by id");
  opt.config.add_to(*optimize);
  opt.backend.add_to(*optimize, true);

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions or a prompt");
  evaluate->add_option("--pred", ev.pred, "Prediction file: {id, label} or {id, labels} per line");
  evaluate->add_option("--gold", ev.gold, "Gold dataset file");
  evaluate->add_option("--labels", ev.labels, "Label-space file");
  evaluate->add_option("--prompt", ev.prompt, "Prompt to evaluate with the target model (file or text)");
  evaluate->add_option("--dataset", ev.dataset, "Dataset for --prompt mode");
  evaluate->add_option("--templates", ev.templates, "Directory of template overrides");
  evaluate->add_flag("--json", ev.as_json, "Print the report as JSON");
  ev.config.add_to(*evaluate);
  ev.backend.add_to(*evaluate, false);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Optimize against a synthetic reward environment");
  simulate->add_option("--env", sim.env, "Synthetic environment JSON");
  simulate->add_option("--script", sim.script, "Scripted agent responses");
  simulate->add_option("--p0", sim.p0, "Initial prompt: a file path or inline text");
  simulate->add_option("--runs-dir", sim.runs_dir, "Persist the run under this directory");
  simulate->add_option("--templates", sim.templates, "Directory of template overrides");
  sim.config.add_to(*simulate);

  ReportArgs rep;
  auto* report_cmd = app.add_subcommand("report", "Print convergence and token reports");
  report_cmd->add_option("--run", rep.run, "Run id: print its report.csv");
  report_cmd->add_option("--runs", rep.runs, "Comma-separated run ids: print a summary")->delimiter(',');
  report_cmd->add_option("--runs-dir", rep.runs_dir, "Root directory for run artifacts (default .)");
  report_cmd->add_option("--seed", rep.seed, "Accepted for uniformity; reports are deterministic");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kConfigError;
  }

  try {
    if (optimize->parsed()) return cmd_optimize(opt, out, err);
    if (evaluate->parsed()) return cmd_evaluate(ev, out, err);
    if (simulate->parsed()) return cmd_simulate(sim, out, err);
    return cmd_report(rep, out, err);
  } catch (const BackendError& e) {
    err << "backend error: " << e.what() << '\n';
    return kBackendError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
}

}  // namespace apolo::cli
