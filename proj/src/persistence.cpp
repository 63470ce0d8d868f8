#include "apolo/persistence.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "apolo/data.hpp"
#include "apolo/errors.hpp"
#include "apolo/json_io.hpp"

namespace apolo {
namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp + "'");
    out << content;
    if (!out) throw IoError("short write to '" + tmp + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move '" + tmp + "' into place: " + ec.message());
}

void append_line(const fs::path& path, const std::string& line) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot append to '" + path.string() + "'");
  out << line << '\n';
  if (!out) throw IoError("short write to '" + path.string() + "'");
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json read_json(const fs::path& path) {
  return json::parse(read_text_file(path));
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

std::string fmt_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::int64_t cumulative_tokens(const RunState& state, std::size_t through) {
  std::int64_t total = state.planning_tokens.total();
  for (std::size_t i = 0; i < through && i < state.iterations.size(); ++i) {
    total += state.iterations[i].tokens.total();
  }
  return total;
}

json config_document(const RunConfig& config, const Prompt& initial_prompt) {
  return json{{"config", config}, {"initial_prompt", initial_prompt}};
}

std::size_t count_report_rows(const fs::path& csv) {
  if (!fs::exists(csv)) return 0;
  std::istringstream in(read_text_file(csv));
  std::string line;
  std::size_t rows = 0;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (!line.empty()) ++rows;
  }
  return rows;
}

}  // namespace

std::string format_report_row(const IterationRecord& record, std::int64_t tokens_total) {
  std::string row = std::to_string(record.t) + "," + fmt_number(record.reward) + ",";
  if (record.metrics) {
    const auto& m = *record.metrics;
    row += fmt_number(m.macro_f1) + "," + fmt_number(m.micro_f1) + ",";
    row += (m.emr ? fmt_number(*m.emr) : "") + ",";
    row += (m.pma ? fmt_number(*m.pma) : "") + ",";
  } else {
    row += ",,,,";
  }
  row += std::to_string(tokens_total);
  return row;
}

RunHandle open_run(const fs::path& root, const RunConfig& config, const Prompt& initial_prompt) {
  const auto base = utc_timestamp() + "-s" + std::to_string(config.seed);
  std::error_code ec;
  fs::create_directories(root / "runs", ec);
  if (ec) throw IoError("cannot create '" + (root / "runs").string() + "': " + ec.message());

  RunHandle handle;
  for (int suffix = 0;; ++suffix) {
    handle.run_id = suffix == 0 ? base : base + "-" + std::to_string(suffix);
    handle.dir = root / "runs" / handle.run_id;
    if (fs::create_directory(handle.dir, ec)) break;
    if (ec) throw IoError("cannot create run directory '" + handle.dir.string() + "': " + ec.message());
  }
  fs::create_directory(handle.dir / "iterations", ec);
  if (ec) throw IoError("cannot create '" + (handle.dir / "iterations").string() + "'");
  write_file(handle.dir / "config.json", dump(config_document(config, initial_prompt)));
  write_file(handle.dir / "report.csv", std::string(kReportHeader) + "\n");
  return handle;
}

RunHandle find_run(const fs::path& root, const std::string& run_id) {
  RunHandle h{root / "runs" / run_id, run_id};
  if (run_id.empty() || !fs::is_directory(h.dir) || !fs::exists(h.dir / "config.json")) {
    throw ResumeError("unknown run '" + run_id + "' under '" + (root / "runs").string() + "'");
  }
  return h;
}

void write_trajectory(const RunHandle& handle, const Trajectory& trajectory) {
  write_file(handle.dir / "trajectory.json", dump(json(trajectory)));
}

void record_iteration(const RunHandle& handle, const IterationRecord& record,
                      std::int64_t tokens_total) {
  const auto dir = handle.dir / "iterations" / std::to_string(record.t);
  std::error_code ec;
  if (fs::exists(dir)) {
    throw IoError("iteration " + std::to_string(record.t) + " is already recorded (append-only)");
  }
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());

  write_file(dir / "prompt.txt", record.final_prompt.text);
  json metrics{{"t", record.t},
               {"reward", record.reward},
               {"prompt",
                {{"origin", std::string(to_string(record.final_prompt.origin))},
                 {"iteration", record.final_prompt.iteration},
                 {"step", record.final_prompt.step}}},
               {"tokens", record.tokens}};
  metrics["metrics"] = record.metrics ? json(*record.metrics) : json(nullptr);
  write_file(dir / "metrics.json", dump(metrics));
  write_file(dir / "turns.json", dump(json(record.turns)));
  append_line(handle.dir / "report.csv", format_report_row(record, tokens_total));
}

void write_status(const RunHandle& handle, const RunState& state) {
  json status{{"status", std::string(to_string(state.status))}, {"warnings", state.warnings}};
  status["failure"] = state.failure ? json(*state.failure) : json(nullptr);
  status["test_report"] = state.test_report ? json(*state.test_report) : json(nullptr);
  write_file(handle.dir / "status.json", dump(status));

  json tokens{{"planning", state.planning_tokens},
              {"unrecorded", state.unrecorded_tokens},
              {"total", state.total_tokens()}};
  write_file(handle.dir / "tokens.json", dump(tokens));
}

RunHandle persist_run(const fs::path& root, const RunState& state) {
  auto handle = open_run(root, state.config, state.initial_prompt);
  if (!state.trajectory.sub_goals.empty()) write_trajectory(handle, state.trajectory);
  for (std::size_t i = 0; i < state.iterations.size(); ++i) {
    record_iteration(handle, state.iterations[i], cumulative_tokens(state, i + 1));
  }
  write_status(handle, state);
  return handle;
}

RunState resume(const fs::path& root, const std::string& run_id) {
  const auto handle = find_run(root, run_id);
  RunState state;
  try {
    const auto cfg = read_json(handle.dir / "config.json");
    state.config = RunConfig{};
    from_json(cfg.at("config"), state.config);
    state.initial_prompt = cfg.at("initial_prompt").get<Prompt>();
  } catch (const std::exception& e) {
    throw ResumeError("run '" + run_id + "': unreadable config.json: " + e.what());
  }
  if (fs::exists(handle.dir / "trajectory.json")) {
    try {
      state.trajectory = read_json(handle.dir / "trajectory.json").get<Trajectory>();
    } catch (const std::exception& e) {
      throw ResumeError("run '" + run_id + "': unreadable trajectory.json: " + e.what());
    }
  }

  // Iterations must be 1..m with no gaps.
  std::size_t m = 0;
  const auto iter_root = handle.dir / "iterations";
  if (fs::is_directory(iter_root)) {
    for (const auto& entry : fs::directory_iterator(iter_root)) {
      (void)entry;
      ++m;
    }
  }
  for (std::size_t t = 1; t <= m; ++t) {
    const auto dir = iter_root / std::to_string(t);
    const auto name = "iteration " + std::to_string(t);
    if (!fs::is_directory(dir)) throw ResumeError(name + ": directory missing");
    for (const char* file : {"prompt.txt", "metrics.json", "turns.json"}) {
      if (!fs::exists(dir / file)) throw ResumeError(name + ": missing " + file);
    }
    IterationRecord rec;
    try {
      const auto metrics = read_json(dir / "metrics.json");
      rec.t = metrics.at("t").get<int>();
      rec.reward = metrics.at("reward").get<double>();
      rec.final_prompt.text = read_text_file(dir / "prompt.txt");
      rec.final_prompt.origin = prompt_origin_from_string(metrics.at("prompt").at("origin").get<std::string>());
      rec.final_prompt.iteration = metrics.at("prompt").at("iteration").get<int>();
      rec.final_prompt.step = metrics.at("prompt").at("step").get<int>();
      rec.tokens = metrics.at("tokens").get<TokenUsage>();
      if (!metrics.at("metrics").is_null()) rec.metrics = metrics["metrics"].get<MetricReport>();
      rec.turns = read_json(dir / "turns.json").get<std::vector<SocraticTurn>>();
    } catch (const std::exception& e) {
      throw ResumeError(name + ": corrupt record: " + e.what());
    }
    if (rec.t != static_cast<int>(t)) throw ResumeError(name + ": metrics.json carries t=" + std::to_string(rec.t));
    state.iterations.push_back(std::move(rec));
  }
  const auto rows = count_report_rows(handle.dir / "report.csv");
  if (rows != m) {
    const auto first_bad = std::min(rows, m) + 1;
    throw ResumeError("iteration " + std::to_string(first_bad) + ": report.csv has " +
                      std::to_string(rows) + " rows for " + std::to_string(m) + " recorded iterations");
  }

  if (fs::exists(handle.dir / "status.json")) {
    try {
      const auto status = read_json(handle.dir / "status.json");
      state.status = run_status_from_string(status.at("status").get<std::string>());
      state.warnings = status.at("warnings").get<std::vector<std::string>>();
      if (!status.at("failure").is_null()) state.failure = status["failure"].get<FailureInfo>();
      if (!status.at("test_report").is_null()) state.test_report = status["test_report"].get<MetricReport>();
    } catch (const std::exception& e) {
      throw ResumeError("run '" + run_id + "': unreadable status.json: " + e.what());
    }
  }
  if (fs::exists(handle.dir / "tokens.json")) {
    try {
      const auto tokens = read_json(handle.dir / "tokens.json");
      state.planning_tokens = tokens.at("planning").get<TokenUsage>();
      state.unrecorded_tokens = tokens.at("unrecorded").get<TokenUsage>();
    } catch (const std::exception& e) {
      throw ResumeError("run '" + run_id + "': unreadable tokens.json: " + e.what());
    }
  }
  state.refresh_prompts();
  return state;
}

void PersistingObserver::on_planned(const RunState& state) {
  write_trajectory(handle_, state.trajectory);
  write_status(handle_, state);
}

void PersistingObserver::on_iteration(const RunState& state, const IterationRecord& record) {
  record_iteration(handle_, record, cumulative_tokens(state, static_cast<std::size_t>(record.t)));
  write_status(handle_, state);
}

void PersistingObserver::on_finish(const RunState& state) {
  if (!state.trajectory.sub_goals.empty() && !fs::exists(handle_.dir / "trajectory.json")) {
    write_trajectory(handle_, state.trajectory);
  }
  write_status(handle_, state);
}

}  // namespace apolo
