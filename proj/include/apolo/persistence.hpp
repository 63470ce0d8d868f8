#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "apolo/evaluator.hpp"
#include "apolo/run_state.hpp"

namespace apolo {

// Run directory layout under <root>/runs/<run-id>/:
//
//   config.json                effective RunConfig and the initial prompt
//   trajectory.json            selected trajectory
//   iterations/<t>/prompt.txt  final prompt of iteration t, verbatim
//   iterations/<t>/metrics.json
//   iterations/<t>/turns.json
//   report.csv                 t,reward,macro_f1,micro_f1,emr,pma,tokens_total
//   tokens.json                planning / unrecorded / total usage per role
//   status.json                status, failure, warnings, final test report

inline constexpr const char* kReportHeader = "t,reward,macro_f1,micro_f1,emr,pma,tokens_total";

struct RunHandle {
  std::filesystem::path dir;
  std::string run_id;
};

/// Creates <root>/runs/<run-id>/ with config.json. run-id is the UTC
/// timestamp plus the seed; a numeric suffix is added if that directory
/// already exists. Throws IoError when the directory cannot be created.
RunHandle open_run(const std::filesystem::path& root, const RunConfig& config,
                   const Prompt& initial_prompt);

RunHandle find_run(const std::filesystem::path& root, const std::string& run_id);

void write_trajectory(const RunHandle& handle, const Trajectory& trajectory);

/// Append-only: throws IoError if iterations/<t>/ already exists.
/// `tokens_total` is the cumulative run total through this iteration.
void record_iteration(const RunHandle& handle, const IterationRecord& record,
                      std::int64_t tokens_total);

/// Rewrites status.json and tokens.json.
void write_status(const RunHandle& handle, const RunState& state);

/// Writes every artifact of `state` into a fresh run directory.
RunHandle persist_run(const std::filesystem::path& root, const RunState& state);

/// Throws ResumeError naming the iteration for a missing or corrupt
/// iteration directory, or a report.csv whose row count disagrees.
RunState resume(const std::filesystem::path& root, const std::string& run_id);

/// Observer that keeps a run directory in sync with the outer loop.
class PersistingObserver final : public RunObserver {
 public:
  explicit PersistingObserver(RunHandle handle) : handle_(std::move(handle)) {}
  void on_planned(const RunState& state) override;
  void on_iteration(const RunState& state, const IterationRecord& record) override;
  void on_finish(const RunState& state) override;

  const RunHandle& handle() const { return handle_; }

 private:
  RunHandle handle_;
};

std::string format_report_row(const IterationRecord& record, std::int64_t tokens_total);

}  // namespace apolo
