#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "apolo/labels.hpp"
#include "apolo/types.hpp"

namespace apolo {

struct LabelCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;

  bool operator==(const LabelCounts&) const = default;
};

/// Per-label confusion counts keyed by label, in label-space order.
class ConfusionCounts {
 public:
  ConfusionCounts() = default;
  explicit ConfusionCounts(std::vector<EmotionLabel> labels);
  ConfusionCounts(std::vector<EmotionLabel> labels, std::vector<LabelCounts> counts);

  const std::vector<EmotionLabel>& labels() const { return labels_; }
  const std::vector<LabelCounts>& counts() const { return counts_; }
  std::vector<LabelCounts>& counts() { return counts_; }

  /// Throws ArgumentError for a label outside the key set.
  const LabelCounts& at(const EmotionLabel& label) const;
  LabelCounts totals() const;

  bool operator==(const ConfusionCounts&) const = default;

 private:
  std::vector<EmotionLabel> labels_;
  std::vector<LabelCounts> counts_;
};

struct MetricReport {
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
  std::optional<double> emr;
  std::optional<double> pma;
  ConfusionCounts counts;
  std::int64_t n_samples = 0;
  std::int64_t n_parse_failures = 0;

  /// Throws ArgumentError if the metric is absent (emr/pma in single mode).
  double value(RewardMetric metric) const;

  bool operator==(const MetricReport&) const = default;
};

ConfusionCounts confusion(std::span<const LabelSet> preds,
                          std::span<const LabelSet> golds, const LabelSpace& space);
double macro_f1(const ConfusionCounts& counts);
double micro_f1(const ConfusionCounts& counts);
double emr(std::span<const LabelSet> preds, std::span<const LabelSet> golds);
double pma(std::span<const LabelSet> preds, std::span<const LabelSet> golds);

/// Scores all four metrics; emr/pma are filled only for multi-label spaces.
/// Samples whose output failed to parse are expected as empty prediction
/// sets; `parse_failures` is carried through to the report.
MetricReport report(std::span<const LabelSet> preds, std::span<const LabelSet> golds,
                    const LabelSpace& space, std::int64_t parse_failures);

namespace serial {

// Single-threaded reference for the confusion kernel.
ConfusionCounts confusion(std::span<const LabelSet> preds,
                          std::span<const LabelSet> golds, const LabelSpace& space);

}  // namespace serial

}  // namespace apolo
