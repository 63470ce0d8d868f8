#include "apolo/metrics.hpp"

#include <algorithm>

#include "apolo/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace apolo {
namespace {

// Below this many samples the fork/join overhead dominates.
constexpr std::size_t kParallelThreshold = 4096;

void check_lengths(std::size_t preds, std::size_t golds) {
  if (preds != golds) {
    throw ArgumentError("prediction/gold length mismatch: " + std::to_string(preds) +
                        " vs " + std::to_string(golds));
  }
}

std::vector<std::uint32_t> to_indices(const LabelSet& set, const LabelSpace& space) {
  std::vector<std::uint32_t> out;
  out.reserve(set.size());
  for (const auto& label : set) {
    auto idx = space.index_of(label);
    if (!idx) throw ArgumentError("label '" + label.token() + "' is not in the label space");
    out.push_back(static_cast<std::uint32_t>(*idx));
  }
  std::sort(out.begin(), out.end());
  return out;
}

double f1(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
  const auto denom = 2 * tp + fp + fn;
  if (denom == 0) return 0.0;
  return static_cast<double>(2 * tp) / static_cast<double>(denom);
}

}  // namespace

ConfusionCounts::ConfusionCounts(std::vector<EmotionLabel> labels)
    : labels_(std::move(labels)), counts_(labels_.size()) {}

ConfusionCounts::ConfusionCounts(std::vector<EmotionLabel> labels,
                                 std::vector<LabelCounts> counts)
    : labels_(std::move(labels)), counts_(std::move(counts)) {
  if (labels_.size() != counts_.size()) {
    throw ArgumentError("confusion counts: label/count length mismatch");
  }
  for (const auto& c : counts_) {
    if (c.tp < 0 || c.fp < 0 || c.fn < 0) {
      throw ArgumentError("confusion counts must be non-negative");
    }
  }
}

const LabelCounts& ConfusionCounts::at(const EmotionLabel& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) {
    throw ArgumentError("no confusion counts for label '" + label.token() + "'");
  }
  return counts_[static_cast<std::size_t>(it - labels_.begin())];
}

LabelCounts ConfusionCounts::totals() const {
  LabelCounts sum;
  for (const auto& c : counts_) {
    sum.tp += c.tp;
    sum.fp += c.fp;
    sum.fn += c.fn;
  }
  return sum;
}

double MetricReport::value(RewardMetric metric) const {
  switch (metric) {
    case RewardMetric::micro_f1: return micro_f1;
    case RewardMetric::macro_f1: return macro_f1;
    case RewardMetric::emr:
      if (!emr) throw ArgumentError("emr is only defined for multi-label spaces");
      return *emr;
    case RewardMetric::pma:
      if (!pma) throw ArgumentError("pma is only defined for multi-label spaces");
      return *pma;
  }
  return micro_f1;
}

ConfusionCounts confusion(std::span<const LabelSet> preds,
                          std::span<const LabelSet> golds, const LabelSpace& space) {
  check_lengths(preds.size(), golds.size());
  const std::size_t n = preds.size();
  const std::size_t k = space.size();

  std::vector<std::vector<std::uint32_t>> pred_idx(n);
  std::vector<std::vector<std::uint32_t>> gold_idx(n);
  for (std::size_t i = 0; i < n; ++i) {
    pred_idx[i] = to_indices(preds[i], space);
    gold_idx[i] = to_indices(golds[i], space);
  }

  std::vector<LabelCounts> counts(k);
#pragma omp parallel if (n >= kParallelThreshold)
  {
    std::vector<LabelCounts> local(k);
#pragma omp for schedule(static) nowait
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
      const auto& p = pred_idx[static_cast<std::size_t>(ii)];
      const auto& g = gold_idx[static_cast<std::size_t>(ii)];
      // Both sorted: one merge pass classifies every label that occurs.
      std::size_t a = 0;
      std::size_t b = 0;
      while (a < p.size() || b < g.size()) {
        if (b == g.size() || (a < p.size() && p[a] < g[b])) {
          local[p[a++]].fp++;
        } else if (a == p.size() || g[b] < p[a]) {
          local[g[b++]].fn++;
        } else {
          local[p[a]].tp++;
          ++a;
          ++b;
        }
      }
    }
#pragma omp critical(apolo_confusion_merge)
    for (std::size_t c = 0; c < k; ++c) {
      counts[c].tp += local[c].tp;
      counts[c].fp += local[c].fp;
      counts[c].fn += local[c].fn;
    }
  }
  return ConfusionCounts(space.labels(), std::move(counts));
}

double macro_f1(const ConfusionCounts& counts) {
  const auto& c = counts.counts();
  if (c.empty()) throw ArgumentError("macro F1 needs at least one label");
  double sum = 0.0;
  for (const auto& lc : c) sum += f1(lc.tp, lc.fp, lc.fn);
  return sum / static_cast<double>(c.size());
}

double micro_f1(const ConfusionCounts& counts) {
  const auto t = counts.totals();
  return f1(t.tp, t.fp, t.fn);
}

double emr(std::span<const LabelSet> preds, std::span<const LabelSet> golds) {
  check_lengths(preds.size(), golds.size());
  if (preds.empty()) throw ArgumentError("exact match ratio needs at least one sample");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == golds[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double pma(std::span<const LabelSet> preds, std::span<const LabelSet> golds) {
  check_lengths(preds.size(), golds.size());
  if (preds.empty()) throw ArgumentError("partial match accuracy needs at least one sample");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& gold = golds[i];
    if (gold.empty()) {
      throw ArgumentError("partial match accuracy is undefined for an empty gold set (sample " +
                          std::to_string(i) + ")");
    }
    std::size_t overlap = 0;
    for (const auto& label : preds[i]) overlap += gold.count(label);
    // |Y ∩ Z| > |Y| / 2, kept in integers.
    if (2 * overlap > gold.size()) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

MetricReport report(std::span<const LabelSet> preds, std::span<const LabelSet> golds,
                    const LabelSpace& space, std::int64_t parse_failures) {
  check_lengths(preds.size(), golds.size());
  if (parse_failures < 0 || parse_failures > static_cast<std::int64_t>(preds.size())) {
    throw ArgumentError("parse failure count out of range");
  }
  MetricReport r;
  r.counts = confusion(preds, golds, space);
  r.macro_f1 = macro_f1(r.counts);
  r.micro_f1 = micro_f1(r.counts);
  if (space.mode() == LabelMode::multi) {
    r.emr = emr(preds, golds);
    r.pma = pma(preds, golds);
  }
  r.n_samples = static_cast<std::int64_t>(preds.size());
  r.n_parse_failures = parse_failures;
  return r;
}

namespace serial {

ConfusionCounts confusion(std::span<const LabelSet> preds,
                          std::span<const LabelSet> golds, const LabelSpace& space) {
  check_lengths(preds.size(), golds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (const auto* set : {&preds[i], &golds[i]}) {
      for (const auto& label : *set) {
        if (!space.contains(label)) {
          throw ArgumentError("label '" + label.token() + "' is not in the label space");
        }
      }
    }
  }
  std::vector<LabelCounts> counts;
  counts.reserve(space.size());
  for (const auto& label : space.labels()) {
    LabelCounts lc;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const bool in_pred = preds[i].count(label) != 0;
      const bool in_gold = golds[i].count(label) != 0;
      lc.tp += in_pred && in_gold;
      lc.fp += in_pred && !in_gold;
      lc.fn += !in_pred && in_gold;
    }
    counts.push_back(lc);
  }
  return ConfusionCounts(space.labels(), std::move(counts));
}

}  // namespace serial
}  // namespace apolo
