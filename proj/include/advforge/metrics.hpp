#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace advforge {

// Positive class is fraud (label 1) throughout.
struct ConfusionCounts {
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;

  std::uint64_t total() const { return tp + tn + fp + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

struct MetricsBundle {
  double accuracy = 0.0;
  double precision = 0.0;  // 0 when tp+fp = 0
  double recall = 0.0;     // 0 when tp+fn = 0
  double auc = 0.0;
  bool auc_defined = false;  // false when only one class is present
  ConfusionCounts counts;
};

struct AttackReport {
  std::string model;
  MetricsBundle before;
  MetricsBundle after;
  std::vector<std::pair<std::string, std::string>> attack_config;
  std::string timestamp;
};

ConfusionCounts confusion(const std::vector<int>& predictions, const std::vector<int>& labels);

// Probability that a random positive outscores a random negative, ties 1/2.
// defined is cleared (and 0 returned) when labels are single-class.
double mann_whitney_auc(const std::vector<double>& scores, const std::vector<int>& labels,
                        bool* defined = nullptr);

MetricsBundle compute_metrics(const ConfusionCounts& counts, const std::vector<double>& scores,
                              const std::vector<int>& labels);

// Convenience: confusion + metrics from scores and labels directly.
MetricsBundle evaluate(const std::vector<double>& scores, const std::vector<int>& labels);

// Emits report.json and summary.csv (one CSV row per model and phase; keys
// model, phase, accuracy, precision, recall, auc, tp, tn, fp, fn; reals
// rounded to 6 decimals). Undefined AUC: null in JSON, empty CSV field.
void write_report(const std::vector<AttackReport>& reports, const std::string& out_dir);

// SOURCE_DATE_EPOCH when set, otherwise the fixed epoch string; never the
// wall clock, so artifact bytes are reproducible.
std::string deterministic_timestamp();

double round6(double v);

}  // namespace advforge
