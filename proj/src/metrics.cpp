#include "advforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "advforge/error.hpp"
#include "json.hpp"

namespace advforge {

namespace {

using nlohmann::ordered_json;

ordered_json bundle_to_json(const MetricsBundle& b) {
  ordered_json j;
  j["accuracy"] = round6(b.accuracy);
  j["precision"] = round6(b.precision);
  j["recall"] = round6(b.recall);
  if (b.auc_defined)
    j["auc"] = round6(b.auc);
  else
    j["auc"] = nullptr;
  j["tp"] = b.counts.tp;
  j["tn"] = b.counts.tn;
  j["fp"] = b.counts.fp;
  j["fn"] = b.counts.fn;
  return j;
}

void csv_row(std::ofstream& os, const std::string& model, const char* phase,
             const MetricsBundle& b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f", b.accuracy, b.precision, b.recall);
  os << model << ',' << phase << ',' << buf << ',';
  if (b.auc_defined) {
    std::snprintf(buf, sizeof buf, "%.6f", b.auc);
    os << buf;
  }
  os << ',' << b.counts.tp << ',' << b.counts.tn << ',' << b.counts.fp << ','
     << b.counts.fn << '\n';
}

}  // namespace

double round6(double v) { return std::round(v * 1e6) / 1e6; }

ConfusionCounts confusion(const std::vector<int>& predictions, const std::vector<int>& labels) {
  require(predictions.size() == labels.size(),
          "confusion: " + std::to_string(predictions.size()) + " predictions vs " +
              std::to_string(labels.size()) + " labels");
  require(!labels.empty(), "confusion: empty input");
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require((predictions[i] == 0 || predictions[i] == 1) && (labels[i] == 0 || labels[i] == 1),
            "confusion: entries must be binary 0/1");
    if (labels[i] == 1)
      (predictions[i] == 1 ? c.tp : c.fn)++;
    else
      (predictions[i] == 1 ? c.fp : c.tn)++;
  }
  return c;
}

double mann_whitney_auc(const std::vector<double>& scores, const std::vector<int>& labels,
                        bool* defined) {
  require(scores.size() == labels.size(), "auc: scores and labels differ in length");
  std::size_t pos = 0;
  for (int y : labels) pos += static_cast<std::size_t>(y);
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) {
    if (defined) *defined = false;
    return 0.0;
  }
  if (defined) *defined = true;

  // average ranks with tie groups, then the Mann-Whitney U identity
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
    i = j;
  }
  const double u = rank_sum_pos - static_cast<double>(pos) * (static_cast<double>(pos) + 1.0) / 2.0;
  return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

MetricsBundle compute_metrics(const ConfusionCounts& counts, const std::vector<double>& scores,
                              const std::vector<int>& labels) {
  require(counts.total() > 0, "metrics: zero evaluated rows");
  MetricsBundle b;
  b.counts = counts;
  b.accuracy = static_cast<double>(counts.tp + counts.tn) / static_cast<double>(counts.total());
  b.precision = (counts.tp + counts.fp) > 0
                    ? static_cast<double>(counts.tp) / static_cast<double>(counts.tp + counts.fp)
                    : 0.0;
  b.recall = (counts.tp + counts.fn) > 0
                 ? static_cast<double>(counts.tp) / static_cast<double>(counts.tp + counts.fn)
                 : 0.0;
  b.auc = mann_whitney_auc(scores, labels, &b.auc_defined);
  return b;
}

MetricsBundle evaluate(const std::vector<double>& scores, const std::vector<int>& labels) {
  std::vector<int> preds(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) preds[i] = scores[i] >= 0.5 ? 1 : 0;
  return compute_metrics(confusion(preds, labels), scores, labels);
}

std::string deterministic_timestamp() {
  long long epoch = 0;
  if (const char* e = std::getenv("SOURCE_DATE_EPOCH")) epoch = std::atoll(e);
  std::time_t t = static_cast<std::time_t>(epoch);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_report(const std::vector<AttackReport>& reports, const std::string& out_dir) {
  require(!reports.empty(), "write_report: no reports");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);

  ordered_json j;
  j["reports"] = ordered_json::array();
  for (const auto& r : reports) {
    ordered_json e;
    e["model"] = r.model;
    e["timestamp"] = r.timestamp;
    e["attack"] = ordered_json::object();
    for (const auto& [k, v] : r.attack_config) e["attack"][k] = v;
    e["before"] = bundle_to_json(r.before);
    e["after"] = bundle_to_json(r.after);
    j["reports"].push_back(e);
  }

  const auto json_path = std::filesystem::path(out_dir) / "report.json";
  std::ofstream js(json_path, std::ios::binary);
  if (!js) throw RuntimeError("cannot write " + json_path.string());
  js << j.dump(2) << '\n';
  if (!js) throw RuntimeError("write failed: " + json_path.string());

  const auto csv_path = std::filesystem::path(out_dir) / "summary.csv";
  std::ofstream cs(csv_path, std::ios::binary);
  if (!cs) throw RuntimeError("cannot write " + csv_path.string());
  cs << "model,phase,accuracy,precision,recall,auc,tp,tn,fp,fn\n";
  for (const auto& r : reports) {
    csv_row(cs, r.model, "before", r.before);
    csv_row(cs, r.model, "after", r.after);
  }
  if (!cs) throw RuntimeError("write failed: " + csv_path.string());
}

}  // namespace advforge
