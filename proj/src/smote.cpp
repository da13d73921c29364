#include "advforge/smote.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "advforge/error.hpp"
#include "advforge/rng.hpp"

namespace advforge {

namespace {

// Plain sequential accumulation on purpose: the test oracle recomputes these
// distances with the textbook loop, and identical association order keeps
// exact ties (frequent with integer categorical codes) bit-reproducible.
double sqdist_seq(const std::vector<double>& a, const std::vector<double>& b,
                  const std::vector<std::size_t>& dims) {
  double d = 0.0;
  for (std::size_t f : dims) {
    const double diff = a[f] - b[f];
    d += diff * diff;
  }
  return d;
}

}  // namespace

BoundarySet find_boundary_points(const TreeEnsembleModel& m1, const TreeEnsembleModel& m2,
                                 const TreeEnsembleModel& m3, const Table& test) {
  const auto y = test.labels();
  const auto p1 = hard_predictions(predict_proba(m1, test));
  const auto p2 = hard_predictions(predict_proba(m2, test));
  const auto p3 = hard_predictions(predict_proba(m3, test));

  BoundarySet out;
  out.table.schema = test.schema;
  out.table.encoder = test.encoder;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (p1[i] != y[i] && p2[i] != y[i] && p3[i] != y[i]) {
      out.table.rows.push_back(test.rows[i]);
      (y[i] == 1 ? out.fraud_count : out.clean_count)++;
    }
  }
  if (out.table.rows.empty())
    std::cerr << "warning: no rows are misclassified by all three models; "
                 "the boundary attack has nothing to work with\n";
  return out;
}

std::vector<std::vector<std::size_t>> knn_indices(const std::vector<std::vector<double>>& points,
                                                  std::size_t k) {
  const std::size_t n = points.size();
  require(k >= 1, "knn: k must be positive");
  require(k < n, "knn: k = " + std::to_string(k) + " requires more than k points, got " +
                     std::to_string(n));
  std::vector<std::size_t> all_dims;
  if (n > 0)
    for (std::size_t f = 0; f < points[0].size(); ++f) all_dims.push_back(f);

  std::vector<std::vector<std::size_t>> out(n);
  std::vector<std::pair<double, std::size_t>> dist;
  for (std::size_t i = 0; i < n; ++i) {
    dist.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      dist.emplace_back(sqdist_seq(points[i], points[j], all_dims), j);
    }
    std::sort(dist.begin(), dist.end());  // (distance, index): index breaks ties
    out[i].reserve(k);
    for (std::size_t t = 0; t < k; ++t) out[i].push_back(dist[t].second);
  }
  return out;
}

Table smote(const Table& data, const SmoteConfig& config, std::vector<SmoteTrace>* trace) {
  require(config.k >= 1, "smote: k must be positive");
  const auto y = data.labels();
  std::vector<std::size_t> zeros, ones;
  for (std::size_t i = 0; i < y.size(); ++i) (y[i] == 0 ? zeros : ones).push_back(i);
  require(!zeros.empty() && !ones.empty(), "smote: both classes must be present");

  const auto& minority = (ones.size() <= zeros.size()) ? ones : zeros;
  const auto& majority = (ones.size() <= zeros.size()) ? zeros : ones;
  require(config.k < minority.size(),
          "smote: k = " + std::to_string(config.k) + " must be below the minority count " +
              std::to_string(minority.size()));

  std::size_t target = config.target_per_class ? config.target_per_class : majority.size();
  require(target >= minority.size(),
          "smote: target " + std::to_string(target) + " is below the minority count " +
              std::to_string(minority.size()));

  const auto features = data.feature_indices();
  // nearest neighbors within the minority class, over encoded feature space
  std::vector<std::vector<double>> pts;
  pts.reserve(minority.size());
  for (std::size_t i : minority) {
    std::vector<double> p;
    p.reserve(features.size());
    for (std::size_t f : features) p.push_back(data.rows[i][f]);
    pts.push_back(std::move(p));
  }
  const auto neighbors = knn_indices(pts, config.k);

  // valid code ranges for rounding: encoder cardinality when available,
  // otherwise the largest observed code
  const Schema& s = data.schema;
  std::vector<double> max_code(s.width(), 0.0);
  for (std::size_t c = 0; c < s.width(); ++c) {
    if (s.columns[c].kind != ColumnKind::categorical) continue;
    if (data.encoder && data.encoder->values.count(c)) {
      max_code[c] = static_cast<double>(data.encoder->cardinality(c) - 1);
    } else {
      for (const auto& row : data.rows) max_code[c] = std::max(max_code[c], row[c]);
    }
  }

  Table out;
  out.schema = s;
  out.encoder = data.encoder;
  out.rows = data.rows;  // originals preserved verbatim

  Rng rng(config.seed);
  const std::size_t needed = target - minority.size();
  for (std::size_t t = 0; t < needed; ++t) {
    const std::size_t pi = rng.below(minority.size());
    const std::size_t ni = neighbors[pi][rng.below(config.k)];
    const double u = config.fixed_u ? *config.fixed_u : rng.uniform01();
    const auto& x = data.rows[minority[pi]];
    const auto& yy = data.rows[minority[ni]];
    std::vector<double> row(s.width());
    for (std::size_t c = 0; c < s.width(); ++c) {
      double v = x[c] + u * (yy[c] - x[c]);
      if (s.columns[c].kind == ColumnKind::categorical)
        v = std::clamp(std::round(v), 0.0, max_code[c]);
      row[c] = v;
    }
    if (trace) trace->push_back({minority[pi], minority[ni], u});
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace advforge
