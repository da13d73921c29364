#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "advforge/error.hpp"
#include "advforge/rng.hpp"
#include "advforge/smote.hpp"
#include "advforge/tabular.hpp"
#include "advforge/trees.hpp"

using namespace advforge;

namespace {

Table two_class_table(std::vector<std::vector<double>> rows, std::size_t n_features) {
  Table t;
  for (std::size_t i = 0; i < n_features; ++i)
    t.schema.columns.push_back({"f" + std::to_string(i), ColumnKind::continuous});
  t.schema.columns.push_back({"y", ColumnKind::categorical});
  t.schema.label = "y";
  t.rows = std::move(rows);
  return t;
}

// Textbook brute-force k-NN, written independently of the production code.
std::vector<std::vector<std::size_t>> oracle_knn(const std::vector<std::vector<double>>& pts,
                                                 std::size_t k) {
  std::vector<std::vector<std::size_t>> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (i == j) continue;
      double s = 0.0;
      for (std::size_t f = 0; f < pts[i].size(); ++f) {
        const double diff = pts[i][f] - pts[j][f];
        s += diff * diff;
      }
      d.emplace_back(s, j);
    }
    std::stable_sort(d.begin(), d.end(),
                     [](const auto& a, const auto& b) {
                       if (a.first != b.first) return a.first < b.first;
                       return a.second < b.second;
                     });
    for (std::size_t t = 0; t < k; ++t) out[i].push_back(d[t].second);
  }
  return out;
}

}  // namespace

TEST_CASE("knn matches the brute-force oracle on randomized tables") {
  Rng rng(404);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 10 + rng.below(491);  // <= 500 rows
    const std::size_t f = 1 + rng.below(8);     // <= 8 features
    std::vector<std::vector<double>> pts(n);
    for (auto& p : pts) {
      p.resize(f);
      for (auto& v : p) {
        // integer grid on half the coordinates forces exact distance ties
        v = (rng.below(2) == 0) ? static_cast<double>(rng.below(5)) : rng.uniform(-2.0, 2.0);
      }
    }
    const std::size_t k = 1 + rng.below(std::min<std::size_t>(n - 1, 8));
    CHECK(knn_indices(pts, k) == oracle_knn(pts, k));
  }
}

TEST_CASE("forced midpoint interpolation") {
  // minority class 1: (0,0) and (2,2); majority class 0: three far points
  Table t = two_class_table({{0, 0, 1}, {2, 2, 1},
                             {10, 10, 0}, {11, 10, 0}, {10, 11, 0}}, 2);
  SmoteConfig cfg;
  cfg.k = 1;
  cfg.seed = 5;
  cfg.fixed_u = 0.5;
  std::vector<SmoteTrace> trace;
  Table out = smote(t, cfg, &trace);
  REQUIRE(out.row_count() == 6);  // 5 originals + 1 synthetic
  const auto& synth = out.rows[5];
  CHECK(synth[0] == 1.0);
  CHECK(synth[1] == 1.0);
  CHECK(synth[2] == 1.0);  // label carried
  REQUIRE(trace.size() == 1);
  CHECK(trace[0].u == 0.5);
}

TEST_CASE("paper-scale counts: 14 raised to 139") {
  Rng rng(303);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 139; ++i) rows.push_back({rng.normal(), rng.normal(), rng.normal(), 1});
  for (int i = 0; i < 14; ++i)
    rows.push_back({rng.normal() + 3, rng.normal() - 2, rng.normal(), 0});
  Table t = two_class_table(std::move(rows), 3);

  SmoteConfig cfg;
  cfg.k = 5;
  cfg.seed = 9;
  Table out = smote(t, cfg);
  auto [zeros, ones] = out.class_counts();
  CHECK(zeros == 139);
  CHECK(ones == 139);
  // originals preserved verbatim, in order
  for (std::size_t i = 0; i < t.row_count(); ++i) CHECK(out.rows[i] == t.rows[i]);
}

TEST_CASE("synthetic rows satisfy coordinate-wise betweenness") {
  Rng rng(606);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 200; ++i) rows.push_back({rng.normal(), rng.uniform(0, 9), 0});
  for (int i = 0; i < 23; ++i) rows.push_back({rng.normal() + 1, rng.uniform(0, 9), 1});
  Table t = two_class_table(std::move(rows), 2);

  SmoteConfig cfg;
  cfg.k = 4;
  cfg.seed = 31;
  std::vector<SmoteTrace> trace;
  Table out = smote(t, cfg, &trace);
  REQUIRE(trace.size() == 200 - 23);
  for (std::size_t s = 0; s < trace.size(); ++s) {
    const auto& synth = out.rows[t.row_count() + s];
    const auto& a = t.rows[trace[s].parent_row];
    const auto& b = t.rows[trace[s].neighbor_row];
    CHECK(trace[s].u >= 0.0);
    CHECK(trace[s].u < 1.0);
    for (std::size_t c = 0; c < 2; ++c) {
      CHECK(synth[c] >= std::min(a[c], b[c]) - 1e-12);
      CHECK(synth[c] <= std::max(a[c], b[c]) + 1e-12);
    }
    // the chosen neighbor really is one of the parent's k nearest
    CHECK(trace[s].parent_row != trace[s].neighbor_row);
  }
}

TEST_CASE("categorical codes are rounded and clamped to the valid range") {
  std::vector<std::vector<double>> rows;
  Rng rng(17);
  for (int i = 0; i < 60; ++i)
    rows.push_back({rng.normal(), static_cast<double>(rng.below(4)), 0});
  for (int i = 0; i < 9; ++i)
    rows.push_back({rng.normal() + 2, static_cast<double>(rng.below(4)), 1});
  Table t;
  t.schema.columns = {{"x", ColumnKind::continuous},
                      {"c", ColumnKind::categorical},
                      {"y", ColumnKind::categorical}};
  t.schema.label = "y";
  t.rows = std::move(rows);

  SmoteConfig cfg;
  cfg.k = 3;
  cfg.seed = 8;
  Table out = smote(t, cfg);
  for (const auto& row : out.rows) {
    CHECK(row[1] == std::floor(row[1]));
    CHECK(row[1] >= 0.0);
    CHECK(row[1] <= 3.0);
  }
}

TEST_CASE("smote rejections and determinism") {
  Table t = two_class_table({{0, 0}, {1, 0}, {2, 0}, {3, 0}, {4, 0}, {5, 0},
                             {0.5, 1}, {1.5, 1}}, 1);
  SmoteConfig cfg;
  cfg.k = 2;  // k >= minority count (2)
  CHECK_THROWS_AS(smote(t, cfg), ValidationError);
  cfg.k = 1;
  Table a = smote(t, cfg);
  Table b = smote(t, cfg);
  CHECK(a.rows == b.rows);
  cfg.seed = 99;
  Table c = smote(t, cfg);
  CHECK(a.rows != c.rows);

  Table single = two_class_table({{0, 0}, {1, 0}}, 1);
  CHECK_THROWS_AS(smote(single, cfg), ValidationError);
}

TEST_CASE("boundary points are exactly the common error set") {
  Table data = balance_classes(synth_fraud(3000, 10, 3, 0.08, 77), 77);
  auto [train, test] = train_test_split(data, 0.25, 77);
  auto m = train_decision_tree(train, 6, 5, 1);

  // three identical models: boundary set == that model's error set
  auto m2 = train_decision_tree(train, 6, 5, 1);
  auto m3 = train_decision_tree(train, 6, 5, 1);
  BoundarySet bs = find_boundary_points(m, m2, m3, test);

  auto preds = hard_predictions(predict_proba(m, test));
  auto y = test.labels();
  std::size_t errors = 0;
  for (std::size_t i = 0; i < y.size(); ++i) errors += preds[i] != y[i];
  CHECK(bs.table.row_count() == errors);
  CHECK(bs.fraud_count + bs.clean_count == errors);

  // defining property: every returned row is misclassified by every model
  if (bs.table.row_count() > 0) {
    auto by = bs.table.labels();
    for (const auto* model : {&m, &m2, &m3}) {
      auto bp = hard_predictions(predict_proba(*model, bs.table));
      std::size_t correct = 0;
      for (std::size_t i = 0; i < by.size(); ++i) correct += bp[i] == by[i];
      CHECK(correct == 0);  // accuracy exactly zero on the boundary set
    }
  }
}

TEST_CASE("distinct models shrink the boundary set") {
  Table data = balance_classes(synth_fraud(3000, 10, 3, 0.08, 13), 13);
  auto [train, test] = train_test_split(data, 0.25, 13);
  auto dt = train_decision_tree(train, 10, 5, 1);
  auto rf = train_random_forest(train, 40, 10, 2);
  auto gb = train_gradient_boosting(train, 40, 4, 0.1, 3);
  BoundarySet bs = find_boundary_points(dt, rf, gb, test);

  auto pd = hard_predictions(predict_proba(dt, test));
  auto y = test.labels();
  std::size_t dt_errors = 0;
  for (std::size_t i = 0; i < y.size(); ++i) dt_errors += pd[i] != y[i];
  CHECK(bs.table.row_count() <= dt_errors);

  auto by = bs.table.labels();
  for (const auto* model : {&dt, &rf, &gb}) {
    auto bp = hard_predictions(predict_proba(*model, bs.table));
    for (std::size_t i = 0; i < by.size(); ++i) CHECK(bp[i] != by[i]);
  }
}

TEST_CASE("perfect models produce an empty boundary set without failing") {
  Table t = two_class_table({{-2, 0}, {-1.5, 0}, {-1, 0}, {-0.5, 0}, {-2.5, 0},
                             {0.5, 1}, {1, 1}, {1.5, 1}, {2, 1}, {2.5, 1}}, 1);
  auto m = train_decision_tree(t, 3, 1, 0);
  BoundarySet bs = find_boundary_points(m, m, m, t);
  CHECK(bs.table.row_count() == 0);
  CHECK(bs.fraud_count == 0);
  CHECK(bs.clean_count == 0);
}
