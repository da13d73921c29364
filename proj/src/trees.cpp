#include "advforge/trees.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>

#include "advforge/error.hpp"
#include "advforge/rng.hpp"
#include "json.hpp"

namespace advforge {

namespace {

using u128 = unsigned __int128;

struct SplitChoice {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
};

// Classification split quality is compared exactly: maximizing
//   (c0l^2 + c1l^2)/nl + (c0r^2 + c1r^2)/nr
// is equivalent to maximizing Gini decrease, and cross-multiplying keeps the
// comparison in integers so ties resolve to the first candidate in
// (feature, threshold) order with no dependence on rounding.
struct GiniScore {
  u128 num = 0;  // (Al*nr + Ar*nl)
  u128 den = 1;  // nl*nr

  static GiniScore of(std::uint64_t c0l, std::uint64_t c1l, std::uint64_t c0r,
                      std::uint64_t c1r) {
    const u128 nl = c0l + c1l, nr = c0r + c1r;
    const u128 al = static_cast<u128>(c0l) * c0l + static_cast<u128>(c1l) * c1l;
    const u128 ar = static_cast<u128>(c0r) * c0r + static_cast<u128>(c1r) * c1r;
    return {al * nr + ar * nl, nl * nr};
  }

  bool better_than(const GiniScore& o) const { return num * o.den > o.num * den; }
};

struct GrowContext {
  const Table* table;
  const std::vector<int>* labels;       // classification targets
  const std::vector<double>* residual;  // regression targets (boosting)
  const std::vector<double>* hessian;   // p(1-p) per row (boosting)
  std::size_t max_depth;
  std::size_t min_leaf;
  Rng* feature_rng = nullptr;  // when set, sqrt(F) features per split
  const std::vector<std::size_t>* features;
};

bool classification(const GrowContext& ctx) { return ctx.residual == nullptr; }

double leaf_value_for(const GrowContext& ctx, const std::vector<std::uint32_t>& rows) {
  if (classification(ctx)) {
    std::size_t ones = 0;
    for (auto r : rows) ones += static_cast<std::size_t>((*ctx.labels)[r]);
    return static_cast<double>(ones) / static_cast<double>(rows.size());
  }
  double num = 0.0, den = 0.0;
  for (auto r : rows) {
    num += (*ctx.residual)[r];
    den += (*ctx.hessian)[r];
  }
  if (den < 1e-12) return 0.0;
  return std::clamp(num / den, -4.0, 4.0);
}

std::vector<std::size_t> candidate_features(const GrowContext& ctx) {
  if (!ctx.feature_rng) return *ctx.features;
  const std::size_t f_total = ctx.features->size();
  auto k = static_cast<std::size_t>(std::sqrt(static_cast<double>(f_total)));
  if (k < 1) k = 1;
  auto picked = ctx.feature_rng->sample_without_replacement(f_total, k);
  std::sort(picked.begin(), picked.end());  // keep (feature, threshold) tie order
  std::vector<std::size_t> out;
  out.reserve(picked.size());
  for (auto i : picked) out.push_back((*ctx.features)[i]);
  return out;
}

SplitChoice best_split(const GrowContext& ctx, const std::vector<std::uint32_t>& rows) {
  SplitChoice choice;
  GiniScore best_gini;
  double best_reg = 0.0;
  const auto n = rows.size();
  if (n < 2 * ctx.min_leaf) return choice;

  std::uint64_t total1 = 0;
  double total_r = 0.0;
  if (classification(ctx)) {
    for (auto r : rows) total1 += static_cast<std::uint64_t>((*ctx.labels)[r]);
    if (total1 == 0 || total1 == n) return choice;  // pure
  } else {
    for (auto r : rows) total_r += (*ctx.residual)[r];
  }

  std::vector<std::pair<double, std::uint32_t>> order(n);
  for (const std::size_t f : candidate_features(ctx)) {
    for (std::size_t i = 0; i < n; ++i)
      order[i] = {(*ctx.table).rows[rows[i]][f], rows[i]};
    std::sort(order.begin(), order.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::uint64_t ones_l = 0;
    double sum_l = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (classification(ctx))
        ones_l += static_cast<std::uint64_t>((*ctx.labels)[order[i].second]);
      else
        sum_l += (*ctx.residual)[order[i].second];
      if (order[i].first == order[i + 1].first) continue;
      const std::size_t nl = i + 1, nr = n - nl;
      if (nl < ctx.min_leaf || nr < ctx.min_leaf) continue;
      if (classification(ctx)) {
        const auto s = GiniScore::of(nl - ones_l, ones_l, (nr - (total1 - ones_l)),
                                     total1 - ones_l);
        if (!choice.found || s.better_than(best_gini)) {
          best_gini = s;
          choice = {true, f, (order[i].first + order[i + 1].first) / 2.0};
        }
      } else {
        const double sum_r = total_r - sum_l;
        const double s = sum_l * sum_l / static_cast<double>(nl) +
                         sum_r * sum_r / static_cast<double>(nr);
        if (!choice.found || s > best_reg) {
          best_reg = s;
          choice = {true, f, (order[i].first + order[i + 1].first) / 2.0};
        }
      }
    }
  }
  return choice;
}

std::unique_ptr<TreeNode> grow(const GrowContext& ctx, std::vector<std::uint32_t> rows,
                               std::size_t depth) {
  auto node = std::make_unique<TreeNode>();
  SplitChoice split;
  if (depth < ctx.max_depth) split = best_split(ctx, rows);
  if (!split.found) {
    node->leaf_value = leaf_value_for(ctx, rows);
    return node;
  }
  std::vector<std::uint32_t> left, right;
  for (auto r : rows)
    ((*ctx.table).rows[r][split.feature] < split.threshold ? left : right).push_back(r);
  rows.clear();
  rows.shrink_to_fit();
  node->feature = static_cast<int>(split.feature);
  node->threshold = split.threshold;
  node->left = grow(ctx, std::move(left), depth + 1);
  node->right = grow(ctx, std::move(right), depth + 1);
  return node;
}

void check_trainable(const Table& train, std::size_t min_leaf) {
  require(train.encoded(), "training table still holds raw categoricals; encode it first");
  require(train.row_count() >= 2 * min_leaf,
          "training needs at least " + std::to_string(2 * min_leaf) + " rows, got " +
              std::to_string(train.row_count()));
  train.labels();  // validates binary labels
}

bool single_class(const std::vector<int>& y) {
  return std::all_of(y.begin(), y.end(), [&](int v) { return v == y[0]; });
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// ----- persistence helpers -------------------------------------------------

using nlohmann::ordered_json;

ordered_json node_to_json(const TreeNode& n) {
  if (n.is_leaf()) return ordered_json{{"leaf_value", n.leaf_value}};
  return ordered_json{{"feature", n.feature},
                      {"threshold", n.threshold},
                      {"left", node_to_json(*n.left)},
                      {"right", node_to_json(*n.right)}};
}

std::unique_ptr<TreeNode> node_from_json(const ordered_json& j) {
  auto n = std::make_unique<TreeNode>();
  if (j.contains("leaf_value")) {
    n->leaf_value = j.at("leaf_value").get<double>();
    return n;
  }
  require(j.contains("feature") && j.contains("threshold") && j.contains("left") &&
              j.contains("right"),
          "model file: malformed tree node");
  n->feature = j.at("feature").get<int>();
  require(n->feature >= 0, "model file: negative feature index on internal node");
  n->threshold = j.at("threshold").get<double>();
  n->left = node_from_json(j.at("left"));
  n->right = node_from_json(j.at("right"));
  return n;
}

}  // namespace

// ---------------------------------------------------------------------------

double predict_tree(const TreeNode& root, const std::vector<double>& row) {
  const TreeNode* node = &root;
  while (!node->is_leaf())
    node = (row[static_cast<std::size_t>(node->feature)] < node->threshold)
               ? node->left.get()
               : node->right.get();
  return node->leaf_value;
}

TreeEnsembleModel train_decision_tree(const Table& train, std::size_t max_depth,
                                      std::size_t min_leaf, std::uint64_t seed) {
  require(max_depth >= 1 && min_leaf >= 1, "max_depth and min_leaf must be positive");
  check_trainable(train, min_leaf);
  auto y = train.labels();
  if (single_class(y))
    std::cerr << "warning: single-class training set, producing a constant model\n";

  auto features = train.feature_indices();
  GrowContext ctx{&train, &y, nullptr, nullptr, max_depth, min_leaf, nullptr, &features};
  std::vector<std::uint32_t> rows(train.row_count());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<std::uint32_t>(i);

  TreeEnsembleModel m;
  m.kind = ModelKind::single;
  m.schema = train.schema;
  m.trees.push_back(grow(ctx, std::move(rows), 0));
  m.hyper = {{"max_depth", static_cast<double>(max_depth)},
             {"min_leaf", static_cast<double>(min_leaf)},
             {"seed", static_cast<double>(seed)}};
  return m;
}

TreeEnsembleModel train_random_forest(const Table& train, std::size_t n_trees,
                                      std::size_t max_depth, std::uint64_t seed,
                                      const ForestOptions& options) {
  require(n_trees >= 1, "forest needs at least one tree");
  constexpr std::size_t kMinLeaf = 5;
  check_trainable(train, kMinLeaf);
  auto y = train.labels();
  if (single_class(y))
    std::cerr << "warning: single-class training set, producing a constant model\n";

  auto features = train.feature_indices();
  const std::size_t n = train.row_count();

  TreeEnsembleModel m;
  m.kind = ModelKind::bagged;
  m.schema = train.schema;
  for (std::size_t t = 0; t < n_trees; ++t) {
    Rng tree_rng(Rng::derive(seed, t));
    std::vector<std::uint32_t> rows(n);
    if (options.bootstrap) {
      for (std::size_t i = 0; i < n; ++i)
        rows[i] = static_cast<std::uint32_t>(tree_rng.below(n));
    } else {
      for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<std::uint32_t>(i);
    }
    GrowContext ctx{&train,  &y,       nullptr,
                    nullptr, max_depth, kMinLeaf,
                    options.subsample_features ? &tree_rng : nullptr, &features};
    m.trees.push_back(grow(ctx, std::move(rows), 0));
  }
  m.hyper = {{"n_trees", static_cast<double>(n_trees)},
             {"max_depth", static_cast<double>(max_depth)},
             {"min_leaf", static_cast<double>(kMinLeaf)},
             {"seed", static_cast<double>(seed)}};
  return m;
}

TreeEnsembleModel train_gradient_boosting(const Table& train, std::size_t n_rounds,
                                          std::size_t max_depth, double lr,
                                          std::uint64_t seed) {
  require(lr > 0.0, "learning rate must be positive");
  constexpr std::size_t kMinLeaf = 5;
  check_trainable(train, kMinLeaf);
  auto y = train.labels();
  if (single_class(y))
    std::cerr << "warning: single-class training set, producing a constant model\n";

  const std::size_t n = train.row_count();
  double prevalence = 0.0;
  for (int v : y) prevalence += v;
  prevalence /= static_cast<double>(n);
  // clamp so the base log-odds stays finite on single-class input
  prevalence = std::clamp(prevalence, 1e-9, 1.0 - 1e-9);

  TreeEnsembleModel m;
  m.kind = ModelKind::boosted;
  m.schema = train.schema;
  m.learning_rate = lr;
  m.base_score = std::log(prevalence / (1.0 - prevalence));

  auto features = train.feature_indices();
  std::vector<double> margin(n, m.base_score);
  std::vector<double> residual(n), hessian(n);
  for (std::size_t round = 0; round < n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(margin[i]);
      residual[i] = static_cast<double>(y[i]) - p;
      hessian[i] = p * (1.0 - p);
    }
    GrowContext ctx{&train,  &y,       &residual, &hessian,
                    max_depth, kMinLeaf, nullptr,   &features};
    std::vector<std::uint32_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<std::uint32_t>(i);
    auto tree = grow(ctx, std::move(rows), 0);
    for (std::size_t i = 0; i < n; ++i)
      margin[i] += lr * predict_tree(*tree, train.rows[i]);
    m.trees.push_back(std::move(tree));
  }
  m.hyper = {{"n_rounds", static_cast<double>(n_rounds)},
             {"max_depth", static_cast<double>(max_depth)},
             {"min_leaf", static_cast<double>(kMinLeaf)},
             {"lr", lr},
             {"seed", static_cast<double>(seed)}};
  return m;
}

std::vector<double> predict_proba(const TreeEnsembleModel& model, const Table& rows) {
  require(rows.schema.columns.size() == model.schema.columns.size(),
          "prediction schema has " + std::to_string(rows.schema.columns.size()) +
              " columns, model was trained with " +
              std::to_string(model.schema.columns.size()));
  for (std::size_t i = 0; i < model.schema.columns.size(); ++i) {
    require(rows.schema.columns[i].name == model.schema.columns[i].name &&
                rows.schema.columns[i].kind == model.schema.columns[i].kind,
            "prediction schema column " + std::to_string(i) + " (" +
                rows.schema.columns[i].name + ") does not match the training schema (" +
                model.schema.columns[i].name + ")");
  }

  std::vector<double> out;
  out.reserve(rows.row_count());
  for (const auto& row : rows.rows) {
    double p = 0.0;
    switch (model.kind) {
      case ModelKind::single:
        p = predict_tree(*model.trees[0], row);
        break;
      case ModelKind::bagged: {
        double acc = 0.0;
        for (const auto& t : model.trees) acc += predict_tree(*t, row);
        p = acc / static_cast<double>(model.trees.size());
        break;
      }
      case ModelKind::boosted: {
        double z = model.base_score;
        for (const auto& t : model.trees) z += model.learning_rate * predict_tree(*t, row);
        p = sigmoid(z);
        break;
      }
    }
    out.push_back(p);
  }
  return out;
}

std::vector<int> hard_predictions(const std::vector<double>& probs) {
  std::vector<int> out(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) out[i] = probs[i] >= 0.5 ? 1 : 0;
  return out;
}

double tree_depth(const TreeNode& root) {
  if (root.is_leaf()) return 0.0;
  return 1.0 + std::max(tree_depth(*root.left), tree_depth(*root.right));
}

std::string model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::single: return "decision_tree";
    case ModelKind::bagged: return "random_forest";
    case ModelKind::boosted: return "gradient_boosting";
  }
  return "decision_tree";
}

void save_model(const TreeEnsembleModel& model, const std::string& path) {
  ordered_json j;
  j["kind"] = model_kind_name(model.kind);
  j["hyperparameters"] = ordered_json::object();
  for (const auto& [k, v] : model.hyper) j["hyperparameters"][k] = v;
  if (model.kind == ModelKind::boosted) {
    j["learning_rate"] = model.learning_rate;
    j["base_score"] = model.base_score;
  }
  ordered_json schema;
  schema["label"] = model.schema.label;
  schema["columns"] = ordered_json::array();
  for (const auto& c : model.schema.columns)
    schema["columns"].push_back(
        {{"name", c.name},
         {"kind", c.kind == ColumnKind::continuous ? "continuous" : "categorical"}});
  j["schema"] = schema;
  j["trees"] = ordered_json::array();
  for (const auto& t : model.trees) j["trees"].push_back(node_to_json(*t));

  std::ofstream os(path);
  if (!os) throw RuntimeError("cannot write model file: " + path);
  os << j.dump(2) << '\n';
  if (!os) throw RuntimeError("write failed: " + path);
}

TreeEnsembleModel load_model(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw RuntimeError("cannot open model file: " + path);
  ordered_json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw ValidationError("model file " + path + " is not valid JSON: " + e.what());
  }
  require(j.contains("kind") && j.contains("trees") && j.contains("schema"),
          "model file missing kind/trees/schema: " + path);

  TreeEnsembleModel m;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "decision_tree") m.kind = ModelKind::single;
  else if (kind == "random_forest") m.kind = ModelKind::bagged;
  else if (kind == "gradient_boosting") m.kind = ModelKind::boosted;
  else throw ValidationError("model file has unknown kind " + kind);

  if (j.contains("hyperparameters"))
    for (auto it = j["hyperparameters"].begin(); it != j["hyperparameters"].end(); ++it)
      m.hyper.emplace_back(it.key(), it.value().get<double>());
  if (m.kind == ModelKind::boosted) {
    require(j.contains("learning_rate") && j.contains("base_score"),
            "boosted model file missing learning_rate/base_score");
    m.learning_rate = j.at("learning_rate").get<double>();
    m.base_score = j.at("base_score").get<double>();
  }

  const auto& schema = j.at("schema");
  m.schema.label = schema.at("label").get<std::string>();
  for (const auto& c : schema.at("columns")) {
    const std::string k = c.at("kind").get<std::string>();
    require(k == "continuous" || k == "categorical", "model file: bad column kind " + k);
    m.schema.columns.push_back({c.at("name").get<std::string>(),
                                k == "continuous" ? ColumnKind::continuous
                                                  : ColumnKind::categorical});
  }
  m.schema.validate();

  for (const auto& t : j.at("trees")) m.trees.push_back(node_from_json(t));
  require(!m.trees.empty(), "model file has no trees: " + path);
  return m;
}

}  // namespace advforge
