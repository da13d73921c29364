#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "advforge/tabular.hpp"

namespace advforge {

// Leaf when feature < 0; leaf_value is a class-1 probability for single/bagged
// trees and an additive log-odds contribution for boosted trees.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  double leaf_value = 0.0;
  std::unique_ptr<TreeNode> left, right;

  bool is_leaf() const { return feature < 0; }
};

enum class ModelKind { single, bagged, boosted };

struct TreeEnsembleModel {
  ModelKind kind = ModelKind::single;
  std::vector<std::unique_ptr<TreeNode>> trees;
  double learning_rate = 0.0;  // boosted only
  double base_score = 0.0;     // boosted only
  Schema schema;               // training schema, enforced at prediction time
  std::vector<std::pair<std::string, double>> hyper;
};

// Internal test hook: defaults reproduce the documented behavior.
struct ForestOptions {
  bool bootstrap = true;
  bool subsample_features = true;  // sqrt(F) per split when set
};

// CART growth, Gini impurity, midpoint thresholds between consecutive sorted
// unique values, rows with x < threshold go left. Ties broken by lowest
// feature index then lowest threshold (split comparisons are exact integer
// arithmetic, so tie-breaking is bit-independent of summation order).
TreeEnsembleModel train_decision_tree(const Table& train, std::size_t max_depth = 12,
                                      std::size_t min_leaf = 5, std::uint64_t seed = 0);

TreeEnsembleModel train_random_forest(const Table& train, std::size_t n_trees = 100,
                                      std::size_t max_depth = 12, std::uint64_t seed = 0,
                                      const ForestOptions& options = {});

// Logistic-loss Newton boosting: base score = prevalence log-odds, per-round
// regression tree on residuals y - p, leaf value = sum(r) / sum(p(1-p))
// clamped to [-4, 4].
TreeEnsembleModel train_gradient_boosting(const Table& train, std::size_t n_rounds = 100,
                                          std::size_t max_depth = 4, double lr = 0.1,
                                          std::uint64_t seed = 0);

std::vector<double> predict_proba(const TreeEnsembleModel& model, const Table& rows);
std::vector<int> hard_predictions(const std::vector<double>& probs);  // p >= 0.5 -> 1

// Raw output of one tree (leaf probability, or log-odds term for boosted trees).
double predict_tree(const TreeNode& root, const std::vector<double>& row);

double tree_depth(const TreeNode& root);

void save_model(const TreeEnsembleModel& model, const std::string& path);
TreeEnsembleModel load_model(const std::string& path);

std::string model_kind_name(ModelKind kind);

}  // namespace advforge
