#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "advforge/tabular.hpp"
#include "advforge/trees.hpp"

namespace advforge {

struct SmoteConfig {
  std::size_t k = 5;
  std::size_t target_per_class = 0;  // 0: raise minority to the majority count
  std::uint64_t seed = 0;
  std::optional<double> fixed_u = {};  // test hook: force the interpolation draw
};

// Rows every supplied model gets wrong, true labels retained.
struct BoundarySet {
  Table table;
  std::size_t fraud_count = 0;
  std::size_t clean_count = 0;
};

// One record per synthetic row, for auditing the interpolation.
struct SmoteTrace {
  std::size_t parent_row;    // index into the input table
  std::size_t neighbor_row;  // index into the input table
  double u;
};

BoundarySet find_boundary_points(const TreeEnsembleModel& m1, const TreeEnsembleModel& m2,
                                 const TreeEnsembleModel& m3, const Table& test);

// k nearest neighbors per point (self excluded), L2 over the given vectors,
// ordered by (distance, index); ties always resolve to the lower index.
std::vector<std::vector<std::size_t>> knn_indices(const std::vector<std::vector<double>>& points,
                                                  std::size_t k);

// Output = input rows verbatim followed by synthetic minority rows. Each
// synthetic row is x + u (y - x) for a seeded-random minority parent x and one
// of its k nearest minority neighbors y; u ~ U(0,1); categorical coordinates
// rounded to the nearest valid code.
Table smote(const Table& data, const SmoteConfig& config,
            std::vector<SmoteTrace>* trace = nullptr);

}  // namespace advforge
