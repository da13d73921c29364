#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "advforge/metrics.hpp"
#include "advforge/params.hpp"
#include "advforge/tabular.hpp"
#include "advforge/trees.hpp"

namespace advforge {

struct GanConfig {
  std::size_t epochs = 100;
  std::size_t batch = 500;
  std::vector<std::size_t> gen_dims = {256, 256};
  std::vector<std::size_t> disc_dims = {256, 256};
  std::size_t noise_dim = 128;
  double learning_rate = 2e-4;
  std::uint64_t seed = 0;
};

// How one column maps between table values and generator output features:
// continuous columns are min-max scaled to [-1,1] behind a tanh head,
// categorical columns become a softmax head of `cardinality` probabilities.
struct ColumnTransform {
  ColumnKind kind;
  double lo = 0.0;
  double hi = 1.0;
  std::size_t cardinality = 0;
};

// A conditional tabular GAN in the CTGAN mold, with min-max scaling standing
// in for the per-mode normalization. The label column participates as an
// ordinary categorical column, so generated rows come with their own labels.
struct GanModel {
  Schema schema;
  std::optional<EncoderMap> encoder;
  std::vector<ColumnTransform> transforms;  // one per schema column
  std::size_t noise_dim = 0;
  std::vector<std::size_t> gen_dims, disc_dims;
  bool conditional = false;
  std::vector<std::size_t> cond_columns;            // categorical column indices
  std::vector<std::vector<double>> cond_weights;    // log1p(count) per value
  ParameterSet gen;
  ParameterSet disc;
  std::vector<double> disc_loss, gen_loss;  // per-epoch means

  std::size_t row_width() const;   // transformed feature width
  std::size_t cond_width() const;  // one-hot condition width (0 if unconditional)
};

GanModel train_tabular_gan(const Table& data, const GanConfig& config = {});

// n fresh rows on the original scales; codes valid, continuous within the
// fit-time [lo, hi].
Table sample_gan(const GanModel& gan, std::size_t n, std::uint64_t seed);

void save_gan(const GanModel& gan, const std::string& params_path,
              const std::string& meta_path);
GanModel load_gan(const std::string& params_path, const std::string& meta_path);

// Label source for GAN rows in the combined attack set: keep the generated
// label column, or relabel each GAN row from its nearest SMOTE-side row.
enum class GanLabeling { carry, boundary_truth };

struct AttackSet {
  Table table;                          // schema of the inputs
  std::vector<std::string> provenance;  // row-parallel, "smote" | "gan"
};

AttackSet build_attack_set(const Table& smote_out, const Table& gan_out,
                           GanLabeling labeling, std::uint64_t seed);

// Per-model before/after bundles: before on the held-out test set, after on
// the adversarial set.
std::vector<AttackReport> evaluate_tabular_attack(const TreeEnsembleModel& m1,
                                                  const TreeEnsembleModel& m2,
                                                  const TreeEnsembleModel& m3,
                                                  const Table& original_test,
                                                  const Table& attack_set);

// CSV with the provenance appended as a final "source" column.
void write_attack_csv(const AttackSet& set, const std::string& path);
// Lossless round trip for the pipeline: table JSON plus the provenance list.
void save_attack_set(const AttackSet& set, const std::string& path);
AttackSet load_attack_set(const std::string& path);

}  // namespace advforge
