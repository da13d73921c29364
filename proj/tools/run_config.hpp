// Flat run configuration for the advforge CLI. Every field has a default so
// a bare `advforge demo` runs the complete desk-scale pipeline; a JSON config
// file overrides defaults and command-line flags override both.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "advforge/error.hpp"
#include "json.hpp"

namespace advforge::cli {

struct RunConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "out";

  // data synthesis / loading
  std::size_t rows = 20000;
  std::size_t n_continuous = 28;
  std::size_t n_categorical = 4;
  double fraud_rate = 0.011;
  std::string csv_path;
  std::string schema_path;
  double test_fraction = 0.2;
  std::size_t balance_cap = 0;

  // tree models
  std::size_t dt_max_depth = 12;
  std::size_t dt_min_leaf = 5;
  std::size_t rf_trees = 100;
  std::size_t rf_max_depth = 12;
  std::size_t gb_rounds = 100;
  std::size_t gb_max_depth = 4;
  double gb_learning_rate = 0.1;

  // oversampling
  std::size_t smote_k = 5;
  std::size_t gan_epochs = 100;
  std::size_t gan_batch = 500;
  std::vector<std::size_t> gan_gen_dims = {256, 256};
  std::vector<std::size_t> gan_disc_dims = {256, 256};
  std::size_t gan_noise_dim = 128;
  double gan_learning_rate = 2e-4;
  std::string gan_labeling = "carry";  // carry | boundary-truth
  std::size_t gan_samples = 0;         // 0: match the smote output size

  // face data + CNN
  std::string faces_dir;       // load real faces when both set, else synthetic
  std::string faces_manifest;
  std::size_t cnn_epochs = 40;
  std::size_t cnn_batch = 32;
  double cnn_learning_rate = 1e-3;

  // vision attacks
  double mask_threshold = 0.4;
  double lambda_orig = 1.0;
  std::string attack_method = "targeted";  // fgsm | targeted | cw
  std::string target_rule = "next-class";  // next-class | fixed | random-seeded
  int target_class = 0;
  double epsilon = 0.1;
  std::size_t attack_steps = 500;
  double attack_step_size = 5e-3;
  std::size_t cw_steps = 1000;
  double cw_step_size = 1e-2;
  double cw_c = 1.0;
  double cw_kappa = 0.0;
  std::string cw_norm = "l2";  // l2 | linf

  void apply_json(const nlohmann::ordered_json& j);
  static RunConfig from_json_file(const std::string& path);
  nlohmann::ordered_json to_json() const;
  std::string hash() const;  // FNV-1a over the canonical serialization
};

}  // namespace advforge::cli
