#include "run_config.hpp"

#include <fstream>

namespace advforge::cli {

using nlohmann::ordered_json;

namespace {

std::size_t as_size(const ordered_json& v, const std::string& key) {
  if (!v.is_number_unsigned())
    throw ValidationError("config: " + key + " must be a non-negative integer");
  return v.get<std::size_t>();
}

double as_real(const ordered_json& v, const std::string& key) {
  if (!v.is_number()) throw ValidationError("config: " + key + " must be a number");
  return v.get<double>();
}

std::string as_string(const ordered_json& v, const std::string& key) {
  if (!v.is_string()) throw ValidationError("config: " + key + " must be a string");
  return v.get<std::string>();
}

std::vector<std::size_t> as_dims(const ordered_json& v, const std::string& key) {
  if (!v.is_array() || v.empty())
    throw ValidationError("config: " + key + " must be a non-empty array of layer widths");
  std::vector<std::size_t> dims;
  for (const auto& e : v) dims.push_back(as_size(e, key));
  return dims;
}

}  // namespace

void RunConfig::apply_json(const ordered_json& j) {
  if (!j.is_object()) throw ValidationError("config: top level must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "seed")
      seed = as_size(v, key);
    else if (key == "out_dir")
      out_dir = as_string(v, key);
    else if (key == "rows")
      rows = as_size(v, key);
    else if (key == "n_continuous")
      n_continuous = as_size(v, key);
    else if (key == "n_categorical")
      n_categorical = as_size(v, key);
    else if (key == "fraud_rate")
      fraud_rate = as_real(v, key);
    else if (key == "csv_path")
      csv_path = as_string(v, key);
    else if (key == "schema_path")
      schema_path = as_string(v, key);
    else if (key == "test_fraction")
      test_fraction = as_real(v, key);
    else if (key == "balance_cap")
      balance_cap = as_size(v, key);
    else if (key == "dt_max_depth")
      dt_max_depth = as_size(v, key);
    else if (key == "dt_min_leaf")
      dt_min_leaf = as_size(v, key);
    else if (key == "rf_trees")
      rf_trees = as_size(v, key);
    else if (key == "rf_max_depth")
      rf_max_depth = as_size(v, key);
    else if (key == "gb_rounds")
      gb_rounds = as_size(v, key);
    else if (key == "gb_max_depth")
      gb_max_depth = as_size(v, key);
    else if (key == "gb_learning_rate")
      gb_learning_rate = as_real(v, key);
    else if (key == "smote_k")
      smote_k = as_size(v, key);
    else if (key == "gan_epochs")
      gan_epochs = as_size(v, key);
    else if (key == "gan_batch")
      gan_batch = as_size(v, key);
    else if (key == "gan_gen_dims")
      gan_gen_dims = as_dims(v, key);
    else if (key == "gan_disc_dims")
      gan_disc_dims = as_dims(v, key);
    else if (key == "gan_noise_dim")
      gan_noise_dim = as_size(v, key);
    else if (key == "gan_learning_rate")
      gan_learning_rate = as_real(v, key);
    else if (key == "gan_labeling")
      gan_labeling = as_string(v, key);
    else if (key == "gan_samples")
      gan_samples = as_size(v, key);
    else if (key == "faces_dir")
      faces_dir = as_string(v, key);
    else if (key == "faces_manifest")
      faces_manifest = as_string(v, key);
    else if (key == "cnn_epochs")
      cnn_epochs = as_size(v, key);
    else if (key == "cnn_batch")
      cnn_batch = as_size(v, key);
    else if (key == "cnn_learning_rate")
      cnn_learning_rate = as_real(v, key);
    else if (key == "mask_threshold")
      mask_threshold = as_real(v, key);
    else if (key == "lambda_orig")
      lambda_orig = as_real(v, key);
    else if (key == "attack_method")
      attack_method = as_string(v, key);
    else if (key == "target_rule")
      target_rule = as_string(v, key);
    else if (key == "target_class")
      target_class = static_cast<int>(as_size(v, key));
    else if (key == "epsilon")
      epsilon = as_real(v, key);
    else if (key == "attack_steps")
      attack_steps = as_size(v, key);
    else if (key == "attack_step_size")
      attack_step_size = as_real(v, key);
    else if (key == "cw_steps")
      cw_steps = as_size(v, key);
    else if (key == "cw_step_size")
      cw_step_size = as_real(v, key);
    else if (key == "cw_c")
      cw_c = as_real(v, key);
    else if (key == "cw_kappa")
      cw_kappa = as_real(v, key);
    else if (key == "cw_norm")
      cw_norm = as_string(v, key);
    else
      throw ValidationError("config: unknown key \"" + key + "\"");
  }
}

RunConfig RunConfig::from_json_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("config: cannot open " + path);
  ordered_json j;
  try {
    is >> j;
  } catch (const ordered_json::parse_error& e) {
    throw ValidationError("config: " + path + ": " + e.what());
  }
  RunConfig cfg;
  cfg.apply_json(j);
  return cfg;
}

ordered_json RunConfig::to_json() const {
  ordered_json j;
  j["seed"] = seed;
  j["out_dir"] = out_dir;
  j["rows"] = rows;
  j["n_continuous"] = n_continuous;
  j["n_categorical"] = n_categorical;
  j["fraud_rate"] = fraud_rate;
  j["csv_path"] = csv_path;
  j["schema_path"] = schema_path;
  j["test_fraction"] = test_fraction;
  j["balance_cap"] = balance_cap;
  j["dt_max_depth"] = dt_max_depth;
  j["dt_min_leaf"] = dt_min_leaf;
  j["rf_trees"] = rf_trees;
  j["rf_max_depth"] = rf_max_depth;
  j["gb_rounds"] = gb_rounds;
  j["gb_max_depth"] = gb_max_depth;
  j["gb_learning_rate"] = gb_learning_rate;
  j["smote_k"] = smote_k;
  j["gan_epochs"] = gan_epochs;
  j["gan_batch"] = gan_batch;
  j["gan_gen_dims"] = gan_gen_dims;
  j["gan_disc_dims"] = gan_disc_dims;
  j["gan_noise_dim"] = gan_noise_dim;
  j["gan_learning_rate"] = gan_learning_rate;
  j["gan_labeling"] = gan_labeling;
  j["gan_samples"] = gan_samples;
  j["faces_dir"] = faces_dir;
  j["faces_manifest"] = faces_manifest;
  j["cnn_epochs"] = cnn_epochs;
  j["cnn_batch"] = cnn_batch;
  j["cnn_learning_rate"] = cnn_learning_rate;
  j["mask_threshold"] = mask_threshold;
  j["lambda_orig"] = lambda_orig;
  j["attack_method"] = attack_method;
  j["target_rule"] = target_rule;
  j["target_class"] = target_class;
  j["epsilon"] = epsilon;
  j["attack_steps"] = attack_steps;
  j["attack_step_size"] = attack_step_size;
  j["cw_steps"] = cw_steps;
  j["cw_step_size"] = cw_step_size;
  j["cw_c"] = cw_c;
  j["cw_kappa"] = cw_kappa;
  j["cw_norm"] = cw_norm;
  return j;
}

std::string RunConfig::hash() const {
  const std::string canon = to_json().dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace advforge::cli
