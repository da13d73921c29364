// advforge command-line driver: stages both attack pipelines over on-disk
// artifacts under --out-dir, plus a `demo` that chains them end to end.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "advforge/attacks.hpp"
#include "advforge/ctgan.hpp"
#include "advforge/error.hpp"
#include "advforge/metrics.hpp"
#include "advforge/pgm.hpp"
#include "advforge/rng.hpp"
#include "advforge/smote.hpp"
#include "advforge/tabular.hpp"
#include "advforge/trees.hpp"
#include "advforge/vision.hpp"
#include "json.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace advforge;
using cli::RunConfig;

namespace {

constexpr const char* kToolVersion = "0.1.0";

// Distinct stream tags so stages draw independent seeds from the global one.
enum SeedTag : std::uint64_t {
  kSeedBalance = 1,
  kSeedSplit = 2,
  kSeedDt = 3,
  kSeedRf = 4,
  kSeedGb = 5,
  kSeedSmote = 6,
  kSeedGan = 7,
  kSeedGanSample = 8,
  kSeedMix = 9,
  kSeedAttack = 11,
};

// ---- artifact layout ------------------------------------------------------

struct Paths {
  fs::path root;
  explicit Paths(const std::string& out_dir) : root(out_dir) {}

  fs::path data_dir() const { return root / "data"; }
  fs::path table() const { return data_dir() / "table.json"; }
  fs::path data_csv() const { return data_dir() / "data.csv"; }
  fs::path schema() const { return data_dir() / "schema.json"; }

  fs::path tab_dir() const { return root / "tabular"; }
  fs::path train_table() const { return tab_dir() / "train.json"; }
  fs::path test_table() const { return tab_dir() / "test.json"; }
  fs::path model(const char* stem) const { return tab_dir() / (std::string(stem) + ".model"); }
  fs::path boundary() const { return tab_dir() / "boundary.json"; }
  fs::path boundary_csv() const { return tab_dir() / "boundary.csv"; }
  fs::path smote_table() const { return tab_dir() / "smote.json"; }
  fs::path gan_params() const { return tab_dir() / "gan.advf"; }
  fs::path gan_meta() const { return tab_dir() / "gan.json"; }
  fs::path gan_rows() const { return tab_dir() / "gan_rows.json"; }
  fs::path attack_set() const { return tab_dir() / "attack_set.json"; }
  fs::path attack_set_csv() const { return tab_dir() / "attack_set.csv"; }

  fs::path vis_dir() const { return root / "vision"; }
  fs::path cnn_params() const { return vis_dir() / "cnn.advf"; }
  fs::path cnn_meta() const { return vis_dir() / "cnn.json"; }
  fs::path face_test_dir() const { return vis_dir() / "test"; }
  fs::path face_test_manifest() const { return face_test_dir() / "manifest.csv"; }
  fs::path results_jsonl() const { return vis_dir() / "results.jsonl"; }
  fs::path samples_dir() const { return vis_dir() / "samples"; }
  fs::path gradcam_dir() const { return vis_dir() / "gradcam"; }
  fs::path attack_dir() const { return vis_dir() / "attack"; }

  std::string rel(const fs::path& p) const { return fs::relative(p, root).string(); }
};

void require_artifact(const fs::path& p, const std::string& producer) {
  if (!fs::exists(p))
    throw ValidationError("missing artifact " + p.string() + "; run `advforge " + producer +
                          "` first");
}

void require_input_file(const std::string& p, const std::string& flag) {
  require(!p.empty(), "required flag " + flag + " not set");
  if (!fs::exists(p)) throw ValidationError("input file " + p + " does not exist");
}

// manifest.json: config hash + versions per command, idempotent on rerun.
void record_manifest(const Paths& paths, const RunConfig& cfg, const std::string& command,
                     const std::vector<std::string>& files) {
  const fs::path mpath = paths.root / "manifest.json";
  ordered_json m;
  if (fs::exists(mpath)) {
    std::ifstream is(mpath, std::ios::binary);
    try {
      is >> m;
    } catch (const ordered_json::parse_error&) {
      m = ordered_json();
    }
  }
  if (!m.is_object() || !m.contains("runs") || !m["runs"].is_array()) {
    m = ordered_json();
    m["tool"] = "advforge";
    m["version"] = kToolVersion;
    m["formats"] = ordered_json{{"advf", 1}, {"model", 1}, {"report", 1}};
    m["runs"] = ordered_json::array();
  }
  ordered_json run;
  run["command"] = command;
  run["config_hash"] = cfg.hash();
  run["seed"] = cfg.seed;
  run["files"] = files;
  bool replaced = false;
  for (auto& r : m["runs"])
    if (r.is_object() && r.value("command", "") == command) {
      r = run;
      replaced = true;
      break;
    }
  if (!replaced) m["runs"].push_back(run);

  std::ofstream os(mpath, std::ios::binary);
  if (!os) throw RuntimeError("cannot write " + mpath.string());
  os << m.dump(2) << '\n';
}

// ---- small shared helpers -------------------------------------------------

double table_accuracy(const TreeEnsembleModel& model, const Table& t) {
  const auto preds = hard_predictions(predict_proba(model, t));
  const auto labels = t.labels();
  std::size_t hit = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hit += preds[i] == labels[i];
  return preds.empty() ? 0.0 : double(hit) / double(preds.size());
}

VisionAttackMethod parse_method(const std::string& s) {
  if (s == "fgsm") return VisionAttackMethod::fgsm;
  if (s == "targeted") return VisionAttackMethod::targeted;
  if (s == "cw") return VisionAttackMethod::cw;
  throw ValidationError("unknown attack method \"" + s + "\" (fgsm|targeted|cw)");
}

TargetRule parse_rule(const std::string& s) {
  if (s == "next-class") return TargetRule::next_class;
  if (s == "fixed") return TargetRule::fixed;
  if (s == "random-seeded") return TargetRule::random_seeded;
  throw ValidationError("unknown target rule \"" + s + "\" (next-class|fixed|random-seeded)");
}

GanLabeling parse_labeling(const std::string& s) {
  if (s == "carry") return GanLabeling::carry;
  if (s == "boundary-truth") return GanLabeling::boundary_truth;
  throw ValidationError("unknown gan labeling \"" + s + "\" (carry|boundary-truth)");
}

DeltaNorm parse_norm(const std::string& s) {
  if (s == "l2") return DeltaNorm::l2;
  if (s == "linf") return DeltaNorm::linf;
  throw ValidationError("unknown cw norm \"" + s + "\" (l2|linf)");
}

AttackParams attack_params(const RunConfig& cfg, VisionAttackMethod method) {
  AttackParams p;
  p.epsilon = cfg.epsilon;
  p.target_class = cfg.target_class;
  if (method == VisionAttackMethod::cw) {
    p.steps = cfg.cw_steps;
    p.step_size = cfg.cw_step_size;
    p.c = cfg.cw_c;
    p.kappa = cfg.cw_kappa;
    p.norm = parse_norm(cfg.cw_norm);
  } else {
    p.steps = cfg.attack_steps;
    p.step_size = cfg.attack_step_size;
  }
  return p;
}

CnnModel load_cnn_artifacts(const Paths& paths) {
  require_artifact(paths.cnn_params(), "vision train");
  require_artifact(paths.cnn_meta(), "vision train");
  return load_cnn(paths.cnn_params().string(), paths.cnn_meta().string());
}

FaceDataset load_face_test_set(const Paths& paths) {
  require_artifact(paths.face_test_manifest(), "vision train");
  return load_faces(paths.face_test_dir().string(), paths.face_test_manifest().string());
}

// Deltas live in [-1,1]; render them centered on mid-gray.
void export_delta_pgm(const TensorPtr& delta, const std::string& path) {
  std::vector<double> shifted(delta->data.size());
  for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] = delta->data[i] * 0.5 + 0.5;
  write_gray_pgm(shifted, kFaceDim, kFaceDim, path);
}

MetricsBundle bundle_from_json(const ordered_json& b) {
  MetricsBundle m;
  m.accuracy = b.at("accuracy").get<double>();
  m.precision = b.at("precision").get<double>();
  m.recall = b.at("recall").get<double>();
  m.auc_defined = !b.at("auc").is_null();
  m.auc = m.auc_defined ? b.at("auc").get<double>() : 0.0;
  m.counts.tp = b.at("tp").get<std::uint64_t>();
  m.counts.tn = b.at("tn").get<std::uint64_t>();
  m.counts.fp = b.at("fp").get<std::uint64_t>();
  m.counts.fn = b.at("fn").get<std::uint64_t>();
  return m;
}

std::vector<AttackReport> reports_from_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw RuntimeError("cannot read " + path.string());
  ordered_json j;
  try {
    is >> j;
  } catch (const ordered_json::parse_error& e) {
    throw RuntimeError(path.string() + ": " + e.what());
  }
  std::vector<AttackReport> out;
  for (const auto& e : j.at("reports")) {
    AttackReport r;
    r.model = e.at("model").get<std::string>();
    r.timestamp = e.at("timestamp").get<std::string>();
    for (const auto& [k, v] : e.at("attack").items())
      r.attack_config.emplace_back(k, v.get<std::string>());
    r.before = bundle_from_json(e.at("before"));
    r.after = bundle_from_json(e.at("after"));
    out.push_back(std::move(r));
  }
  return out;
}

// ---- tabular stages -------------------------------------------------------

void h_data_synth(const RunConfig& cfg) {
  Paths paths(cfg.out_dir);
  fs::create_directories(paths.data_dir());
  Table t = synth_fraud(cfg.rows, cfg.n_continuous, cfg.n_categorical, cfg.fraud_rate, cfg.seed);
  t.to_json_file(paths.table().string());
  write_csv(t, paths.data_csv().string());
  t.schema.to_json_file(paths.schema().string());
  const auto [zeros, ones] = t.class_counts();
  std::printf("data synth: %zu rows (%zu clean, %zu fraud) -> %s\n", t.row_count(), zeros, ones,
              paths.data_dir().string().c_str());
  record_manifest(paths, cfg, "data synth",
                  {paths.rel(paths.table()), paths.rel(paths.data_csv()),
                   paths.rel(paths.schema())});
}

void h_data_load(const RunConfig& cfg) {
  Paths paths(cfg.out_dir);
  require_input_file(cfg.schema_path, "--schema");
  require_input_file(cfg.csv_path, "--csv");
  fs::create_directories(paths.data_dir());
  Schema schema = Schema::from_json_file(cfg.schema_path);
  Table t = load_csv(cfg.csv_path, schema);
  if (!t.encoded()) t = label_encode(t).first;
  t.to_json_file(paths.table().string());
  write_csv(t, paths.data_csv().string());
  t.schema.to_json_file(paths.schema().string());
  const auto [zeros, ones] = t.class_counts();
  std::printf("data load: %zu rows (%zu clean, %zu fraud) from %s\n", t.row_count(), zeros, ones,
              cfg.csv_path.c_str());
  record_manifest(paths, cfg, "data load",
                  {paths.rel(paths.table()), paths.rel(paths.data_csv()),
                   paths.rel(paths.schema())});
}

void h_tabular_train(const RunConfig& cfg) {
  Paths paths(cfg.out_dir);
  require_artifact(paths.table(), "data synth");
  Table t = Table::from_json_file(paths.table().string());
  Table balanced = balance_classes(t, Rng::derive(cfg.seed, kSeedBalance), cfg.balance_cap);
  auto [train, test] = train_test_split(balanced, cfg.test_fraction,
                                        Rng::derive(cfg.seed, kSeedSplit));

  auto dt = train_decision_tree(train, cfg.dt_max_depth, cfg.dt_min_leaf,
                                Rng::derive(cfg.seed, kSeedDt));
  auto rf = train_random_forest(train, cfg.rf_trees, cfg.rf_max_depth,
                                Rng::derive(cfg.seed, kSeedRf));
  auto gb = train_gradient_boosting(train, cfg.gb_rounds, cfg.gb_max_depth, cfg.gb_learning_rate,
                                    Rng::derive(cfg.seed, kSeedGb));

  fs::create_directories(paths.tab_dir());
  train.to_json_file(paths.train_table().string());
  test.to_json_file(paths.test_table().string());
  save_model(dt, paths.model("dt").string());
  save_model(rf, paths.model("rf").string());
  save_model(gb, paths.model("gb").string());

  std::printf("tabular train: %zu train / %zu test rows\n", train.row_count(), test.row_count());
  std::printf("  decision_tree     test accuracy %.4f\n", table_accuracy(dt, test));
  std::printf("  random_forest     test accuracy %.4f\n", table_accuracy(rf, test));
  std::printf("  gradient_boosting test accuracy %.4f\n", table_accuracy(gb, test));
  record_manifest(paths, cfg, "tabular train",
                  {paths.rel(paths.train_table()), paths.rel(paths.test_table()),
                   paths.rel(paths.model("dt")), paths.rel(paths.model("rf")),
                   paths.rel(paths.model("gb"))});
}

void h_tabular_boundary(const RunConfig& cfg) {
  Paths paths(cfg.out_dir);
  for (const char* stem : {"dt", "rf", "gb"}) require_artifact(paths.model(stem), "tabular train");
  require_artifact(paths.test_table(), "tabular train");
  auto dt = load_model(paths.model("dt").string());
  auto rf = load_model(paths.model("rf").string());
  auto gb = load_model(paths.model("gb").string());
  Table test = Table::from_json_file(paths.test_table().string());

  BoundarySet boundary = find_boundary_points(dt, rf, gb, test);
  boundary.table.to_json_file(paths.boundary().string());
  write_csv(boundary.table, paths.boundary_csv().string());
  std::printf("tabular boundary: %zu points (%zu fraud, %zu clean) of %zu test rows\n",
              boundary.table.row_count(), boundary.fraud_count, boundary.clean_count,
              test.row_count());
  record_manifest(paths, cfg, "tabular boundary",
                  {paths.rel(paths.boundary()), paths.rel(paths.boundary_csv())});
}

void h_tabular_smote(const RunConfig& cfg) {
  Paths paths(cfg.out_dir);
  require_artifact(paths.boundary(), "tabular boundary");
  Table boundary = Table::from_json_file(paths.boundary().string());

  const auto [zeros, ones] = boundary.class_counts();
  const std::size_t minority = std::min(zeros, ones);
  require(minority >= 2, "smote needs at least 2 minority rows, boundary set has " +
                             std::to_string(minority));
  SmoteConfig sc;
  sc.k = cfg.smote_k;
  sc.seed = Rng::derive(cfg.seed, kSeedSmote);
  if (sc.k > minority - 1) {
    sc.k = minority - 1;
    std::fprintf(stderr, "warning: smote k reduced to %zu (minority class has %zu rows)\n", sc.k,
                 minority);
  }

  Table out = smote(boundary, sc);
  out.to_json_file(paths.smote_table().string());
  const auto [z2, o2] = out.class_counts();
  std::printf("tabular smote: %zu -> %zu rows (%zu clean, %zu fraud), k=%zu\n",
              boundary.row_count(), out.row_count(), z2, o2, sc.k);
  record_manifest(paths, cfg, "tabular smote", {paths.rel(paths.smote_table())});
}

void h_tabular_gan_train(const RunConfig& cfg) {
  Paths paths(cfg.out_dir);
  require_artifact(paths.boundary(), "tabular boundary");
  Table boundary = Table::from_json_file(paths.boundary().string());

  GanConfig gc;
  gc.epochs = cfg.gan_epochs;
  gc.batch = cfg.gan_batch;
  gc.gen_dims = cfg.gan_gen_dims;
  gc.disc_dims = cfg.gan_disc_dims;
  gc.noise_dim = cfg.gan_noise_dim;
  gc.learning_rate = cfg.gan_learning_rate;
  gc.seed = Rng::derive(cfg.seed, kSeedGan);

  GanModel gan = train_tabular_gan(boundary, gc);
  save_gan(gan, paths.gan_params().string(), paths.gan_meta().string());
  std::printf("tabular gan-train: %zu epochs on %zu rows, final losses disc %.4f gen %.4f\n",
              gc.epochs, boundary.row_count(), gan.disc_loss.back(), gan.gen_loss.back());
  record_manifest(paths, cfg, "tabular gan-train",
                  {paths.rel(paths.gan_params()), paths.rel(paths.gan_meta())});
}

void h_tabular_gan_sample(const RunConfig& cfg) {
  Paths paths(cfg.out_dir);
  require_artifact(paths.gan_params(), "tabular gan-train");
  require_artifact(paths.gan_meta(), "tabular gan-train");
  GanModel gan = load_gan(paths.gan_params().string(), paths.gan_meta().string());

  std::size_t n = cfg.gan_samples;
  if (n == 0) {
    require_artifact(paths.smote_table(), "tabular smote");
    n = Table::from_json_file(paths.smote_table().string()).row_count();
  }
  Table rows = sample_gan(gan, n, Rng::derive(cfg.seed, kSeedGanSample));
  rows.to_json_file(paths.gan_rows().string());
  std::printf("tabular gan-sample: %zu rows\n", rows.row_count());
  record_manifest(paths, cfg, "tabular gan-sample", {paths.rel(paths.gan_rows())});
}

void h_tabular_attack_eval(const RunConfig& cfg) {
  Paths paths(cfg.out_dir);
  for (const char* stem : {"dt", "rf", "gb"}) require_artifact(paths.model(stem), "tabular train");
  require_artifact(paths.test_table(), "tabular train");
  require_artifact(paths.smote_table(), "tabular smote");
  require_artifact(paths.gan_rows(), "tabular gan-sample");

  auto dt = load_model(paths.model("dt").string());
  auto rf = load_model(paths.model("rf").string());
  auto gb = load_model(paths.model("gb").string());
  Table test = Table::from_json_file(paths.test_table().string());
  Table smote_out = Table::from_json_file(paths.smote_table().string());
  Table gan_rows = Table::from_json_file(paths.gan_rows().string());

  AttackSet set = build_attack_set(smote_out, gan_rows, parse_labeling(cfg.gan_labeling),
                                   Rng::derive(cfg.seed, kSeedMix));
  save_attack_set(set, paths.attack_set().string());
  write_attack_csv(set, paths.attack_set_csv().string());

  auto reports = evaluate_tabular_attack(dt, rf, gb, test, set.table);
  write_report(reports, paths.tab_dir().string());
  std::printf("tabular attack-eval: %zu attack rows\n", set.table.row_count());
  for (const auto& r : reports)
    std::printf("  %-17s accuracy %.4f -> %.4f\n", r.model.c_str(), r.before.accuracy,
                r.after.accuracy);
  record_manifest(paths, cfg, "tabular attack-eval",
                  {paths.rel(paths.attack_set()), paths.rel(paths.attack_set_csv()),
                   paths.rel(paths.tab_dir() / "report.json"),
                   paths.rel(paths.tab_dir() / "summary.csv")});
}

// ---- vision stages --------------------------------------------------------

void h_vision_train(const RunConfig& cfg) {
  Paths paths(cfg.out_dir);
  FaceDataset faces;
  if (!cfg.faces_dir.empty() || !cfg.faces_manifest.empty()) {
    require(!cfg.faces_dir.empty() && !cfg.faces_manifest.empty(),
            "loading faces requires both --faces-dir and --faces-manifest");
    require_input_file(cfg.faces_manifest, "--faces-manifest");
    faces = load_faces(cfg.faces_dir, cfg.faces_manifest);
  } else {
    faces = synth_faces(cfg.seed);
  }
  auto [train, test] = split_faces(faces);

  CnnConfig cc;
  cc.epochs = cfg.cnn_epochs;
  cc.batch = cfg.cnn_batch;
  cc.learning_rate = cfg.cnn_learning_rate;
  cc.seed = cfg.seed;
  CnnModel model = train_cnn(train, cc);

  fs::create_directories(paths.face_test_dir());
  save_cnn(model, paths.cnn_params().string(), paths.cnn_meta().string());

  std::vector<std::string> files = {paths.rel(paths.cnn_params()), paths.rel(paths.cnn_meta()),
                                    paths.rel(paths.face_test_manifest())};
  std::ofstream manifest(paths.face_test_manifest(), std::ios::binary);
  if (!manifest) throw RuntimeError("cannot write " + paths.face_test_manifest().string());
  manifest << "filename,label\n";
  for (std::size_t i = 0; i < test.images.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "face_%03zu.pgm", i);
    write_face_pgm(test.images[i], (paths.face_test_dir() / name).string());
    manifest << name << ',' << test.labels[i] << '\n';
    files.push_back(paths.rel(paths.face_test_dir() / name));
  }
  if (!manifest) throw RuntimeError("write failed: " + paths.face_test_manifest().string());

  const auto preds = predict_all(model, test);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hit += preds[i] == test.labels[i];
  std::printf("vision train: %zu train / %zu test faces, final train accuracy %.4f, "
              "clean test accuracy %.4f\n",
              train.images.size(), test.images.size(), model.train_accuracy.back(),
              double(hit) / double(preds.size()));
  record_manifest(paths, cfg, "vision train", files);
}

// Shared image selection for `vision gradcam` and `vision attack`.
struct ImagePick {
  TensorPtr image;
  int label = -1;
};

ImagePick pick_image(const Paths& paths, const std::string& image_path, int label_flag,
                     std::size_t index) {
  ImagePick pick;
  if (!image_path.empty()) {
    require_input_file(image_path, "--image");
    require(label_flag >= 0, "--image requires --label (the image's true class)");
    pick.image = read_face_pgm(image_path);
    pick.label = label_flag;
  } else {
    FaceDataset test = load_face_test_set(paths);
    require(index < test.images.size(),
            "--index " + std::to_string(index) + " out of range (test set has " +
                std::to_string(test.images.size()) + " images)");
    pick.image = test.images[index];
    pick.label = label_flag >= 0 ? label_flag : test.labels[index];
  }
  return pick;
}

void h_vision_gradcam(const RunConfig& cfg, const std::string& image_path, int label_flag,
                      std::size_t index) {
  Paths paths(cfg.out_dir);
  CnnModel model = load_cnn_artifacts(paths);
  ImagePick pick = pick_image(paths, image_path, label_flag, index);

  Heatmap h = gradcam(model, pick.image, pick.label);
  BinaryMask mask = threshold_mask(h, cfg.mask_threshold);
  fs::create_directories(paths.gradcam_dir());
  write_face_pgm(pick.image, (paths.gradcam_dir() / "source.pgm").string());
  write_heatmap_pgm(h, (paths.gradcam_dir() / "heatmap.pgm").string());
  write_mask_pgm(mask, (paths.gradcam_dir() / "mask.pgm").string());

  std::size_t on = 0;
  for (double v : mask.values) on += v == 1.0;
  std::printf("vision gradcam: class %d, %zu/%zu mask pixels on at threshold %g\n", pick.label,
              on, mask.values.size(), cfg.mask_threshold);
  record_manifest(paths, cfg, "vision gradcam",
                  {paths.rel(paths.gradcam_dir() / "source.pgm"),
                   paths.rel(paths.gradcam_dir() / "heatmap.pgm"),
                   paths.rel(paths.gradcam_dir() / "mask.pgm")});
}

void h_vision_attack(const RunConfig& cfg, const std::string& image_path, int label_flag,
                     std::size_t index) {
  Paths paths(cfg.out_dir);
  CnnModel model = load_cnn_artifacts(paths);
  ImagePick pick = pick_image(paths, image_path, label_flag, index);
  const VisionAttackMethod method = parse_method(cfg.attack_method);

  FaceDataset one;
  one.images.push_back(pick.image);
  one.labels.push_back(pick.label);
  auto ev = evaluate_vision_attack(model, one, method, attack_params(cfg, method),
                                   parse_rule(cfg.target_rule),
                                   Rng::derive(cfg.seed, kSeedAttack), cfg.mask_threshold,
                                   cfg.lambda_orig);

  fs::create_directories(paths.attack_dir());
  write_report({ev.report}, paths.attack_dir().string());
  const auto& r = ev.results[0];
  write_face_pgm(r.original, (paths.attack_dir() / "original.pgm").string());
  write_face_pgm(r.perturbed, (paths.attack_dir() / "perturbed.pgm").string());
  export_delta_pgm(r.delta, (paths.attack_dir() / "delta.pgm").string());
  std::vector<std::string> files = {
      paths.rel(paths.attack_dir() / "report.json"), paths.rel(paths.attack_dir() / "summary.csv"),
      paths.rel(paths.attack_dir() / "original.pgm"),
      paths.rel(paths.attack_dir() / "perturbed.pgm"),
      paths.rel(paths.attack_dir() / "delta.pgm"), paths.rel(paths.attack_dir() / "result.jsonl")};
  if (!ev.masks.empty()) {
    write_mask_pgm(ev.masks[0], (paths.attack_dir() / "mask.pgm").string());
    files.push_back(paths.rel(paths.attack_dir() / "mask.pgm"));
  }
  write_vision_results_jsonl(ev.results, one.labels, (paths.attack_dir() / "result.jsonl").string());

  std::printf("vision attack (%s): true %d, prediction %d -> %d, target %d, %s\n",
              cfg.attack_method.c_str(), pick.label, r.prediction_before, r.prediction_after,
              ev.targets[0], r.success ? "success" : "no flip");
  record_manifest(paths, cfg, "vision attack", files);
}

void h_vision_attack_eval(const RunConfig& cfg) {
  Paths paths(cfg.out_dir);
  CnnModel model = load_cnn_artifacts(paths);
  FaceDataset test = load_face_test_set(paths);
  const VisionAttackMethod method = parse_method(cfg.attack_method);

  auto ev = evaluate_vision_attack(model, test, method, attack_params(cfg, method),
                                   parse_rule(cfg.target_rule),
                                   Rng::derive(cfg.seed, kSeedAttack), cfg.mask_threshold,
                                   cfg.lambda_orig);

  write_report({ev.report}, paths.vis_dir().string());
  write_vision_results_jsonl(ev.results, test.labels, paths.results_jsonl().string());
  fs::create_directories(paths.samples_dir());
  std::vector<std::string> files = {paths.rel(paths.vis_dir() / "report.json"),
                                    paths.rel(paths.vis_dir() / "summary.csv"),
                                    paths.rel(paths.results_jsonl())};
  const std::size_t n_samples = std::min<std::size_t>(4, ev.results.size());
  for (std::size_t i = 0; i < n_samples; ++i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "img%zu", i);
    const auto base = paths.samples_dir() / stem;
    write_face_pgm(ev.results[i].original, base.string() + "_original.pgm");
    write_face_pgm(ev.results[i].perturbed, base.string() + "_perturbed.pgm");
    export_delta_pgm(ev.results[i].delta, base.string() + "_delta.pgm");
    files.push_back(paths.rel(base) + "_original.pgm");
    files.push_back(paths.rel(base) + "_perturbed.pgm");
    files.push_back(paths.rel(base) + "_delta.pgm");
    if (!ev.masks.empty()) {
      write_mask_pgm(ev.masks[i], base.string() + "_mask.pgm");
      files.push_back(paths.rel(base) + "_mask.pgm");
    }
  }

  std::printf("vision attack-eval (%s): accuracy %.4f -> %.4f, success rate %.4f on %zu images\n",
              cfg.attack_method.c_str(), ev.report.before.accuracy, ev.report.after.accuracy,
              ev.success_rate, ev.results.size());
  record_manifest(paths, cfg, "vision attack-eval", files);
}

// ---- report + demo --------------------------------------------------------

void h_report(const RunConfig& cfg) {
  Paths paths(cfg.out_dir);
  std::vector<AttackReport> merged;
  const fs::path tab = paths.tab_dir() / "report.json";
  const fs::path vis = paths.vis_dir() / "report.json";
  if (fs::exists(tab))
    for (auto& r : reports_from_file(tab)) merged.push_back(std::move(r));
  if (fs::exists(vis))
    for (auto& r : reports_from_file(vis)) merged.push_back(std::move(r));
  require(!merged.empty(),
          "no stage reports found; run `advforge tabular attack-eval` or `advforge vision "
          "attack-eval` first");
  write_report(merged, paths.root.string());
  std::printf("report: merged %zu entries -> %s\n", merged.size(),
              (paths.root / "report.json").string().c_str());
  record_manifest(paths, cfg, "report", {"report.json", "summary.csv"});
}

void h_demo(const RunConfig& cfg) {
  std::printf("demo: seed %llu, out_dir %s\n", (unsigned long long)cfg.seed,
              cfg.out_dir.c_str());
  h_data_synth(cfg);
  h_tabular_train(cfg);
  h_tabular_boundary(cfg);
  h_tabular_smote(cfg);
  h_tabular_gan_train(cfg);
  h_tabular_gan_sample(cfg);
  h_tabular_attack_eval(cfg);
  h_vision_train(cfg);
  h_vision_attack_eval(cfg);
  h_report(cfg);
  std::printf("demo: complete\n");
}

std::string find_config_flag(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--config") return argv[i + 1];
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  try {
    const std::string config_path = find_config_flag(argc, argv);
    if (!config_path.empty()) cfg = RunConfig::from_json_file(config_path);
    if (const char* env = std::getenv("ADVFORGE_SEED")) {
      try {
        cfg.seed = std::stoull(env);
      } catch (const std::exception&) {
        std::fprintf(stderr, "error: ADVFORGE_SEED=\"%s\" is not an integer\n", env);
        return 1;
      }
    }
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }

  CLI::App app{"adversarial-attack toolkit: tabular GAN+SMOTE and CNN gradient attacks"};
  app.require_subcommand(1);
  app.fallthrough();  // let --seed/--out-dir/--config follow the subcommand name
  std::string config_path_flag;  // consumed in the pre-pass above
  app.add_option("--config", config_path_flag, "JSON run configuration (flags override it)");
  app.add_option("--out-dir", cfg.out_dir, "artifact directory");
  app.add_option("--seed", cfg.seed, "global seed (ADVFORGE_SEED overrides the config file)");

  // per-invocation selection for `vision gradcam` / `vision attack`
  std::string image_path;
  int label_flag = -1;
  std::size_t image_index = 0;

  std::function<void()> action;
  const auto bind = [&action](std::function<void()> f, CLI::App* sub) {
    sub->callback([&action, f] { action = f; });
  };

  auto* data = app.add_subcommand("data", "dataset creation");
  data->require_subcommand(1);
  auto* d_synth = data->add_subcommand("synth", "generate the fraud-style table");
  d_synth->add_option("--rows", cfg.rows, "row count");
  d_synth->add_option("--fraud-rate", cfg.fraud_rate, "positive-class rate");
  d_synth->add_option("--continuous", cfg.n_continuous, "continuous feature count");
  d_synth->add_option("--categorical", cfg.n_categorical, "categorical feature count");
  bind([&cfg] { h_data_synth(cfg); }, d_synth);
  auto* d_load = data->add_subcommand("load", "load a CSV with a schema");
  d_load->add_option("--csv", cfg.csv_path, "input CSV path");
  d_load->add_option("--schema", cfg.schema_path, "schema JSON path");
  bind([&cfg] { h_data_load(cfg); }, d_load);

  auto* tabular = app.add_subcommand("tabular", "fraud-model pipeline stages");
  tabular->require_subcommand(1);
  auto* t_train = tabular->add_subcommand("train", "balance, split, train the three models");
  t_train->add_option("--test-fraction", cfg.test_fraction, "held-out fraction");
  t_train->add_option("--balance-cap", cfg.balance_cap, "per-class row cap (0 = none)");
  t_train->add_option("--dt-max-depth", cfg.dt_max_depth, "decision tree depth");
  t_train->add_option("--dt-min-leaf", cfg.dt_min_leaf, "decision tree min leaf size");
  t_train->add_option("--rf-trees", cfg.rf_trees, "forest size");
  t_train->add_option("--rf-max-depth", cfg.rf_max_depth, "forest tree depth");
  t_train->add_option("--gb-rounds", cfg.gb_rounds, "boosting rounds");
  t_train->add_option("--gb-max-depth", cfg.gb_max_depth, "boosting tree depth");
  t_train->add_option("--gb-learning-rate", cfg.gb_learning_rate, "boosting shrinkage");
  bind([&cfg] { h_tabular_train(cfg); }, t_train);
  auto* t_boundary = tabular->add_subcommand("boundary", "collect jointly misclassified rows");
  bind([&cfg] { h_tabular_boundary(cfg); }, t_boundary);
  auto* t_smote = tabular->add_subcommand("smote", "oversample the boundary set");
  t_smote->add_option("--smote-k", cfg.smote_k, "neighbor count");
  bind([&cfg] { h_tabular_smote(cfg); }, t_smote);
  auto* t_gan = tabular->add_subcommand("gan-train", "train the tabular GAN on the boundary set");
  t_gan->add_option("--gan-epochs", cfg.gan_epochs, "epochs");
  t_gan->add_option("--gan-batch", cfg.gan_batch, "batch size");
  t_gan->add_option("--gan-noise-dim", cfg.gan_noise_dim, "latent width");
  t_gan->add_option("--gan-learning-rate", cfg.gan_learning_rate, "adam step");
  t_gan->add_option("--gan-gen-dims", cfg.gan_gen_dims, "generator hidden widths");
  t_gan->add_option("--gan-disc-dims", cfg.gan_disc_dims, "discriminator hidden widths");
  bind([&cfg] { h_tabular_gan_train(cfg); }, t_gan);
  auto* t_sample = tabular->add_subcommand("gan-sample", "draw synthetic rows from the GAN");
  t_sample->add_option("--n", cfg.gan_samples, "row count (0 = match the smote output)");
  bind([&cfg] { h_tabular_gan_sample(cfg); }, t_sample);
  auto* t_eval = tabular->add_subcommand("attack-eval", "score models before/after the attack set");
  t_eval->add_option("--gan-labeling", cfg.gan_labeling, "carry|boundary-truth");
  bind([&cfg] { h_tabular_attack_eval(cfg); }, t_eval);

  auto* vision = app.add_subcommand("vision", "face-recognizer pipeline stages");
  vision->require_subcommand(1);
  auto* v_train = vision->add_subcommand("train", "train the face CNN");
  v_train->add_option("--faces-dir", cfg.faces_dir, "PGM directory (default: synthetic faces)");
  v_train->add_option("--faces-manifest", cfg.faces_manifest, "filename,label manifest");
  v_train->add_option("--cnn-epochs", cfg.cnn_epochs, "epochs");
  v_train->add_option("--cnn-batch", cfg.cnn_batch, "batch size");
  v_train->add_option("--cnn-learning-rate", cfg.cnn_learning_rate, "adam step");
  bind([&cfg] { h_vision_train(cfg); }, v_train);
  auto* v_gradcam = vision->add_subcommand("gradcam", "heatmap + mask for one image");
  v_gradcam->add_option("--image", image_path, "64x64 PGM (default: saved test image)");
  v_gradcam->add_option("--label", label_flag, "class for the heatmap");
  v_gradcam->add_option("--index", image_index, "saved test-set index");
  v_gradcam->add_option("--threshold", cfg.mask_threshold, "mask threshold");
  bind([&] { h_vision_gradcam(cfg, image_path, label_flag, image_index); }, v_gradcam);
  auto* v_attack = vision->add_subcommand("attack", "attack one image");
  v_attack->add_option("--method", cfg.attack_method, "fgsm|targeted|cw");
  v_attack->add_option("--image", image_path, "64x64 PGM (default: saved test image)");
  v_attack->add_option("--label", label_flag, "true class of the image");
  v_attack->add_option("--index", image_index, "saved test-set index");
  v_attack->add_option("--epsilon", cfg.epsilon, "fgsm strength");
  v_attack->add_option("--steps", cfg.attack_steps, "iterative steps");
  v_attack->add_option("--step-size", cfg.attack_step_size, "iterative step size");
  v_attack->add_option("--target-rule", cfg.target_rule, "next-class|fixed|random-seeded");
  v_attack->add_option("--target-class", cfg.target_class, "fixed-rule target");
  v_attack->add_option("--threshold", cfg.mask_threshold, "mask threshold");
  v_attack->add_option("--lambda", cfg.lambda_orig, "weight of the away-from-original term");
  v_attack->add_option("--cw-c", cfg.cw_c, "cw trade-off constant");
  v_attack->add_option("--cw-kappa", cfg.cw_kappa, "cw confidence margin");
  v_attack->add_option("--cw-steps", cfg.cw_steps, "cw steps");
  v_attack->add_option("--cw-step-size", cfg.cw_step_size, "cw step size");
  bind([&] { h_vision_attack(cfg, image_path, label_flag, image_index); }, v_attack);
  auto* v_eval = vision->add_subcommand("attack-eval", "attack the whole test set");
  v_eval->add_option("--method", cfg.attack_method, "fgsm|targeted|cw");
  v_eval->add_option("--epsilon", cfg.epsilon, "fgsm strength");
  v_eval->add_option("--steps", cfg.attack_steps, "iterative steps");
  v_eval->add_option("--step-size", cfg.attack_step_size, "iterative step size");
  v_eval->add_option("--target-rule", cfg.target_rule, "next-class|fixed|random-seeded");
  v_eval->add_option("--target-class", cfg.target_class, "fixed-rule target");
  v_eval->add_option("--threshold", cfg.mask_threshold, "mask threshold");
  v_eval->add_option("--lambda", cfg.lambda_orig, "weight of the away-from-original term");
  v_eval->add_option("--cw-c", cfg.cw_c, "cw trade-off constant");
  v_eval->add_option("--cw-kappa", cfg.cw_kappa, "cw confidence margin");
  v_eval->add_option("--cw-steps", cfg.cw_steps, "cw steps");
  v_eval->add_option("--cw-step-size", cfg.cw_step_size, "cw step size");
  bind([&cfg] { h_vision_attack_eval(cfg); }, v_eval);

  auto* report = app.add_subcommand("report", "merge stage reports into report.json/summary.csv");
  bind([&cfg] { h_report(cfg); }, report);
  auto* demo = app.add_subcommand("demo", "run both pipelines end to end");
  demo->add_option("--rows", cfg.rows, "fraud table rows");
  demo->add_option("--cnn-epochs", cfg.cnn_epochs, "cnn epochs");
  bind([&cfg] { h_demo(cfg); }, demo);

  try {
    app.parse(argc, argv);
    if (action) action();
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const RuntimeError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
