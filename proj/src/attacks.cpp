#include "advforge/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "advforge/error.hpp"
#include "advforge/kernels.hpp"
#include "advforge/params.hpp"
#include "advforge/rng.hpp"
#include "json_io.hpp"

namespace advforge {

namespace {

constexpr std::size_t kPixels = std::size_t(kFaceDim) * kFaceDim;

void require_attack_image(const TensorPtr& x, const char* who) {
  require(x != nullptr, std::string(who) + ": null image");
  require(x->shape == std::vector<std::size_t>{1, kFaceDim, kFaceDim},
          std::string(who) + ": image must be [1,64,64]");
  for (double v : x->data)
    require(v >= 0.0 && v <= 1.0, std::string(who) + ": pixel values must lie in [0,1]");
}

void require_class(int c, const char* who) {
  require(c >= 0 && c < kFaceClasses,
          std::string(who) + ": class " + std::to_string(c) + " out of range");
}

std::size_t argmax_index(const double* v, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

void fill_norms(AdversarialResult& r) {
  const std::size_t n = r.delta->size();
  r.l2 = std::sqrt(kernels::dot(r.delta->data.data(), r.delta->data.data(), n));
  r.linf = 0.0;
  for (double v : r.delta->data) r.linf = std::max(r.linf, std::fabs(v));
}

TensorPtr clamped_sum(const TensorPtr& x, const std::vector<double>& delta) {
  auto out = Tensor::make(x->shape);
  for (std::size_t i = 0; i < x->size(); ++i)
    out->data[i] = std::clamp(x->data[i] + delta[i], 0.0, 1.0);
  return out;
}

std::string format_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// Collapses the 40-way recognition task to correct-vs-incorrect so the attack
// report shares one metric layout with the tabular models: tp counts images
// recognized as their true identity, fn the rest. AUC stays undefined.
MetricsBundle recognition_bundle(const std::vector<int>& predictions,
                                 const std::vector<int>& labels) {
  ConfusionCounts counts;
  std::vector<double> scores(labels.size());
  std::vector<int> positives(labels.size(), 1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool hit = predictions[i] == labels[i];
    scores[i] = hit ? 1.0 : 0.0;
    if (hit)
      ++counts.tp;
    else
      ++counts.fn;
  }
  return compute_metrics(counts, scores, positives);
}

}  // namespace

AdversarialResult fgsm(const CnnModel& model, const TensorPtr& x, int true_label, double epsilon) {
  require_attack_image(x, "fgsm");
  require_class(true_label, "fgsm");
  require(epsilon >= 0.0, "fgsm: epsilon must be non-negative");

  AdversarialResult r;
  r.original = x;

  ScopedFreeze freeze(model.params);
  Tape tape;
  auto leaf = Tensor::from({1, 1, kFaceDim, kFaceDim}, x->data, true);
  auto fw = model.forward(tape, leaf);
  auto loss = tape.categorical_cross_entropy(fw.probs, std::vector<int>{true_label});
  tape.backward(loss);

  r.loss_trace.push_back(loss->data[0]);
  r.prediction_before = int(argmax_index(fw.probs->data.data(), kFaceClasses));
  r.delta = Tensor::make({1, kFaceDim, kFaceDim});
  for (std::size_t i = 0; i < kPixels; ++i) {
    const double g = leaf->grad[i];
    r.delta->data[i] = g > 0.0 ? epsilon : (g < 0.0 ? -epsilon : 0.0);
  }
  r.perturbed = clamped_sum(x, r.delta->data);
  r.prediction_after = model.predict(r.perturbed);
  r.success = r.prediction_after != true_label;
  fill_norms(r);
  return r;
}

AdversarialResult targeted_masked_attack(const CnnModel& model, const TensorPtr& base_image,
                                         const BinaryMask& mask, int original_class,
                                         int target_class, std::size_t steps, double step_size,
                                         double lambda_orig) {
  require_attack_image(base_image, "targeted_masked_attack");
  require_class(original_class, "targeted_masked_attack");
  require_class(target_class, "targeted_masked_attack");
  require(original_class != target_class,
          "targeted_masked_attack: target class equals original class");
  require(steps >= 1, "targeted_masked_attack: steps must be >= 1");
  require(step_size > 0.0, "targeted_masked_attack: step size must be positive");
  require(lambda_orig >= 0.0, "targeted_masked_attack: lambda_orig must be non-negative");
  require(mask.values.size() == kPixels, "targeted_masked_attack: mask must hold 64x64 entries");
  bool any_on = false;
  for (double v : mask.values) {
    require(v == 0.0 || v == 1.0, "targeted_masked_attack: mask entries must be 0 or 1");
    any_on = any_on || v == 1.0;
  }

  AdversarialResult r;
  r.original = base_image;
  r.prediction_before = model.predict(base_image);
  r.delta = Tensor::make({1, kFaceDim, kFaceDim});

  if (!any_on) {
    std::fprintf(stderr, "warning: all-zero attack mask; image left unchanged\n");
    r.perturbed = clamped_sum(base_image, r.delta->data);
    r.prediction_after = r.prediction_before;
    r.success = false;
    return r;
  }

  ScopedFreeze freeze(model.params);
  auto mask_leaf = Tensor::from({1, kFaceDim, kFaceDim}, mask.values);
  auto base_leaf = Tensor::from({1, kFaceDim, kFaceDim}, base_image->data);
  std::vector<double> d(kPixels, 0.0);

  // Gradients reach delta only through the mask multiply, so off-mask entries
  // stay exactly zero without any re-projection.
  for (std::size_t step = 0; step < steps; ++step) {
    Tape tape;
    auto delta_leaf = Tensor::from({1, kFaceDim, kFaceDim}, d, true);
    auto masked = tape.mul(delta_leaf, mask_leaf);
    auto clamped = tape.clamp01(tape.add(base_leaf, masked));
    auto fw = model.forward(tape, tape.reshape(clamped, {1, 1, kFaceDim, kFaceDim}));
    auto toward = tape.categorical_cross_entropy(fw.probs, std::vector<int>{target_class});
    auto away = tape.categorical_cross_entropy(fw.probs, std::vector<int>{original_class});
    auto loss = tape.sub(toward, tape.scale(away, lambda_orig));
    tape.backward(loss);
    for (std::size_t i = 0; i < kPixels; ++i) d[i] -= step_size * delta_leaf->grad[i];
    r.loss_trace.push_back(loss->data[0]);
  }

  r.delta->data = d;
  r.perturbed = clamped_sum(base_image, d);
  r.prediction_after = model.predict(r.perturbed);
  r.success = r.prediction_after == target_class;
  fill_norms(r);
  return r;
}

AdversarialResult cw_attack_core(const LogitOracle& oracle, const std::vector<double>& x,
                                 int target_class, double c, double kappa, std::size_t steps,
                                 double step_size) {
  require(oracle.classes >= 2, "cw_attack: oracle must expose at least two classes");
  require(oracle.logits && oracle.margin_grad, "cw_attack: oracle callbacks missing");
  require(target_class >= 0 && std::size_t(target_class) < oracle.classes,
          "cw_attack: target class out of range");
  require(!x.empty(), "cw_attack: empty input");
  for (double v : x) require(v >= 0.0 && v <= 1.0, "cw_attack: input values must lie in [0,1]");
  require(c > 0.0, "cw_attack: c must be positive");
  require(kappa >= 0.0, "cw_attack: kappa must be non-negative");
  require(steps >= 1, "cw_attack: steps must be >= 1");
  require(step_size > 0.0, "cw_attack: step size must be positive");

  const std::size_t n = x.size();
  const std::size_t target = std::size_t(target_class);

  AdversarialResult r;
  r.original = Tensor::from({n}, x);
  {
    auto z0 = oracle.logits(x);
    require(z0.size() == oracle.classes, "cw_attack: oracle returned wrong logit count");
    r.prediction_before = int(argmax_index(z0.data(), z0.size()));
  }

  std::vector<double> d(n, 0.0);
  std::vector<double> best;
  double best_l2sq = std::numeric_limits<double>::infinity();
  bool found = false;

  for (std::size_t step = 0; step <= steps; ++step) {
    std::vector<double> xp(n);
    for (std::size_t i = 0; i < n; ++i) xp[i] = std::clamp(x[i] + d[i], 0.0, 1.0);
    const auto z = oracle.logits(xp);

    std::size_t runner = target == 0 ? 1 : 0;
    for (std::size_t i = 0; i < z.size(); ++i)
      if (i != target && z[i] > z[runner]) runner = i;
    const double margin = z[runner] - z[target];
    const double l2sq = kernels::dot(d.data(), d.data(), n);
    r.loss_trace.push_back(l2sq + c * std::max(margin, -kappa));

    if (margin <= -kappa) {
      found = true;
      if (l2sq < best_l2sq) {
        best_l2sq = l2sq;
        best = d;
      }
      if (l2sq == 0.0) break;  // already past the margin with no perturbation
    }
    if (step == steps) break;

    if (margin > -kappa) {
      const auto g = oracle.margin_grad(xp, runner, target);
      require(g.size() == n, "cw_attack: oracle returned wrong gradient size");
      for (std::size_t i = 0; i < n; ++i) d[i] -= step_size * (2.0 * d[i] + c * g[i]);
    } else {
      for (std::size_t i = 0; i < n; ++i) d[i] -= step_size * 2.0 * d[i];
    }
    for (std::size_t i = 0; i < n; ++i) d[i] = std::clamp(x[i] + d[i], 0.0, 1.0) - x[i];
  }

  if (found) d = best;
  r.delta = Tensor::from({n}, d);
  r.perturbed = clamped_sum(r.original, d);
  {
    const auto z = oracle.logits(r.perturbed->data);
    r.prediction_after = int(argmax_index(z.data(), z.size()));
  }
  r.success = found;
  fill_norms(r);
  return r;
}

AdversarialResult cw_attack(const CnnModel& model, const TensorPtr& x, int target_class, double c,
                            double kappa, std::size_t steps, double step_size, DeltaNorm norm) {
  require_attack_image(x, "cw_attack");
  require_class(target_class, "cw_attack");
  require(norm == DeltaNorm::l2, "cw_attack: only the l2 objective is implemented");

  LogitOracle oracle;
  oracle.classes = kFaceClasses;
  oracle.logits = [&model](const std::vector<double>& p) {
    Tape tape;
    auto leaf = Tensor::from({1, 1, kFaceDim, kFaceDim}, p);
    auto fw = model.forward(tape, leaf);
    return fw.logits->data;
  };
  oracle.margin_grad = [&model](const std::vector<double>& p, std::size_t a, std::size_t b) {
    ScopedFreeze freeze(model.params);
    Tape tape;
    auto leaf = Tensor::from({1, 1, kFaceDim, kFaceDim}, p, true);
    auto fw = model.forward(tape, leaf);
    auto diff = tape.sub(tape.pick(fw.logits, a), tape.pick(fw.logits, b));
    tape.backward(diff);
    return leaf->grad;
  };

  auto r = cw_attack_core(oracle, x->data, target_class, c, kappa, steps, step_size);
  r.original = x;
  r.delta = Tensor::from({1, kFaceDim, kFaceDim}, r.delta->data);
  r.perturbed = Tensor::from({1, kFaceDim, kFaceDim}, r.perturbed->data);
  return r;
}

const char* attack_method_name(VisionAttackMethod m) {
  switch (m) {
    case VisionAttackMethod::fgsm:
      return "fgsm";
    case VisionAttackMethod::targeted:
      return "targeted";
    case VisionAttackMethod::cw:
      return "cw";
  }
  return "unknown";
}

const char* target_rule_name(TargetRule r) {
  switch (r) {
    case TargetRule::next_class:
      return "next-class";
    case TargetRule::fixed:
      return "fixed";
    case TargetRule::random_seeded:
      return "random-seeded";
  }
  return "unknown";
}

VisionAttackEvaluation evaluate_vision_attack(const CnnModel& model, const FaceDataset& test,
                                              VisionAttackMethod method,
                                              const AttackParams& params, TargetRule rule,
                                              std::uint64_t seed, double mask_threshold,
                                              double lambda_orig) {
  require(!test.images.empty(), "evaluate_vision_attack: empty test set");
  require(test.images.size() == test.labels.size(),
          "evaluate_vision_attack: image/label count mismatch");
  for (int label : test.labels) require_class(label, "evaluate_vision_attack");
  if (rule == TargetRule::fixed) require_class(params.target_class, "evaluate_vision_attack");

  const std::size_t n = test.images.size();
  Rng rng(seed);
  VisionAttackEvaluation ev;
  ev.results.reserve(n);
  ev.targets.reserve(n);

  const std::vector<int> before = predict_all(model, test);
  std::vector<int> after(n);
  std::size_t successes = 0;

  for (std::size_t i = 0; i < n; ++i) {
    const int truth = test.labels[i];
    int target = (truth + 1) % kFaceClasses;
    if (rule == TargetRule::fixed && params.target_class != truth) target = params.target_class;
    if (rule == TargetRule::random_seeded) {
      target = int(rng.below(kFaceClasses - 1));
      if (target >= truth) ++target;
    }

    AdversarialResult r;
    switch (method) {
      case VisionAttackMethod::fgsm:
        r = fgsm(model, test.images[i], truth, params.epsilon);
        break;
      case VisionAttackMethod::targeted: {
        BinaryMask mask = threshold_mask(gradcam(model, test.images[i], truth), mask_threshold);
        r = targeted_masked_attack(model, test.images[i], mask, truth, target, params.steps,
                                   params.step_size, lambda_orig);
        ev.masks.push_back(std::move(mask));
        break;
      }
      case VisionAttackMethod::cw:
        r = cw_attack(model, test.images[i], target, params.c, params.kappa, params.steps,
                      params.step_size, params.norm);
        break;
    }
    after[i] = r.prediction_after;
    if (r.success) ++successes;
    ev.results.push_back(std::move(r));
    ev.targets.push_back(target);
  }

  ev.success_rate = double(successes) / double(n);
  ev.report.model = "cnn";
  ev.report.before = recognition_bundle(before, test.labels);
  ev.report.after = recognition_bundle(after, test.labels);
  ev.report.timestamp = deterministic_timestamp();

  auto& cfg = ev.report.attack_config;
  cfg.emplace_back("family", attack_method_name(method));
  cfg.emplace_back("target_rule", target_rule_name(rule));
  cfg.emplace_back("images", std::to_string(n));
  switch (method) {
    case VisionAttackMethod::fgsm:
      cfg.emplace_back("epsilon", format_number(params.epsilon));
      break;
    case VisionAttackMethod::targeted:
      cfg.emplace_back("steps", std::to_string(params.steps));
      cfg.emplace_back("step_size", format_number(params.step_size));
      cfg.emplace_back("mask_threshold", format_number(mask_threshold));
      cfg.emplace_back("lambda_orig", format_number(lambda_orig));
      break;
    case VisionAttackMethod::cw:
      cfg.emplace_back("steps", std::to_string(params.steps));
      cfg.emplace_back("step_size", format_number(params.step_size));
      cfg.emplace_back("c", format_number(params.c));
      cfg.emplace_back("kappa", format_number(params.kappa));
      break;
  }
  if (rule == TargetRule::fixed) cfg.emplace_back("target_class", std::to_string(params.target_class));
  if (rule == TargetRule::random_seeded) cfg.emplace_back("seed", std::to_string(seed));
  cfg.emplace_back("success_rate", format_number(round6(ev.success_rate)));
  return ev;
}

void write_vision_results_jsonl(const std::vector<AdversarialResult>& results,
                                const std::vector<int>& true_labels, const std::string& path) {
  require(results.size() == true_labels.size(),
          "write_vision_results_jsonl: result/label count mismatch");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw RuntimeError("cannot write " + path);
  for (std::size_t i = 0; i < results.size(); ++i) {
    ordered_json j;
    j["true"] = true_labels[i];
    j["before"] = results[i].prediction_before;
    j["after"] = results[i].prediction_after;
    j["success"] = results[i].success;
    j["l2"] = results[i].l2;
    j["linf"] = results[i].linf;
    os << j.dump() << '\n';
  }
  if (!os) throw RuntimeError("cannot write " + path);
}

}  // namespace advforge
