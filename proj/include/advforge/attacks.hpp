// Image-space attacks against the face CNN: FGSM, the GradCAM-masked
// iterative targeted attack, and Carlini-Wagner, plus the before/after
// attack evaluation.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "advforge/metrics.hpp"
#include "advforge/tensor.hpp"
#include "advforge/vision.hpp"

namespace advforge {

enum class DeltaNorm { l2, linf };

struct AttackParams {
  double epsilon = 0.1;        // FGSM strength
  std::size_t steps = 500;     // iterative attack budget
  double step_size = 5e-3;
  int target_class = 0;        // fixed-target rule
  double c = 1.0;              // CW trade-off constant
  double kappa = 0.0;          // CW confidence margin
  DeltaNorm norm = DeltaNorm::l2;
};

struct AdversarialResult {
  TensorPtr original;   // [1,64,64]
  TensorPtr delta;      // [1,64,64] (or flat for the generic CW core)
  TensorPtr perturbed;  // clamp(original + delta, 0, 1)
  int prediction_before = -1;
  int prediction_after = -1;
  bool success = false;
  std::vector<double> loss_trace;
  double l2 = 0.0;
  double linf = 0.0;
};

// eta = epsilon * sign(d CCE / d x); sign(0) = 0. One gradient evaluation.
AdversarialResult fgsm(const CnnModel& model, const TensorPtr& x, int true_label, double epsilon);

// Gradient descent on delta (initialized zero, confined to the mask at every
// step) for exactly `steps` iterations of
//   loss = CCE(model(clamp(x + delta.mask, 0, 1)), target)
//          - lambda_orig * CCE(..., original).
// An all-zero mask leaves the image unchanged and emits a warning.
AdversarialResult targeted_masked_attack(const CnnModel& model, const TensorPtr& base_image,
                                         const BinaryMask& mask, int original_class,
                                         int target_class, std::size_t steps = 500,
                                         double step_size = 5e-3, double lambda_orig = 1.0);

// Differentiable logit surface the CW optimizer descends; the CNN adapter is
// the production implementation, analytic toys implement it in tests.
struct LogitOracle {
  std::size_t classes = 0;
  std::function<std::vector<double>(const std::vector<double>& x)> logits;
  // d(Z[a] - Z[b]) / dx
  std::function<std::vector<double>(const std::vector<double>& x, std::size_t a, std::size_t b)>
      margin_grad;
};

// Projected gradient descent on |delta|_2^2 + c * max(max_{i!=t} Z_i - Z_t,
// -kappa) with x + delta clamped to [0,1]; returns the smallest-norm
// successful iterate (success = the margin term reaches -kappa).
AdversarialResult cw_attack_core(const LogitOracle& oracle, const std::vector<double>& x,
                                 int target_class, double c, double kappa, std::size_t steps,
                                 double step_size);

AdversarialResult cw_attack(const CnnModel& model, const TensorPtr& x, int target_class,
                            double c = 1.0, double kappa = 0.0, std::size_t steps = 1000,
                            double step_size = 1e-2, DeltaNorm norm = DeltaNorm::l2);

enum class VisionAttackMethod { fgsm, targeted, cw };
enum class TargetRule { next_class, fixed, random_seeded };

const char* attack_method_name(VisionAttackMethod m);
const char* target_rule_name(TargetRule r);

struct VisionAttackEvaluation {
  AttackReport report;  // accuracy rows use correct-recognition as the positive class
  std::vector<AdversarialResult> results;
  std::vector<int> targets;      // chosen target class per image
  std::vector<BinaryMask> masks;  // per image, targeted method only
  double success_rate = 0.0;     // target hit rate (targeted/CW) or flip rate (FGSM)
};

// Targeted methods build each mask from the GradCAM heatmap of the image's
// *true* class. Images whose true class equals a fixed-rule target fall back
// to the next class. seed only feeds the random-seeded rule.
VisionAttackEvaluation evaluate_vision_attack(const CnnModel& model, const FaceDataset& test,
                                              VisionAttackMethod method,
                                              const AttackParams& params,
                                              TargetRule rule = TargetRule::next_class,
                                              std::uint64_t seed = 0,
                                              double mask_threshold = 0.4,
                                              double lambda_orig = 1.0);

// One record per image: {"true","before","after","success","l2","linf"}.
void write_vision_results_jsonl(const std::vector<AdversarialResult>& results,
                                const std::vector<int>& true_labels, const std::string& path);

}  // namespace advforge
