// Face recognition side of the toolkit: 64x64 grayscale datasets, the CNN
// classifier, and GradCAM heatmaps with their thresholded binary masks.
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "advforge/params.hpp"
#include "advforge/pgm.hpp"
#include "advforge/tensor.hpp"

namespace advforge {

inline constexpr std::size_t kFaceDim = 64;
inline constexpr int kFaceClasses = 40;

// Images are [1,64,64] tensors with values in [0,1]; order follows the
// manifest (or generator), which split_faces relies on.
struct FaceDataset {
  std::vector<TensorPtr> images;
  std::vector<int> labels;
  std::size_t size() const { return images.size(); }
};

// Manifest: one "filename,label" row per image (optional header line),
// files are binary PGM (P5), 64x64, maxval 255. Errors name the offending
// file.
FaceDataset load_faces(const std::string& dir, const std::string& manifest_path);

// Procedural stand-in for a 40-person portrait set: per-class face geometry
// (head ellipse, eyes, mouth, one oriented brow edge) plus per-instance
// integer shifts and pixel noise. 400 images, 10 per class, deterministic
// from the seed.
FaceDataset synth_faces(std::uint64_t seed);

// First 2 of every 10 images -> test, the rest -> train.
std::pair<FaceDataset, FaceDataset> split_faces(const FaceDataset& ds);

struct CnnConfig {
  std::size_t epochs = 40;
  std::size_t batch = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

// Handles into one recorded forward pass; last_conv is the post-relu output
// of the second convolution ([N,64,29,29]), the layer GradCAM attributes.
struct CnnForward {
  TensorPtr last_conv;
  TensorPtr logits;  // [N,40]
  TensorPtr probs;   // [N,40]
};

// conv(32,3x3)+relu, maxpool2, conv(64,3x3)+relu, maxpool2,
// dense(128)+relu, dense(40)+softmax.
struct CnnModel {
  ParameterSet params;
  CnnConfig config;
  std::vector<double> train_loss;      // per-epoch mean batch loss
  std::vector<double> train_accuracy;  // per-epoch running accuracy

  // batch must be [N,1,64,64] and already live on (or be a leaf visible to)
  // the given tape.
  CnnForward forward(Tape& tape, const TensorPtr& batch) const;
  std::vector<double> predict_proba(const TensorPtr& image) const;  // [1,64,64] -> 40 probs
  int predict(const TensorPtr& image) const;
};

CnnModel train_cnn(const FaceDataset& train, const CnnConfig& config = {});
std::vector<int> predict_all(const CnnModel& model, const FaceDataset& ds,
                             std::size_t batch = 32);

void save_cnn(const CnnModel& model, const std::string& params_path,
              const std::string& meta_path);
CnnModel load_cnn(const std::string& params_path, const std::string& meta_path);

struct Heatmap {
  std::vector<double> values;  // 64*64 row-major, in [0,1]
  int class_id = 0;
};

struct BinaryMask {
  std::vector<double> values;  // 64*64 row-major, entries 0 or 1
};

// Channel weights alpha_k = spatial mean of d(class logit)/dA_k; the map is
// relu(sum_k alpha_k * A_k), bilinearly upsampled to 64x64 and min-max
// normalized (an identically-zero map stays zero).
Heatmap gradcam(const CnnModel& model, const TensorPtr& image, int class_id);

// The combination step above, exposed separately so its closed form can be
// checked against hand-built activations and gradients.
Heatmap gradcam_map(const std::vector<double>& activations, const std::vector<double>& grads,
                    std::size_t channels, std::size_t height, std::size_t width, int class_id);

// mask = 1 where h >= t (boundary pixel included), else 0.
BinaryMask threshold_mask(const Heatmap& h, double t = 0.4);

void write_face_pgm(const TensorPtr& image, const std::string& path);
// Single 64x64 PGM as a [1,64,64] image in [0,1].
TensorPtr read_face_pgm(const std::string& path);
void write_heatmap_pgm(const Heatmap& h, const std::string& path);
void write_mask_pgm(const BinaryMask& m, const std::string& path);

}  // namespace advforge
