#include "advforge/vision.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

#include "advforge/error.hpp"
#include "advforge/kernels.hpp"
#include "advforge/rng.hpp"
#include "json_io.hpp"

namespace advforge {

namespace {

constexpr std::size_t kPixels = kFaceDim * kFaceDim;
// spatial arithmetic: 64 -> conv3 62 -> pool 31 -> conv3 29 -> pool 14
constexpr std::size_t kFlat = 64 * 14 * 14;

TensorPtr image_from_pgm(const PgmImage& pgm) {
  auto t = Tensor::make({1, kFaceDim, kFaceDim});
  for (std::size_t i = 0; i < kPixels; ++i) t->data[i] = pgm.pixels[i] / 255.0;
  return t;
}

void require_face_shape(const TensorPtr& image, const std::string& what) {
  require(image->rank() == 3 && image->dim(0) == 1 && image->dim(1) == kFaceDim &&
              image->dim(2) == kFaceDim,
          what + ": image must be [1,64,64], got " + image->shape_str());
}

TensorPtr glorot(std::vector<std::size_t> shape, std::size_t fan_in, std::size_t fan_out,
                 Rng& rng) {
  auto w = Tensor::make(std::move(shape));
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : w->data) v = rng.uniform(-limit, limit);
  return w;
}

std::size_t argmax_row(const double* row, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (row[i] > row[best]) best = i;
  return best;
}

// Per-class face geometry; the brow angle is anchored to the class index so
// no two classes can collide even under unlucky draws.
struct FaceGeometry {
  double cx, cy, rx, ry;
  double eye_dx, eye_dy, eye_r;
  double mouth_w, mouth_h, mouth_dy;
  double brow_angle, brow_len, brow_dy, brow_thick;
  double bg, head, eye, mouth, brow;
};

FaceGeometry draw_geometry(Rng& rng, int cls) {
  FaceGeometry g;
  g.cx = 32.0 + rng.uniform(-3.0, 3.0);
  g.cy = 32.0 + rng.uniform(-3.0, 3.0);
  g.rx = rng.uniform(14.0, 20.0);
  g.ry = rng.uniform(18.0, 25.0);
  g.eye_dx = rng.uniform(5.0, 10.0);
  g.eye_dy = rng.uniform(4.0, 9.0);
  g.eye_r = rng.uniform(1.5, 3.2);
  g.mouth_w = rng.uniform(4.0, 9.0);
  g.mouth_h = rng.uniform(1.0, 2.5);
  g.mouth_dy = rng.uniform(7.0, 12.0);
  g.brow_angle = 3.14159265358979323846 * (cls + 0.5) / kFaceClasses;
  g.brow_len = rng.uniform(9.0, 14.0);
  g.brow_dy = rng.uniform(12.0, 16.0);
  g.brow_thick = rng.uniform(0.8, 1.6);
  g.bg = rng.uniform(0.05, 0.15);
  g.head = rng.uniform(0.35, 0.60);
  g.eye = rng.uniform(0.75, 0.95);
  g.mouth = rng.uniform(0.60, 0.90);
  g.brow = rng.uniform(0.15, 0.30);
  return g;
}

std::vector<double> render_face(const FaceGeometry& g) {
  std::vector<double> img(kPixels);
  const double bx = std::cos(g.brow_angle), by = std::sin(g.brow_angle);
  for (std::size_t y = 0; y < kFaceDim; ++y) {
    for (std::size_t x = 0; x < kFaceDim; ++x) {
      const double fx = static_cast<double>(x), fy = static_cast<double>(y);
      double v = g.bg;
      const double ex = (fx - g.cx) / g.rx, ey = (fy - g.cy) / g.ry;
      if (ex * ex + ey * ey <= 1.0) v = g.head;
      // brow: a thick line segment centered above the eyes
      const double px = fx - g.cx, py = fy - (g.cy - g.brow_dy);
      const double t = std::clamp(px * bx + py * by, -0.5 * g.brow_len, 0.5 * g.brow_len);
      const double dx = px - t * bx, dy = py - t * by;
      if (dx * dx + dy * dy <= g.brow_thick * g.brow_thick) v = g.brow;
      for (double s : {-1.0, 1.0}) {
        const double qx = fx - (g.cx + s * g.eye_dx), qy = fy - (g.cy - g.eye_dy);
        if (qx * qx + qy * qy <= g.eye_r * g.eye_r) v = g.eye;
      }
      if (std::abs(fx - g.cx) <= g.mouth_w && std::abs(fy - (g.cy + g.mouth_dy)) <= g.mouth_h)
        v = g.mouth;
      img[y * kFaceDim + x] = v;
    }
  }
  return img;
}

}  // namespace

FaceDataset load_faces(const std::string& dir, const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw RuntimeError("cannot open manifest " + manifest_path);
  FaceDataset ds;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first && line == "filename,label") {
      first = false;
      continue;
    }
    first = false;
    const std::size_t comma = line.rfind(',');
    require(comma != std::string::npos && comma > 0,
            manifest_path + ": row '" + line + "' is not filename,label");
    const std::string filename = line.substr(0, comma);
    const std::string label_str = line.substr(comma + 1);
    int label = -1;
    const auto [ptr, ec] =
        std::from_chars(label_str.data(), label_str.data() + label_str.size(), label);
    require(ec == std::errc{} && ptr == label_str.data() + label_str.size(),
            filename + ": label '" + label_str + "' is not an integer");
    require(label >= 0 && label < kFaceClasses,
            filename + ": label " + std::to_string(label) + " outside [0," +
                std::to_string(kFaceClasses) + ")");
    PgmImage pgm = read_pgm(dir + "/" + filename);
    require(pgm.width == kFaceDim && pgm.height == kFaceDim,
            filename + ": expected 64x64, got " + std::to_string(pgm.width) + "x" +
                std::to_string(pgm.height));
    ds.images.push_back(image_from_pgm(pgm));
    ds.labels.push_back(label);
  }
  return ds;
}

FaceDataset synth_faces(std::uint64_t seed) {
  Rng rng(seed);
  FaceDataset ds;
  ds.images.reserve(kFaceClasses * 10);
  for (int cls = 0; cls < kFaceClasses; ++cls) {
    const std::vector<double> base = render_face(draw_geometry(rng, cls));
    for (int inst = 0; inst < 10; ++inst) {
      const int sx = static_cast<int>(rng.below(5)) - 2;
      const int sy = static_cast<int>(rng.below(5)) - 2;
      auto img = Tensor::make({1, kFaceDim, kFaceDim});
      for (int y = 0; y < static_cast<int>(kFaceDim); ++y) {
        const int src_y = std::clamp(y - sy, 0, static_cast<int>(kFaceDim) - 1);
        for (int x = 0; x < static_cast<int>(kFaceDim); ++x) {
          const int src_x = std::clamp(x - sx, 0, static_cast<int>(kFaceDim) - 1);
          const double v = base[src_y * kFaceDim + src_x] + rng.normal(0.0, 0.02);
          img->data[y * kFaceDim + x] = std::clamp(v, 0.0, 1.0);
        }
      }
      ds.images.push_back(std::move(img));
      ds.labels.push_back(cls);
    }
  }
  return ds;
}

std::pair<FaceDataset, FaceDataset> split_faces(const FaceDataset& ds) {
  require(ds.images.size() == ds.labels.size(), "split_faces: image/label count mismatch");
  require(ds.size() % 10 == 0, "split_faces: dataset size " + std::to_string(ds.size()) +
                                   " is not a multiple of 10");
  FaceDataset train, test;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    FaceDataset& dst = (i % 10) < 2 ? test : train;
    dst.images.push_back(ds.images[i]);
    dst.labels.push_back(ds.labels[i]);
  }
  return {std::move(train), std::move(test)};
}

CnnForward CnnModel::forward(Tape& tape, const TensorPtr& batch) const {
  require(batch->rank() == 4 && batch->dim(1) == 1 && batch->dim(2) == kFaceDim &&
              batch->dim(3) == kFaceDim,
          "cnn: input must be [N,1,64,64], got " + batch->shape_str());
  auto h = tape.relu(tape.conv2d(batch, params.get("conv1_w"), params.get("conv1_b"), 1));
  h = tape.maxpool2(h);
  auto a = tape.relu(tape.conv2d(h, params.get("conv2_w"), params.get("conv2_b"), 1));
  h = tape.maxpool2(a);
  auto f = tape.reshape(h, {batch->dim(0), kFlat});
  f = tape.relu(tape.dense(f, params.get("fc1_w"), params.get("fc1_b")));
  CnnForward out;
  out.last_conv = a;
  out.logits = tape.dense(f, params.get("fc2_w"), params.get("fc2_b"));
  out.probs = tape.softmax(out.logits);
  return out;
}

std::vector<double> CnnModel::predict_proba(const TensorPtr& image) const {
  require_face_shape(image, "cnn");
  Tape tape;
  auto x = Tensor::make({1, 1, kFaceDim, kFaceDim});
  x->data = image->data;
  const CnnForward fw = forward(tape, x);
  return {fw.probs->data.begin(), fw.probs->data.end()};
}

int CnnModel::predict(const TensorPtr& image) const {
  const std::vector<double> p = predict_proba(image);
  return static_cast<int>(argmax_row(p.data(), p.size()));
}

std::vector<int> predict_all(const CnnModel& model, const FaceDataset& ds, std::size_t batch) {
  require(batch >= 1, "predict_all: batch must be >= 1");
  std::vector<int> out;
  out.reserve(ds.size());
  for (std::size_t start = 0; start < ds.size(); start += batch) {
    const std::size_t b = std::min(batch, ds.size() - start);
    auto x = Tensor::make({b, 1, kFaceDim, kFaceDim});
    for (std::size_t i = 0; i < b; ++i) {
      require_face_shape(ds.images[start + i], "predict_all");
      std::copy(ds.images[start + i]->data.begin(), ds.images[start + i]->data.end(),
                x->data.begin() + i * kPixels);
    }
    Tape tape;
    const CnnForward fw = model.forward(tape, x);
    for (std::size_t i = 0; i < b; ++i)
      out.push_back(
          static_cast<int>(argmax_row(fw.probs->data.data() + i * kFaceClasses, kFaceClasses)));
  }
  return out;
}

CnnModel train_cnn(const FaceDataset& train, const CnnConfig& config) {
  require(!train.images.empty(), "train_cnn: empty training set");
  require(train.images.size() == train.labels.size(), "train_cnn: image/label count mismatch");
  for (std::size_t i = 0; i < train.size(); ++i) {
    require_face_shape(train.images[i], "train_cnn");
    require(train.labels[i] >= 0 && train.labels[i] < kFaceClasses,
            "train_cnn: label " + std::to_string(train.labels[i]) + " outside [0," +
                std::to_string(kFaceClasses) + ")");
  }
  const auto [lo, hi] = std::minmax_element(train.labels.begin(), train.labels.end());
  require(*lo != *hi, "train_cnn: need at least 2 distinct classes");
  require(config.epochs >= 1, "train_cnn: epochs must be >= 1");
  require(config.batch >= 1, "train_cnn: batch must be >= 1");
  require(config.learning_rate > 0.0, "train_cnn: learning rate must be positive");

  CnnModel m;
  m.config = config;
  Rng rng(config.seed);
  m.params.add("conv1_w", glorot({32, 1, 3, 3}, 1 * 9, 32 * 9, rng));
  m.params.add("conv1_b", Tensor::make({32}));
  m.params.add("conv2_w", glorot({64, 32, 3, 3}, 32 * 9, 64 * 9, rng));
  m.params.add("conv2_b", Tensor::make({64}));
  m.params.add("fc1_w", glorot({kFlat, 128}, kFlat, 128, rng));
  m.params.add("fc1_b", Tensor::make({128}));
  m.params.add("fc2_w", glorot({128, kFaceClasses}, 128, kFaceClasses, rng));
  m.params.add("fc2_b", Tensor::make({kFaceClasses}));

  const std::size_t n = train.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(perm);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < n; start += config.batch) {
      const std::size_t b = std::min(config.batch, n - start);
      auto x = Tensor::make({b, 1, kFaceDim, kFaceDim});
      std::vector<int> y(b);
      for (std::size_t i = 0; i < b; ++i) {
        const std::size_t idx = perm[start + i];
        std::copy(train.images[idx]->data.begin(), train.images[idx]->data.end(),
                  x->data.begin() + i * kPixels);
        y[i] = train.labels[idx];
      }
      Tape tape;
      const CnnForward fw = m.forward(tape, x);
      auto loss = tape.categorical_cross_entropy(fw.probs, y);
      tape.backward(loss);
      optimizer_step(m.params, Optimizer::adam, config.learning_rate);
      loss_sum += loss->data[0] * static_cast<double>(b);
      for (std::size_t i = 0; i < b; ++i)
        if (argmax_row(fw.probs->data.data() + i * kFaceClasses, kFaceClasses) ==
            static_cast<std::size_t>(y[i]))
          ++correct;
    }
    m.train_loss.push_back(loss_sum / static_cast<double>(n));
    m.train_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(n));
  }
  return m;
}

void save_cnn(const CnnModel& model, const std::string& params_path,
              const std::string& meta_path) {
  save_params(model.params, params_path);
  ordered_json j;
  j["classes"] = kFaceClasses;
  j["image_dim"] = kFaceDim;
  j["epochs"] = model.config.epochs;
  j["batch"] = model.config.batch;
  j["learning_rate"] = model.config.learning_rate;
  j["seed"] = model.config.seed;
  j["train_loss"] = model.train_loss;
  j["train_accuracy"] = model.train_accuracy;
  std::ofstream os(meta_path);
  if (!os) throw RuntimeError("cannot write cnn metadata: " + meta_path);
  os << j.dump(2) << '\n';
}

CnnModel load_cnn(const std::string& params_path, const std::string& meta_path) {
  const ordered_json j = read_json_file(meta_path, "cnn metadata");
  require(j.contains("classes") && j.at("classes").get<int>() == kFaceClasses,
          meta_path + ": class count is not " + std::to_string(kFaceClasses));
  require(j.contains("image_dim") && j.at("image_dim").get<std::size_t>() == kFaceDim,
          meta_path + ": image dimension is not " + std::to_string(kFaceDim));
  CnnModel m;
  if (j.contains("epochs")) m.config.epochs = j.at("epochs").get<std::size_t>();
  if (j.contains("batch")) m.config.batch = j.at("batch").get<std::size_t>();
  if (j.contains("learning_rate")) m.config.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("seed")) m.config.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("train_loss")) m.train_loss = j.at("train_loss").get<std::vector<double>>();
  if (j.contains("train_accuracy"))
    m.train_accuracy = j.at("train_accuracy").get<std::vector<double>>();

  m.params = load_params(params_path);
  const std::pair<const char*, std::vector<std::size_t>> want[] = {
      {"conv1_w", {32, 1, 3, 3}}, {"conv1_b", {32}},
      {"conv2_w", {64, 32, 3, 3}}, {"conv2_b", {64}},
      {"fc1_w", {kFlat, 128}},    {"fc1_b", {128}},
      {"fc2_w", {128, 40}},       {"fc2_b", {40}}};
  for (const auto& [name, shape] : want)
    require(m.params.has(name) && m.params.get(name)->shape == shape,
            std::string("cnn parameter ") + name + " missing or mis-shaped in " + params_path);
  return m;
}

Heatmap gradcam(const CnnModel& model, const TensorPtr& image, int class_id) {
  require_face_shape(image, "gradcam");
  require(class_id >= 0 && class_id < kFaceClasses,
          "gradcam: class " + std::to_string(class_id) + " outside [0," +
              std::to_string(kFaceClasses) + ")");
  ScopedFreeze freeze(model.params);
  Tape tape;
  auto x = Tensor::make({1, 1, kFaceDim, kFaceDim});
  x->data = image->data;
  const CnnForward fw = model.forward(tape, x);
  auto logit = tape.pick(fw.logits, static_cast<std::size_t>(class_id));
  tape.backward(logit);
  const TensorPtr& a = fw.last_conv;
  return gradcam_map(a->data, a->grad, a->dim(1), a->dim(2), a->dim(3), class_id);
}

Heatmap gradcam_map(const std::vector<double>& activations, const std::vector<double>& grads,
                    std::size_t channels, std::size_t height, std::size_t width, int class_id) {
  require(channels >= 1 && height >= 1 && width >= 1, "gradcam: empty activation block");
  const std::size_t plane = height * width;
  require(activations.size() == channels * plane && grads.size() == activations.size(),
          "gradcam: activation/gradient sizes disagree");

  std::vector<double> raw(plane, 0.0);
  for (std::size_t k = 0; k < channels; ++k) {
    const double alpha =
        kernels::sum(grads.data() + k * plane, plane) / static_cast<double>(plane);
    kernels::axpy(raw.data(), activations.data() + k * plane, alpha, plane);
  }
  for (auto& v : raw) v = std::max(v, 0.0);

  Heatmap h;
  h.class_id = class_id;
  h.values.assign(kPixels, 0.0);
  // corner-aligned bilinear upsample
  const double sy = height > 1 ? static_cast<double>(height - 1) / (kFaceDim - 1) : 0.0;
  const double sx = width > 1 ? static_cast<double>(width - 1) / (kFaceDim - 1) : 0.0;
  for (std::size_t Y = 0; Y < kFaceDim; ++Y) {
    const double fy = Y * sy;
    const std::size_t y0 = std::min(static_cast<std::size_t>(fy), height - 1);
    const std::size_t y1 = std::min(y0 + 1, height - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t X = 0; X < kFaceDim; ++X) {
      const double fx = X * sx;
      const std::size_t x0 = std::min(static_cast<std::size_t>(fx), width - 1);
      const std::size_t x1 = std::min(x0 + 1, width - 1);
      const double wx = fx - static_cast<double>(x0);
      h.values[Y * kFaceDim + X] =
          (1.0 - wy) * ((1.0 - wx) * raw[y0 * width + x0] + wx * raw[y0 * width + x1]) +
          wy * ((1.0 - wx) * raw[y1 * width + x0] + wx * raw[y1 * width + x1]);
    }
  }

  double lo = h.values[0], hi = h.values[0];
  for (double v : h.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi > lo) {
    for (auto& v : h.values) v = (v - lo) / (hi - lo);
  } else {
    std::fill(h.values.begin(), h.values.end(), 0.0);
  }
  return h;
}

BinaryMask threshold_mask(const Heatmap& h, double t) {
  require(t >= 0.0 && t <= 1.0,
          "threshold_mask: threshold " + std::to_string(t) + " outside [0,1]");
  require(h.values.size() == kPixels, "threshold_mask: heatmap must be 64x64");
  BinaryMask m;
  m.values.resize(kPixels);
  for (std::size_t i = 0; i < kPixels; ++i) m.values[i] = h.values[i] >= t ? 1.0 : 0.0;
  return m;
}

void write_face_pgm(const TensorPtr& image, const std::string& path) {
  require_face_shape(image, path);
  write_gray_pgm(image->data, kFaceDim, kFaceDim, path);
}

TensorPtr read_face_pgm(const std::string& path) {
  PgmImage pgm = read_pgm(path);
  require(pgm.width == kFaceDim && pgm.height == kFaceDim,
          path + ": expected 64x64, got " + std::to_string(pgm.width) + "x" +
              std::to_string(pgm.height));
  return image_from_pgm(pgm);
}

void write_heatmap_pgm(const Heatmap& h, const std::string& path) {
  require(h.values.size() == kPixels, path + ": heatmap must be 64x64");
  write_gray_pgm(h.values, kFaceDim, kFaceDim, path);
}

void write_mask_pgm(const BinaryMask& m, const std::string& path) {
  require(m.values.size() == kPixels, path + ": mask must be 64x64");
  write_gray_pgm(m.values, kFaceDim, kFaceDim, path);
}

}  // namespace advforge
