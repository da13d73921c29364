#include "advforge/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "advforge/error.hpp"
#include "advforge/kernels.hpp"

namespace advforge {

namespace {

constexpr double kLogFloor = 1e-12;

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

double safe_log(double v) { return std::log(v < kLogFloor ? kLogFloor : v); }

}  // namespace

TensorPtr Tensor::make(std::vector<std::size_t> shape, bool requires_grad) {
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  t->data.assign(shape_product(t->shape), 0.0);
  t->requires_grad = requires_grad;
  return t;
}

TensorPtr Tensor::from(std::vector<std::size_t> shape, std::vector<double> values,
                       bool requires_grad) {
  require(shape_product(shape) == values.size(),
          "tensor init: " + std::to_string(values.size()) + " values for shape product " +
              std::to_string(shape_product(shape)));
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  t->data = std::move(values);
  t->requires_grad = requires_grad;
  return t;
}

TensorPtr Tensor::scalar(double v, bool requires_grad) {
  return from({1}, {v}, requires_grad);
}

void Tensor::ensure_grad() {
  if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() {
  std::fill(grad.begin(), grad.end(), 0.0);
}

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

TensorPtr Tape::record(const char* name, TensorPtr out, std::function<void()> bw) {
  out->tape_tag = this;
  ops_.push_back(TapeOp{name, out, std::move(bw)});
  return ops_.back().output;
}

// ---------------------------------------------------------------------------
// conv2d

TensorPtr Tape::conv2d(const TensorPtr& input, const TensorPtr& kernels,
                       const TensorPtr& bias, std::size_t stride) {
  require(input->rank() == 4, "conv2d: input must be [N,C,H,W], got " + input->shape_str());
  require(kernels->rank() == 4, "conv2d: kernels must be [K,C,kh,kw], got " + kernels->shape_str());
  require(bias->rank() == 1, "conv2d: bias must be [K], got " + bias->shape_str());
  require(stride >= 1, "conv2d: stride must be >= 1");
  const std::size_t N = input->dim(0), C = input->dim(1), H = input->dim(2), W = input->dim(3);
  const std::size_t K = kernels->dim(0), kh = kernels->dim(2), kw = kernels->dim(3);
  require(kernels->dim(1) == C,
          "conv2d: kernel channels " + kernels->shape_str() + " vs input " + input->shape_str());
  require(bias->dim(0) == K, "conv2d: bias " + bias->shape_str() + " vs kernels " + kernels->shape_str());
  require(kh <= H && kw <= W,
          "conv2d: kernel " + kernels->shape_str() + " larger than input " + input->shape_str());
  const std::size_t Ho = (H - kh) / stride + 1;
  const std::size_t Wo = (W - kw) / stride + 1;

  auto out = Tensor::make({N, K, Ho, Wo});
  const double* in = input->data.data();
  const double* wt = kernels->data.data();
  double* o = out->data.data();

  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t k = 0; k < K; ++k) {
      double* plane = o + (n * K + k) * Ho * Wo;
      std::fill(plane, plane + Ho * Wo, bias->data[k]);
      for (std::size_t c = 0; c < C; ++c) {
        const double* in_plane = in + (n * C + c) * H * W;
        const double* w_plane = wt + (k * C + c) * kh * kw;
        for (std::size_t ky = 0; ky < kh; ++ky) {
          for (std::size_t kx = 0; kx < kw; ++kx) {
            const double w = w_plane[ky * kw + kx];
            if (stride == 1) {
              for (std::size_t y = 0; y < Ho; ++y)
                kernels::axpy(plane + y * Wo, in_plane + (y + ky) * W + kx, w, Wo);
            } else {
              for (std::size_t y = 0; y < Ho; ++y) {
                const double* row = in_plane + (y * stride + ky) * W + kx;
                double* orow = plane + y * Wo;
                for (std::size_t x = 0; x < Wo; ++x) orow[x] += w * row[x * stride];
              }
            }
          }
        }
      }
    }
  }

  return record("conv2d", out, [input, kernels, bias, out, N, C, H, W, K, kh, kw, Ho, Wo, stride] {
    const double* g = out->grad.data();
    if (input->wants_grad()) {
      input->ensure_grad();
      double* gi = input->grad.data();
      const double* wt = kernels->data.data();
      for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t k = 0; k < K; ++k) {
          const double* gplane = g + (n * K + k) * Ho * Wo;
          for (std::size_t c = 0; c < C; ++c) {
            double* gin = gi + (n * C + c) * H * W;
            const double* w_plane = wt + (k * C + c) * kh * kw;
            for (std::size_t ky = 0; ky < kh; ++ky) {
              for (std::size_t kx = 0; kx < kw; ++kx) {
                const double w = w_plane[ky * kw + kx];
                if (stride == 1) {
                  for (std::size_t y = 0; y < Ho; ++y)
                    kernels::axpy(gin + (y + ky) * W + kx, gplane + y * Wo, w, Wo);
                } else {
                  for (std::size_t y = 0; y < Ho; ++y) {
                    double* row = gin + (y * stride + ky) * W + kx;
                    const double* grow = gplane + y * Wo;
                    for (std::size_t x = 0; x < Wo; ++x) row[x * stride] += w * grow[x];
                  }
                }
              }
            }
          }
        }
      }
    }
    if (kernels->wants_grad()) {
      kernels->ensure_grad();
      double* gw = kernels->grad.data();
      const double* in = input->data.data();
      for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t k = 0; k < K; ++k) {
          const double* gplane = g + (n * K + k) * Ho * Wo;
          for (std::size_t c = 0; c < C; ++c) {
            const double* in_plane = in + (n * C + c) * H * W;
            double* gw_plane = gw + (k * C + c) * kh * kw;
            for (std::size_t ky = 0; ky < kh; ++ky) {
              for (std::size_t kx = 0; kx < kw; ++kx) {
                double acc = 0.0;
                if (stride == 1) {
                  for (std::size_t y = 0; y < Ho; ++y)
                    acc += kernels::dot(gplane + y * Wo, in_plane + (y + ky) * W + kx, Wo);
                } else {
                  for (std::size_t y = 0; y < Ho; ++y) {
                    const double* row = in_plane + (y * stride + ky) * W + kx;
                    const double* grow = gplane + y * Wo;
                    for (std::size_t x = 0; x < Wo; ++x) acc += grow[x] * row[x * stride];
                  }
                }
                gw_plane[ky * kw + kx] += acc;
              }
            }
          }
        }
      }
    }
    if (bias->wants_grad()) {
      bias->ensure_grad();
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t k = 0; k < K; ++k)
          bias->grad[k] += kernels::sum(g + (n * K + k) * Ho * Wo, Ho * Wo);
    }
  });
}

// ---------------------------------------------------------------------------
// dense

TensorPtr Tape::dense(const TensorPtr& input, const TensorPtr& weight, const TensorPtr& bias) {
  require(input->rank() == 2, "dense: input must be [N,F], got " + input->shape_str());
  require(weight->rank() == 2, "dense: weight must be [F,G], got " + weight->shape_str());
  require(bias->rank() == 1, "dense: bias must be [G], got " + bias->shape_str());
  const std::size_t N = input->dim(0), F = input->dim(1), G = weight->dim(1);
  require(weight->dim(0) == F,
          "dense: inner dimensions disagree, input " + input->shape_str() + " weight " + weight->shape_str());
  require(bias->dim(0) == G, "dense: bias " + bias->shape_str() + " vs weight " + weight->shape_str());

  auto out = Tensor::make({N, G});
  const double* x = input->data.data();
  const double* w = weight->data.data();
  double* o = out->data.data();
  for (std::size_t n = 0; n < N; ++n) {
    double* row = o + n * G;
    std::copy(bias->data.begin(), bias->data.end(), row);
    for (std::size_t f = 0; f < F; ++f) kernels::axpy(row, w + f * G, x[n * F + f], G);
  }

  return record("dense", out, [input, weight, bias, out, N, F, G] {
    const double* g = out->grad.data();
    if (input->wants_grad()) {
      input->ensure_grad();
      const double* w = weight->data.data();
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t f = 0; f < F; ++f)
          input->grad[n * F + f] += kernels::dot(g + n * G, w + f * G, G);
    }
    if (weight->wants_grad()) {
      weight->ensure_grad();
      const double* x = input->data.data();
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t f = 0; f < F; ++f)
          kernels::axpy(weight->grad.data() + f * G, g + n * G, x[n * F + f], G);
    }
    if (bias->wants_grad()) {
      bias->ensure_grad();
      for (std::size_t n = 0; n < N; ++n)
        kernels::axpy(bias->grad.data(), g + n * G, 1.0, G);
    }
  });
}

// ---------------------------------------------------------------------------
// activations

TensorPtr Tape::relu(const TensorPtr& t) {
  auto out = Tensor::make(t->shape);
  kernels::relu(out->data.data(), t->data.data(), t->size());
  return record("relu", out, [t, out] {
    if (!t->wants_grad()) return;
    t->ensure_grad();
    for (std::size_t i = 0; i < t->size(); ++i)
      if (t->data[i] > 0.0) t->grad[i] += out->grad[i];
  });
}

TensorPtr Tape::tanh(const TensorPtr& t) {
  auto out = Tensor::make(t->shape);
  for (std::size_t i = 0; i < t->size(); ++i) out->data[i] = std::tanh(t->data[i]);
  return record("tanh", out, [t, out] {
    if (!t->wants_grad()) return;
    t->ensure_grad();
    for (std::size_t i = 0; i < t->size(); ++i)
      t->grad[i] += out->grad[i] * (1.0 - out->data[i] * out->data[i]);
  });
}

TensorPtr Tape::sigmoid(const TensorPtr& t) {
  auto out = Tensor::make(t->shape);
  for (std::size_t i = 0; i < t->size(); ++i) {
    double x = t->data[i];
    if (x >= 0.0) {
      out->data[i] = 1.0 / (1.0 + std::exp(-x));
    } else {
      double e = std::exp(x);
      out->data[i] = e / (1.0 + e);
    }
  }
  return record("sigmoid", out, [t, out] {
    if (!t->wants_grad()) return;
    t->ensure_grad();
    for (std::size_t i = 0; i < t->size(); ++i) {
      double y = out->data[i];
      t->grad[i] += out->grad[i] * y * (1.0 - y);
    }
  });
}

TensorPtr Tape::maxpool2(const TensorPtr& t) {
  require(t->rank() == 4, "maxpool2: input must be [N,C,H,W], got " + t->shape_str());
  const std::size_t N = t->dim(0), C = t->dim(1), H = t->dim(2), W = t->dim(3);
  require(H >= 2 && W >= 2, "maxpool2: spatial extent too small, got " + t->shape_str());
  const std::size_t Ho = H / 2, Wo = W / 2;
  auto out = Tensor::make({N, C, Ho, Wo});
  // argmax per window; ties keep the first position in scan order
  auto arg = std::make_shared<std::vector<std::size_t>>(out->size());
  const double* in = t->data.data();
  for (std::size_t nc = 0; nc < N * C; ++nc) {
    const double* plane = in + nc * H * W;
    for (std::size_t y = 0; y < Ho; ++y) {
      for (std::size_t x = 0; x < Wo; ++x) {
        std::size_t base = (2 * y) * W + 2 * x;
        std::size_t best = base;
        double bv = plane[base];
        const std::size_t cand[3] = {base + 1, base + W, base + W + 1};
        for (std::size_t c : cand) {
          if (plane[c] > bv) {
            bv = plane[c];
            best = c;
          }
        }
        std::size_t oi = nc * Ho * Wo + y * Wo + x;
        out->data[oi] = bv;
        (*arg)[oi] = nc * H * W + best;
      }
    }
  }
  return record("maxpool2", out, [t, out, arg] {
    if (!t->wants_grad()) return;
    t->ensure_grad();
    for (std::size_t i = 0; i < out->size(); ++i) t->grad[(*arg)[i]] += out->grad[i];
  });
}

TensorPtr Tape::softmax(const TensorPtr& t) {
  require(t->rank() >= 1, "softmax: rank-0 input");
  const std::size_t C = t->shape.back();
  const std::size_t rows = t->size() / C;
  auto out = Tensor::make(t->shape);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = t->data.data() + r * C;
    double* y = out->data.data() + r * C;
    double mx = x[0];
    for (std::size_t i = 1; i < C; ++i) mx = std::max(mx, x[i]);
    double z = 0.0;
    for (std::size_t i = 0; i < C; ++i) {
      y[i] = std::exp(x[i] - mx);
      z += y[i];
    }
    for (std::size_t i = 0; i < C; ++i) y[i] /= z;
  }
  return record("softmax", out, [t, out, C, rows] {
    if (!t->wants_grad()) return;
    t->ensure_grad();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = out->data.data() + r * C;
      const double* g = out->grad.data() + r * C;
      double gy = kernels::dot(g, y, C);
      for (std::size_t i = 0; i < C; ++i) t->grad[r * C + i] += y[i] * (g[i] - gy);
    }
  });
}

// ---------------------------------------------------------------------------
// losses

TensorPtr Tape::categorical_cross_entropy(const TensorPtr& probs, const std::vector<int>& targets) {
  require(probs->rank() == 2, "cce: probs must be [N,C], got " + probs->shape_str());
  const std::size_t N = probs->dim(0), C = probs->dim(1);
  require(targets.size() == N, "cce: " + std::to_string(targets.size()) + " targets for batch " +
                                   std::to_string(N));
  for (std::size_t n = 0; n < N; ++n)
    require(targets[n] >= 0 && static_cast<std::size_t>(targets[n]) < C,
            "cce: target index " + std::to_string(targets[n]) + " outside class range [0," +
                std::to_string(C) + ")");
  double loss = 0.0;
  for (std::size_t n = 0; n < N; ++n)
    loss -= safe_log(probs->data[n * C + targets[n]]);
  loss /= static_cast<double>(N);
  auto out = Tensor::scalar(loss);
  return record("cce", out, [probs, out, targets, N, C] {
    if (!probs->wants_grad()) return;
    probs->ensure_grad();
    const double g = out->grad[0] / static_cast<double>(N);
    for (std::size_t n = 0; n < N; ++n) {
      double p = probs->data[n * C + targets[n]];
      if (p >= kLogFloor) probs->grad[n * C + targets[n]] -= g / p;
    }
  });
}

TensorPtr Tape::categorical_cross_entropy(const TensorPtr& probs, const TensorPtr& one_hot) {
  require(probs->rank() == 2 && one_hot->rank() == 2 && probs->shape == one_hot->shape,
          "cce: probs " + probs->shape_str() + " vs one-hot " + one_hot->shape_str());
  const std::size_t N = probs->dim(0), C = probs->dim(1);
  std::vector<int> targets(N);
  for (std::size_t n = 0; n < N; ++n) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < C; ++c)
      if (one_hot->data[n * C + c] > one_hot->data[n * C + best]) best = c;
    targets[n] = static_cast<int>(best);
  }
  return categorical_cross_entropy(probs, targets);
}

TensorPtr Tape::binary_cross_entropy(const TensorPtr& probs, const std::vector<double>& targets) {
  require(targets.size() == probs->size(),
          "bce: " + std::to_string(targets.size()) + " targets for " + std::to_string(probs->size()) +
              " probabilities");
  const std::size_t N = probs->size();
  double loss = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    double p = probs->data[i];
    loss -= targets[i] * safe_log(p) + (1.0 - targets[i]) * safe_log(1.0 - p);
  }
  loss /= static_cast<double>(N);
  auto out = Tensor::scalar(loss);
  return record("bce", out, [probs, out, targets, N] {
    if (!probs->wants_grad()) return;
    probs->ensure_grad();
    const double g = out->grad[0] / static_cast<double>(N);
    for (std::size_t i = 0; i < N; ++i) {
      double p = probs->data[i];
      double d = 0.0;
      if (p >= kLogFloor) d -= targets[i] / p;
      if (1.0 - p >= kLogFloor) d += (1.0 - targets[i]) / (1.0 - p);
      probs->grad[i] += g * d;
    }
  });
}

// ---------------------------------------------------------------------------
// elementwise / structural

TensorPtr Tape::add(const TensorPtr& a, const TensorPtr& b) {
  require(a->shape == b->shape, "add: shape mismatch " + a->shape_str() + " vs " + b->shape_str());
  auto out = Tensor::make(a->shape);
  kernels::add(out->data.data(), a->data.data(), b->data.data(), a->size());
  return record("add", out, [a, b, out] {
    if (a->wants_grad()) {
      a->ensure_grad();
      kernels::axpy(a->grad.data(), out->grad.data(), 1.0, a->size());
    }
    if (b->wants_grad()) {
      b->ensure_grad();
      kernels::axpy(b->grad.data(), out->grad.data(), 1.0, b->size());
    }
  });
}

TensorPtr Tape::sub(const TensorPtr& a, const TensorPtr& b) {
  require(a->shape == b->shape, "sub: shape mismatch " + a->shape_str() + " vs " + b->shape_str());
  auto out = Tensor::make(a->shape);
  kernels::sub(out->data.data(), a->data.data(), b->data.data(), a->size());
  return record("sub", out, [a, b, out] {
    if (a->wants_grad()) {
      a->ensure_grad();
      kernels::axpy(a->grad.data(), out->grad.data(), 1.0, a->size());
    }
    if (b->wants_grad()) {
      b->ensure_grad();
      kernels::axpy(b->grad.data(), out->grad.data(), -1.0, b->size());
    }
  });
}

TensorPtr Tape::mul(const TensorPtr& a, const TensorPtr& b) {
  require(a->shape == b->shape, "mul: shape mismatch " + a->shape_str() + " vs " + b->shape_str());
  auto out = Tensor::make(a->shape);
  kernels::mul(out->data.data(), a->data.data(), b->data.data(), a->size());
  return record("mul", out, [a, b, out] {
    if (a->wants_grad()) {
      a->ensure_grad();
      for (std::size_t i = 0; i < a->size(); ++i) a->grad[i] += out->grad[i] * b->data[i];
    }
    if (b->wants_grad()) {
      b->ensure_grad();
      for (std::size_t i = 0; i < b->size(); ++i) b->grad[i] += out->grad[i] * a->data[i];
    }
  });
}

TensorPtr Tape::scale(const TensorPtr& t, double a) {
  auto out = Tensor::make(t->shape);
  kernels::scale(out->data.data(), t->data.data(), a, t->size());
  return record("scale", out, [t, out, a] {
    if (!t->wants_grad()) return;
    t->ensure_grad();
    kernels::axpy(t->grad.data(), out->grad.data(), a, t->size());
  });
}

TensorPtr Tape::sum(const TensorPtr& t) {
  auto out = Tensor::scalar(kernels::sum(t->data.data(), t->size()));
  return record("sum", out, [t, out] {
    if (!t->wants_grad()) return;
    t->ensure_grad();
    const double g = out->grad[0];
    for (std::size_t i = 0; i < t->size(); ++i) t->grad[i] += g;
  });
}

TensorPtr Tape::mean(const TensorPtr& t) {
  require(t->size() > 0, "mean: empty tensor");
  return scale(sum(t), 1.0 / static_cast<double>(t->size()));
}

TensorPtr Tape::reshape(const TensorPtr& t, std::vector<std::size_t> shape) {
  require(shape_product(shape) == t->size(),
          "reshape: size mismatch, " + t->shape_str() + " to requested product " +
              std::to_string(shape_product(shape)));
  auto out = Tensor::from(std::move(shape), t->data);
  return record("reshape", out, [t, out] {
    if (!t->wants_grad()) return;
    t->ensure_grad();
    kernels::axpy(t->grad.data(), out->grad.data(), 1.0, t->size());
  });
}

TensorPtr Tape::concat_cols(const std::vector<TensorPtr>& parts) {
  require(!parts.empty(), "concat_cols: no parts");
  const std::size_t N = parts[0]->dim(0);
  std::size_t total = 0;
  for (const auto& p : parts) {
    require(p->rank() == 2, "concat_cols: parts must be [N,*], got " + p->shape_str());
    require(p->dim(0) == N, "concat_cols: row counts disagree, " + p->shape_str());
    total += p->dim(1);
  }
  auto out = Tensor::make({N, total});
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t F = p->dim(1);
    for (std::size_t n = 0; n < N; ++n)
      std::copy(p->data.begin() + n * F, p->data.begin() + (n + 1) * F,
                out->data.begin() + n * total + off);
    off += F;
  }
  return record("concat_cols", out, [parts, out, N, total] {
    std::size_t off = 0;
    for (const auto& p : parts) {
      const std::size_t F = p->dim(1);
      if (p->wants_grad()) {
        p->ensure_grad();
        for (std::size_t n = 0; n < N; ++n)
          kernels::axpy(p->grad.data() + n * F, out->grad.data() + n * total + off, 1.0, F);
      }
      off += F;
    }
  });
}

TensorPtr Tape::slice_cols(const TensorPtr& t, std::size_t begin, std::size_t end) {
  require(t->rank() == 2, "slice_cols: input must be [N,F], got " + t->shape_str());
  require(begin < end && end <= t->dim(1),
          "slice_cols: range [" + std::to_string(begin) + "," + std::to_string(end) +
              ") outside " + t->shape_str());
  const std::size_t N = t->dim(0), F = t->dim(1), G = end - begin;
  auto out = Tensor::make({N, G});
  for (std::size_t n = 0; n < N; ++n)
    std::copy(t->data.begin() + n * F + begin, t->data.begin() + n * F + end,
              out->data.begin() + n * G);
  return record("slice_cols", out, [t, out, begin, N, F, G] {
    if (!t->wants_grad()) return;
    t->ensure_grad();
    for (std::size_t n = 0; n < N; ++n)
      kernels::axpy(t->grad.data() + n * F + begin, out->grad.data() + n * G, 1.0, G);
  });
}

TensorPtr Tape::slice_rows(const TensorPtr& t, std::size_t begin, std::size_t end) {
  require(t->rank() == 2, "slice_rows: input must be [N,F], got " + t->shape_str());
  require(begin < end && end <= t->dim(0),
          "slice_rows: range [" + std::to_string(begin) + "," + std::to_string(end) +
              ") outside " + t->shape_str());
  const std::size_t F = t->dim(1), G = end - begin;
  auto out = Tensor::make({G, F});
  std::copy(t->data.begin() + begin * F, t->data.begin() + end * F, out->data.begin());
  return record("slice_rows", out, [t, out, begin, F, G] {
    if (!t->wants_grad()) return;
    t->ensure_grad();
    kernels::axpy(t->grad.data() + begin * F, out->grad.data(), 1.0, G * F);
  });
}

TensorPtr Tape::pick(const TensorPtr& t, std::size_t flat_index) {
  require(flat_index < t->size(),
          "pick: index " + std::to_string(flat_index) + " out of range " + std::to_string(t->size()));
  auto out = Tensor::scalar(t->data[flat_index]);
  return record("pick", out, [t, out, flat_index] {
    if (!t->wants_grad()) return;
    t->ensure_grad();
    t->grad[flat_index] += out->grad[0];
  });
}

TensorPtr Tape::clamp01(const TensorPtr& t) {
  auto out = Tensor::make(t->shape);
  kernels::clamp(out->data.data(), t->data.data(), 0.0, 1.0, t->size());
  return record("clamp01", out, [t, out] {
    if (!t->wants_grad()) return;
    t->ensure_grad();
    for (std::size_t i = 0; i < t->size(); ++i)
      if (t->data[i] >= 0.0 && t->data[i] <= 1.0) t->grad[i] += out->grad[i];
  });
}

TensorPtr Tape::clamp_min(const TensorPtr& t, double c) {
  auto out = Tensor::make(t->shape);
  for (std::size_t i = 0; i < t->size(); ++i) out->data[i] = std::max(t->data[i], c);
  return record("clamp_min", out, [t, out, c] {
    if (!t->wants_grad()) return;
    t->ensure_grad();
    for (std::size_t i = 0; i < t->size(); ++i)
      if (t->data[i] >= c) t->grad[i] += out->grad[i];
  });
}

// ---------------------------------------------------------------------------

void Tape::backward(const TensorPtr& loss) {
  require(loss->size() == 1, "backward: loss must be scalar, got " + loss->shape_str());
  require(loss->tape_tag == this, "backward: loss was not produced on this tape");
  for (auto& op : ops_) op.output->ensure_grad();
  loss->grad[0] = 1.0;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) it->backward();
}

}  // namespace advforge
