// Dense-tensor engine with reverse-mode differentiation. A Tape records
// every executed operation in topological order; backward() walks the
// record once in reverse and accumulates gradients additively into every
// tensor that wants them. Tensors and tapes are confined to one thread.
#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace advforge {

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

class Tensor {
 public:
  std::vector<std::size_t> shape;
  std::vector<double> data;   // row-major
  std::vector<double> grad;   // empty until a backward pass touches it
  bool requires_grad = false;
  // Set when this tensor was produced by a recorded operation; such
  // tensors receive gradients so the chain can continue through them.
  const void* tape_tag = nullptr;

  static TensorPtr make(std::vector<std::size_t> shape, bool requires_grad = false);
  static TensorPtr from(std::vector<std::size_t> shape, std::vector<double> values,
                        bool requires_grad = false);
  static TensorPtr scalar(double v, bool requires_grad = false);

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape[i]; }

  bool wants_grad() const { return requires_grad || tape_tag != nullptr; }
  void ensure_grad();
  void zero_grad();
  bool all_finite() const;
  std::string shape_str() const;
};

// One recorded operation. Inputs are captured by the backward closure.
struct TapeOp {
  const char* name;
  TensorPtr output;
  std::function<void()> backward;
};

class Tape {
 public:
  // Valid (no-pad) convolution. input [N,C,H,W], kernels [K,C,kh,kw],
  // bias [K]; output [N,K,H',W'] with H' = (H-kh)/stride + 1.
  TensorPtr conv2d(const TensorPtr& input, const TensorPtr& kernels,
                   const TensorPtr& bias, std::size_t stride = 1);
  // Affine map. input [N,F], weight [F,G], bias [G] -> [N,G].
  TensorPtr dense(const TensorPtr& input, const TensorPtr& weight, const TensorPtr& bias);

  TensorPtr relu(const TensorPtr& t);
  TensorPtr tanh(const TensorPtr& t);
  TensorPtr sigmoid(const TensorPtr& t);
  // 2x2 max pooling, stride 2, floor semantics on odd extents. [N,C,H,W].
  TensorPtr maxpool2(const TensorPtr& t);
  // Softmax over the last axis, shifted by the row max.
  TensorPtr softmax(const TensorPtr& t);

  // Mean over rows of -log p[target]; logs clamped at 1e-12. probs [N,C].
  TensorPtr categorical_cross_entropy(const TensorPtr& probs, const std::vector<int>& targets);
  TensorPtr categorical_cross_entropy(const TensorPtr& probs, const TensorPtr& one_hot);
  // Mean of -[t log p + (1-t) log(1-p)]; p in (0,1), logs clamped at 1e-12.
  TensorPtr binary_cross_entropy(const TensorPtr& probs, const std::vector<double>& targets);

  TensorPtr add(const TensorPtr& a, const TensorPtr& b);
  TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
  TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
  TensorPtr scale(const TensorPtr& t, double a);
  TensorPtr sum(const TensorPtr& t);
  TensorPtr mean(const TensorPtr& t);
  TensorPtr reshape(const TensorPtr& t, std::vector<std::size_t> shape);
  // Column-wise concat/slice of 2-d tensors [N,*].
  TensorPtr concat_cols(const std::vector<TensorPtr>& parts);
  TensorPtr slice_cols(const TensorPtr& t, std::size_t begin, std::size_t end);
  TensorPtr slice_rows(const TensorPtr& t, std::size_t begin, std::size_t end);
  // Gather one element as a scalar tensor.
  TensorPtr pick(const TensorPtr& t, std::size_t flat_index);
  // Clamp to [0,1]; gradient passes where the input is inside the box.
  TensorPtr clamp01(const TensorPtr& t);
  // max(t, c) elementwise; gradient passes where t >= c.
  TensorPtr clamp_min(const TensorPtr& t, double c);

  // Reverse sweep from a scalar loss recorded on this tape.
  void backward(const TensorPtr& loss);

  std::size_t op_count() const { return ops_.size(); }
  void clear() { ops_.clear(); }

 private:
  TensorPtr record(const char* name, TensorPtr out, std::function<void()> bw);
  std::vector<TapeOp> ops_;
};

}  // namespace advforge
