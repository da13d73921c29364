#pragma once

#include <string>
#include <utility>
#include <vector>

#include "advforge/tensor.hpp"

namespace advforge {

enum class Optimizer { sgd, adam };

// Named, ordered collection of trainable tensors plus adam state.
// Order is insertion order and is the serialization order.
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    TensorPtr tensor;
    std::vector<double> m;  // adam first moment
    std::vector<double> v;  // adam second moment
  };

  TensorPtr add(const std::string& name, TensorPtr t);
  TensorPtr get(const std::string& name) const;
  bool has(const std::string& name) const;

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t value_count() const;

  void zero_grads();
  void set_requires_grad(bool on);
  std::uint64_t step_count() const { return step_count_; }
  void set_step_count(std::uint64_t n) { step_count_ = n; }

 private:
  std::vector<Entry> entries_;
  std::uint64_t step_count_ = 0;
};

// One update over every entry with requires_grad set; grads zeroed afterward.
// adam: beta1=0.9 beta2=0.999 eps=1e-8, bias-corrected.
void optimizer_step(ParameterSet& params, Optimizer kind, double lr);

// RAII: clears requires_grad on every entry and restores the previous flags
// on exit. Backward passes inside the scope compute input/activation
// gradients only, which keeps attack loops and GradCAM from paying for (or
// accumulating) parameter gradients.
class ScopedFreeze {
 public:
  explicit ScopedFreeze(const ParameterSet& params);
  ~ScopedFreeze();
  ScopedFreeze(const ScopedFreeze&) = delete;
  ScopedFreeze& operator=(const ScopedFreeze&) = delete;

 private:
  std::vector<std::pair<TensorPtr, bool>> saved_;
};

// Versioned binary container: magic "ADVF", u32 version (=1), u32 entry count;
// per entry u32 name length, UTF-8 name, u32 rank, u64 LE dims, f32 LE values.
void save_params(const ParameterSet& params, const std::string& path);
ParameterSet load_params(const std::string& path);

}  // namespace advforge
