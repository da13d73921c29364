#include "advforge/params.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "advforge/error.hpp"

namespace advforge {

namespace {

constexpr char kMagic[4] = {'A', 'D', 'V', 'F'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

void put_f32(std::ostream& os, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(os, bits);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  require(is.good(), "model container truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  require(is.good(), "model container truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

float get_f32(std::istream& is) {
  std::uint32_t bits = get_u32(is);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace

TensorPtr ParameterSet::add(const std::string& name, TensorPtr t) {
  require(!has(name), "duplicate parameter name: " + name);
  t->requires_grad = true;
  entries_.push_back(Entry{name, t, {}, {}});
  return entries_.back().tensor;
}

TensorPtr ParameterSet::get(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e.tensor;
  throw ValidationError("unknown parameter: " + name);
}

bool ParameterSet::has(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return true;
  return false;
}

std::size_t ParameterSet::value_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor->size();
  return n;
}

void ParameterSet::zero_grads() {
  for (auto& e : entries_) e.tensor->zero_grad();
}

void ParameterSet::set_requires_grad(bool on) {
  for (auto& e : entries_) e.tensor->requires_grad = on;
}

ScopedFreeze::ScopedFreeze(const ParameterSet& params) {
  for (const auto& e : params.entries()) {
    saved_.emplace_back(e.tensor, e.tensor->requires_grad);
    e.tensor->requires_grad = false;
  }
}

ScopedFreeze::~ScopedFreeze() {
  for (auto& [t, flag] : saved_) t->requires_grad = flag;
}

void optimizer_step(ParameterSet& params, Optimizer kind, double lr) {
  require(lr > 0.0, "optimizer_step: lr must be positive");
  const std::uint64_t t = params.step_count() + 1;
  for (auto& e : params.entries()) {
    Tensor& p = *e.tensor;
    if (!p.requires_grad) continue;
    require(p.grad.size() == p.data.size(), "optimizer_step: missing gradient for parameter " + e.name);
    if (kind == Optimizer::sgd) {
      for (std::size_t i = 0; i < p.data.size(); ++i) p.data[i] -= lr * p.grad[i];
    } else {
      constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
      if (e.m.size() != p.data.size()) {
        e.m.assign(p.data.size(), 0.0);
        e.v.assign(p.data.size(), 0.0);
      }
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
      for (std::size_t i = 0; i < p.data.size(); ++i) {
        const double g = p.grad[i];
        e.m[i] = b1 * e.m[i] + (1.0 - b1) * g;
        e.v[i] = b2 * e.v[i] + (1.0 - b2) * g * g;
        p.data[i] -= lr * (e.m[i] / c1) / (std::sqrt(e.v[i] / c2) + eps);
      }
    }
    p.zero_grad();
  }
  params.set_step_count(t);
}

void save_params(const ParameterSet& params, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw RuntimeError("cannot write model container: " + path);
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  put_u32(os, static_cast<std::uint32_t>(params.size()));
  for (const auto& e : params.entries()) {
    put_u32(os, static_cast<std::uint32_t>(e.name.size()));
    os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put_u32(os, static_cast<std::uint32_t>(e.tensor->rank()));
    for (std::size_t d : e.tensor->shape) put_u64(os, d);
    for (double v : e.tensor->data) put_f32(os, static_cast<float>(v));
  }
  if (!os) throw RuntimeError("write failed: " + path);
}

ParameterSet load_params(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw RuntimeError("cannot open model container: " + path);
  char magic[4];
  is.read(magic, 4);
  require(is.good() && std::memcmp(magic, kMagic, 4) == 0,
          "not a model container (bad magic): " + path);
  const std::uint32_t version = get_u32(is);
  require(version == kVersion,
          "unsupported model container version " + std::to_string(version) + " in " + path);
  const std::uint32_t count = get_u32(is);
  ParameterSet params;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = get_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    require(is.good(), "model container truncated: " + path);
    const std::uint32_t rank = get_u32(is);
    std::vector<std::size_t> shape(rank);
    std::size_t total = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      shape[d] = static_cast<std::size_t>(get_u64(is));
      total *= shape[d];
    }
    auto t = Tensor::make(shape, true);
    for (std::size_t j = 0; j < total; ++j) t->data[j] = static_cast<double>(get_f32(is));
    params.add(name, t);
  }
  return params;
}

}  // namespace advforge
