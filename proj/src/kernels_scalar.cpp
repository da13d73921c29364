// Scalar reference kernels. These define the numerics: the AVX2 variants
// must reproduce them bit for bit (see tests/test_kernels.cpp).

#include "advforge/kernels.hpp"

#include <algorithm>

namespace advforge::kernels::scalar {

void axpy(double* y, const double* x, double a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale(double* y, const double* x, double a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i];
}

void add(double* dst, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] + b[i];
}

void sub(double* dst, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] - b[i];
}

void mul(double* dst, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] * b[i];
}

void relu(double* dst, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void clamp(double* dst, const double* x, double lo, double hi, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = std::min(std::max(x[i], lo), hi);
}

double dot(const double* a, const double* b, std::size_t n) {
  double acc[16] = {};
  std::size_t blocks = n / 16;
  for (std::size_t t = 0; t < blocks; ++t) {
    const double* pa = a + 16 * t;
    const double* pb = b + 16 * t;
    for (int j = 0; j < 16; ++j) acc[j] += pa[j] * pb[j];
  }
  double total = combine16(acc);
  for (std::size_t i = 16 * blocks; i < n; ++i) total += a[i] * b[i];
  return total;
}

double sum(const double* a, std::size_t n) {
  double acc[16] = {};
  std::size_t blocks = n / 16;
  for (std::size_t t = 0; t < blocks; ++t) {
    const double* pa = a + 16 * t;
    for (int j = 0; j < 16; ++j) acc[j] += pa[j];
  }
  double total = combine16(acc);
  for (std::size_t i = 16 * blocks; i < n; ++i) total += a[i];
  return total;
}

double sqdist(const double* a, const double* b, std::size_t n) {
  double acc[16] = {};
  std::size_t blocks = n / 16;
  for (std::size_t t = 0; t < blocks; ++t) {
    const double* pa = a + 16 * t;
    const double* pb = b + 16 * t;
    for (int j = 0; j < 16; ++j) {
      double d = pa[j] - pb[j];
      acc[j] += d * d;
    }
  }
  double total = combine16(acc);
  for (std::size_t i = 16 * blocks; i < n; ++i) {
    double d = a[i] - b[i];
    total += d * d;
  }
  return total;
}

}  // namespace advforge::kernels::scalar
