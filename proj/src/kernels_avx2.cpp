// AVX2 kernel variants. Compiled with -mavx2 only; never with -mfma, and the
// whole project builds with -ffp-contract=off, so every lane performs the
// same rounded multiply-then-add as the scalar reference. Reductions keep
// four vector accumulators whose 16 lanes map onto the reference's 16
// strided partial sums, then reuse the same combine tree.

#include "advforge/kernels.hpp"

#include <immintrin.h>

#include <algorithm>

namespace advforge::kernels::avx2 {

void axpy(double* y, const double* x, double a, std::size_t n) {
  __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d x0 = _mm256_loadu_pd(x + i);
    __m256d x1 = _mm256_loadu_pd(x + i + 4);
    __m256d y0 = _mm256_loadu_pd(y + i);
    __m256d y1 = _mm256_loadu_pd(y + i + 4);
    _mm256_storeu_pd(y + i, _mm256_add_pd(y0, _mm256_mul_pd(va, x0)));
    _mm256_storeu_pd(y + i + 4, _mm256_add_pd(y1, _mm256_mul_pd(va, x1)));
  }
  for (; i + 4 <= n; i += 4) {
    __m256d x0 = _mm256_loadu_pd(x + i);
    __m256d y0 = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(y + i, _mm256_add_pd(y0, _mm256_mul_pd(va, x0)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scale(double* y, const double* x, double a, std::size_t n) {
  __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) y[i] = a * x[i];
}

void add(double* dst, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) dst[i] = a[i] + b[i];
}

void sub(double* dst, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(dst + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) dst[i] = a[i] - b[i];
}

void mul(double* dst, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(dst + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) dst[i] = a[i] * b[i];
}

void relu(double* dst, const double* x, std::size_t n) {
  __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(dst + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
  for (; i < n; ++i) dst[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void clamp(double* dst, const double* x, double lo, double hi, std::size_t n) {
  __m256d vlo = _mm256_set1_pd(lo);
  __m256d vhi = _mm256_set1_pd(hi);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    _mm256_storeu_pd(dst + i, _mm256_min_pd(_mm256_max_pd(v, vlo), vhi));
  }
  for (; i < n; ++i) dst[i] = std::min(std::max(x[i], lo), hi);
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t blocks = n / 16;
  for (std::size_t t = 0; t < blocks; ++t) {
    const double* pa = a + 16 * t;
    const double* pb = b + 16 * t;
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(pa), _mm256_loadu_pd(pb)));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(pa + 4), _mm256_loadu_pd(pb + 4)));
    acc2 = _mm256_add_pd(acc2, _mm256_mul_pd(_mm256_loadu_pd(pa + 8), _mm256_loadu_pd(pb + 8)));
    acc3 = _mm256_add_pd(acc3, _mm256_mul_pd(_mm256_loadu_pd(pa + 12), _mm256_loadu_pd(pb + 12)));
  }
  double acc[16];
  _mm256_storeu_pd(acc, acc0);
  _mm256_storeu_pd(acc + 4, acc1);
  _mm256_storeu_pd(acc + 8, acc2);
  _mm256_storeu_pd(acc + 12, acc3);
  double total = combine16(acc);
  for (std::size_t i = 16 * blocks; i < n; ++i) total += a[i] * b[i];
  return total;
}

double sum(const double* a, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t blocks = n / 16;
  for (std::size_t t = 0; t < blocks; ++t) {
    const double* pa = a + 16 * t;
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(pa));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(pa + 4));
    acc2 = _mm256_add_pd(acc2, _mm256_loadu_pd(pa + 8));
    acc3 = _mm256_add_pd(acc3, _mm256_loadu_pd(pa + 12));
  }
  double acc[16];
  _mm256_storeu_pd(acc, acc0);
  _mm256_storeu_pd(acc + 4, acc1);
  _mm256_storeu_pd(acc + 8, acc2);
  _mm256_storeu_pd(acc + 12, acc3);
  double total = combine16(acc);
  for (std::size_t i = 16 * blocks; i < n; ++i) total += a[i];
  return total;
}

double sqdist(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t blocks = n / 16;
  for (std::size_t t = 0; t < blocks; ++t) {
    const double* pa = a + 16 * t;
    const double* pb = b + 16 * t;
    __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(pa), _mm256_loadu_pd(pb));
    __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(pa + 4), _mm256_loadu_pd(pb + 4));
    __m256d d2 = _mm256_sub_pd(_mm256_loadu_pd(pa + 8), _mm256_loadu_pd(pb + 8));
    __m256d d3 = _mm256_sub_pd(_mm256_loadu_pd(pa + 12), _mm256_loadu_pd(pb + 12));
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(d0, d0));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(d1, d1));
    acc2 = _mm256_add_pd(acc2, _mm256_mul_pd(d2, d2));
    acc3 = _mm256_add_pd(acc3, _mm256_mul_pd(d3, d3));
  }
  double acc[16];
  _mm256_storeu_pd(acc, acc0);
  _mm256_storeu_pd(acc + 4, acc1);
  _mm256_storeu_pd(acc + 8, acc2);
  _mm256_storeu_pd(acc + 12, acc3);
  double total = combine16(acc);
  for (std::size_t i = 16 * blocks; i < n; ++i) {
    double d = a[i] - b[i];
    total += d * d;
  }
  return total;
}

}  // namespace advforge::kernels::avx2
