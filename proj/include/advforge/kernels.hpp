// Data-parallel inner loops behind the tensor engine, SMOTE distances and
// the optimizers. Every kernel has a scalar reference implementation and an
// AVX2 variant selected at runtime; the two are bit-identical by
// construction (equivalence-tested), so dispatch never changes results.
//
// Reductions (dot, sum, sqdist) use one fixed accumulation order: 16
// strided partial sums combined by a balanced pairwise tree, then the tail
// added sequentially. That single order is what makes training trajectories
// reproducible regardless of the selected backend.
#pragma once

#include <cstddef>

namespace advforge::kernels {

enum class Backend { scalar, avx2 };

// Backend selected at startup: AVX2 when the CPU supports it, unless
// ADVFORGE_KERNELS=scalar|avx2 overrides.
Backend active();
const char* backend_name();
bool avx2_available();
// Test hook; throws ValidationError if the backend is unavailable.
void force_backend(Backend b);

// y[i] += a * x[i]
void axpy(double* y, const double* x, double a, std::size_t n);
// y[i] = a * x[i]
void scale(double* y, const double* x, double a, std::size_t n);
void add(double* dst, const double* a, const double* b, std::size_t n);
void sub(double* dst, const double* a, const double* b, std::size_t n);
void mul(double* dst, const double* a, const double* b, std::size_t n);
// dst[i] = max(x[i], 0)
void relu(double* dst, const double* x, std::size_t n);
// dst[i] = min(max(x[i], lo), hi)
void clamp(double* dst, const double* x, double lo, double hi, std::size_t n);

double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
// squared L2 distance
double sqdist(const double* a, const double* b, std::size_t n);

// Direct entry points for the scalar/SIMD equivalence tests.
namespace scalar {
void axpy(double* y, const double* x, double a, std::size_t n);
void scale(double* y, const double* x, double a, std::size_t n);
void add(double* dst, const double* a, const double* b, std::size_t n);
void sub(double* dst, const double* a, const double* b, std::size_t n);
void mul(double* dst, const double* a, const double* b, std::size_t n);
void relu(double* dst, const double* x, std::size_t n);
void clamp(double* dst, const double* x, double lo, double hi, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
double sqdist(const double* a, const double* b, std::size_t n);
}  // namespace scalar

#ifdef ADVFORGE_HAVE_AVX2
namespace avx2 {
void axpy(double* y, const double* x, double a, std::size_t n);
void scale(double* y, const double* x, double a, std::size_t n);
void add(double* dst, const double* a, const double* b, std::size_t n);
void sub(double* dst, const double* a, const double* b, std::size_t n);
void mul(double* dst, const double* a, const double* b, std::size_t n);
void relu(double* dst, const double* x, std::size_t n);
void clamp(double* dst, const double* x, double lo, double hi, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
double sqdist(const double* a, const double* b, std::size_t n);
}  // namespace avx2
#endif

// Combine 16 partial sums with a fixed pairwise tree. Shared by all
// reduction variants so their results agree to the last bit.
inline double combine16(const double* acc) {
  double s0 = (acc[0] + acc[1]) + (acc[2] + acc[3]);
  double s1 = (acc[4] + acc[5]) + (acc[6] + acc[7]);
  double s2 = (acc[8] + acc[9]) + (acc[10] + acc[11]);
  double s3 = (acc[12] + acc[13]) + (acc[14] + acc[15]);
  return (s0 + s1) + (s2 + s3);
}

}  // namespace advforge::kernels
