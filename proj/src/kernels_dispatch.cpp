#include "advforge/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <string>

#include "advforge/error.hpp"

namespace advforge::kernels {

namespace {

struct Vtable {
  void (*axpy)(double*, const double*, double, std::size_t);
  void (*scale)(double*, const double*, double, std::size_t);
  void (*add)(double*, const double*, const double*, std::size_t);
  void (*sub)(double*, const double*, const double*, std::size_t);
  void (*mul)(double*, const double*, const double*, std::size_t);
  void (*relu)(double*, const double*, std::size_t);
  void (*clamp)(double*, const double*, double, double, std::size_t);
  double (*dot)(const double*, const double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  double (*sqdist)(const double*, const double*, std::size_t);
};

constexpr Vtable kScalar = {
    scalar::axpy, scalar::scale, scalar::add,    scalar::sub, scalar::mul,
    scalar::relu, scalar::clamp, scalar::dot,    scalar::sum, scalar::sqdist,
};

#ifdef ADVFORGE_HAVE_AVX2
constexpr Vtable kAvx2 = {
    avx2::axpy, avx2::scale, avx2::add,    avx2::sub, avx2::mul,
    avx2::relu, avx2::clamp, avx2::dot,    avx2::sum, avx2::sqdist,
};
#endif

bool cpu_has_avx2() {
#ifdef ADVFORGE_HAVE_AVX2
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

Backend pick_default() {
  if (const char* env = std::getenv("ADVFORGE_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
    if (std::strcmp(env, "avx2") == 0) {
      if (!cpu_has_avx2())
        throw ValidationError("ADVFORGE_KERNELS=avx2 but AVX2 is unavailable");
      return Backend::avx2;
    }
  }
  return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
}

Backend g_backend = pick_default();

const Vtable* table_for(Backend b) {
#ifdef ADVFORGE_HAVE_AVX2
  if (b == Backend::avx2) return &kAvx2;
#endif
  return &kScalar;
}

const Vtable* g_vt = table_for(g_backend);

}  // namespace

Backend active() { return g_backend; }

const char* backend_name() {
  return g_backend == Backend::avx2 ? "avx2" : "scalar";
}

bool avx2_available() { return cpu_has_avx2(); }

void force_backend(Backend b) {
  if (b == Backend::avx2 && !cpu_has_avx2())
    throw ValidationError("cannot force avx2 kernels: unsupported on this CPU");
  g_backend = b;
  g_vt = table_for(b);
}

void axpy(double* y, const double* x, double a, std::size_t n) { g_vt->axpy(y, x, a, n); }
void scale(double* y, const double* x, double a, std::size_t n) { g_vt->scale(y, x, a, n); }
void add(double* dst, const double* a, const double* b, std::size_t n) { g_vt->add(dst, a, b, n); }
void sub(double* dst, const double* a, const double* b, std::size_t n) { g_vt->sub(dst, a, b, n); }
void mul(double* dst, const double* a, const double* b, std::size_t n) { g_vt->mul(dst, a, b, n); }
void relu(double* dst, const double* x, std::size_t n) { g_vt->relu(dst, x, n); }
void clamp(double* dst, const double* x, double lo, double hi, std::size_t n) {
  g_vt->clamp(dst, x, lo, hi, n);
}
double dot(const double* a, const double* b, std::size_t n) { return g_vt->dot(a, b, n); }
double sum(const double* a, std::size_t n) { return g_vt->sum(a, n); }
double sqdist(const double* a, const double* b, std::size_t n) { return g_vt->sqdist(a, b, n); }

}  // namespace advforge::kernels
