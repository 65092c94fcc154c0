#include "higsfa/kernels.hpp"

#include <algorithm>
#include <atomic>

#include "higsfa/types.hpp"

namespace higsfa::kernels {

namespace scalar {

double dot(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) acc += x[k] * y[k];
  return acc;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) y[k] += a * x[k];
}

void sq_diff_accum(double w, const double* a, const double* b, double* acc, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    const double d = b[k] - a[k];
    acc[k] += w * d * d;
  }
}

void syr_upper(double w, const double* x, std::size_t d, double* c, std::size_t ldc) {
  for (std::size_t i = 0; i < d; ++i) {
    const double wxi = w * x[i];
    double* row = c + i * ldc;
    for (std::size_t j = i; j < d; ++j) row[j] += wxi * x[j];
  }
}

void syr2_upper(double w, const double* x, const double* y, std::size_t d, double* c,
                std::size_t ldc) {
  for (std::size_t i = 0; i < d; ++i) {
    const double wxi = w * x[i];
    const double wyi = w * y[i];
    double* row = c + i * ldc;
    for (std::size_t j = i; j < d; ++j) row[j] += wxi * y[j] + wyi * x[j];
  }
}

void scaled_upper_products(double s, const double* x, std::size_t n, double* out) {
  std::size_t m = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sxi = s * x[i];
    for (std::size_t j = i; j < n; ++j) out[m++] = sxi * x[j];
  }
}

void pairwise_max(const double* x, std::size_t n, double* out) {
  for (std::size_t i = 0; i + 1 < n; ++i) out[i] = std::max(x[i], x[i + 1]);
}

}  // namespace scalar

#if defined(HIGSFA_KERNELS_AVX2)
namespace avx2 {
double dot(const double* x, const double* y, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void sq_diff_accum(double w, const double* a, const double* b, double* acc, std::size_t n);
void syr_upper(double w, const double* x, std::size_t d, double* c, std::size_t ldc);
void syr2_upper(double w, const double* x, const double* y, std::size_t d, double* c,
                std::size_t ldc);
void scaled_upper_products(double s, const double* x, std::size_t n, double* out);
void pairwise_max(const double* x, std::size_t n, double* out);
}  // namespace avx2
#endif

namespace {

bool cpu_has_avx2() {
#if defined(HIGSFA_KERNELS_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend detect_backend() { return cpu_has_avx2() ? Backend::avx2 : Backend::scalar; }

std::atomic<Backend> g_backend{detect_backend()};

}  // namespace

Backend active_backend() { return g_backend.load(std::memory_order_relaxed); }

bool backend_supported(Backend b) {
  switch (b) {
    case Backend::scalar: return true;
    case Backend::avx2: return cpu_has_avx2();
  }
  return false;
}

void set_backend(Backend b) {
  if (!backend_supported(b)) throw ConfigError("kernel backend not supported on this CPU");
  g_backend.store(b, std::memory_order_relaxed);
}

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
  }
  return "unknown";
}

#if defined(HIGSFA_KERNELS_AVX2)
#define HIGSFA_DISPATCH(fn, ...) \
  (active_backend() == Backend::avx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__))
#else
#define HIGSFA_DISPATCH(fn, ...) scalar::fn(__VA_ARGS__)
#endif

double dot(const double* x, const double* y, std::size_t n) { return HIGSFA_DISPATCH(dot, x, y, n); }

void axpy(double a, const double* x, double* y, std::size_t n) { HIGSFA_DISPATCH(axpy, a, x, y, n); }

void sq_diff_accum(double w, const double* a, const double* b, double* acc, std::size_t n) {
  HIGSFA_DISPATCH(sq_diff_accum, w, a, b, acc, n);
}

void syr_upper(double w, const double* x, std::size_t d, double* c, std::size_t ldc) {
  HIGSFA_DISPATCH(syr_upper, w, x, d, c, ldc);
}

void syr2_upper(double w, const double* x, const double* y, std::size_t d, double* c,
                std::size_t ldc) {
  HIGSFA_DISPATCH(syr2_upper, w, x, y, d, c, ldc);
}

void scaled_upper_products(double s, const double* x, std::size_t n, double* out) {
  HIGSFA_DISPATCH(scaled_upper_products, s, x, n, out);
}

void pairwise_max(const double* x, std::size_t n, double* out) {
  HIGSFA_DISPATCH(pairwise_max, x, n, out);
}

#undef HIGSFA_DISPATCH

}  // namespace higsfa::kernels
