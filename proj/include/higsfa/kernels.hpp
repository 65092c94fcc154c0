#pragma once

#include <cstddef>

namespace higsfa::kernels {

// Data-parallel inner loops used by moment accumulation, delta evaluation
// and the nonlinear expansions.  Every kernel has a scalar reference
// implementation and may have SIMD variants; the active variant is chosen
// once at startup from CPU features and can be overridden for testing.
enum class Backend { scalar = 0, avx2 = 1 };

Backend active_backend();
bool backend_supported(Backend b);
void set_backend(Backend b);  // throws ConfigError if unsupported
const char* backend_name(Backend b);

double dot(const double* x, const double* y, std::size_t n);

// y += a * x
void axpy(double a, const double* x, double* y, std::size_t n);

// acc[k] += w * (b[k] - a[k])^2
void sq_diff_accum(double w, const double* a, const double* b, double* acc, std::size_t n);

// Upper-triangular rank-1 update of a row-major d x d matrix:
//   c[i*ldc + j] += w * x[i] * x[j]   for i <= j
void syr_upper(double w, const double* x, std::size_t d, double* c, std::size_t ldc);

// Upper-triangular symmetric rank-2 update:
//   c[i*ldc + j] += w * (x[i]*y[j] + y[i]*x[j])   for i <= j
void syr2_upper(double w, const double* x, const double* y, std::size_t d, double* c,
                std::size_t ldc);

// out[m] = s * x[i] * x[j] over pairs i <= j in row-major upper order;
// writes n*(n+1)/2 values.
void scaled_upper_products(double s, const double* x, std::size_t n, double* out);

// out[i] = max(x[i], x[i+1]); writes n-1 values.
void pairwise_max(const double* x, std::size_t n, double* out);

}  // namespace higsfa::kernels
