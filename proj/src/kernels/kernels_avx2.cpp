// AVX2/FMA kernel variants.  This translation unit is compiled with
// -mavx2 -mfma and must only be entered through the runtime dispatcher.

#if defined(HIGSFA_KERNELS_AVX2)

#include <immintrin.h>

#include <algorithm>
#include <cstddef>

namespace higsfa::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d sum2 = _mm_add_pd(lo, hi);
  const __m128d swapped = _mm_unpackhi_pd(sum2, sum2);
  return _mm_cvtsd_f64(_mm_add_sd(sum2, swapped));
}

}  // namespace

double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k), acc);
  }
  double total = hsum(acc);
  for (; k < n; ++k) total += x[k] * y[k];
  return total;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k));
    _mm256_storeu_pd(y + k, vy);
  }
  for (; k < n; ++k) y[k] += a * x[k];
}

void sq_diff_accum(double w, const double* a, const double* b, double* acc, std::size_t n) {
  const __m256d vw = _mm256_set1_pd(w);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(b + k), _mm256_loadu_pd(a + k));
    const __m256d wd = _mm256_mul_pd(vw, d);
    _mm256_storeu_pd(acc + k, _mm256_fmadd_pd(wd, d, _mm256_loadu_pd(acc + k)));
  }
  for (; k < n; ++k) {
    const double d = b[k] - a[k];
    acc[k] += w * d * d;
  }
}

void syr_upper(double w, const double* x, std::size_t d, double* c, std::size_t ldc) {
  for (std::size_t i = 0; i < d; ++i) {
    const double wxi = w * x[i];
    const __m256d vwxi = _mm256_set1_pd(wxi);
    double* row = c + i * ldc;
    std::size_t j = i;
    for (; j + 4 <= d; j += 4) {
      const __m256d vr = _mm256_fmadd_pd(vwxi, _mm256_loadu_pd(x + j), _mm256_loadu_pd(row + j));
      _mm256_storeu_pd(row + j, vr);
    }
    for (; j < d; ++j) row[j] += wxi * x[j];
  }
}

void syr2_upper(double w, const double* x, const double* y, std::size_t d, double* c,
                std::size_t ldc) {
  for (std::size_t i = 0; i < d; ++i) {
    const __m256d vwxi = _mm256_set1_pd(w * x[i]);
    const __m256d vwyi = _mm256_set1_pd(w * y[i]);
    double* row = c + i * ldc;
    std::size_t j = i;
    for (; j + 4 <= d; j += 4) {
      __m256d vr = _mm256_loadu_pd(row + j);
      vr = _mm256_fmadd_pd(vwxi, _mm256_loadu_pd(y + j), vr);
      vr = _mm256_fmadd_pd(vwyi, _mm256_loadu_pd(x + j), vr);
      _mm256_storeu_pd(row + j, vr);
    }
    for (; j < d; ++j) row[j] += w * (x[i] * y[j] + y[i] * x[j]);
  }
}

void scaled_upper_products(double s, const double* x, std::size_t n, double* out) {
  std::size_t m = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sxi = s * x[i];
    const __m256d vsxi = _mm256_set1_pd(sxi);
    std::size_t j = i;
    for (; j + 4 <= n; j += 4, m += 4) {
      _mm256_storeu_pd(out + m, _mm256_mul_pd(vsxi, _mm256_loadu_pd(x + j)));
    }
    for (; j < n; ++j) out[m++] = sxi * x[j];
  }
}

void pairwise_max(const double* x, std::size_t n, double* out) {
  if (n < 2) return;
  std::size_t i = 0;
  for (; i + 5 <= n; i += 4) {
    const __m256d a = _mm256_loadu_pd(x + i);
    const __m256d b = _mm256_loadu_pd(x + i + 1);
    _mm256_storeu_pd(out + i, _mm256_max_pd(a, b));
  }
  for (; i + 1 < n; ++i) out[i] = std::max(x[i], x[i + 1]);
}

}  // namespace higsfa::kernels::avx2

#endif  // HIGSFA_KERNELS_AVX2
