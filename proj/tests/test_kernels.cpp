#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "higsfa/kernels.hpp"
#include "higsfa/rng.hpp"

using namespace higsfa;
namespace k = higsfa::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

// Runs f under both backends and returns the outputs for comparison.
template <typename F>
std::pair<std::vector<double>, std::vector<double>> both_backends(std::size_t out_size, F&& f) {
  std::vector<double> scalar_out(out_size, 0.0), simd_out(out_size, 0.0);
  k::set_backend(k::Backend::scalar);
  f(scalar_out.data());
  if (k::backend_supported(k::Backend::avx2)) {
    k::set_backend(k::Backend::avx2);
    f(simd_out.data());
    k::set_backend(k::Backend::scalar);
  } else {
    simd_out = scalar_out;
  }
  return {scalar_out, simd_out};
}

void check_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({1.0, std::abs(a[i]), std::abs(b[i])});
    CHECK(std::abs(a[i] - b[i]) <= tol * scale);
  }
}

}  // namespace

TEST_CASE("backend dispatch") {
  CHECK(k::backend_supported(k::Backend::scalar));
  CHECK(std::string(k::backend_name(k::Backend::scalar)) == "scalar");
  k::set_backend(k::Backend::scalar);
  CHECK(k::active_backend() == k::Backend::scalar);
}

TEST_CASE("dot and axpy variants agree") {
  Rng rng(42);
  for (std::size_t n : {1u, 3u, 4u, 7u, 16u, 129u}) {
    const auto x = random_vec(n, rng);
    const auto y = random_vec(n, rng);

    double d_scalar = 0.0, d_simd = 0.0;
    k::set_backend(k::Backend::scalar);
    d_scalar = k::dot(x.data(), y.data(), n);
    if (k::backend_supported(k::Backend::avx2)) {
      k::set_backend(k::Backend::avx2);
      d_simd = k::dot(x.data(), y.data(), n);
      k::set_backend(k::Backend::scalar);
    } else {
      d_simd = d_scalar;
    }
    CHECK(std::abs(d_scalar - d_simd) <= 1e-12 * std::max(1.0, std::abs(d_scalar)));

    auto [a_out, b_out] = both_backends(n, [&](double* out) {
      for (std::size_t i = 0; i < n; ++i) out[i] = y[i];
      k::axpy(0.37, x.data(), out, n);
    });
    check_close(a_out, b_out, 1e-13);
  }
}

TEST_CASE("squared difference accumulation variants agree") {
  Rng rng(7);
  for (std::size_t n : {2u, 5u, 8u, 33u}) {
    const auto a = random_vec(n, rng);
    const auto b = random_vec(n, rng);
    auto [s, v] = both_backends(n, [&](double* out) { k::sq_diff_accum(1.7, a.data(), b.data(), out, n); });
    check_close(s, v, 1e-13);
  }
}

TEST_CASE("rank-1 and rank-2 updates match the definition and each other") {
  Rng rng(11);
  for (std::size_t d : {1u, 4u, 6u, 13u}) {
    const auto x = random_vec(d, rng);
    const auto y = random_vec(d, rng);
    const double w = 0.83;

    auto [s1, v1] = both_backends(d * d, [&](double* c) { k::syr_upper(w, x.data(), d, c, d); });
    check_close(s1, v1, 1e-13);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j)
        CHECK(s1[i * d + j] == doctest::Approx(w * x[i] * x[j]).epsilon(1e-12));
    // Strictly lower triangle untouched.
    for (std::size_t i = 1; i < d; ++i)
      for (std::size_t j = 0; j < i; ++j) CHECK(s1[i * d + j] == 0.0);

    auto [s2, v2] =
        both_backends(d * d, [&](double* c) { k::syr2_upper(w, x.data(), y.data(), d, c, d); });
    check_close(s2, v2, 1e-13);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j)
        CHECK(s2[i * d + j] == doctest::Approx(w * (x[i] * y[j] + y[i] * x[j])).epsilon(1e-12));
  }
}

TEST_CASE("expansion kernels match their definitions") {
  Rng rng(3);
  for (std::size_t n : {2u, 3u, 9u, 20u}) {
    const auto x = random_vec(n, rng);
    const std::size_t m = n * (n + 1) / 2;
    auto [s, v] = both_backends(m, [&](double* out) { k::scaled_upper_products(0.5, x.data(), n, out); });
    check_close(s, v, 1e-14);
    std::size_t idx = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j)
        CHECK(s[idx++] == doctest::Approx(0.5 * x[i] * x[j]).epsilon(1e-13));

    auto [ms, mv] = both_backends(n - 1, [&](double* out) { k::pairwise_max(x.data(), n, out); });
    check_close(ms, mv, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) CHECK(ms[i] == std::max(x[i], x[i + 1]));
  }
}
