// Equivalence of the runtime-selected SIMD kernels against the scalar
// reference. Elementwise kernels must match bit for bit; gemm is compared at
// float rounding tolerance because the AVX2 path accumulates with FMA.

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"
#include "transmef/kernels.hpp"
#include "transmef/rng.hpp"

using namespace transmef;
using kernels::Trans;

namespace {

std::vector<float> random_vec(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(lo, hi));
  return v;
}

bool bit_equal(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

}  // namespace

TEST_CASE("active kernel table reports its ISA") {
  const auto& t = kernels::active();
  MESSAGE("active kernels: " << std::string(t.name));
  CHECK((t.isa == kernels::Isa::kScalar || t.isa == kernels::Isa::kAvx2));
}

TEST_CASE("gemm reference matches naive triple loop") {
  Rng rng(1);
  const std::size_t m = 5, n = 7, k = 3;
  auto a = random_vec(rng, m * k), b = random_vec(rng, k * n), c = random_vec(rng, m * n);
  auto expected = c;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0;
      for (std::size_t p = 0; p < k; ++p) s += double(a[i * k + p]) * b[p * n + j];
      expected[i * n + j] = static_cast<float>(2.0 * s + 0.5 * c[i * n + j]);
    }
  kernels::ref::gemm<float>(Trans::kNo, Trans::kNo, m, n, k, 2.0f, a.data(), k, b.data(), n, 0.5f,
                            c.data(), n);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == doctest::Approx(expected[i]).epsilon(1e-5));
}

TEST_CASE("avx2 gemm agrees with scalar reference across shapes and transposes") {
  const auto* simd = kernels::avx2_table();
  if (!simd) {
    MESSAGE("AVX2 kernels unavailable; skipping");
    return;
  }
  Rng rng(7);
  const std::size_t shapes[][3] = {{1, 1, 1},   {6, 16, 8},   {7, 17, 9},     {13, 33, 300},
                                   {64, 4096 / 16, 576 / 4}, {97, 50, 513}, {3, 2100, 5}, {64, 576, 300}};
  for (const auto& s : shapes) {
    const std::size_t m = s[0], n = s[1], k = s[2];
    for (Trans ta : {Trans::kNo, Trans::kYes})
      for (Trans tb : {Trans::kNo, Trans::kYes})
        for (float beta : {0.0f, 1.0f}) {
          auto a = random_vec(rng, m * k), b = random_vec(rng, k * n), c0 = random_vec(rng, m * n);
          const std::size_t lda = ta == Trans::kNo ? k : m;
          const std::size_t ldb = tb == Trans::kNo ? n : k;
          auto c_ref = c0, c_simd = c0;
          kernels::scalar_table().gemm(ta, tb, m, n, k, 1.5f, a.data(), lda, b.data(), ldb, beta,
                                       c_ref.data(), n);
          simd->gemm(ta, tb, m, n, k, 1.5f, a.data(), lda, b.data(), ldb, beta, c_simd.data(), n);
          double worst = 0;
          for (std::size_t i = 0; i < c_ref.size(); ++i)
            worst = std::max(worst, std::abs(double(c_ref[i]) - c_simd[i]) / (1.0 + std::abs(c_ref[i])));
          INFO("m=" << m << " n=" << n << " k=" << k);
          CHECK(worst < 1e-5 * std::sqrt(double(k)));
        }
  }
}

TEST_CASE("avx2 elementwise kernels are bit-identical to scalar") {
  const auto* simd = kernels::avx2_table();
  if (!simd) {
    MESSAGE("AVX2 kernels unavailable; skipping");
    return;
  }
  const auto& ref = kernels::scalar_table();
  Rng rng(11);
  for (std::size_t n : {1u, 7u, 8u, 9u, 31u, 1000u, 4099u}) {
    auto a = random_vec(rng, n), b = random_vec(rng, n);
    a[0] = -0.0f;
    std::vector<float> r1(n), r2(n);

    ref.add(n, a.data(), b.data(), r1.data());
    simd->add(n, a.data(), b.data(), r2.data());
    CHECK(bit_equal(r1, r2));

    ref.mul(n, a.data(), b.data(), r1.data());
    simd->mul(n, a.data(), b.data(), r2.data());
    CHECK(bit_equal(r1, r2));

    r1 = b;
    r2 = b;
    ref.axpy(n, -0.37f, a.data(), r1.data());
    simd->axpy(n, -0.37f, a.data(), r2.data());
    CHECK(bit_equal(r1, r2));

    ref.relu(n, a.data(), r1.data());
    simd->relu(n, a.data(), r2.data());
    CHECK(bit_equal(r1, r2));

    r1 = b;
    r2 = b;
    ref.relu_backward(n, a.data(), b.data(), r1.data());
    simd->relu_backward(n, a.data(), b.data(), r2.data());
    CHECK(bit_equal(r1, r2));
  }
}

TEST_CASE("avx2 adam update is bit-identical to scalar") {
  const auto* simd = kernels::avx2_table();
  if (!simd) return;
  Rng rng(3);
  const std::size_t n = 1003;
  auto p1 = random_vec(rng, n), g = random_vec(rng, n);
  auto m1 = random_vec(rng, n, 0, 0.1), v1 = random_vec(rng, n, 0, 0.1);
  auto p2 = p1, m2 = m1, v2 = v1;
  kernels::AdamCoeffs c{0.9f, 0.999f, 0.1f, 0.001f, 1.0f - 0.9f * 0.9f, 1.0f - 0.999f * 0.999f,
                        1e-3f, 1e-8f, 1e-3f * 5e-4f};
  for (int step = 0; step < 3; ++step) {
    kernels::scalar_table().adam(n, p1.data(), g.data(), m1.data(), v1.data(), c);
    simd->adam(n, p2.data(), g.data(), m2.data(), v2.data(), c);
  }
  CHECK(bit_equal(p1, p2));
  CHECK(bit_equal(m1, m2));
  CHECK(bit_equal(v1, v2));
}

TEST_CASE("set_active switches the dispatched table") {
  const auto before = kernels::active().isa;
  kernels::set_active(kernels::Isa::kScalar);
  CHECK(kernels::active().isa == kernels::Isa::kScalar);
  if (kernels::avx2_table()) {
    kernels::set_active(kernels::Isa::kAvx2);
    CHECK(kernels::active().isa == kernels::Isa::kAvx2);
  }
  kernels::set_active(before);
}
