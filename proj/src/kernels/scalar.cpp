#include <cmath>
#include <vector>

#include "transmef/kernels.hpp"

namespace transmef::kernels {
namespace ref {

template <class T>
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, T alpha, const T* a,
          std::size_t lda, const T* b, std::size_t ldb, T beta, T* c, std::size_t ldc) {
  std::vector<T> acc(n);
  std::vector<T> brow(n);
  for (std::size_t i = 0; i < m; ++i) {
    std::fill(acc.begin(), acc.end(), T(0));
    // Every C(i,j) accumulates over p in ascending order.
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = ta == Trans::kNo ? a[i * lda + p] : a[p * lda + i];
      const T* row = b + p * ldb;
      if (tb == Trans::kYes) {
        for (std::size_t j = 0; j < n; ++j) brow[j] = b[j * ldb + p];
        row = brow.data();
      }
      for (std::size_t j = 0; j < n; ++j) acc[j] = acc[j] + aip * row[j];
    }
    T* crow = c + i * ldc;
    if (beta == T(0)) {
      for (std::size_t j = 0; j < n; ++j) crow[j] = alpha * acc[j];
    } else {
      for (std::size_t j = 0; j < n; ++j) crow[j] = alpha * acc[j] + beta * crow[j];
    }
  }
}

template void gemm<float>(Trans, Trans, std::size_t, std::size_t, std::size_t, float, const float*,
                          std::size_t, const float*, std::size_t, float, float*, std::size_t);
template void gemm<double>(Trans, Trans, std::size_t, std::size_t, std::size_t, double,
                           const double*, std::size_t, const double*, std::size_t, double, double*,
                           std::size_t);

void adam(std::size_t n, float* param, const float* grad, float* m, float* v,
          const AdamCoeffs& c) {
  for (std::size_t i = 0; i < n; ++i) {
    float p = param[i];
    p = p - c.decay * p;
    const float g = grad[i];
    m[i] = c.beta1 * m[i] + c.one_minus_beta1 * g;
    v[i] = c.beta2 * v[i] + c.one_minus_beta2 * (g * g);
    const float mhat = m[i] / c.bias_correction1;
    const float vhat = v[i] / c.bias_correction2;
    param[i] = p - (c.lr * mhat) / (std::sqrt(vhat) + c.eps);
  }
}

}  // namespace ref

const KernelTable& scalar_table() {
  static const KernelTable table{
      Isa::kScalar,          "scalar",       &ref::gemm<float>,          &ref::add<float>,
      &ref::mul<float>,      &ref::axpy<float>, &ref::relu<float>, &ref::relu_backward<float>,
      &ref::adam,
  };
  return table;
}

}  // namespace transmef::kernels
