#pragma once

// Data-parallel inner loops used by the tensor library. Each kernel has a
// scalar reference implementation and, where the target supports it, an AVX2
// variant chosen once at runtime. All variants except gemm are bit-identical
// to the reference; gemm uses FMA and agrees to within float rounding.

#include <cstddef>
#include <type_traits>

namespace transmef::kernels {

enum class Isa { kScalar, kAvx2 };
enum class Trans { kNo, kYes };

struct AdamCoeffs {
  float beta1;
  float beta2;
  float one_minus_beta1;
  float one_minus_beta2;
  float bias_correction1;  // 1 - beta1^t
  float bias_correction2;  // 1 - beta2^t
  float lr;
  float eps;
  float decay;  // lr * weight_decay, applied before the moment update
};

struct KernelTable {
  Isa isa;
  const char* name;
  // C[m,n] = alpha * op(A)[m,k] * op(B)[k,n] + beta * C, row-major.
  // beta == 0 overwrites C without reading it.
  void (*gemm)(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, float alpha,
               const float* a, std::size_t lda, const float* b, std::size_t ldb, float beta,
               float* c, std::size_t ldc);
  void (*add)(std::size_t n, const float* a, const float* b, float* out);
  void (*mul)(std::size_t n, const float* a, const float* b, float* out);
  // y += alpha * x
  void (*axpy)(std::size_t n, float alpha, const float* x, float* y);
  void (*relu)(std::size_t n, const float* x, float* out);
  // gx += (x > 0 ? g : 0)
  void (*relu_backward)(std::size_t n, const float* x, const float* g, float* gx);
  void (*adam)(std::size_t n, float* param, const float* grad, float* m, float* v,
               const AdamCoeffs& c);
};

const KernelTable& scalar_table();
// nullptr when the AVX2 variant was not compiled in or the CPU lacks AVX2+FMA.
const KernelTable* avx2_table();

// Selected on first use: AVX2 when available, unless TRANSMEF_ISA=scalar.
const KernelTable& active();
// Tests and benchmarks only. Throws UsageError if the ISA is unavailable.
void set_active(Isa isa);

// Reference kernels, generic over the scalar type. The float instantiations
// back scalar_table(); double is used by the 64-bit gradient oracles.
namespace ref {

template <class T>
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, T alpha, const T* a,
          std::size_t lda, const T* b, std::size_t ldb, T beta, T* c, std::size_t ldc);

template <class T>
void add(std::size_t n, const T* a, const T* b, T* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

template <class T>
void mul(std::size_t n, const T* a, const T* b, T* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

template <class T>
void axpy(std::size_t n, T alpha, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

template <class T>
void relu(std::size_t n, const T* x, T* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
}

template <class T>
void relu_backward(std::size_t n, const T* x, const T* g, T* gx) {
  for (std::size_t i = 0; i < n; ++i) gx[i] = gx[i] + (x[i] > T(0) ? g[i] : T(0));
}

void adam(std::size_t n, float* param, const float* grad, float* m, float* v, const AdamCoeffs& c);

}  // namespace ref

// Type-generic front ends: float goes through the active table, anything
// else through the reference code.
template <class T>
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, T alpha, const T* a,
          std::size_t lda, const T* b, std::size_t ldb, T beta, T* c, std::size_t ldc) {
  if constexpr (std::is_same_v<T, float>)
    active().gemm(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
  else
    ref::gemm<T>(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

template <class T>
void add(std::size_t n, const T* a, const T* b, T* out) {
  if constexpr (std::is_same_v<T, float>) active().add(n, a, b, out);
  else ref::add(n, a, b, out);
}

template <class T>
void mul(std::size_t n, const T* a, const T* b, T* out) {
  if constexpr (std::is_same_v<T, float>) active().mul(n, a, b, out);
  else ref::mul(n, a, b, out);
}

template <class T>
void axpy(std::size_t n, T alpha, const T* x, T* y) {
  if constexpr (std::is_same_v<T, float>) active().axpy(n, alpha, x, y);
  else ref::axpy(n, alpha, x, y);
}

template <class T>
void relu(std::size_t n, const T* x, T* out) {
  if constexpr (std::is_same_v<T, float>) active().relu(n, x, out);
  else ref::relu(n, x, out);
}

template <class T>
void relu_backward(std::size_t n, const T* x, const T* g, T* gx) {
  if constexpr (std::is_same_v<T, float>) active().relu_backward(n, x, g, gx);
  else ref::relu_backward(n, x, g, gx);
}

}  // namespace transmef::kernels
