// Compiled with -mavx2 -mfma. Only reached through avx2_table() after a
// runtime CPU check.

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "transmef/kernels.hpp"

namespace transmef::kernels {
namespace {

constexpr std::size_t kMr = 6;
constexpr std::size_t kNr = 16;
constexpr std::size_t kKc = 256;
constexpr std::size_t kMc = 96;
constexpr std::size_t kNc = 2048;

// Packs op(A)[ic:ic+mc, pc:pc+kc] into MR-row panels, zero padded.
void pack_a(Trans ta, const float* a, std::size_t lda, std::size_t ic, std::size_t pc,
            std::size_t mc, std::size_t kc, float* out) {
  for (std::size_t ir = 0; ir < mc; ir += kMr) {
    const std::size_t mr = std::min(kMr, mc - ir);
    for (std::size_t p = 0; p < kc; ++p) {
      for (std::size_t r = 0; r < kMr; ++r) {
        float value = 0.0f;
        if (r < mr) {
          const std::size_t i = ic + ir + r;
          const std::size_t col = pc + p;
          value = ta == Trans::kNo ? a[i * lda + col] : a[col * lda + i];
        }
        *out++ = value;
      }
    }
  }
}

// Packs op(B)[pc:pc+kc, jc:jc+nc] into NR-column panels, zero padded.
void pack_b(Trans tb, const float* b, std::size_t ldb, std::size_t pc, std::size_t jc,
            std::size_t kc, std::size_t nc, float* out) {
  for (std::size_t jr = 0; jr < nc; jr += kNr) {
    const std::size_t nr = std::min(kNr, nc - jr);
    for (std::size_t p = 0; p < kc; ++p) {
      const std::size_t row = pc + p;
      if (tb == Trans::kNo) {
        const float* src = b + row * ldb + jc + jr;
        if (nr == kNr) {
          _mm256_storeu_ps(out, _mm256_loadu_ps(src));
          _mm256_storeu_ps(out + 8, _mm256_loadu_ps(src + 8));
        } else {
          for (std::size_t c = 0; c < kNr; ++c) out[c] = c < nr ? src[c] : 0.0f;
        }
      } else {
        for (std::size_t c = 0; c < kNr; ++c)
          out[c] = c < nr ? b[(jc + jr + c) * ldb + row] : 0.0f;
      }
      out += kNr;
    }
  }
}

void micro_kernel(std::size_t kc, const float* ap, const float* bp, float* c, std::size_t ldc,
                  std::size_t mr, std::size_t nr, float alpha, float beta) {
  __m256 acc[kMr][2];
  for (auto& row : acc) row[0] = row[1] = _mm256_setzero_ps();
  for (std::size_t p = 0; p < kc; ++p) {
    const __m256 b0 = _mm256_loadu_ps(bp);
    const __m256 b1 = _mm256_loadu_ps(bp + 8);
    for (std::size_t r = 0; r < kMr; ++r) {
      const __m256 av = _mm256_broadcast_ss(ap + r);
      acc[r][0] = _mm256_fmadd_ps(av, b0, acc[r][0]);
      acc[r][1] = _mm256_fmadd_ps(av, b1, acc[r][1]);
    }
    ap += kMr;
    bp += kNr;
  }
  const __m256 va = _mm256_set1_ps(alpha);
  if (mr == kMr && nr == kNr) {
    const __m256 vb = _mm256_set1_ps(beta);
    for (std::size_t r = 0; r < kMr; ++r) {
      float* crow = c + r * ldc;
      for (int h = 0; h < 2; ++h) {
        __m256 out = _mm256_mul_ps(va, acc[r][h]);
        if (beta != 0.0f) out = _mm256_add_ps(out, _mm256_mul_ps(vb, _mm256_loadu_ps(crow + 8 * h)));
        _mm256_storeu_ps(crow + 8 * h, out);
      }
    }
    return;
  }
  alignas(32) float tile[kMr][kNr];
  for (std::size_t r = 0; r < kMr; ++r) {
    _mm256_store_ps(tile[r], _mm256_mul_ps(va, acc[r][0]));
    _mm256_store_ps(tile[r] + 8, _mm256_mul_ps(va, acc[r][1]));
  }
  for (std::size_t r = 0; r < mr; ++r) {
    float* crow = c + r * ldc;
    for (std::size_t j = 0; j < nr; ++j)
      crow[j] = beta == 0.0f ? tile[r][j] : tile[r][j] + beta * crow[j];
  }
}

void gemm_avx2(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, float alpha,
               const float* a, std::size_t lda, const float* b, std::size_t ldb, float beta,
               float* c, std::size_t ldc) {
  if (m == 0 || n == 0) return;
  if (k == 0) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        c[i * ldc + j] = beta == 0.0f ? 0.0f : beta * c[i * ldc + j];
    return;
  }
  thread_local std::vector<float> apack;
  thread_local std::vector<float> bpack;
  apack.resize(((kMc + kMr - 1) / kMr) * kMr * kKc);
  bpack.resize(((kNc + kNr - 1) / kNr) * kNr * kKc);

  for (std::size_t jc = 0; jc < n; jc += kNc) {
    const std::size_t nc = std::min(kNc, n - jc);
    for (std::size_t pc = 0; pc < k; pc += kKc) {
      const std::size_t kc = std::min(kKc, k - pc);
      const float block_beta = pc == 0 ? beta : 1.0f;
      pack_b(tb, b, ldb, pc, jc, kc, nc, bpack.data());
      for (std::size_t ic = 0; ic < m; ic += kMc) {
        const std::size_t mc = std::min(kMc, m - ic);
        pack_a(ta, a, lda, ic, pc, mc, kc, apack.data());
        for (std::size_t jr = 0; jr < nc; jr += kNr) {
          const std::size_t nr = std::min(kNr, nc - jr);
          const float* bp = bpack.data() + (jr / kNr) * kNr * kc;
          for (std::size_t ir = 0; ir < mc; ir += kMr) {
            const std::size_t mr = std::min(kMr, mc - ir);
            const float* ap = apack.data() + (ir / kMr) * kMr * kc;
            float* cblock = c + (ic + ir) * ldc + jc + jr;
            micro_kernel(kc, ap, bp, cblock, ldc, mr, nr, alpha, block_beta);
          }
        }
      }
    }
  }
}

void add_avx2(std::size_t n, const float* a, const float* b, float* out) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void mul_avx2(std::size_t n, const float* a, const float* b, float* out) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void axpy_avx2(std::size_t n, float alpha, const float* x, float* y) {
  const __m256 va = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 prod = _mm256_mul_ps(va, _mm256_loadu_ps(x + i));
    _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(y + i), prod));
  }
  for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void relu_avx2(std::size_t n, const float* x, float* out) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(x + i);
    _mm256_storeu_ps(out + i, _mm256_and_ps(_mm256_cmp_ps(v, zero, _CMP_GT_OQ), v));
  }
  for (; i < n; ++i) out[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_backward_avx2(std::size_t n, const float* x, const float* g, float* gx) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(x + i), zero, _CMP_GT_OQ);
    const __m256 pass = _mm256_and_ps(mask, _mm256_loadu_ps(g + i));
    _mm256_storeu_ps(gx + i, _mm256_add_ps(_mm256_loadu_ps(gx + i), pass));
  }
  for (; i < n; ++i) gx[i] = gx[i] + (x[i] > 0.0f ? g[i] : 0.0f);
}

void adam_avx2(std::size_t n, float* param, const float* grad, float* m, float* v,
               const AdamCoeffs& c) {
  const __m256 beta1 = _mm256_set1_ps(c.beta1);
  const __m256 beta2 = _mm256_set1_ps(c.beta2);
  const __m256 omb1 = _mm256_set1_ps(c.one_minus_beta1);
  const __m256 omb2 = _mm256_set1_ps(c.one_minus_beta2);
  const __m256 bc1 = _mm256_set1_ps(c.bias_correction1);
  const __m256 bc2 = _mm256_set1_ps(c.bias_correction2);
  const __m256 lr = _mm256_set1_ps(c.lr);
  const __m256 eps = _mm256_set1_ps(c.eps);
  const __m256 decay = _mm256_set1_ps(c.decay);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 p = _mm256_loadu_ps(param + i);
    p = _mm256_sub_ps(p, _mm256_mul_ps(decay, p));
    const __m256 g = _mm256_loadu_ps(grad + i);
    const __m256 mi = _mm256_add_ps(_mm256_mul_ps(beta1, _mm256_loadu_ps(m + i)), _mm256_mul_ps(omb1, g));
    const __m256 vi = _mm256_add_ps(_mm256_mul_ps(beta2, _mm256_loadu_ps(v + i)),
                                    _mm256_mul_ps(omb2, _mm256_mul_ps(g, g)));
    _mm256_storeu_ps(m + i, mi);
    _mm256_storeu_ps(v + i, vi);
    const __m256 mhat = _mm256_div_ps(mi, bc1);
    const __m256 vhat = _mm256_div_ps(vi, bc2);
    const __m256 step = _mm256_div_ps(_mm256_mul_ps(lr, mhat), _mm256_add_ps(_mm256_sqrt_ps(vhat), eps));
    _mm256_storeu_ps(param + i, _mm256_sub_ps(p, step));
  }
  if (i < n) ref::adam(n - i, param + i, grad + i, m + i, v + i, c);
}

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table{
      Isa::kAvx2, "avx2",    &gemm_avx2,         &add_avx2, &mul_avx2,
      &axpy_avx2, &relu_avx2, &relu_backward_avx2, &adam_avx2,
  };
  return table;
}

}  // namespace transmef::kernels
