#include "atcor/simd/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

namespace atcor::simd::avx2 {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Horizontal sums of four vectors packed into one: {sum(a), sum(b), sum(c), sum(d)}.
inline __m256d hsum4(__m256d a, __m256d b, __m256d c, __m256d d) {
  const __m256d ab = _mm256_hadd_pd(a, b);  // a01 b01 a23 b23
  const __m256d cd = _mm256_hadd_pd(c, d);  // c01 d01 c23 d23
  const __m256d lo = _mm256_permute2f128_pd(ab, cd, 0x20);
  const __m256d hi = _mm256_permute2f128_pd(ab, cd, 0x31);
  return _mm256_add_pd(lo, hi);
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  __m256d s2 = _mm256_setzero_pd(), s3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), s1);
    s2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), s2);
    s3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), s3);
  }
  for (; i + 4 <= n; i += 4) s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
  double s = hsum(_mm256_add_pd(_mm256_add_pd(s0, s1), _mm256_add_pd(s2, s3)));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(y + i + 4,
                     _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
  }
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate) {
  const std::size_t k4 = k & ~std::size_t{3};
  std::size_t i = 0;
  // 2 rows of A x 4 rows of B per block: 8 accumulators share 6 loads.
  for (; i + 2 <= m; i += 2) {
    const double* a0 = a + i * k;
    const double* a1 = a0 + k;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const double* b0 = b + j * k;
      const double* b1 = b0 + k;
      const double* b2 = b1 + k;
      const double* b3 = b2 + k;
      __m256d c00 = _mm256_setzero_pd(), c01 = _mm256_setzero_pd(), c02 = _mm256_setzero_pd(),
              c03 = _mm256_setzero_pd();
      __m256d c10 = _mm256_setzero_pd(), c11 = _mm256_setzero_pd(), c12 = _mm256_setzero_pd(),
              c13 = _mm256_setzero_pd();
      for (std::size_t p = 0; p < k4; p += 4) {
        const __m256d va0 = _mm256_loadu_pd(a0 + p);
        const __m256d va1 = _mm256_loadu_pd(a1 + p);
        __m256d vb = _mm256_loadu_pd(b0 + p);
        c00 = _mm256_fmadd_pd(va0, vb, c00);
        c10 = _mm256_fmadd_pd(va1, vb, c10);
        vb = _mm256_loadu_pd(b1 + p);
        c01 = _mm256_fmadd_pd(va0, vb, c01);
        c11 = _mm256_fmadd_pd(va1, vb, c11);
        vb = _mm256_loadu_pd(b2 + p);
        c02 = _mm256_fmadd_pd(va0, vb, c02);
        c12 = _mm256_fmadd_pd(va1, vb, c12);
        vb = _mm256_loadu_pd(b3 + p);
        c03 = _mm256_fmadd_pd(va0, vb, c03);
        c13 = _mm256_fmadd_pd(va1, vb, c13);
      }
      alignas(32) double r0[4], r1[4];
      _mm256_store_pd(r0, hsum4(c00, c01, c02, c03));
      _mm256_store_pd(r1, hsum4(c10, c11, c12, c13));
      for (std::size_t p = k4; p < k; ++p) {
        r0[0] += a0[p] * b0[p];
        r0[1] += a0[p] * b1[p];
        r0[2] += a0[p] * b2[p];
        r0[3] += a0[p] * b3[p];
        r1[0] += a1[p] * b0[p];
        r1[1] += a1[p] * b1[p];
        r1[2] += a1[p] * b2[p];
        r1[3] += a1[p] * b3[p];
      }
      double* c0 = c + i * n + j;
      double* c1 = c0 + n;
      for (int q = 0; q < 4; ++q) {
        c0[q] = accumulate ? c0[q] + r0[q] : r0[q];
        c1[q] = accumulate ? c1[q] + r1[q] : r1[q];
      }
    }
    for (; j < n; ++j) {
      const double s0 = dot(a0, b + j * k, k);
      const double s1 = dot(a1, b + j * k, k);
      c[i * n + j] = accumulate ? c[i * n + j] + s0 : s0;
      c[(i + 1) * n + j] = accumulate ? c[(i + 1) * n + j] + s1 : s1;
    }
  }
  for (; i < m; ++i) {
    const double* a0 = a + i * k;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const double* b0 = b + j * k;
      const double* b1 = b0 + k;
      const double* b2 = b1 + k;
      const double* b3 = b2 + k;
      __m256d c0 = _mm256_setzero_pd(), c1 = _mm256_setzero_pd(), c2 = _mm256_setzero_pd(),
              c3 = _mm256_setzero_pd();
      for (std::size_t p = 0; p < k4; p += 4) {
        const __m256d va = _mm256_loadu_pd(a0 + p);
        c0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b0 + p), c0);
        c1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b1 + p), c1);
        c2 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b2 + p), c2);
        c3 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b3 + p), c3);
      }
      alignas(32) double r[4];
      _mm256_store_pd(r, hsum4(c0, c1, c2, c3));
      for (std::size_t p = k4; p < k; ++p) {
        r[0] += a0[p] * b0[p];
        r[1] += a0[p] * b1[p];
        r[2] += a0[p] * b2[p];
        r[3] += a0[p] * b3[p];
      }
      double* cr = c + i * n + j;
      for (int q = 0; q < 4; ++q) cr[q] = accumulate ? cr[q] + r[q] : r[q];
    }
    for (; j < n; ++j) {
      const double s = dot(a0, b + j * k, k);
      c[i * n + j] = accumulate ? c[i * n + j] + s : s;
    }
  }
}

namespace {

// Shared body of gemm_nn / gemm_tn: C[i][j] += sum_p A(i,p) B[p][j], where
// A(i,p) = a[i*row_stride + p*col_stride].
inline void gemm_b_rows(std::size_t m, std::size_t n, std::size_t k, const double* a,
                        std::size_t row_stride, std::size_t col_stride, const double* b, double* c,
                        bool accumulate) {
  std::size_t i = 0;
  for (; i + 2 <= m; i += 2) {
    const double* a0 = a + i * row_stride;
    const double* a1 = a0 + row_stride;
    double* c0 = c + i * n;
    double* c1 = c0 + n;
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
      __m256d x0 = accumulate ? _mm256_loadu_pd(c0 + j) : _mm256_setzero_pd();
      __m256d x1 = accumulate ? _mm256_loadu_pd(c0 + j + 4) : _mm256_setzero_pd();
      __m256d y0 = accumulate ? _mm256_loadu_pd(c1 + j) : _mm256_setzero_pd();
      __m256d y1 = accumulate ? _mm256_loadu_pd(c1 + j + 4) : _mm256_setzero_pd();
      for (std::size_t p = 0; p < k; ++p) {
        const double* brow = b + p * n + j;
        const __m256d b0 = _mm256_loadu_pd(brow);
        const __m256d b1 = _mm256_loadu_pd(brow + 4);
        const __m256d va0 = _mm256_broadcast_sd(a0 + p * col_stride);
        const __m256d va1 = _mm256_broadcast_sd(a1 + p * col_stride);
        x0 = _mm256_fmadd_pd(va0, b0, x0);
        x1 = _mm256_fmadd_pd(va0, b1, x1);
        y0 = _mm256_fmadd_pd(va1, b0, y0);
        y1 = _mm256_fmadd_pd(va1, b1, y1);
      }
      _mm256_storeu_pd(c0 + j, x0);
      _mm256_storeu_pd(c0 + j + 4, x1);
      _mm256_storeu_pd(c1 + j, y0);
      _mm256_storeu_pd(c1 + j + 4, y1);
    }
    for (; j + 4 <= n; j += 4) {
      __m256d x0 = accumulate ? _mm256_loadu_pd(c0 + j) : _mm256_setzero_pd();
      __m256d y0 = accumulate ? _mm256_loadu_pd(c1 + j) : _mm256_setzero_pd();
      for (std::size_t p = 0; p < k; ++p) {
        const __m256d b0 = _mm256_loadu_pd(b + p * n + j);
        x0 = _mm256_fmadd_pd(_mm256_broadcast_sd(a0 + p * col_stride), b0, x0);
        y0 = _mm256_fmadd_pd(_mm256_broadcast_sd(a1 + p * col_stride), b0, y0);
      }
      _mm256_storeu_pd(c0 + j, x0);
      _mm256_storeu_pd(c1 + j, y0);
    }
    for (; j < n; ++j) {
      double s0 = accumulate ? c0[j] : 0.0;
      double s1 = accumulate ? c1[j] : 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        s0 += a0[p * col_stride] * b[p * n + j];
        s1 += a1[p * col_stride] * b[p * n + j];
      }
      c0[j] = s0;
      c1[j] = s1;
    }
  }
  for (; i < m; ++i) {
    const double* a0 = a + i * row_stride;
    double* c0 = c + i * n;
    std::size_t j = 0;
    for (; j + 16 <= n; j += 16) {
      __m256d x0 = accumulate ? _mm256_loadu_pd(c0 + j) : _mm256_setzero_pd();
      __m256d x1 = accumulate ? _mm256_loadu_pd(c0 + j + 4) : _mm256_setzero_pd();
      __m256d x2 = accumulate ? _mm256_loadu_pd(c0 + j + 8) : _mm256_setzero_pd();
      __m256d x3 = accumulate ? _mm256_loadu_pd(c0 + j + 12) : _mm256_setzero_pd();
      for (std::size_t p = 0; p < k; ++p) {
        const double* brow = b + p * n + j;
        const __m256d va = _mm256_broadcast_sd(a0 + p * col_stride);
        x0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(brow), x0);
        x1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + 4), x1);
        x2 = _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + 8), x2);
        x3 = _mm256_fmadd_pd(va, _mm256_loadu_pd(brow + 12), x3);
      }
      _mm256_storeu_pd(c0 + j, x0);
      _mm256_storeu_pd(c0 + j + 4, x1);
      _mm256_storeu_pd(c0 + j + 8, x2);
      _mm256_storeu_pd(c0 + j + 12, x3);
    }
    for (; j + 4 <= n; j += 4) {
      __m256d x0 = accumulate ? _mm256_loadu_pd(c0 + j) : _mm256_setzero_pd();
      for (std::size_t p = 0; p < k; ++p)
        x0 = _mm256_fmadd_pd(_mm256_broadcast_sd(a0 + p * col_stride), _mm256_loadu_pd(b + p * n + j), x0);
      _mm256_storeu_pd(c0 + j, x0);
    }
    for (; j < n; ++j) {
      double s = accumulate ? c0[j] : 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a0[p * col_stride] * b[p * n + j];
      c0[j] = s;
    }
  }
}

}  // namespace

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate) {
  gemm_b_rows(m, n, k, a, k, 1, b, c, accumulate);
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate) {
  gemm_b_rows(m, n, k, a, 1, m, b, c, accumulate);
}

}  // namespace atcor::simd::avx2

#else

// Non-x86 builds: the AVX2 entry points exist but are never selected.
#include "atcor/simd/kernels.hpp"

namespace atcor::simd::avx2 {
double dot(const double* a, const double* b, std::size_t n) { return scalar::dot(a, b, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { scalar::axpy(alpha, x, y, n); }
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate) {
  scalar::gemm_nt(m, n, k, a, b, c, accumulate);
}
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate) {
  scalar::gemm_nn(m, n, k, a, b, c, accumulate);
}
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate) {
  scalar::gemm_tn(m, n, k, a, b, c, accumulate);
}
}  // namespace atcor::simd::avx2

#endif
