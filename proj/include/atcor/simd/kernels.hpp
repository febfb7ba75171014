#pragma once

#include <cstddef>
#include <string_view>

// Dense double-precision kernels behind the CNN and recurrent layers.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2+FMA variant. The variant is chosen once at startup from CPUID and
// can be forced with ATCOR_SIMD=scalar|avx2 or set_isa(). All matrices are
// dense row-major with no padding between rows.
namespace atcor::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);
bool isa_supported(Isa isa);

Isa active_isa();
// Throws atcor::ConfigError if the CPU does not support `isa`.
void set_isa(Isa isa);

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // C[MxN] (+)= A[MxK] * B[NxK]^T
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                  double* c, bool accumulate);
  // C[MxN] (+)= A[MxK] * B[KxN]
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                  double* c, bool accumulate);
  // C[MxN] (+)= A[KxM]^T * B[KxN]
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                  double* c, bool accumulate);
};

const KernelTable& kernels();
const KernelTable& kernels_for(Isa isa);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate);
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate);
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate);
}  // namespace scalar

namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate);
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate);
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c,
             bool accumulate);
}  // namespace avx2

// Convenience wrappers over the active table.
inline double dot(const double* a, const double* b, std::size_t n) { return kernels().dot(a, b, n); }
inline void axpy(double alpha, const double* x, double* y, std::size_t n) { kernels().axpy(alpha, x, y, n); }

// y[rows] (+)= A[rows x cols] * x[cols]
inline void gemv(std::size_t rows, std::size_t cols, const double* a, const double* x, double* y,
                 bool accumulate) {
  kernels().gemm_nt(1, rows, cols, x, a, y, accumulate);
}
// y[cols] += A[rows x cols]^T * x[rows]
inline void gemv_t_acc(std::size_t rows, std::size_t cols, const double* a, const double* x, double* y) {
  kernels().gemm_nn(1, cols, rows, x, a, y, true);
}
// A[rows x cols] += x[rows] * y[cols]^T
inline void ger(std::size_t rows, std::size_t cols, const double* x, const double* y, double* a) {
  kernels().gemm_tn(rows, cols, 1, x, y, a, true);
}

}  // namespace atcor::simd
