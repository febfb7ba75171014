#include <atomic>
#include <cstdlib>
#include <string>

#include "atcor/common/error.hpp"
#include "atcor/simd/kernels.hpp"

namespace atcor::simd {

namespace {

constexpr KernelTable kScalarTable{&scalar::dot, &scalar::axpy, &scalar::gemm_nt, &scalar::gemm_nn,
                                   &scalar::gemm_tn};
constexpr KernelTable kAvx2Table{&avx2::dot, &avx2::axpy, &avx2::gemm_nt, &avx2::gemm_nn,
                                 &avx2::gemm_tn};

bool cpu_has_avx2() {
#if defined(ATCOR_HAVE_AVX2_TU) && (defined(__x86_64__) || defined(__i386__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa initial_isa() {
  const bool avx2_ok = cpu_has_avx2();
  if (const char* env = std::getenv("ATCOR_SIMD")) {
    const std::string v(env);
    if (v == "scalar") return Isa::scalar;
    if (v == "avx2" && avx2_ok) return Isa::avx2;
  }
  return avx2_ok ? Isa::avx2 : Isa::scalar;
}

std::atomic<const KernelTable*>& active_table() {
  static std::atomic<const KernelTable*> table{initial_isa() == Isa::avx2 ? &kAvx2Table : &kScalarTable};
  return table;
}

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool isa_supported(Isa isa) { return isa == Isa::scalar || cpu_has_avx2(); }

Isa active_isa() { return active_table().load() == &kAvx2Table ? Isa::avx2 : Isa::scalar; }

void set_isa(Isa isa) {
  if (!isa_supported(isa)) throw ConfigError("SIMD variant not supported on this CPU: " + std::string(isa_name(isa)));
  active_table().store(isa == Isa::avx2 ? &kAvx2Table : &kScalarTable);
}

const KernelTable& kernels() { return *active_table().load(std::memory_order_relaxed); }

const KernelTable& kernels_for(Isa isa) {
  if (!isa_supported(isa)) throw ConfigError("SIMD variant not supported on this CPU: " + std::string(isa_name(isa)));
  return isa == Isa::avx2 ? kAvx2Table : kScalarTable;
}

}  // namespace atcor::simd
