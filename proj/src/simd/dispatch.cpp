#include <atomic>
#include <cstdlib>
#include <string_view>

#include "hessvar/simd/kernels.hpp"

namespace hessvar::simd {

#if defined(HESSVAR_HAVE_AVX2)
const KernelTable& avx2_kernel_table();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(HESSVAR_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable* detect() {
  if (const char* env = std::getenv("HESSVAR_SIMD")) {
    if (std::string_view(env) == "scalar") return &scalar_kernels();
  }
  if (const KernelTable* t = avx2_kernels()) return t;
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{detect()};
  return table;
}

}  // namespace

const KernelTable* avx2_kernels() {
#if defined(HESSVAR_HAVE_AVX2)
  static const bool ok = cpu_has_avx2();
  return ok ? &avx2_kernel_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

ScopedIsa::ScopedIsa(Isa isa) : previous_(&active()) {
  const KernelTable* next = &scalar_kernels();
  if (isa == Isa::Avx2 && avx2_kernels() != nullptr) next = avx2_kernels();
  current().store(next, std::memory_order_release);
}

ScopedIsa::~ScopedIsa() { current().store(previous_, std::memory_order_release); }

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

}  // namespace hessvar::simd
