#include <atomic>
#include <cstdlib>
#include <string_view>

#include "transmef/error.hpp"
#include "transmef/kernels.hpp"

namespace transmef::kernels {

#if defined(TRANSMEF_HAVE_AVX2_KERNELS)
const KernelTable& avx2_kernels();
#endif

const KernelTable* avx2_table() {
#if defined(TRANSMEF_HAVE_AVX2_KERNELS)
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &avx2_kernels() : nullptr;
#else
  return nullptr;
#endif
}

namespace {

const KernelTable* initial_table() {
  if (const char* env = std::getenv("TRANSMEF_ISA"); env && std::string_view(env) == "scalar")
    return &scalar_table();
  if (const KernelTable* t = avx2_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

void set_active(Isa isa) {
  if (isa == Isa::kScalar) {
    current().store(&scalar_table());
    return;
  }
  const KernelTable* t = avx2_table();
  if (!t) throw UsageError("AVX2 kernels are not available on this machine");
  current().store(t);
}

}  // namespace transmef::kernels
