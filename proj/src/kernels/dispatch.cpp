#include <cstdlib>
#include <string>

#include "spikehar/kernels.hpp"

namespace spikehar::kernels {

#if defined(SPIKEHAR_HAVE_AVX2)
const KernelTable* avx2_table_impl();
#endif

const KernelTable* avx2_table() {
#if defined(SPIKEHAR_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? avx2_table_impl() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable& chosen = [&]() -> const KernelTable& {
    const char* force = std::getenv("SPIKEHAR_KERNELS");
    if (force != nullptr && std::string(force) == "scalar") return scalar_table();
    if (const KernelTable* t = avx2_table()) return *t;
    return scalar_table();
  }();
  return chosen;
}

}  // namespace spikehar::kernels
