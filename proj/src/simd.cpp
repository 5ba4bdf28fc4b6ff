#include "rime/simd.hpp"

#include <cstdlib>
#include <string_view>

namespace rime::simd {
namespace {

bool cpu_has_avx2_fma() noexcept {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable& select() noexcept {
    if (const char* forced = std::getenv("RIME_SIMD")) {
        if (std::string_view(forced) == "scalar") return scalar_kernels();
    }
    if (const KernelTable* t = avx2_kernels()) return *t;
    if (const KernelTable* t = neon_kernels()) return *t;
    return scalar_kernels();
}

}  // namespace

const KernelTable* avx2_kernels() noexcept {
    static const KernelTable* table = cpu_has_avx2_fma() ? detail::avx2_table_if_compiled() : nullptr;
    return table;
}

// NEON is architecturally mandatory on aarch64.
const KernelTable* neon_kernels() noexcept { return detail::neon_table_if_compiled(); }

const KernelTable& kernels() noexcept {
    static const KernelTable& table = select();
    return table;
}

}  // namespace rime::simd
