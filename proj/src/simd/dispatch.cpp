#include "crofton/simd/kernels.hpp"

#include "crofton/error.hpp"

#include <atomic>
#include <string>

namespace crofton::simd {

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
        case Isa::neon: return "neon";
    }
    return "unknown";
}

bool isa_supported(Isa isa) {
    switch (isa) {
        case Isa::scalar: return true;
        case Isa::avx2:
#if defined(CROFTON_HAVE_AVX2_TU)
            return __builtin_cpu_supports("avx2");
#else
            return false;
#endif
        case Isa::neon:
#if defined(CROFTON_HAVE_NEON_TU)
            return true;
#else
            return false;
#endif
    }
    return false;
}

Isa best_isa() {
    if (isa_supported(Isa::avx2)) return Isa::avx2;
    if (isa_supported(Isa::neon)) return Isa::neon;
    return Isa::scalar;
}

const Kernels& kernels_for(Isa isa) {
    if (!isa_supported(isa))
        throw ContractError("kernels_for: ISA '" + std::string(isa_name(isa)) +
                            "' not supported here");
    switch (isa) {
#if defined(CROFTON_HAVE_AVX2_TU)
        case Isa::avx2: return detail::avx2_kernels;
#endif
#if defined(CROFTON_HAVE_NEON_TU)
        case Isa::neon: return detail::neon_kernels;
#endif
        default: return detail::scalar_kernels;
    }
}

namespace {
std::atomic<const Kernels*> active{nullptr};
}

const Kernels& kernels() {
    const Kernels* k = active.load(std::memory_order_acquire);
    if (k == nullptr) {
        k = &kernels_for(best_isa());
        active.store(k, std::memory_order_release);
    }
    return *k;
}

void set_active_isa(Isa isa) { active.store(&kernels_for(isa), std::memory_order_release); }

}  // namespace crofton::simd
