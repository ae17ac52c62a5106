#pragma once

// Data-parallel inner loops used by the counting, membership and quadrature
// code. Each kernel has a scalar reference implementation and vector
// variants (AVX2 on x86-64, NEON on AArch64) chosen at runtime.
//
// The affine, sign-change, min-abs and min-margin kernels evaluate exactly the
// same floating-point operations in the same order as the scalar reference
// (no FMA contraction), so their results are bit-identical across variants.
// support_cross_sum reassociates its reduction and agrees to round-off only.

#include <cstddef>
#include <string_view>

namespace crofton::simd {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa);
bool isa_supported(Isa isa);
Isa best_isa();

struct Kernels {
    Isa isa;

    // out[j] = sum_k rows[k][j] * u[k] - c for j < n; rows holds p arrays of length n.
    void (*affine_residuals)(const double* const* rows, int p, std::size_t n, const double* u,
                             double c, double* out);

    // Number of adjacent pairs (s[j], s[j+1]) on opposite sides of zero, where
    // "negative" means s < 0. With periodic, the pair (s[n-1], s[0]) counts too.
    std::size_t (*sign_changes)(const double* s, std::size_t n, bool periodic);

    // min_j |s[j]|; +inf for n == 0.
    double (*min_abs)(const double* s, std::size_t n);

    // min_j (bound[j] - sum_k x[k] * dirs[k][j]) over n directions in R^m.
    double (*min_margin)(const double* const* dirs, int m, std::size_t n, const double* bound,
                         const double* x);

    // sum_j (h1 h2 - h1' h2')(theta_j), h_i = sqrt(q_i(cos, sin)) with
    // q = (a, b, d) meaning a c^2 + 2 b c s + d s^2; h' is taken as 0 where h = 0.
    double (*support_cross_sum)(const double* cosv, const double* sinv, std::size_t n,
                                const double* q1, const double* q2);
};

// Kernels of the active ISA (best supported unless overridden).
const Kernels& kernels();

// Throws ContractError if the ISA is not supported on this machine/build.
const Kernels& kernels_for(Isa isa);

void set_active_isa(Isa isa);

namespace detail {
extern const Kernels scalar_kernels;
#if defined(CROFTON_HAVE_AVX2_TU)
extern const Kernels avx2_kernels;
#endif
#if defined(CROFTON_HAVE_NEON_TU)
extern const Kernels neon_kernels;
#endif
}  // namespace detail

}  // namespace crofton::simd
