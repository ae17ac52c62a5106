// AArch64 variant; two doubles per lane group.

#include "crofton/simd/kernels.hpp"

#include <arm_neon.h>

#include <cstdint>

#include <algorithm>
#include <cmath>
#include <limits>

namespace crofton::simd {
namespace {

void affine_residuals(const double* const* rows, int p, std::size_t n, const double* u, double c,
                      double* out) {
    const float64x2_t vc = vdupq_n_f64(c);
    std::size_t j = 0;
    for (; j + 2 <= n; j += 2) {
        float64x2_t acc = vmulq_f64(vld1q_f64(rows[0] + j), vdupq_n_f64(u[0]));
        for (int k = 1; k < p; ++k)
            acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(rows[k] + j), vdupq_n_f64(u[k])));
        vst1q_f64(out + j, vsubq_f64(acc, vc));
    }
    for (; j < n; ++j) {
        double acc = rows[0][j] * u[0];
        for (int k = 1; k < p; ++k) acc = acc + rows[k][j] * u[k];
        out[j] = acc - c;
    }
}

std::size_t sign_changes(const double* s, std::size_t n, bool periodic) {
    if (n < 2) return 0;
    const float64x2_t zero = vdupq_n_f64(0.0);
    std::size_t count = 0;
    std::uint64_t prev = s[0] < 0.0 ? 1u : 0u;
    std::size_t j = 0;
    for (; j + 2 <= n; j += 2) {
        const uint64x2_t neg = vcltq_f64(vld1q_f64(s + j), zero);
        const std::uint64_t b0 = vgetq_lane_u64(neg, 0) & 1u;
        const std::uint64_t b1 = vgetq_lane_u64(neg, 1) & 1u;
        count += (b0 != prev) + (b1 != b0);
        prev = b1;
    }
    for (; j < n; ++j) {
        const std::uint64_t cur = s[j] < 0.0 ? 1u : 0u;
        count += cur != prev;
        prev = cur;
    }
    if (periodic) count += (s[n - 1] < 0.0) != (s[0] < 0.0);
    return count;
}

// vminq_f64 propagates NaN; select explicitly to match std::min(acc, v).
inline float64x2_t min_keep(float64x2_t v, float64x2_t acc) {
    return vbslq_f64(vcltq_f64(v, acc), v, acc);
}

double hmin(float64x2_t v) { return std::min(vgetq_lane_f64(v, 0), vgetq_lane_f64(v, 1)); }

double min_abs(const double* s, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(std::numeric_limits<double>::infinity());
    std::size_t j = 0;
    for (; j + 2 <= n; j += 2) acc = min_keep(vabsq_f64(vld1q_f64(s + j)), acc);
    double m = hmin(acc);
    for (; j < n; ++j) m = std::min(m, std::fabs(s[j]));
    return m;
}

double min_margin(const double* const* dirs, int m, std::size_t n, const double* bound,
                  const double* x) {
    float64x2_t acc = vdupq_n_f64(std::numeric_limits<double>::infinity());
    std::size_t j = 0;
    for (; j + 2 <= n; j += 2) {
        float64x2_t dot = vmulq_f64(vld1q_f64(dirs[0] + j), vdupq_n_f64(x[0]));
        for (int k = 1; k < m; ++k)
            dot = vaddq_f64(dot, vmulq_f64(vld1q_f64(dirs[k] + j), vdupq_n_f64(x[k])));
        acc = min_keep(vsubq_f64(vld1q_f64(bound + j), dot), acc);
    }
    double best = hmin(acc);
    for (; j < n; ++j) {
        double dot = dirs[0][j] * x[0];
        for (int k = 1; k < m; ++k) dot = dot + dirs[k][j] * x[k];
        best = std::min(best, bound[j] - dot);
    }
    return best;
}

inline void support_and_slope(const double* q, double c, double s, double& h, double& dh) {
    const double val = q[0] * c * c + 2.0 * q[1] * c * s + q[2] * s * s;
    const double dval = 2.0 * ((q[2] - q[0]) * c * s + q[1] * (c * c - s * s));
    h = std::sqrt(std::max(val, 0.0));
    dh = h > 0.0 ? dval / (2.0 * h) : 0.0;
}

inline void support_and_slope(const double* q, float64x2_t c, float64x2_t s, float64x2_t& h,
                              float64x2_t& dh) {
    const float64x2_t two = vdupq_n_f64(2.0);
    const float64x2_t zero = vdupq_n_f64(0.0);
    const float64x2_t cc = vmulq_f64(c, c);
    const float64x2_t ss = vmulq_f64(s, s);
    const float64x2_t cs = vmulq_f64(c, s);
    float64x2_t val = vaddq_f64(vaddq_f64(vmulq_f64(vdupq_n_f64(q[0]), cc),
                                          vmulq_f64(vdupq_n_f64(2.0 * q[1]), cs)),
                                vmulq_f64(vdupq_n_f64(q[2]), ss));
    val = vbslq_f64(vcltq_f64(val, zero), zero, val);
    const float64x2_t dval =
        vmulq_f64(two, vaddq_f64(vmulq_f64(vdupq_n_f64(q[2] - q[0]), cs),
                                 vmulq_f64(vdupq_n_f64(q[1]), vsubq_f64(cc, ss))));
    h = vsqrtq_f64(val);
    const uint64x2_t positive = vcgtq_f64(h, zero);
    const float64x2_t safe = vbslq_f64(positive, vmulq_f64(two, h), vdupq_n_f64(1.0));
    dh = vbslq_f64(positive, vdivq_f64(dval, safe), zero);
}

double support_cross_sum(const double* cosv, const double* sinv, std::size_t n, const double* q1,
                         const double* q2) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t j = 0;
    for (; j + 2 <= n; j += 2) {
        const float64x2_t c = vld1q_f64(cosv + j);
        const float64x2_t s = vld1q_f64(sinv + j);
        float64x2_t h1, d1, h2, d2;
        support_and_slope(q1, c, s, h1, d1);
        support_and_slope(q2, c, s, h2, d2);
        acc = vaddq_f64(acc, vsubq_f64(vmulq_f64(h1, h2), vmulq_f64(d1, d2)));
    }
    double total = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
    for (; j < n; ++j) {
        double h1, d1, h2, d2;
        support_and_slope(q1, cosv[j], sinv[j], h1, d1);
        support_and_slope(q2, cosv[j], sinv[j], h2, d2);
        total += h1 * h2 - d1 * d2;
    }
    return total;
}

}  // namespace

namespace detail {
const Kernels neon_kernels{Isa::neon, affine_residuals, sign_changes, min_abs, min_margin,
                           support_cross_sum};
}

}  // namespace crofton::simd
