// Compiled with -mavx2 -ffp-contract=off; only reached after a runtime CPU check.

#include "crofton/simd/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace crofton::simd {
namespace {

void affine_residuals(const double* const* rows, int p, std::size_t n, const double* u, double c,
                      double* out) {
    const __m256d vc = _mm256_set1_pd(c);
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        __m256d acc = _mm256_mul_pd(_mm256_loadu_pd(rows[0] + j), _mm256_set1_pd(u[0]));
        for (int k = 1; k < p; ++k)
            acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(rows[k] + j), _mm256_set1_pd(u[k])));
        _mm256_storeu_pd(out + j, _mm256_sub_pd(acc, vc));
    }
    for (; j < n; ++j) {
        double acc = rows[0][j] * u[0];
        for (int k = 1; k < p; ++k) acc = acc + rows[k][j] * u[k];
        out[j] = acc - c;
    }
}

std::size_t sign_changes(const double* s, std::size_t n, bool periodic) {
    if (n < 2) return 0;
    const __m256d zero = _mm256_setzero_pd();
    std::size_t count = 0;
    unsigned prev = s[0] < 0.0 ? 1u : 0u;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        const auto bits = static_cast<unsigned>(
            _mm256_movemask_pd(_mm256_cmp_pd(_mm256_loadu_pd(s + j), zero, _CMP_LT_OQ)));
        const unsigned shifted = ((bits << 1) | prev) & 0xFu;
        count += static_cast<std::size_t>(__builtin_popcount((bits ^ shifted) & 0xFu));
        prev = (bits >> 3) & 1u;
    }
    for (; j < n; ++j) {
        const unsigned cur = s[j] < 0.0 ? 1u : 0u;
        count += cur != prev;
        prev = cur;
    }
    if (periodic) count += (s[n - 1] < 0.0) != (s[0] < 0.0);
    return count;
}

double hmin(__m256d v) {
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, v);
    return std::min(std::min(lanes[0], lanes[1]), std::min(lanes[2], lanes[3]));
}

double min_abs(const double* s, std::size_t n) {
    const __m256d sign = _mm256_set1_pd(-0.0);
    __m256d acc = _mm256_set1_pd(std::numeric_limits<double>::infinity());
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) acc = _mm256_min_pd(_mm256_andnot_pd(sign, _mm256_loadu_pd(s + j)), acc);
    double m = hmin(acc);
    for (; j < n; ++j) m = std::min(m, std::fabs(s[j]));
    return m;
}

double min_margin(const double* const* dirs, int m, std::size_t n, const double* bound,
                  const double* x) {
    __m256d acc = _mm256_set1_pd(std::numeric_limits<double>::infinity());
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        __m256d dot = _mm256_mul_pd(_mm256_loadu_pd(dirs[0] + j), _mm256_set1_pd(x[0]));
        for (int k = 1; k < m; ++k)
            dot = _mm256_add_pd(dot, _mm256_mul_pd(_mm256_loadu_pd(dirs[k] + j), _mm256_set1_pd(x[k])));
        acc = _mm256_min_pd(_mm256_sub_pd(_mm256_loadu_pd(bound + j), dot), acc);
    }
    double best = hmin(acc);
    for (; j < n; ++j) {
        double dot = dirs[0][j] * x[0];
        for (int k = 1; k < m; ++k) dot = dot + dirs[k][j] * x[k];
        best = std::min(best, bound[j] - dot);
    }
    return best;
}

inline void support_and_slope(const double* q, __m256d c, __m256d s, __m256d& h, __m256d& dh) {
    const __m256d two = _mm256_set1_pd(2.0);
    const __m256d cc = _mm256_mul_pd(c, c);
    const __m256d ss = _mm256_mul_pd(s, s);
    const __m256d cs = _mm256_mul_pd(c, s);
    __m256d val = _mm256_add_pd(
        _mm256_add_pd(_mm256_mul_pd(_mm256_set1_pd(q[0]), cc),
                      _mm256_mul_pd(_mm256_set1_pd(2.0 * q[1]), cs)),
        _mm256_mul_pd(_mm256_set1_pd(q[2]), ss));
    val = _mm256_max_pd(val, _mm256_setzero_pd());
    const __m256d dval = _mm256_mul_pd(
        two, _mm256_add_pd(_mm256_mul_pd(_mm256_set1_pd(q[2] - q[0]), cs),
                           _mm256_mul_pd(_mm256_set1_pd(q[1]), _mm256_sub_pd(cc, ss))));
    h = _mm256_sqrt_pd(val);
    const __m256d positive = _mm256_cmp_pd(h, _mm256_setzero_pd(), _CMP_GT_OQ);
    const __m256d safe = _mm256_blendv_pd(_mm256_set1_pd(1.0), _mm256_mul_pd(two, h), positive);
    dh = _mm256_and_pd(_mm256_div_pd(dval, safe), positive);
}

double support_cross_sum(const double* cosv, const double* sinv, std::size_t n, const double* q1,
                         const double* q2) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        const __m256d c = _mm256_loadu_pd(cosv + j);
        const __m256d s = _mm256_loadu_pd(sinv + j);
        __m256d h1, d1, h2, d2;
        support_and_slope(q1, c, s, h1, d1);
        support_and_slope(q2, c, s, h2, d2);
        acc = _mm256_add_pd(acc, _mm256_sub_pd(_mm256_mul_pd(h1, h2), _mm256_mul_pd(d1, d2)));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    double sum = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (; j < n; ++j) {
        const double c = cosv[j], s = sinv[j];
        double h[2], d[2];
        const double* qs[2] = {q1, q2};
        for (int i = 0; i < 2; ++i) {
            const double* q = qs[i];
            const double val = q[0] * c * c + 2.0 * q[1] * c * s + q[2] * s * s;
            const double dval = 2.0 * ((q[2] - q[0]) * c * s + q[1] * (c * c - s * s));
            h[i] = std::sqrt(std::max(val, 0.0));
            d[i] = h[i] > 0.0 ? dval / (2.0 * h[i]) : 0.0;
        }
        sum += h[0] * h[1] - d[0] * d[1];
    }
    return sum;
}

}  // namespace

namespace detail {
const Kernels avx2_kernels{Isa::avx2, affine_residuals, sign_changes, min_abs, min_margin,
                           support_cross_sum};
}

}  // namespace crofton::simd
