#include "crofton/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace crofton::simd {
namespace {

void affine_residuals(const double* const* rows, int p, std::size_t n, const double* u, double c,
                      double* out) {
    for (std::size_t j = 0; j < n; ++j) {
        double acc = rows[0][j] * u[0];
        for (int k = 1; k < p; ++k) acc = acc + rows[k][j] * u[k];
        out[j] = acc - c;
    }
}

std::size_t sign_changes(const double* s, std::size_t n, bool periodic) {
    if (n < 2) return 0;
    std::size_t count = 0;
    bool prev = s[0] < 0.0;
    for (std::size_t j = 1; j < n; ++j) {
        const bool cur = s[j] < 0.0;
        count += cur != prev;
        prev = cur;
    }
    if (periodic) count += (s[n - 1] < 0.0) != (s[0] < 0.0);
    return count;
}

double min_abs(const double* s, std::size_t n) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) m = std::min(m, std::fabs(s[j]));
    return m;
}

double min_margin(const double* const* dirs, int m, std::size_t n, const double* bound,
                  const double* x) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
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

double support_cross_sum(const double* cosv, const double* sinv, std::size_t n, const double* q1,
                         const double* q2) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double h1, d1, h2, d2;
        support_and_slope(q1, cosv[j], sinv[j], h1, d1);
        support_and_slope(q2, cosv[j], sinv[j], h2, d2);
        sum += h1 * h2 - d1 * d2;
    }
    return sum;
}

}  // namespace

namespace detail {
const Kernels scalar_kernels{Isa::scalar, affine_residuals, sign_changes, min_abs, min_margin,
                             support_cross_sum};
}

}  // namespace crofton::simd
