#include "crofton/error.hpp"
#include "crofton/simd/kernels.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

using namespace crofton::simd;

namespace {

std::vector<Isa> available() {
    std::vector<Isa> out;
    for (Isa i : {Isa::scalar, Isa::avx2, Isa::neon})
        if (isa_supported(i)) out.push_back(i);
    return out;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

std::vector<double> noise(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> d;
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

std::size_t naive_sign_changes(const std::vector<double>& s, bool periodic) {
    std::size_t c = 0;
    for (std::size_t j = 0; j + 1 < s.size(); ++j) c += (s[j] < 0.0) != (s[j + 1] < 0.0);
    if (periodic && s.size() > 1) c += (s.back() < 0.0) != (s.front() < 0.0);
    return c;
}

double naive_cross(const std::vector<double>& th, const double* q1, const double* q2) {
    auto h = [](const double* q, double t, double& dh) {
        const double c = std::cos(t), s = std::sin(t);
        const double v = std::sqrt(q[0] * c * c + 2.0 * q[1] * c * s + q[2] * s * s);
        const double dq = -2.0 * q[0] * c * s + 2.0 * q[1] * (c * c - s * s) + 2.0 * q[2] * s * c;
        dh = v > 0.0 ? dq / (2.0 * v) : 0.0;
        return v;
    };
    double sum = 0.0;
    for (double t : th) {
        double d1, d2;
        const double a = h(q1, t, d1), b = h(q2, t, d2);
        sum += a * b - d1 * d2;
    }
    return sum;
}

}  // namespace

TEST_CASE("dispatch") {
    CHECK(isa_supported(Isa::scalar));
    CHECK(isa_supported(best_isa()));
    CHECK(isa_name(Isa::avx2) == "avx2");
    for (Isa i : available()) {
        set_active_isa(i);
        CHECK(kernels().isa == i);
    }
    set_active_isa(best_isa());
    CHECK(kernels().isa == best_isa());
#if defined(__x86_64__)
    CHECK_THROWS_AS(kernels_for(Isa::neon), crofton::ContractError);
#endif
}

TEST_CASE("vector kernels match the scalar reference bit for bit") {
    std::mt19937_64 rng(12);
    const Kernels& ref = kernels_for(Isa::scalar);
    for (Isa isa : available()) {
        const Kernels& k = kernels_for(isa);
        CAPTURE(isa_name(isa));
        for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 13u, 64u, 1001u}) {
            CAPTURE(n);
            for (int p : {1, 2, 3, 5}) {
                std::vector<std::vector<double>> cols;
                std::vector<const double*> rows;
                for (int i = 0; i < p; ++i) cols.push_back(noise(n, rng));
                for (auto& c : cols) rows.push_back(c.data());
                const auto u = noise(static_cast<std::size_t>(p), rng);
                std::vector<double> a(n), b(n);
                ref.affine_residuals(rows.data(), p, n, u.data(), 0.3, a.data());
                k.affine_residuals(rows.data(), p, n, u.data(), 0.3, b.data());
                bool same = true;
                for (std::size_t j = 0; j < n; ++j) same = same && same_bits(a[j], b[j]);
                CHECK(same);

                for (bool periodic : {false, true}) {
                    CHECK(k.sign_changes(b.data(), n, periodic) == naive_sign_changes(a, periodic));
                    CHECK(ref.sign_changes(a.data(), n, periodic) == naive_sign_changes(a, periodic));
                }
                CHECK(same_bits(k.min_abs(b.data(), n), ref.min_abs(a.data(), n)));

                const auto bound = noise(n, rng);
                CHECK(same_bits(k.min_margin(rows.data(), p, n, bound.data(), u.data()),
                                ref.min_margin(rows.data(), p, n, bound.data(), u.data())));
            }
        }
    }
}

TEST_CASE("sign changes treat zero as nonnegative") {
    const std::vector<double> s{0.0, -1.0, -0.0, 2.0, 0.0};
    for (Isa isa : available()) {
        const Kernels& k = kernels_for(isa);
        CHECK(k.sign_changes(s.data(), s.size(), false) == 2);
        CHECK(k.sign_changes(s.data(), s.size(), true) == 2);
        CHECK(k.min_abs(s.data(), 0) == std::numeric_limits<double>::infinity());
        CHECK(k.min_abs(s.data() + 1, 1) == 1.0);
    }
}

TEST_CASE("support cross sum against a direct evaluation") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> un(0.0, 1.0);
    for (std::size_t n : {1u, 6u, 257u, 4096u}) {
        std::vector<double> th(n), c(n), s(n);
        for (std::size_t j = 0; j < n; ++j) {
            th[j] = 2.0 * std::numbers::pi * (j + un(rng)) / n;
            c[j] = std::cos(th[j]);
            s[j] = std::sin(th[j]);
        }
        for (int trial = 0; trial < 5; ++trial) {
            const double x = un(rng) + 0.1, y = un(rng) + 0.1, r = 2.0 * un(rng) - 1.0;
            const double q1[3]{x, r * std::sqrt(x * y), y};
            // rank one: a segment
            const double w = un(rng) * 6.0;
            const double q2[3]{std::cos(w) * std::cos(w), std::cos(w) * std::sin(w), std::sin(w) * std::sin(w)};
            const double want = naive_cross(th, q1, q2);
            for (Isa isa : available()) {
                const double got = kernels_for(isa).support_cross_sum(c.data(), s.data(), n, q1, q2);
                CHECK(got == doctest::Approx(want).epsilon(1e-12).scale(static_cast<double>(n)));
            }
        }
    }
}
