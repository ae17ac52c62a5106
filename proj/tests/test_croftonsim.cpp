#include "crofton/croftonsim.hpp"
#include "crofton/error.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

using namespace crofton;

namespace {

constexpr double pi = std::numbers::pi;

// Kolmogorov-Smirnov statistic of xs against the uniform law on [lo, hi].
double ks_uniform(std::vector<double> xs, double lo, double hi) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = (xs[i] - lo) / (hi - lo);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}

ParamManifold ellipse(double a, double b) {
    Chart c;
    c.box = {{0.0, 2.0 * pi}};
    c.periodic = {true};
    c.immersion = [a, b](const Vec& t) {
        Vec x(2);
        x << a * std::cos(t[0]), b * std::sin(t[0]);
        return x;
    };
    c.differential = [a, b](const Vec& t) {
        Mat d(2, 1);
        d << -a * std::sin(t[0]), b * std::cos(t[0]);
        return d;
    };
    return ParamManifold("ellipse", 1, 2, {c});
}

}  // namespace

TEST_CASE("kappa against closed forms and sampling") {
    CHECK(kappa(1) == doctest::Approx(1.0));
    CHECK(kappa(2) == doctest::Approx(2.0 / pi));
    CHECK(kappa(3) == doctest::Approx(0.5));
    CHECK(kappa(4) == doctest::Approx(4.0 / (3.0 * pi)));
    for (int d : {2, 3, 5}) {
        const auto mc = kappa_monte_carlo(d, 200000, 17 + d);
        CHECK(std::fabs(mc.mean - kappa(d)) < 4.0 * mc.std_error);
    }
}

TEST_CASE("unit vectors on S^2 have uniform coordinates") {
    // Archimedes: each coordinate of a uniform point on S^2 is uniform on [-1, 1].
    Rng rng(4);
    const std::size_t n = 20000;
    std::vector<double> z, w;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec v = sample_unit_vector(3, rng);
        CHECK(v.norm() == doctest::Approx(1.0));
        z.push_back(v[2]);
        w.push_back(v[0]);
    }
    const double crit = 1.63 / std::sqrt(static_cast<double>(n));  // alpha = 0.01
    CHECK(ks_uniform(z, -1.0, 1.0) < crit);
    CHECK(ks_uniform(w, -1.0, 1.0) < crit);
}

TEST_CASE("Euclidean hyperplanes have uniform offsets and unit normals") {
    Rng rng(9);
    std::vector<double> off;
    for (int i = 0; i < 5000; ++i) {
        const Hyperplane h = sample_euclid_hyperplane(2, 3.0, rng);
        CHECK(h.normal.norm() == doctest::Approx(1.0));
        off.push_back(h.offset);
    }
    CHECK(ks_uniform(off, -3.0, 3.0) < 1.63 / std::sqrt(5000.0));
}

TEST_CASE("Crofton data masses and constants") {
    CHECK(CroftonData::euclid(2, 1.0).mass() == doctest::Approx(pi));
    CHECK(CroftonData::euclid(3, 2.0).mass() == doctest::Approx(8.0));
    CHECK(CroftonData::sphere(3).mass() == 1.0);
    CHECK(CroftonData::sphere(3).density_constant() == doctest::Approx(1.0 / pi));
    const auto p = CroftonData::product(
        {CroftonData::euclid(2, 1.0), CroftonData::product({CroftonData::sphere(3), CroftonData::euclid(2, 2.0)})});
    CHECK(p.codim() == 3);
    CHECK(p.ambient_dim() == 7);
    CHECK(p.mass() == doctest::Approx(pi * 2.0 * pi));
    Rng rng(1);
    const auto hs = p.sample(rng);
    REQUIRE(hs.size() == 3);
    CHECK(hs[1].offset == 0.0);
    CHECK(hs[2].normal.size() == 2);
    CHECK_THROWS_AS(CroftonData::euclid(2, 0.0), ContractError);
}

TEST_CASE("every line meeting the disk hits the unit circle twice") {
    EstimateOptions o;
    o.n_samples = 2000;
    const auto r = estimate_crofton(manifolds::circle(1.0), CroftonData::euclid(2, 1.0), o);
    CHECK(r.estimate == doctest::Approx(2.0 * pi).epsilon(1e-15));
    CHECK(r.std_error == 0.0);
    REQUIRE(r.prediction);
    CHECK(*r.prediction == doctest::Approx(2.0 * pi).epsilon(1e-12));
}

TEST_CASE("Cauchy-Crofton recovers the ellipse perimeter") {
    const double perimeter = 4.0 * 2.0 * std::comp_ellint_2(std::sqrt(1.0 - 0.25));
    EstimateOptions o;
    o.n_samples = 40000;
    o.seed = 5;
    const auto r = estimate_crofton(ellipse(2.0, 1.0), CroftonData::euclid(2, 2.0), o);
    REQUIRE(r.prediction);
    CHECK(*r.prediction == doctest::Approx(perimeter).epsilon(1e-10));
    CHECK(std::fabs(r.estimate - perimeter) < 4.0 * r.std_error);
    // A larger disk changes the mass and the hit rate but not the estimate.
    const auto big = estimate_crofton(ellipse(2.0, 1.0), CroftonData::euclid(2, 5.0), o);
    CHECK(std::fabs(big.estimate - perimeter) < 4.0 * big.std_error);
}

TEST_CASE("spherical Crofton on latitude circles") {
    EstimateOptions o;
    o.n_samples = 20000;
    const auto great = estimate_crofton(manifolds::great_circle(), CroftonData::sphere(3), o);
    CHECK(great.estimate == 2.0);
    CHECK(great.std_error == 0.0);
    const double th = 1.1;
    const auto lat = estimate_crofton(manifolds::latitude_circle(th), CroftonData::sphere(3), o);
    REQUIRE(lat.prediction);
    CHECK(*lat.prediction == doctest::Approx(2.0 * std::sin(th)).epsilon(1e-10));
    CHECK(std::fabs(lat.estimate - 2.0 * std::sin(th)) < 4.0 * lat.std_error);
}

TEST_CASE("estimates do not depend on the thread count") {
    EstimateOptions o;
    o.n_samples = 6000;
    o.seed = 42;
    o.predict = false;
    const auto a = estimate_crofton(manifolds::latitude_circle(0.7), CroftonData::sphere(3), o);
    o.threads = 4;
    const auto b = estimate_crofton(manifolds::latitude_circle(0.7), CroftonData::sphere(3), o);
    CHECK(a.estimate == b.estimate);
    CHECK(a.std_error == b.std_error);
    o.seed = 43;
    const auto c = estimate_crofton(manifolds::latitude_circle(0.7), CroftonData::sphere(3), o);
    CHECK(a.estimate != c.estimate);
}

TEST_CASE("placement is checked") {
    EstimateOptions o;
    o.n_samples = 100;
    CHECK_THROWS_AS(estimate_crofton(manifolds::circle(2.0), CroftonData::euclid(2, 1.0), o), ContractError);
    CHECK_THROWS_AS(estimate_crofton(manifolds::circle(2.0), CroftonData::sphere(2), o), ContractError);
    CHECK_THROWS_AS(estimate_crofton(manifolds::circle(1.0), CroftonData::euclid(3, 1.0), o), ContractError);
}

TEST_CASE("product predictions") {
    const auto torus = predict_product(manifolds::torus_embedded(1.0, 0.5),
                                       CroftonData::product({CroftonData::euclid(2, 1.0), CroftonData::euclid(2, 1.0)}));
    CHECK(torus.ring_route == doctest::Approx(2.0 * pi * pi).epsilon(1e-8));
    CHECK(torus.mixed_riemannian_route == doctest::Approx(torus.ring_route).epsilon(1e-8));
    CHECK(torus.theorem_constant == doctest::Approx(pi / 2.0));

    const double t1 = 0.9, t2 = 2.0;
    const auto sp = predict_product(manifolds::product_of_circles_on_spheres(t1, t2),
                                    CroftonData::product({CroftonData::sphere(3), CroftonData::sphere(3)}));
    CHECK(sp.ring_route == doctest::Approx(4.0 * std::sin(t1) * std::sin(t2)).epsilon(1e-8));
    CHECK(sp.constant_product == doctest::Approx(1.0 / (pi * pi)));
}

TEST_CASE("parallel helpers") {
    std::vector<int> hit(1000, 0);
    parallel_for(hit.size(), 4, [&](std::size_t i) { hit[i] += 1; });
    CHECK(std::all_of(hit.begin(), hit.end(), [](int h) { return h == 1; }));
    CHECK_THROWS_AS(parallel_for(100, 3,
                                 [](std::size_t i) {
                                     if (i == 57) throw std::runtime_error("boom");
                                 }),
                    std::runtime_error);
    CHECK(substream_seed(1, 0) != substream_seed(1, 1));
    CHECK(substream_seed(1, 5) != substream_seed(2, 5));
    Rng a = substream(3, 9), b = substream(3, 9);
    CHECK(a() == b());

    CompensatedSum s;
    s.add(1.0);
    for (int i = 0; i < 1000; ++i) s.add(1e-16);
    CHECK(s.value() == doctest::Approx(1.0 + 1e-13).epsilon(1e-15));
}
