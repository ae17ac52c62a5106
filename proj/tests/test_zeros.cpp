#include "crofton/error.hpp"
#include "crofton/zeros.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace crofton;

namespace {

constexpr double pi = std::numbers::pi;

ParamManifold interval(double lo, double hi) {
    Chart c;
    c.box = {{lo, hi}};
    c.periodic = {false};
    c.immersion = [](const Vec& t) { return Vec(t); };
    c.differential = [](const Vec&) { return Mat::Identity(1, 1); };
    return ParamManifold("interval", 1, 1, {c});
}

FunctionSpace quadratics() {
    return spaces::polynomial({Polynomial::parse(1, "1 0"), Polynomial::parse(1, "1 1"), Polynomial::parse(1, "1 2")},
                              QuadForm::identity(3));
}

Mat random_orthogonal(int d, Rng& rng) {
    std::normal_distribution<double> n;
    Mat a(d, d);
    for (int i = 0; i < d * d; ++i) a.data()[i] = n(rng);
    return Eigen::HouseholderQR<Mat>(a).householderQ();
}

}  // namespace

TEST_CASE("Fourier evaluation map") {
    const ParamManifold s1 = manifolds::circle(1.0);
    for (int k : {1, 2, 5}) {
        const EvalMap m = build_eval_map(spaces::fourier(k), s1);
        const ChartPoint p{0, Vec::Constant(1, 0.7)};
        CHECK(m.theta(p).norm() == doctest::Approx(1.0));
        CHECK(m.h(p).matrix()(0, 0) == doctest::Approx(double(k * k)));
        const std::vector<EvalMap> maps{m};
        const auto pred = predict_zeros(maps);
        CHECK(pred.ring_route == doctest::Approx(2.0 * pi * k).epsilon(1e-8));
        CHECK(pred.mixed_riemannian_route == doctest::Approx(pred.ring_route).epsilon(1e-8));
        CHECK(pred.mixed_volume_route == doctest::Approx(pred.ring_route).epsilon(1e-8));
    }
}

TEST_CASE("every unit trigonometric equation has two roots") {
    const std::vector<EvalMap> maps{build_eval_map(spaces::fourier(1), manifolds::circle(1.0))};
    ZerosOptions o;
    o.n_samples = 3000;
    const auto r = empirical_zeros(maps, o);
    CHECK(r.estimate == doctest::Approx(2.0 * pi).epsilon(1e-14));
    CHECK(r.std_error == 0.0);
}

TEST_CASE("constants have no zeros") {
    const EvalMap m = build_eval_map(spaces::constants(), manifolds::circle(1.0));
    CHECK(m.h({0, Vec::Constant(1, 0.1)}).matrix()(0, 0) == 0.0);
    const std::vector<EvalMap> maps{m};
    CHECK(predict_zeros(maps).ring_route == 0.0);
}

TEST_CASE("linear coordinates on the sphere give the round metric") {
    const ParamManifold s2 = manifolds::sphere2();
    const EvalMap m = build_eval_map(spaces::linear_coords(s2), s2);
    Vec t(2);
    t << 0.8, 2.1;
    const ChartPoint p{0, t};
    CHECK((m.theta(p) - s2.point(p)).norm() < 1e-15);
    const Mat h = m.h(p).matrix();
    CHECK(h(0, 0) == doctest::Approx(1.0));
    CHECK(h(1, 1) == doctest::Approx(std::sin(0.8) * std::sin(0.8)));
    CHECK(h(0, 1) == doctest::Approx(0.0));
    const std::vector<EvalMap> maps{m, m};
    IntegrationOptions o;
    o.nodes_per_axis = 128;
    const auto pred = predict_zeros(maps, o);
    // (2! v_2 / 2^2) * area(S^2) = (pi / 2) * 4 pi
    CHECK(pred.ring_route == doctest::Approx(2.0 * pi * pi).epsilon(1e-4));
}

TEST_CASE("polynomial prediction is the arc length of the moment curve") {
    const double exact = std::sqrt(5.0) + 0.5 * std::asinh(2.0);  // int_{-1}^{1} sqrt(1 + 4 t^2)
    const std::vector<EvalMap> maps{build_eval_map(quadratics(), interval(-1.0, 1.0))};
    IntegrationOptions o;
    o.nodes_per_axis = 1024;
    CHECK(predict_zeros(maps, o).ring_route == doctest::Approx(exact).epsilon(1e-6));
    ZerosOptions z;
    z.n_samples = 40000;
    z.seed = 9;
    z.integration = o;
    const auto r = empirical_zeros(maps, z);
    CHECK(std::fabs(r.estimate - exact) < 4.0 * r.std_error);
}

TEST_CASE("property: predictions do not depend on the basis") {
    Rng rng(3);
    const ParamManifold line = interval(-1.0, 1.0);
    const std::vector<EvalMap> base{build_eval_map(quadratics(), line)};
    const double p0 = predict_zeros(base).ring_route;
    for (int trial = 0; trial < 5; ++trial) {
        const std::vector<EvalMap> rot{build_eval_map(spaces::transformed(quadratics(), random_orthogonal(3, rng)), line)};
        CHECK(predict_zeros(rot).ring_route == doctest::Approx(p0).epsilon(1e-8));
        Mat a = random_orthogonal(3, rng);
        a.col(0) *= 3.0;
        a(2, 1) += 0.5;
        const std::vector<EvalMap> gen{build_eval_map(spaces::transformed(quadratics(), a), line)};
        CHECK(predict_zeros(gen).ring_route == doctest::Approx(p0).epsilon(1e-8));
    }
    const ParamManifold torus = manifolds::torus_embedded(1.0, 1.0);
    const FunctionSpace f1 = spaces::fourier_on_axis(1, 0), f2 = spaces::fourier_on_axis(2, 1);
    IntegrationOptions o;
    o.nodes_per_axis = 32;
    const std::vector<EvalMap> plain{build_eval_map(f1, torus), build_eval_map(f2, torus)};
    const std::vector<EvalMap> turned{build_eval_map(spaces::transformed(f1, random_orthogonal(2, rng)), torus),
                                      build_eval_map(f2, torus)};
    CHECK(predict_zeros(turned, o).ring_route == doctest::Approx(predict_zeros(plain, o).ring_route).epsilon(1e-8));
}

TEST_CASE("property: scaling the basis by lambda scales the prediction by lambda") {
    const ParamManifold line = interval(-1.0, 1.0);
    const std::vector<EvalMap> base{build_eval_map(quadratics(), line)};
    const std::vector<EvalMap> big{build_eval_map(spaces::scaled(quadratics(), 2.5), line)};
    CHECK(predict_zeros(big).ring_route == doctest::Approx(2.5 * predict_zeros(base).ring_route).epsilon(1e-8));
}

TEST_CASE("property: a larger sampling ball leaves the estimate unchanged in expectation") {
    const std::vector<EvalMap> maps{build_eval_map(quadratics(), interval(-1.0, 1.0))};
    ZerosOptions z;
    z.n_samples = 30000;
    z.predict = false;
    z.seed = 21;
    const auto a = empirical_zeros(maps, z);
    z.radius_scale = 2.0;
    z.seed = 22;
    const auto b = empirical_zeros(maps, z);
    CHECK(std::fabs(a.estimate - b.estimate) < 4.0 * std::hypot(a.std_error, b.std_error));
    CHECK(b.mean_count < a.mean_count);
}

TEST_CASE("separable spaces on the torus factorize") {
    const ParamManifold torus = manifolds::torus_embedded(1.0, 1.0);
    const std::vector<EvalMap> maps{build_eval_map(spaces::fourier_on_axis(2, 0), torus),
                                    build_eval_map(spaces::fourier_on_axis(1, 1), torus)};
    ZerosOptions z;
    z.n_samples = 1500;
    z.counting.surface_grid = 64;
    z.integration.nodes_per_axis = 32;
    const auto r = empirical_zeros(maps, z);
    const double factors = (2.0 * pi * 2.0) * (2.0 * pi * 1.0);
    REQUIRE(r.prediction);
    CHECK(*r.prediction == doctest::Approx(factors).epsilon(1e-8));
    CHECK(r.estimate == doctest::Approx(factors).epsilon(1e-12));
}

TEST_CASE("finite-difference gradients match analytic ones") {
    FunctionSpace v = quadratics();
    for (auto& b : v.basis) b.gradient = nullptr;
    const ParamManifold line = interval(-1.0, 1.0);
    const EvalMap fd = build_eval_map(v, line);
    const EvalMap an = build_eval_map(quadratics(), line);
    CHECK(fd.finite_difference());
    const ChartPoint p{0, Vec::Constant(1, 0.37)};
    CHECK((fd.dtheta(p) - an.dtheta(p)).norm() < 1e-7);
}

TEST_CASE("Gram matrices must be positive definite") {
    Mat g(3, 3);
    g << 1, 0, 0, 0, 1, 1, 0, 1, 1;
    const FunctionSpace v = spaces::polynomial(
        {Polynomial::parse(1, "1 0"), Polynomial::parse(1, "1 1"), Polynomial::parse(1, "1 2")}, QuadForm(g));
    CHECK_THROWS_AS(build_eval_map(v, interval(-1.0, 1.0)), ContractError);
    const std::vector<EvalMap> two{build_eval_map(quadratics(), interval(-1.0, 1.0)),
                                   build_eval_map(quadratics(), interval(-1.0, 1.0))};
    CHECK_THROWS_AS(predict_zeros(two), ContractError);
}
