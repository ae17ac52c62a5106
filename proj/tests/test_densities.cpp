#include "crofton/densities.hpp"
#include "crofton/error.hpp"
#include "crofton/manifold.hpp"
#include "crofton/parallel.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace crofton;

namespace {

constexpr double pi = std::numbers::pi;

QuadForm random_pd(int d, Rng& rng) {
    std::normal_distribution<double> n;
    Mat a(d, d);
    for (int i = 0; i < d * d; ++i) a.data()[i] = n(rng);
    return QuadForm(a * a.transpose() + 0.2 * Mat::Identity(d, d));
}

Mat random_frame(int d, int k, Rng& rng) {
    std::normal_distribution<double> n;
    Mat b(d, k);
    for (int i = 0; i < d * k; ++i) b.data()[i] = n(rng);
    return b;
}

}  // namespace

TEST_CASE("polynomials parse, evaluate and differentiate") {
    const Polynomial p = Polynomial::parse(2, "1.0 1 0; -0.5 0 2; 2 1 1");
    Vec s(2);
    s << 0.3, -1.2;
    CHECK(p(s) == doctest::Approx(0.3 - 0.5 * 1.44 + 2.0 * 0.3 * -1.2));
    const double h = 1e-6;
    for (int a = 0; a < 2; ++a) {
        Vec e = Vec::Zero(2);
        e[a] = h;
        CHECK(p.gradient(s)[a] == doctest::Approx((p(s + e) - p(s - e)) / (2.0 * h)).epsilon(1e-7));
    }
    CHECK_THROWS_AS(Polynomial::parse(2, "1 1"), ContractError);
}

TEST_CASE("manifold differentials match central differences") {
    Vec c(2);
    c << 0.5, -1.0;
    for (const ParamManifold& m : {manifolds::circle(2.0, c), manifolds::sphere2(), manifolds::torus_embedded(1.0, 0.5),
                                    manifolds::product_of_circles_on_spheres(1.0, 2.0),
                                    manifolds::graph_surface({-1, 1}, {-1, 1}, Polynomial::parse(2, "1 2 0"),
                                                             Polynomial::parse(2, "1 0 1; 1 1 1"))}) {
        const Chart& ch = m.charts().front();
        Vec t(m.param_dim());
        for (int a = 0; a < m.param_dim(); ++a) t[a] = ch.box[a].lo + 0.37 * ch.box[a].width();
        const Mat dx = m.differential({0, t});
        for (int a = 0; a < m.param_dim(); ++a) {
            Vec e = Vec::Zero(m.param_dim());
            e[a] = 1e-6;
            const Vec fd = (ch.immersion(t + e) - ch.immersion(t - e)) / 2e-6;
            CHECK((dx.col(a) - fd).norm() < 1e-7);
        }
    }
}

TEST_CASE("rank-deficient parametrizations are rejected") {
    Chart flat;
    flat.box = {{0.0, 1.0}};
    flat.periodic = {false};
    flat.immersion = [](const Vec&) { return Vec::Zero(2); };
    flat.differential = [](const Vec&) { return Mat::Zero(2, 1); };
    CHECK_THROWS_AS(ParamManifold("flat", 1, 2, {flat}), ContractError);
}

TEST_CASE("length, area and the product of lengths") {
    IntegrationOptions o;
    o.nodes_per_axis = 256;
    const auto len = integrate_density(manifolds::circle(1.5), vol1_density(euclidean_metric(2)), o);
    CHECK(len.value == doctest::Approx(3.0 * pi).epsilon(1e-12));
    CHECK(len.error_estimate < 1e-10);

    const auto lat = integrate_density(manifolds::latitude_circle(pi / 6), vol1_density(euclidean_metric(3)), o);
    CHECK(lat.value == doctest::Approx(pi).epsilon(1e-12));

    const std::vector<FinslerField> two(2, euclidean_metric(3));
    IntegrationOptions s;
    s.nodes_per_axis = 128;
    const auto area = integrate_density(manifolds::sphere2(), mixed_riemannian_density(two), s);
    CHECK(area.value == doctest::Approx(4.0 * pi).epsilon(1e-4));

    // Fubini on C1 x C2: the ring product of the block lengths integrates to len1 * len2.
    const std::vector<EllipsoidDensity> parts{vol1_density(block_metric(4, 0, 2)), vol1_density(block_metric(4, 2, 2))};
    const auto prod = integrate_density(manifolds::torus_embedded(1.0, 0.5), ring_product(parts), s);
    CHECK(prod.value == doctest::Approx(2.0 * pi * pi).epsilon(1e-10));
}

TEST_CASE("length is invariant under rigid motions") {
    Mat r(3, 3);
    const double a = 0.7;
    r << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
    Vec shift(3);
    shift << 1.0, 2.0, -3.0;
    const ParamManifold m = manifolds::transformed(manifolds::latitude_circle(1.0), r, shift);
    const auto len = integrate_density(m, vol1_density(euclidean_metric(3)));
    CHECK(len.value == doctest::Approx(2.0 * pi * std::sin(1.0)).epsilon(1e-12));
}

TEST_CASE("ring product bookkeeping") {
    const auto v = vol1_density(euclidean_metric(3));
    CHECK(v.scalar == 0.5);
    const auto vv = ring_product(v, v);
    CHECK(vv.degree == 2);
    CHECK(vv.scalar == doctest::Approx(0.5));
    const auto vvv = ring_product(vv, v);
    CHECK(vvv.scalar == doctest::Approx(0.5 * 0.5 * 3.0));
    CHECK(scaled(v, 4.0).scalar == 2.0);
    CHECK_THROWS_AS(scaled(v, -1.0), ContractError);
    CHECK_THROWS_AS(ring_product(v, vol1_density(euclidean_metric(2))), ContractError);
}

TEST_CASE("ring product route equals the Gram route for vol_k") {
    Rng rng(31);
    const ChartPoint x{0, Vec::Zero(3)};
    for (int k = 1; k <= 2; ++k) {
        for (int trial = 0; trial < 50; ++trial) {
            const QuadForm g = random_pd(3, rng);
            const Frame f(random_frame(3, k, rng));
            const std::vector<FinslerField> gs(static_cast<std::size_t>(k), constant_field(g));
            const double ring = ring_product_eval(mixed_riemannian_density(gs), x, f).value;
            CHECK(ring == doctest::Approx(gram_volume(g, f)).epsilon(1e-8));
        }
    }
    MixedVolumeOptions mo;
    mo.gauss_samples = 40000;
    for (int trial = 0; trial < 5; ++trial) {
        const QuadForm g = random_pd(3, rng);
        const Frame f(random_frame(3, 3, rng));
        mo.seed = 500 + trial;
        const std::vector<FinslerField> gs(3, constant_field(g));
        const auto r = ring_product_eval(mixed_riemannian_density(gs), x, f, mo);
        CHECK(std::fabs(r.value - gram_volume(g, f)) < 4.0 * r.std_error);
    }
}

TEST_CASE("eval_vol1 and pullbacks") {
    const FinslerField g = constant_field(QuadForm::diagonal({4.0, 1.0}));
    Vec xi(2);
    xi << 1.0, 1.0;
    CHECK(eval_vol1(g, {0, Vec::Zero(2)}, xi) == doctest::Approx(std::sqrt(5.0)));

    const ParamManifold c = manifolds::circle(3.0);
    const FinslerField pb = pullback_field(euclidean_metric(2), c);
    CHECK(pb.domain == FieldDomain::parameter);
    CHECK(pb({0, Vec::Constant(1, 0.4)}).matrix()(0, 0) == doctest::Approx(9.0));
    const auto len = integrate_density(c, vol1_density(pb));
    CHECK(len.value == doctest::Approx(6.0 * pi).epsilon(1e-12));
}

TEST_CASE("quadrature weights sum to the parameter volume") {
    const ParamManifold s = manifolds::sphere2();
    double total = 0.0;
    for (const auto& n : s.quadrature(16)) total += n.weight;
    CHECK(total == doctest::Approx(2.0 * pi * pi));
    CHECK(manifolds::circle(2.0).bounding_radius(0, 2) == doctest::Approx(2.0));
    const ParamManifold graph = manifolds::graph_surface({-1, 1}, {-1, 1}, Polynomial::parse(2, "1 0 0"),
                                                         Polynomial::parse(2, "1 0 0"));
    CHECK(graph.bounding_radius(0, 2) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("property: integrals do not depend on the parametrization") {
    // t -> t + 0.3 sin t is a diffeomorphism of the circle.
    Chart c;
    c.box = {{0.0, 2.0 * pi}};
    c.periodic = {true};
    c.immersion = [](const Vec& t) {
        const double s = t[0] + 0.3 * std::sin(t[0]);
        Vec x(2);
        x << 2.0 * std::cos(s), std::sin(s);
        return x;
    };
    c.differential = [](const Vec& t) {
        const double s = t[0] + 0.3 * std::sin(t[0]), ds = 1.0 + 0.3 * std::cos(t[0]);
        Mat d(2, 1);
        d << -2.0 * std::sin(s) * ds, std::cos(s) * ds;
        return d;
    };
    const ParamManifold warped("warped_ellipse", 1, 2, {c});
    Chart plain = c;
    plain.immersion = [](const Vec& t) {
        Vec x(2);
        x << 2.0 * std::cos(t[0]), std::sin(t[0]);
        return x;
    };
    plain.differential = [](const Vec& t) {
        Mat d(2, 1);
        d << -2.0 * std::sin(t[0]), std::cos(t[0]);
        return d;
    };
    const ParamManifold straight("ellipse", 1, 2, {plain});
    const auto a = integrate_density(warped, vol1_density(euclidean_metric(2)));
    const auto b = integrate_density(straight, vol1_density(euclidean_metric(2)));
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-6));
    CHECK(b.value == doctest::Approx(4.0 * 2.0 * std::comp_ellint_2(std::sqrt(0.75))).epsilon(1e-10));
}

TEST_CASE("property: pulled-back densities match pushed-forward frames") {
    const ParamManifold t = manifolds::torus_embedded(1.0, 0.5);
    const FinslerField g = constant_field(QuadForm::diagonal({1.0, 2.0, 0.5, 3.0}));
    const std::vector<FinslerField> amb(2, g);
    const std::vector<FinslerField> par(2, pullback_field(g, t));
    IntegrationOptions o;
    o.nodes_per_axis = 64;
    const auto direct = integrate_density(t, mixed_riemannian_density(amb), o);
    const auto pulled = integrate_density(t, mixed_riemannian_density(par), o);
    CHECK(pulled.value == doctest::Approx(direct.value).epsilon(1e-8));
}

TEST_CASE("property: degenerate metrics give finite values") {
    const ParamManifold t = manifolds::torus_embedded(1.0, 0.5);
    // h(v) = |v_1|^2 only sees the first circle; its pullback vanishes on d/dt_2.
    const FinslerField h = pullback_field(block_metric(4, 0, 2), t);
    const QuadForm q = h({0, Vec::Constant(2, 0.3)});
    CHECK(q.matrix()(1, 1) == doctest::Approx(0.0));
    CHECK(q.rank() == 1);
    const std::vector<FinslerField> same(2, block_metric(4, 0, 2));
    IntegrationOptions o;
    o.nodes_per_axis = 32;
    const auto r = integrate_density(t, mixed_riemannian_density(same), o);
    CHECK(std::isfinite(r.value));
    CHECK(r.value == doctest::Approx(0.0));
    const auto zero = integrate_density(manifolds::circle(1.0), vol1_density(constant_field(QuadForm::zero(2))));
    CHECK(zero.value == 0.0);
}
