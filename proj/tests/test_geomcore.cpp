#include "crofton/error.hpp"
#include "crofton/geomcore.hpp"
#include "crofton/mixvol.hpp"
#include "crofton/parallel.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace crofton;

namespace {

Mat random_matrix(int r, int c, Rng& rng) {
    std::normal_distribution<double> n;
    Mat m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = n(rng);
    return m;
}

QuadForm random_pd(int d, Rng& rng) {
    const Mat a = random_matrix(d, d, rng);
    return QuadForm(a * a.transpose() + 0.1 * Mat::Identity(d, d));
}

}  // namespace

TEST_CASE("unit ball volumes") {
    const double pi = std::numbers::pi;
    CHECK(unit_ball_volume(0) == doctest::Approx(1.0));
    CHECK(unit_ball_volume(1) == doctest::Approx(2.0));
    CHECK(unit_ball_volume(2) == doctest::Approx(pi));
    CHECK(unit_ball_volume(3) == doctest::Approx(4.0 * pi / 3.0));
    CHECK(unit_ball_volume(4) == doctest::Approx(pi * pi / 2.0));
    CHECK(unit_ball_volume(5) == doctest::Approx(8.0 * pi * pi / 15.0));
}

TEST_CASE("QuadForm validation and clamping") {
    Mat m(2, 2);
    m << 1.0, 0.0, 0.0, -1e-14;
    const QuadForm q(m);
    CHECK(q.eigenvalues()[0] == 0.0);
    CHECK(q.rank() == 1);

    Mat bad(2, 2);
    bad << 1.0, 0.0, 0.0, -0.1;
    CHECK_THROWS_AS(QuadForm{bad}, ContractError);

    Mat asym(2, 2);
    asym << 1.0, 0.5, 0.0, 1.0;
    CHECK_THROWS_AS(QuadForm{asym}, ContractError);

    const QuadForm d = QuadForm::diagonal({4.0, 1.0});
    Vec u(2);
    u << 1.0, 2.0;
    CHECK(d(u) == doctest::Approx(8.0));
    const Mat s = d.sqrt_factor();
    CHECK((s * s - d.matrix()).norm() < 1e-14);
}

TEST_CASE("support function of an ellipsoid") {
    const Ellipsoid e(QuadForm::diagonal({9.0, 4.0}));
    Vec u(2);
    u << 1.0, 0.0;
    CHECK(support(e, u) == doctest::Approx(3.0));
    u << 0.0, -1.0;
    CHECK(support(e, u) == doctest::Approx(2.0));

    // max over boundary points S x, |x| = 1.
    Rng rng(3);
    const QuadForm q = random_pd(3, rng);
    const Ellipsoid body(q);
    const Mat s = q.sqrt_factor();
    for (int trial = 0; trial < 10; ++trial) {
        const Vec w = random_matrix(3, 1, rng).col(0);
        const Vec x = s * w / (s * w).norm();
        CHECK(support(body, w) == doctest::Approx(w.dot(s * x)).epsilon(1e-12));
    }
}

TEST_CASE("gram volume against cross products") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Mat b = random_matrix(3, 2, rng);
        const Eigen::Vector3d a = b.col(0), c = b.col(1);
        CHECK(gram_volume(QuadForm::identity(3), Frame(b)) == doctest::Approx(a.cross(c).norm()).epsilon(1e-12));
    }
    const Mat sq = random_matrix(3, 3, rng);
    CHECK(gram_volume(QuadForm::identity(3), Frame(sq)) == doctest::Approx(std::fabs(sq.determinant())));

    Mat dep(3, 2);
    dep << 1, 2, 1, 2, 1, 2;
    CHECK(gram_volume(QuadForm::identity(3), Frame(dep)) == doctest::Approx(0.0));
}

TEST_CASE("gram volume scales linearly in each vector and transforms by det") {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const QuadForm g = random_pd(3, rng);
        Mat b = random_matrix(3, 2, rng);
        const double v = gram_volume(g, Frame(b));
        b.col(1) *= -2.5;
        CHECK(gram_volume(g, Frame(b)) == doctest::Approx(2.5 * v).epsilon(1e-10));

        // g(Av, Aw) under frame change f -> f M equals |det M| times the volume.
        const Mat m = random_matrix(2, 2, rng);
        CHECK(gram_volume(g, Frame(Mat(b * m))) ==
              doctest::Approx(std::fabs(m.determinant()) * gram_volume(g, Frame(b))).epsilon(1e-9));
    }
}

TEST_CASE("restricted form is the projected ellipsoid") {
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const QuadForm q = random_pd(4, rng);
        const Mat b = random_matrix(4, 2, rng);
        const QuadForm r = restrict_form(q, Frame(b));
        CHECK(r.dim() == 2);
        const Vec w = random_matrix(2, 1, rng).col(0);
        CHECK(support(Ellipsoid(r), w) == doctest::Approx(support(Ellipsoid(q), b * w)).epsilon(1e-12));
    }
}

TEST_CASE("frames") {
    const Frame f = Frame::standard(3, 2);
    CHECK(f.ambient_dim() == 3);
    CHECK(f.size() == 2);
    CHECK(f.vector(1)[1] == 1.0);
    const Frame g{{1.0, 2.0, 3.0}, {0.0, 1.0, 0.0}};
    CHECK(g.ambient_dim() == 3);
    CHECK(g.vector(0)[2] == 3.0);
}

TEST_CASE("property: gram volume depends only on the k-vector") {
    Rng rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        const QuadForm g = random_pd(4, rng);
        const Mat b = random_matrix(4, 3, rng);
        Mat u = random_matrix(3, 3, rng);
        u /= std::cbrt(std::fabs(u.determinant()));
        CHECK(gram_volume(g, Frame(Mat(b * u))) == doctest::Approx(gram_volume(g, Frame(b))).epsilon(1e-9));
    }
}

TEST_CASE("property: gram volume is the restricted ellipsoid volume over v_k") {
    Rng rng(18);
    for (int k = 1; k <= 3; ++k) {
        for (int trial = 0; trial < 10; ++trial) {
            const QuadForm g = random_pd(4, rng);
            const Frame f(random_matrix(4, k, rng));
            const double vol = ellipsoid_volume(restrict_form(g, f));
            CHECK(gram_volume(g, f) == doctest::Approx(vol / unit_ball_volume(k)).epsilon(1e-10));
        }
    }
}

TEST_CASE("property: support functions are even, homogeneous and subadditive") {
    Rng rng(19);
    for (int trial = 0; trial < 50; ++trial) {
        Mat m = random_matrix(3, 2, rng);
        const Ellipsoid e(QuadForm(Mat(m * m.transpose())));  // flat: rank 2
        const Vec u = random_matrix(3, 1, rng).col(0), v = random_matrix(3, 1, rng).col(0);
        CHECK(support(e, u) >= 0.0);
        CHECK(support(e, -u) == doctest::Approx(support(e, u)));
        CHECK(support(e, 2.5 * u) == doctest::Approx(2.5 * support(e, u)));
        CHECK(support(e, u + v) <= support(e, u) + support(e, v) + 1e-12);
    }
    const Ellipsoid point(QuadForm::zero(2));
    Vec u(2);
    u << 1.0, 2.0;
    CHECK(support(point, u) == 0.0);
}
