#include "crofton/manifold.hpp"

#include "crofton/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace crofton {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool full_rank(const Mat& dx) {
    const Mat gram = dx.transpose() * dx;
    double scale = 1.0;
    for (Eigen::Index i = 0; i < gram.rows(); ++i) scale *= gram(i, i);
    return scale > 0.0 && gram.determinant() > 1e-14 * scale;
}

// Calls fn(t) for each midpoint of an n-per-axis grid over the box.
template <class Fn>
void for_each_midpoint(const std::vector<Interval>& box, std::size_t n, Fn&& fn) {
    const std::size_t k = box.size();
    std::vector<std::size_t> idx(k, 0);
    Vec t(static_cast<Eigen::Index>(k));
    while (true) {
        for (std::size_t a = 0; a < k; ++a)
            t[a] = box[a].lo + (static_cast<double>(idx[a]) + 0.5) * box[a].width() / static_cast<double>(n);
        fn(t);
        std::size_t a = 0;
        while (a < k && ++idx[a] == n) idx[a++] = 0;
        if (a == k) break;
    }
}

// Closed grid with n cells per axis, endpoints included.
template <class Fn>
void for_each_node(const std::vector<Interval>& box, std::size_t n, Fn&& fn) {
    const std::size_t k = box.size();
    std::vector<std::size_t> idx(k, 0);
    Vec t(static_cast<Eigen::Index>(k));
    while (true) {
        for (std::size_t a = 0; a < k; ++a)
            t[a] = box[a].lo + static_cast<double>(idx[a]) * box[a].width() / static_cast<double>(n);
        fn(t);
        std::size_t a = 0;
        while (a < k && ++idx[a] == n + 1) idx[a++] = 0;
        if (a == k) break;
    }
}

}  // namespace

ParamManifold::ParamManifold(std::string name, int param_dim, int ambient_dim, std::vector<Chart> charts)
    : name_(std::move(name)), param_dim_(param_dim), ambient_dim_(ambient_dim), charts_(std::move(charts)) {
    require(param_dim_ >= 1 && param_dim_ <= ambient_dim_, "ParamManifold: need 1 <= k <= d");
    require(!charts_.empty(), "ParamManifold: no charts");
    for (auto& c : charts_) {
        require(static_cast<int>(c.box.size()) == param_dim_, "ParamManifold: box dimension mismatch");
        if (c.periodic.empty()) c.periodic.assign(param_dim_, false);
        require(static_cast<int>(c.periodic.size()) == param_dim_, "ParamManifold: periodic flags mismatch");
        require(static_cast<bool>(c.immersion), "ParamManifold: chart without immersion");
        for (const auto& iv : c.box) require(iv.hi > iv.lo, "ParamManifold: empty parameter interval");
    }
    for (std::size_t ci = 0; ci < charts_.size(); ++ci) {
        for_each_midpoint(charts_[ci].box, param_dim_ == 1 ? 256 : 32, [&](const Vec& t) {
            const Mat dx = differential({ci, t});
            require(dx.rows() == ambient_dim_ && dx.cols() == param_dim_,
                    "ParamManifold: differential has wrong shape");
            if (!full_rank(dx))
                throw ContractError("ParamManifold '" + name_ + "': differential is rank-deficient");
        });
    }
}

Vec ParamManifold::point(const ChartPoint& p) const { return charts_.at(p.chart).immersion(p.t); }

Mat ParamManifold::differential(const ChartPoint& p) const {
    const Chart& c = charts_.at(p.chart);
    if (c.differential) return c.differential(p.t);
    Mat dx(ambient_dim_, param_dim_);
    for (int a = 0; a < param_dim_; ++a) {
        const double h = 1e-6 * c.box[a].width();
        Vec tp = p.t, tm = p.t;
        tp[a] += h;
        tm[a] -= h;
        dx.col(a) = (c.immersion(tp) - c.immersion(tm)) / (2.0 * h);
    }
    return dx;
}

bool ParamManifold::uses_finite_differences() const {
    return std::any_of(charts_.begin(), charts_.end(), [](const Chart& c) { return !c.differential; });
}

std::vector<QuadratureNode> ParamManifold::quadrature(std::size_t nodes_per_axis) const {
    require(nodes_per_axis >= 1, "quadrature: need at least one node per axis");
    std::vector<QuadratureNode> nodes;
    for (std::size_t ci = 0; ci < charts_.size(); ++ci) {
        double w = 1.0;
        for (const auto& iv : charts_[ci].box) w *= iv.width() / static_cast<double>(nodes_per_axis);
        for_each_midpoint(charts_[ci].box, nodes_per_axis,
                          [&](const Vec& t) { nodes.push_back({{ci, t}, w}); });
    }
    return nodes;
}

double ParamManifold::bounding_radius(int offset, int size, std::size_t nodes_per_axis) const {
    require(offset >= 0 && size >= 1 && offset + size <= ambient_dim_, "bounding_radius: bad block");
    double r = 0.0;
    const std::size_t n = param_dim_ == 1 ? nodes_per_axis : std::min<std::size_t>(nodes_per_axis, 256);
    for (const auto& c : charts_) {
        for_each_node(c.box, n, [&](const Vec& t) {
            r = std::max(r, c.immersion(t).segment(offset, size).norm());
        });
    }
    return r;
}

Polynomial::Polynomial(int vars, std::vector<Term> terms) : vars_(vars), terms_(std::move(terms)) {
    require(vars_ >= 1, "Polynomial: need at least one variable");
    for (const auto& t : terms_) {
        require(static_cast<int>(t.powers.size()) == vars_, "Polynomial: term arity mismatch");
        for (int p : t.powers) require(p >= 0, "Polynomial: negative power");
    }
}

Polynomial Polynomial::parse(int vars, std::string_view table) {
    std::vector<Term> terms;
    std::string text(table);
    std::stringstream rows(text);
    std::string row;
    while (std::getline(rows, row, ';')) {
        std::stringstream fields(row);
        Term t;
        if (!(fields >> t.coef)) {
            require(row.find_first_not_of(" \t\r\n") == std::string::npos,
                    "Polynomial::parse: bad coefficient in '" + row + "'");
            continue;
        }
        int p;
        while (fields >> p) t.powers.push_back(p);
        require(fields.eof(), "Polynomial::parse: bad power in '" + row + "'");
        require(static_cast<int>(t.powers.size()) == vars, "Polynomial::parse: expected " +
                                                                 std::to_string(vars) + " powers in '" + row + "'");
        terms.push_back(std::move(t));
    }
    return Polynomial(vars, std::move(terms));
}

double Polynomial::operator()(const Vec& s) const {
    require(s.size() == vars_, "Polynomial: argument arity mismatch");
    double v = 0.0;
    for (const auto& t : terms_) {
        double m = t.coef;
        for (int i = 0; i < vars_; ++i) m *= std::pow(s[i], t.powers[i]);
        v += m;
    }
    return v;
}

Vec Polynomial::gradient(const Vec& s) const {
    require(s.size() == vars_, "Polynomial: argument arity mismatch");
    Vec g = Vec::Zero(vars_);
    for (const auto& t : terms_) {
        for (int d = 0; d < vars_; ++d) {
            if (t.powers[d] == 0) continue;
            double m = t.coef * t.powers[d];
            for (int i = 0; i < vars_; ++i) m *= std::pow(s[i], i == d ? t.powers[i] - 1 : t.powers[i]);
            g[d] += m;
        }
    }
    return g;
}

namespace manifolds {

ParamManifold circle(double r, const Vec& center) {
    require(r > 0.0, "circle: radius must be positive");
    require(center.size() == 2, "circle: center must be in R^2");
    Chart c;
    c.box = {{0.0, kTwoPi}};
    c.periodic = {true};
    c.immersion = [r, center](const Vec& t) {
        Vec x(2);
        x << center[0] + r * std::cos(t[0]), center[1] + r * std::sin(t[0]);
        return x;
    };
    c.differential = [r](const Vec& t) {
        Mat d(2, 1);
        d << -r * std::sin(t[0]), r * std::cos(t[0]);
        return d;
    };
    return ParamManifold("circle", 1, 2, {c});
}

ParamManifold latitude_circle(double theta0) {
    require(theta0 > 0.0 && theta0 < std::numbers::pi, "latitude_circle: theta0 must be in (0, pi)");
    const double s = std::sin(theta0), z = std::cos(theta0);
    Chart c;
    c.box = {{0.0, kTwoPi}};
    c.periodic = {true};
    c.immersion = [s, z](const Vec& t) {
        Vec x(3);
        x << s * std::cos(t[0]), s * std::sin(t[0]), z;
        return x;
    };
    c.differential = [s](const Vec& t) {
        Mat d(3, 1);
        d << -s * std::sin(t[0]), s * std::cos(t[0]), 0.0;
        return d;
    };
    return ParamManifold("latitude_circle", 1, 3, {c});
}

ParamManifold great_circle() { return latitude_circle(0.5 * std::numbers::pi); }

ParamManifold sphere2() {
    Chart c;
    c.box = {{0.0, std::numbers::pi}, {0.0, kTwoPi}};
    c.periodic = {false, true};
    c.immersion = [](const Vec& t) {
        Vec x(3);
        x << std::sin(t[0]) * std::cos(t[1]), std::sin(t[0]) * std::sin(t[1]), std::cos(t[0]);
        return x;
    };
    c.differential = [](const Vec& t) {
        Mat d(3, 2);
        d << std::cos(t[0]) * std::cos(t[1]), -std::sin(t[0]) * std::sin(t[1]),
            std::cos(t[0]) * std::sin(t[1]), std::sin(t[0]) * std::cos(t[1]),
            -std::sin(t[0]), 0.0;
        return d;
    };
    return ParamManifold("sphere2", 2, 3, {c});
}

ParamManifold torus_embedded(double r1, double r2) {
    require(r1 > 0.0 && r2 > 0.0, "torus_embedded: radii must be positive");
    Chart c;
    c.box = {{0.0, kTwoPi}, {0.0, kTwoPi}};
    c.periodic = {true, true};
    c.immersion = [r1, r2](const Vec& t) {
        Vec x(4);
        x << r1 * std::cos(t[0]), r1 * std::sin(t[0]), r2 * std::cos(t[1]), r2 * std::sin(t[1]);
        return x;
    };
    c.differential = [r1, r2](const Vec& t) {
        Mat d = Mat::Zero(4, 2);
        d(0, 0) = -r1 * std::sin(t[0]);
        d(1, 0) = r1 * std::cos(t[0]);
        d(2, 1) = -r2 * std::sin(t[1]);
        d(3, 1) = r2 * std::cos(t[1]);
        return d;
    };
    return ParamManifold("torus_embedded", 2, 4, {c});
}

ParamManifold product_of_circles_on_spheres(double theta1, double theta2) {
    for (double th : {theta1, theta2})
        require(th > 0.0 && th < std::numbers::pi, "product_of_circles_on_spheres: angles must be in (0, pi)");
    const double s1 = std::sin(theta1), z1 = std::cos(theta1);
    const double s2 = std::sin(theta2), z2 = std::cos(theta2);
    Chart c;
    c.box = {{0.0, kTwoPi}, {0.0, kTwoPi}};
    c.periodic = {true, true};
    c.immersion = [=](const Vec& t) {
        Vec x(6);
        x << s1 * std::cos(t[0]), s1 * std::sin(t[0]), z1, s2 * std::cos(t[1]), s2 * std::sin(t[1]), z2;
        return x;
    };
    c.differential = [=](const Vec& t) {
        Mat d = Mat::Zero(6, 2);
        d(0, 0) = -s1 * std::sin(t[0]);
        d(1, 0) = s1 * std::cos(t[0]);
        d(3, 1) = -s2 * std::sin(t[1]);
        d(4, 1) = s2 * std::cos(t[1]);
        return d;
    };
    return ParamManifold("product_of_circles_on_spheres", 2, 6, {c});
}

ParamManifold graph_surface(Interval s0, Interval s1, Polynomial p1, Polynomial p2) {
    require(p1.vars() == 2 && p2.vars() == 2, "graph_surface: polynomials must be in 2 variables");
    Chart c;
    c.box = {s0, s1};
    c.periodic = {false, false};
    c.immersion = [p1, p2](const Vec& s) {
        Vec x(4);
        x << s[0], s[1], p1(s), p2(s);
        return x;
    };
    c.differential = [p1, p2](const Vec& s) {
        Mat d(4, 2);
        d.row(0) << 1.0, 0.0;
        d.row(1) << 0.0, 1.0;
        d.row(2) = p1.gradient(s).transpose();
        d.row(3) = p2.gradient(s).transpose();
        return d;
    };
    return ParamManifold("graph_surface", 2, 4, {c});
}

ParamManifold transformed(const ParamManifold& m, const Mat& rotation, const Vec& shift) {
    require(rotation.rows() == m.ambient_dim() && rotation.cols() == m.ambient_dim() &&
                shift.size() == m.ambient_dim(),
            "transformed: dimension mismatch");
    std::vector<Chart> charts;
    for (std::size_t ci = 0; ci < m.charts().size(); ++ci) {
        Chart c = m.charts()[ci];
        auto base = m.charts()[ci].immersion;
        c.immersion = [base, rotation, shift](const Vec& t) -> Vec { return rotation * base(t) + shift; };
        if (auto dbase = m.charts()[ci].differential)
            c.differential = [dbase, rotation](const Vec& t) -> Mat { return rotation * dbase(t); };
        charts.push_back(std::move(c));
    }
    return ParamManifold(m.name() + "_transformed", m.param_dim(), m.ambient_dim(), std::move(charts));
}

}  // namespace manifolds

}  // namespace crofton
