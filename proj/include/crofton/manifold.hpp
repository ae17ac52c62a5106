#pragma once

// Compact submanifolds given by explicit charts: a parameter box, an
// immersion into R^d and its differential. Charts partition the manifold up to
// measure zero; there are no overlaps to blend.

#include "crofton/geomcore.hpp"

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace crofton {

struct ChartPoint {
    std::size_t chart = 0;
    Vec t;
};

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
    double width() const { return hi - lo; }
};

struct Chart {
    std::vector<Interval> box;
    std::vector<bool> periodic;  // per parameter axis
    std::function<Vec(const Vec&)> immersion;
    // d x k Jacobian; leave empty to fall back to central differences.
    std::function<Mat(const Vec&)> differential;
};

struct QuadratureNode {
    ChartPoint where;
    double weight = 0.0;
};

class ParamManifold {
public:
    // Validates that the differential has full rank k on a midpoint grid.
    ParamManifold(std::string name, int param_dim, int ambient_dim, std::vector<Chart> charts);

    const std::string& name() const { return name_; }
    int param_dim() const { return param_dim_; }
    int ambient_dim() const { return ambient_dim_; }
    const std::vector<Chart>& charts() const { return charts_; }

    Vec point(const ChartPoint& p) const;
    Mat differential(const ChartPoint& p) const;
    // True if any chart lacks an analytic differential.
    bool uses_finite_differences() const;

    // Tensor-product composite midpoint rule, nodes_per_axis per parameter axis.
    std::vector<QuadratureNode> quadrature(std::size_t nodes_per_axis) const;

    // max |x| over the closed node grid of each chart, box corners included,
    // restricted to coordinates [offset, offset + size).
    double bounding_radius(int offset, int size, std::size_t nodes_per_axis = 1024) const;

private:
    std::string name_;
    int param_dim_;
    int ambient_dim_;
    std::vector<Chart> charts_;
};

// Polynomial in k variables from a coefficient table.
class Polynomial {
public:
    struct Term {
        double coef;
        std::vector<int> powers;
    };

    Polynomial() = default;
    Polynomial(int vars, std::vector<Term> terms);
    // "c p0 p1 ...; c p0 p1 ..." e.g. "1.0 1 0; -0.5 0 2" = s0 - 0.5 s1^2.
    static Polynomial parse(int vars, std::string_view table);

    int vars() const { return vars_; }
    const std::vector<Term>& terms() const { return terms_; }
    double operator()(const Vec& s) const;
    Vec gradient(const Vec& s) const;

private:
    int vars_ = 0;
    std::vector<Term> terms_;
};

namespace manifolds {

ParamManifold circle(double r, const Vec& center = Vec::Zero(2));
// Circle at polar angle theta0 on the unit sphere S^2 in R^3.
ParamManifold latitude_circle(double theta0);
ParamManifold great_circle();
// Unit sphere S^2 in spherical coordinates (theta in [0, pi], phi periodic).
ParamManifold sphere2();
// C1 x C2 in R^2 x R^2, radii r1, r2.
ParamManifold torus_embedded(double r1, double r2);
// Latitude circles at polar angles theta1, theta2 on S^2 x S^2 in R^3 x R^3.
ParamManifold product_of_circles_on_spheres(double theta1, double theta2);
// (s0, s1) -> (s0, s1, p1(s), p2(s)) in R^2 x R^2 over the given box.
ParamManifold graph_surface(Interval s0, Interval s1, Polynomial p1, Polynomial p2);
// x -> rotation * x + shift applied to every chart.
ParamManifold transformed(const ParamManifold& m, const Mat& rotation, const Vec& shift);

}  // namespace manifolds

}  // namespace crofton
