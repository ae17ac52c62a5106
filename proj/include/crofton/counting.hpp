#pragma once

// Intersection counting against parametrized curves and surfaces.
//
// Every counted equation has the form <Phi(t), u> = c, where Phi is a feature
// map sampled once on nested parameter grids: a block of the immersion for
// Crofton data, or the evaluation map theta_i for systems of functions. A
// count is accepted once it is unchanged under two successive grid
// doublings; the finest base level is the configured grid and the coarser
// ones are its strided subsets.

#include "crofton/manifold.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace crofton {

// t -> Phi(t) in R^dim with its dim x k Jacobian.
struct FeatureMap {
    int dim = 0;
    std::function<Vec(const ChartPoint&)> value;
    std::function<Mat(const ChartPoint&)> jacobian;
};

// Coordinates [offset, offset + size) of the immersion.
FeatureMap immersion_block(const ParamManifold& m, int offset, int size);

struct ScalarField {
    std::function<double(const ChartPoint&)> value;
    std::function<Vec(const ChartPoint&)> gradient;  // in parameter coordinates
};

struct CountOptions {
    std::size_t curve_grid = 4096;    // nodes per chart at the finest base level
    std::size_t surface_grid = 512;   // cells per axis at the finest base level
    int max_refinements = 3;          // further doublings before a counting failure
    double tangency_tol = 1e-9;       // |s| at a grid extremum below this is a near-tangency
    double root_tol = 1e-12;          // bisection width for curve roots
    double newton_tol = 1e-10;        // residual for surface roots
    double dedup_rel = 1e-6;          // duplicate-root distance relative to the parameter box
};

enum class CountStatus { ok, degenerate, failed };

struct CountOutcome {
    CountStatus status = CountStatus::ok;
    std::size_t count = 0;
};

// Reusable per-thread buffers.
struct CountScratch {
    std::vector<double> s;
    std::vector<double> s2;
    std::vector<std::uint8_t> signs;
};

class CurveCounter {
public:
    CurveCounter(const ParamManifold& curve, FeatureMap phi, CountOptions opts = {});

    // Number of t with <Phi(t), u> = c. A near-tangency is reported as
    // CountStatus::degenerate so the caller can resample. When `roots` is
    // given, it receives every root refined by bisection.
    CountOutcome count(const Vec& u, double c, CountScratch& scratch,
                       std::vector<ChartPoint>* roots = nullptr) const;

    // max |Phi| over the sampled nodes.
    double radius() const { return radius_; }
    const CountOptions& options() const { return opts_; }

private:
    struct ChartGrid {
        std::size_t chart;
        bool periodic;
        Interval box;
        std::size_t nodes;                  // sampled nodes at the base level
        std::vector<std::vector<double>> rows;  // Phi components, SoA
    };

    double parameter(const ChartGrid& g, std::size_t level_nodes, std::size_t j) const;
    std::size_t count_level(const ChartGrid& g, std::size_t cells, const Vec& u, double c) const;

    ParamManifold curve_;
    FeatureMap phi_;
    CountOptions opts_;
    std::vector<ChartGrid> grids_;
    double radius_ = 0.0;
};

class SurfaceCounter {
public:
    SurfaceCounter(const ParamManifold& surface, std::array<FeatureMap, 2> phis, CountOptions opts = {});

    // Number of common solutions of <Phi_i(t), u_i> = c_i, i = 1, 2.
    CountOutcome count(const std::array<Vec, 2>& u, const std::array<double, 2>& c, CountScratch& scratch,
                       std::vector<ChartPoint>* roots = nullptr) const;

    double radius(int i) const { return radius_[static_cast<std::size_t>(i)]; }
    const CountOptions& options() const { return opts_; }

private:
    struct ChartGrid {
        std::size_t chart;
        std::array<bool, 2> periodic;
        std::array<Interval, 2> box;
        std::array<std::size_t, 2> nodes;  // per axis at the base level
        std::array<std::vector<std::vector<double>>, 2> rows;
    };

    ParamManifold surface_;
    std::array<FeatureMap, 2> phis_;
    CountOptions opts_;
    std::vector<ChartGrid> grids_;
    std::array<double, 2> radius_{0.0, 0.0};

    struct LevelCount {
        CountStatus status;
        std::vector<ChartPoint> roots;
    };
    LevelCount count_level(const ChartGrid& g, std::size_t cells, const double* f1, const double* f2,
                           const std::uint8_t* signs, std::size_t stride, const std::array<Vec, 2>& u,
                           const std::array<double, 2>& c, std::vector<ChartPoint>& known) const;
    double distance(const ChartGrid& g, const ChartPoint& a, const ChartPoint& b) const;
    // Roots inside one cell with corner values a, b (counter-clockwise from
    // (x0, y0)); false on a near-singular root.
    bool cell_roots(const ChartGrid& g, const double a[4], const double b[4], double x0, double y0, double h0,
                    double h1, const std::array<Vec, 2>& u, const std::array<double, 2>& c,
                    std::vector<ChartPoint>& known, std::vector<char>& claimed,
                    std::vector<ChartPoint>& found) const;
    std::vector<std::array<std::size_t, 2>> hidden_loops(const ChartGrid& g, const double* f) const;
    bool patch_roots(const ChartGrid& g, std::array<std::size_t, 2> node, const std::array<Vec, 2>& u,
                     const std::array<double, 2>& c, std::vector<ChartPoint>& known,
                     std::vector<ChartPoint>& found) const;
    std::optional<ChartPoint> newton(const ChartGrid& g, Vec t, const std::array<Vec, 2>& u,
                                     const std::array<double, 2>& c, bool& singular) const;
};

// Curve roots of <Phi(t), u> = c as a one-shot call.
CountOutcome count_curve_hyperplane(const ParamManifold& curve, const Vec& u, double c,
                                    const CountOptions& opts = {});

// Common zeros of two scalar functions on a 2-dimensional parameter domain.
CountOutcome count_surface_system(const ParamManifold& surface, const ScalarField& f1, const ScalarField& f2,
                                  const CountOptions& opts = {}, std::vector<ChartPoint>* roots = nullptr);

}  // namespace crofton
