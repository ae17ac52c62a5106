#pragma once

// Average number of solutions of f_1 = c_1, ..., f_n = c_n for f_i drawn from
// finite-dimensional inner-product spaces of functions on X: the prediction as
// an integral of vol_{1,h_1} ... vol_{1,h_n} with h_i the pull-back of the
// dual metric along the evaluation map theta_i, and an empirical estimate by
// random hyperplane sampling in V_i*.

#include "crofton/croftonsim.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace crofton {

struct BasisFunction {
    std::function<double(const ChartPoint&)> value;
    // Gradient in chart coordinates; leave empty for central differences.
    std::function<Vec(const ChartPoint&)> gradient;
};

struct FunctionSpace {
    std::string name;
    std::vector<BasisFunction> basis;
    QuadForm gram;  // <phi_i, phi_j>
    // Optional batched evaluation of all basis values / gradients (rows) at once.
    std::function<Vec(const ChartPoint&)> values;
    std::function<Mat(const ChartPoint&)> jacobian;

    int dim() const { return static_cast<int>(basis.size()); }
};

namespace spaces {

// span{cos kt, sin kt} on a 1-parameter domain, orthonormal.
FunctionSpace fourier(int k);
// span{cos k t_axis, sin k t_axis} on a multi-parameter domain, orthonormal.
FunctionSpace fourier_on_axis(int k, int axis);
// Restrictions of the ambient linear coordinates to x, orthonormal.
FunctionSpace linear_coords(const ParamManifold& x);
// Constants only.
FunctionSpace constants();
// Polynomials in the chart parameters with the given Gram matrix.
FunctionSpace polynomial(std::vector<Polynomial> basis, const QuadForm& gram);
// Basis a * phi with Gram a G a^T: the same space in new coordinates.
FunctionSpace transformed(const FunctionSpace& v, const Mat& a);
// Every basis function multiplied by lambda, Gram unchanged.
FunctionSpace scaled(const FunctionSpace& v, double lambda);

}  // namespace spaces

class EvalMap {
public:
    // Orthonormalizes the basis by the Cholesky factor of the Gram matrix;
    // throws ContractError unless the Gram matrix is positive definite.
    EvalMap(FunctionSpace space, ParamManifold x);

    const FunctionSpace& space() const { return space_; }
    const ParamManifold& manifold() const { return x_; }
    int dim() const { return space_.dim(); }
    bool finite_difference() const { return finite_difference_; }

    // Values of the orthonormal basis at p.
    Vec theta(const ChartPoint& p) const;
    // dim x k chart Jacobian of theta.
    Mat dtheta(const ChartPoint& p) const;
    // h = dtheta^T dtheta.
    QuadForm h(const ChartPoint& p) const;

    FinslerField metric() const;
    FeatureMap feature_map() const;

private:
    Mat raw_gradient(const ChartPoint& p) const;

    FunctionSpace space_;
    ParamManifold x_;
    Mat l_inv_;
    bool finite_difference_ = false;
};

EvalMap build_eval_map(const FunctionSpace& space, const ParamManifold& x);

struct ZerosPrediction {
    double ring_route = 0.0;              // integral of vol_{1,h_1} ... vol_{1,h_n}
    double mixed_riemannian_route = 0.0;  // n! v_n / 2^n * vol_{h_1..h_n}(X)
    double mixed_volume_route = 0.0;      // n! / 2^n * integral of D_n(T_{h_1}, ..., T_{h_n})
    double quadrature_error = 0.0;
    double mc_std_error = 0.0;
};

// Throws std::logic_error if the three routes disagree beyond quadrature tolerance.
ZerosPrediction predict_zeros(std::span<const EvalMap> maps, const IntegrationOptions& opts = {});

struct ZerosOptions {
    std::size_t n_samples = 100000;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    CountOptions counting{};
    // R_i = radius_scale * max |theta_i| over the counting grid.
    double radius_scale = 1.0;
    bool predict = true;
    IntegrationOptions integration{};
};

EstimateReport empirical_zeros(std::span<const EvalMap> maps, const ZerosOptions& opts = {});

}  // namespace crofton
