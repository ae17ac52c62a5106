#pragma once

// Densities on chart-based manifolds built from fields of ellipsoids.
//
// An EllipsoidDensity of degree m stores scalar * (1/m!) D_1(E_1) ... D_1(E_m)
// in factored form; by the product rule for centrally symmetric bodies this
// equals scalar * D_m(E_1, ..., E_m), which is how it is evaluated. With the
// width convention D_1(T_g) = 2 vol_{1,g}, the 1-density vol_{1,g} is the
// degree-1 density with factor T_g and scalar 1/2.

#include "crofton/geomcore.hpp"
#include "crofton/manifold.hpp"
#include "crofton/mixvol.hpp"

#include <functional>
#include <span>
#include <vector>

namespace crofton {

// Where a field lives: on the ambient space (evaluated at x = immersion(t),
// frames are columns of the differential) or on the parameter domain of a
// manifold (evaluated at t, frames in parameter coordinates).
enum class FieldDomain { ambient, parameter };

// Continuous field of ellipsoids x -> T_{g(x)}, realized as x -> g(x).
// For ambient fields ChartPoint::t holds the ambient point.
struct FinslerField {
    FieldDomain domain = FieldDomain::ambient;
    int dim = 0;
    std::function<QuadForm(const ChartPoint&)> form;

    QuadForm operator()(const ChartPoint& p) const { return form(p); }
};

FinslerField constant_field(const QuadForm& g, FieldDomain domain = FieldDomain::ambient);
FinslerField euclidean_metric(int dim);
// h(v) = |v_block|^2 on coordinates [offset, offset + size) of R^dim.
FinslerField block_metric(int dim, int offset, int size);

struct EllipsoidDensity {
    int degree = 0;
    std::vector<FinslerField> factors;
    double scalar = 1.0;
};

EllipsoidDensity vol1_density(const FinslerField& g);
EllipsoidDensity scaled(const EllipsoidDensity& d, double factor);
// Ring product; the scalar picks up the binomial (p+q)!/(p! q!).
EllipsoidDensity ring_product(const EllipsoidDensity& a, const EllipsoidDensity& b);
EllipsoidDensity ring_product(std::span<const EllipsoidDensity> ds);
// (2^n / n! v_n) vol_{1,g_1} ... vol_{1,g_n}, i.e. (1/v_n) D_n(T_{g_1}, ..., T_{g_n}).
EllipsoidDensity mixed_riemannian_density(std::span<const FinslerField> gs);

// sqrt(g_x(xi, xi)).
double eval_vol1(const FinslerField& g, const ChartPoint& x, const Vec& xi);

// scalar * d_m(E_1(x), ..., E_m(x))(f).
MixedVolumeResult ring_product_eval(const EllipsoidDensity& d, const ChartPoint& x, const Frame& f,
                                    const MixedVolumeOptions& opts = {});

struct IntegrationOptions {
    std::size_t nodes_per_axis = 256;
    bool richardson = true;  // also integrate at nodes_per_axis / 2 for an error estimate
    MixedVolumeOptions mixed{};
    unsigned threads = 1;
};

struct IntegralResult {
    double value = 0.0;
    double error_estimate = 0.0;  // |I_N - I_{N/2}| / 3, zero without Richardson
    double mc_std_error = 0.0;    // propagated from Gaussian-route node values
    bool finite_difference = false;
};

// Sum over charts and midpoint nodes of weight * density(x(t), Dx(t)) for
// ambient densities, or weight * density(t, identity) for parameter-domain ones.
// Throws ContractError on a rank-deficient differential at a node.
IntegralResult integrate_density(const ParamManifold& m, const EllipsoidDensity& d,
                                 const IntegrationOptions& opts = {});

// (x^* F)(t)(xi, eta) = F(x(t))(Dx xi, Dx eta): a parameter-domain field on m.
FinslerField pullback_field(const FinslerField& f, const ParamManifold& m);

}  // namespace crofton
