#include "crofton/densities.hpp"

#include "crofton/error.hpp"
#include "crofton/parallel.hpp"

#include <cmath>

namespace crofton {

FinslerField constant_field(const QuadForm& g, FieldDomain domain) {
    return {domain, g.dim(), [g](const ChartPoint&) { return g; }};
}

FinslerField euclidean_metric(int dim) { return constant_field(QuadForm::identity(dim)); }

FinslerField block_metric(int dim, int offset, int size) {
    require(offset >= 0 && size >= 1 && offset + size <= dim, "block_metric: block out of range");
    Vec diag = Vec::Zero(dim);
    diag.segment(offset, size).setOnes();
    return constant_field(QuadForm::diagonal(diag));
}

EllipsoidDensity vol1_density(const FinslerField& g) { return {1, {g}, 0.5}; }

EllipsoidDensity scaled(const EllipsoidDensity& d, double factor) {
    require(factor >= 0.0, "scaled: factor must be non-negative");
    EllipsoidDensity out = d;
    out.scalar *= factor;
    return out;
}

EllipsoidDensity ring_product(const EllipsoidDensity& a, const EllipsoidDensity& b) {
    if (a.degree == 0) return scaled(b, a.scalar);
    if (b.degree == 0) return scaled(a, b.scalar);
    require(a.factors.front().domain == b.factors.front().domain &&
                a.factors.front().dim == b.factors.front().dim,
            "ring_product: factors live on different spaces");
    EllipsoidDensity out;
    out.degree = a.degree + b.degree;
    out.factors = a.factors;
    out.factors.insert(out.factors.end(), b.factors.begin(), b.factors.end());
    const double binom = std::exp(std::lgamma(out.degree + 1.0) - std::lgamma(a.degree + 1.0) -
                                  std::lgamma(b.degree + 1.0));
    out.scalar = a.scalar * b.scalar * std::round(binom);
    return out;
}

EllipsoidDensity ring_product(std::span<const EllipsoidDensity> ds) {
    EllipsoidDensity acc{0, {}, 1.0};
    for (const auto& d : ds) acc = ring_product(acc, d);
    return acc;
}

EllipsoidDensity mixed_riemannian_density(std::span<const FinslerField> gs) {
    require(!gs.empty(), "mixed_riemannian_density: no metrics");
    std::vector<EllipsoidDensity> ones;
    for (const auto& g : gs) ones.push_back(vol1_density(g));
    const int n = static_cast<int>(gs.size());
    const double norm = std::pow(2.0, n) / (std::tgamma(n + 1.0) * unit_ball_volume(n));
    return scaled(ring_product(ones), norm);
}

double eval_vol1(const FinslerField& g, const ChartPoint& x, const Vec& xi) {
    const QuadForm q = g(x);
    require(q.dim() == xi.size(), "eval_vol1: dimension mismatch");
    return std::sqrt(std::max(q(xi), 0.0));
}

MixedVolumeResult ring_product_eval(const EllipsoidDensity& d, const ChartPoint& x, const Frame& f,
                                    const MixedVolumeOptions& opts) {
    require(d.degree == f.size(), "ring_product_eval: degree does not match frame size");
    require(static_cast<int>(d.factors.size()) == d.degree, "ring_product_eval: malformed density");
    std::vector<Ellipsoid> bodies;
    bodies.reserve(d.factors.size());
    for (const auto& field : d.factors) bodies.push_back(ellipsoid_of_form(field(x)));
    MixedVolumeResult r = eval_d_m(bodies, f, opts);
    r.value *= d.scalar;
    r.std_error *= d.scalar;
    return r;
}

namespace {

struct LevelResult {
    double value = 0.0;
    double mc_var = 0.0;
};

LevelResult integrate_level(const ParamManifold& m, const EllipsoidDensity& d, std::size_t n,
                            const IntegrationOptions& opts, std::uint64_t level_seed) {
    const auto nodes = m.quadrature(n);
    const FieldDomain domain = d.factors.front().domain;
    const int k = m.param_dim();
    std::vector<double> values(nodes.size()), vars(nodes.size());
    parallel_for(nodes.size(), opts.threads, [&](std::size_t i) {
        const auto& node = nodes[i];
        const Mat dx = m.differential(node.where);
        const Mat gram = dx.transpose() * dx;
        double scale = 1.0;
        for (int a = 0; a < k; ++a) scale *= gram(a, a);
        if (!(scale > 0.0 && gram.determinant() > 1e-14 * scale))
            throw ContractError("integrate_density: rank-deficient differential on '" + m.name() + "'");
        MixedVolumeOptions mo = opts.mixed;
        mo.seed = substream_seed(level_seed, i);
        mo.threads = 1;
        MixedVolumeResult r;
        if (domain == FieldDomain::ambient)
            r = ring_product_eval(d, {node.where.chart, m.point(node.where)}, Frame(dx), mo);
        else
            r = ring_product_eval(d, node.where, Frame(Mat::Identity(k, k)), mo);
        values[i] = node.weight * r.value;
        vars[i] = node.weight * node.weight * r.std_error * r.std_error;
    });
    CompensatedSum sum, var;
    for (std::size_t i = 0; i < values.size(); ++i) {
        sum.add(values[i]);
        var.add(vars[i]);
    }
    return {sum.value(), var.value()};
}

}  // namespace

IntegralResult integrate_density(const ParamManifold& m, const EllipsoidDensity& d,
                                 const IntegrationOptions& opts) {
    require(d.degree == m.param_dim(), "integrate_density: density degree must equal manifold dimension");
    require(static_cast<int>(d.factors.size()) == d.degree, "integrate_density: malformed density");
    require(opts.nodes_per_axis >= 2, "integrate_density: need at least 2 nodes per axis");
    const FieldDomain domain = d.factors.front().domain;
    for (const auto& f : d.factors) {
        require(f.domain == domain, "integrate_density: mixed field domains");
        require(f.dim == (domain == FieldDomain::ambient ? m.ambient_dim() : m.param_dim()),
                "integrate_density: field dimension does not match manifold");
    }
    IntegralResult out;
    out.finite_difference = m.uses_finite_differences();
    const LevelResult fine = integrate_level(m, d, opts.nodes_per_axis, opts, substream_seed(opts.mixed.seed, 0));
    out.value = fine.value;
    out.mc_std_error = std::sqrt(fine.mc_var);
    if (opts.richardson) {
        const LevelResult coarse =
            integrate_level(m, d, opts.nodes_per_axis / 2, opts, substream_seed(opts.mixed.seed, 1));
        out.error_estimate = std::fabs(fine.value - coarse.value) / 3.0;
    }
    return out;
}

FinslerField pullback_field(const FinslerField& f, const ParamManifold& m) {
    require(f.domain == FieldDomain::ambient, "pullback_field: field must live on the ambient space");
    require(f.dim == m.ambient_dim(), "pullback_field: dimension mismatch");
    return {FieldDomain::parameter, m.param_dim(), [f, m](const ChartPoint& p) {
                const Mat dx = m.differential(p);
                const QuadForm q = f({p.chart, m.point(p)});
                const Mat h = dx.transpose() * q.matrix() * dx;
                return QuadForm(Mat(0.5 * (h + h.transpose())), product_noise(q.matrix(), dx));
            }};
}

}  // namespace crofton
