#include "crofton/zeros.hpp"

#include "crofton/error.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace crofton {

namespace spaces {

FunctionSpace fourier_on_axis(int k, int axis) {
    require(k >= 0, "fourier: frequency must be non-negative");
    require(axis >= 0, "fourier: axis must be non-negative");
    const double w = k;
    FunctionSpace v;
    v.name = "fourier(" + std::to_string(k) + ")";
    v.basis.push_back({[w, axis](const ChartPoint& p) { return std::cos(w * p.t[axis]); },
                       [w, axis](const ChartPoint& p) {
                           Vec g = Vec::Zero(p.t.size());
                           g[axis] = -w * std::sin(w * p.t[axis]);
                           return g;
                       }});
    v.basis.push_back({[w, axis](const ChartPoint& p) { return std::sin(w * p.t[axis]); },
                       [w, axis](const ChartPoint& p) {
                           Vec g = Vec::Zero(p.t.size());
                           g[axis] = w * std::cos(w * p.t[axis]);
                           return g;
                       }});
    v.gram = QuadForm::identity(2);
    return v;
}

FunctionSpace fourier(int k) { return fourier_on_axis(k, 0); }

FunctionSpace linear_coords(const ParamManifold& x) {
    FunctionSpace v;
    v.name = "linear_coords";
    for (int i = 0; i < x.ambient_dim(); ++i) {
        v.basis.push_back({[x, i](const ChartPoint& p) { return x.point(p)[i]; },
                           [x, i](const ChartPoint& p) -> Vec { return x.differential(p).row(i).transpose(); }});
    }
    v.gram = QuadForm::identity(x.ambient_dim());
    v.values = [x](const ChartPoint& p) { return x.point(p); };
    v.jacobian = [x](const ChartPoint& p) { return x.differential(p); };
    return v;
}

FunctionSpace constants() {
    FunctionSpace v;
    v.name = "constants";
    v.basis.push_back({[](const ChartPoint&) { return 1.0; },
                       [](const ChartPoint& p) -> Vec { return Vec::Zero(p.t.size()); }});
    v.gram = QuadForm::identity(1);
    return v;
}

FunctionSpace polynomial(std::vector<Polynomial> basis, const QuadForm& gram) {
    require(!basis.empty(), "polynomial space: empty basis");
    require(gram.dim() == static_cast<int>(basis.size()), "polynomial space: Gram matrix size mismatch");
    FunctionSpace v;
    v.name = "polynomial";
    for (auto& p : basis)
        v.basis.push_back({[p](const ChartPoint& x) { return p(x.t); },
                           [p](const ChartPoint& x) { return p.gradient(x.t); }});
    v.gram = gram;
    return v;
}

FunctionSpace transformed(const FunctionSpace& v, const Mat& a) {
    require(a.rows() == v.dim() && a.cols() == v.dim(), "transformed: matrix size mismatch");
    FunctionSpace out;
    out.name = v.name;
    const auto basis = v.basis;
    for (int i = 0; i < v.dim(); ++i) {
        const Vec row = a.row(i).transpose();
        const bool analytic = std::all_of(basis.begin(), basis.end(), [](const auto& b) { return bool(b.gradient); });
        BasisFunction f;
        f.value = [basis, row](const ChartPoint& p) {
            double s = 0.0;
            for (std::size_t j = 0; j < basis.size(); ++j) s += row[static_cast<int>(j)] * basis[j].value(p);
            return s;
        };
        if (analytic)
            f.gradient = [basis, row](const ChartPoint& p) {
                Vec g = Vec::Zero(p.t.size());
                for (std::size_t j = 0; j < basis.size(); ++j) g += row[static_cast<int>(j)] * basis[j].gradient(p);
                return g;
            };
        out.basis.push_back(std::move(f));
    }
    out.gram = QuadForm(Mat(a * v.gram.matrix() * a.transpose()));
    return out;
}

FunctionSpace scaled(const FunctionSpace& v, double lambda) {
    FunctionSpace out;
    out.name = v.name;
    out.gram = v.gram;
    for (const auto& b : v.basis) {
        BasisFunction f;
        f.value = [b, lambda](const ChartPoint& p) { return lambda * b.value(p); };
        if (b.gradient) f.gradient = [b, lambda](const ChartPoint& p) -> Vec { return lambda * b.gradient(p); };
        out.basis.push_back(std::move(f));
    }
    return out;
}

}  // namespace spaces

EvalMap::EvalMap(FunctionSpace space, ParamManifold x) : space_(std::move(space)), x_(std::move(x)) {
    require(space_.dim() >= 1, "build_eval_map: empty basis");
    require(space_.gram.dim() == space_.dim(), "build_eval_map: Gram matrix size mismatch");
    for (const auto& b : space_.basis) {
        require(static_cast<bool>(b.value), "build_eval_map: basis function without values");
        if (!b.gradient) finite_difference_ = true;
    }
    const Mat& g = space_.gram.matrix();
    const Vec& ev = space_.gram.eigenvalues();
    if (!(ev[0] > 1e-12 * std::max(ev[ev.size() - 1], 1e-300)))
        throw ContractError("build_eval_map: Gram matrix of '" + space_.name + "' is not positive definite");
    Eigen::LLT<Mat> llt(g);
    if (llt.info() != Eigen::Success)
        throw ContractError("build_eval_map: Gram matrix of '" + space_.name + "' is not positive definite");
    const Mat l = llt.matrixL();
    l_inv_ = l.triangularView<Eigen::Lower>().solve(Mat::Identity(space_.dim(), space_.dim()));
}

Vec EvalMap::theta(const ChartPoint& p) const {
    if (space_.values) return l_inv_ * space_.values(p);
    Vec raw(dim());
    for (int i = 0; i < dim(); ++i) raw[i] = space_.basis[static_cast<std::size_t>(i)].value(p);
    return l_inv_ * raw;
}

Mat EvalMap::raw_gradient(const ChartPoint& p) const {
    if (space_.jacobian) return space_.jacobian(p);
    const int k = x_.param_dim();
    Mat out(dim(), k);
    for (int i = 0; i < dim(); ++i) {
        const auto& b = space_.basis[static_cast<std::size_t>(i)];
        if (b.gradient) {
            const Vec g = b.gradient(p);
            require(g.size() == k, "EvalMap: basis gradient has the wrong size");
            out.row(i) = g.transpose();
            continue;
        }
        const Chart& ch = x_.charts()[p.chart];
        for (int a = 0; a < k; ++a) {
            const double h = 1e-6 * ch.box[static_cast<std::size_t>(a)].width();
            ChartPoint lo = p, hi = p;
            lo.t[a] -= h;
            hi.t[a] += h;
            out(i, a) = (b.value(hi) - b.value(lo)) / (2.0 * h);
        }
    }
    return out;
}

Mat EvalMap::dtheta(const ChartPoint& p) const { return l_inv_ * raw_gradient(p); }

QuadForm EvalMap::h(const ChartPoint& p) const {
    const Mat d = dtheta(p);
    const Mat m = d.transpose() * d;
    return QuadForm(Mat(0.5 * (m + m.transpose())), product_noise(Mat::Identity(d.rows(), d.rows()), d));
}

FinslerField EvalMap::metric() const {
    EvalMap self = *this;
    return {FieldDomain::parameter, x_.param_dim(), [self](const ChartPoint& p) { return self.h(p); }};
}

FeatureMap EvalMap::feature_map() const {
    EvalMap self = *this;
    FeatureMap f;
    f.dim = dim();
    f.value = [self](const ChartPoint& p) { return self.theta(p); };
    f.jacobian = [self](const ChartPoint& p) { return self.dtheta(p); };
    return f;
}

EvalMap build_eval_map(const FunctionSpace& space, const ParamManifold& x) { return EvalMap(space, x); }

namespace {

void check_maps(std::span<const EvalMap> maps) {
    require(!maps.empty(), "zeros: no function spaces");
    const int n = maps.front().manifold().param_dim();
    require(static_cast<int>(maps.size()) == n, "zeros: need one function space per dimension of X");
    for (const auto& m : maps) {
        require(m.manifold().param_dim() == n && m.manifold().name() == maps.front().manifold().name(),
                "zeros: all spaces must live on the same manifold");
    }
}

}  // namespace

ZerosPrediction predict_zeros(std::span<const EvalMap> maps, const IntegrationOptions& opts) {
    check_maps(maps);
    const ParamManifold& x = maps.front().manifold();
    const int n = x.param_dim();
    std::vector<FinslerField> hs;
    std::vector<EllipsoidDensity> ones;
    for (const auto& m : maps) {
        hs.push_back(m.metric());
        ones.push_back(vol1_density(hs.back()));
    }
    ZerosPrediction out;
    const IntegralResult ring = integrate_density(x, ring_product(ones), opts);
    out.ring_route = ring.value;
    out.mc_std_error = ring.mc_std_error;

    const double nfact = std::tgamma(n + 1.0);
    const double two_n = std::pow(2.0, n);
    const IntegralResult riem = integrate_density(x, mixed_riemannian_density(hs), opts);
    out.mixed_riemannian_route = nfact * unit_ball_volume(n) / two_n * riem.value;
    const IntegralResult dn = integrate_density(x, EllipsoidDensity{n, hs, 1.0}, opts);
    out.mixed_volume_route = nfact / two_n * dn.value;
    out.quadrature_error = std::max({ring.error_estimate, nfact * unit_ball_volume(n) / two_n * riem.error_estimate,
                                     nfact / two_n * dn.error_estimate});

    const double tol = std::max(1e-8 * std::fabs(out.ring_route), 3.0 * out.quadrature_error) +
                       6.0 * out.mc_std_error;
    const double d1 = std::fabs(out.ring_route - out.mixed_riemannian_route);
    const double d2 = std::fabs(out.ring_route - out.mixed_volume_route);
    if (d1 > tol || d2 > tol) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "predict_zeros: routes disagree (ring " << out.ring_route << ", mixed Riemannian "
            << out.mixed_riemannian_route << ", mixed volume " << out.mixed_volume_route << ")";
        throw std::logic_error(msg.str());
    }
    return out;
}

EstimateReport empirical_zeros(std::span<const EvalMap> maps, const ZerosOptions& opts) {
    check_maps(maps);
    const ParamManifold& x = maps.front().manifold();
    require(maps.size() <= 2, "empirical_zeros: counting is implemented for dim X <= 2");
    require(opts.radius_scale >= 1.0, "empirical_zeros: radius_scale must be at least 1");
    std::vector<FeatureMap> phis;
    for (const auto& m : maps) phis.push_back(m.feature_map());
    const JointCounter counter(x, std::move(phis), opts.counting);

    std::vector<int> dims;
    std::vector<double> radii;
    double mass = 1.0;
    for (std::size_t i = 0; i < maps.size(); ++i) {
        const double r = opts.radius_scale * counter.radius(static_cast<int>(i));
        if (!(r > 0.0)) throw ContractError("empirical_zeros: evaluation map of '" + maps[i].space().name + "' vanishes");
        dims.push_back(maps[i].dim());
        radii.push_back(r);
        mass *= 2.0 * r / kappa(maps[i].dim());
    }
    const TrialCounts t = run_trials(counter, opts.n_samples, opts.seed, opts.threads, [&](Rng& rng) {
        std::vector<Hyperplane> hs;
        for (std::size_t i = 0; i < dims.size(); ++i) hs.push_back(sample_euclid_hyperplane(dims[i], radii[i], rng));
        return hs;
    });
    EstimateReport r = summarize(t, mass, opts.seed);
    if (opts.predict) {
        const ZerosPrediction p = predict_zeros(maps, opts.integration);
        r.prediction = p.ring_route;
        r.prediction_error = r.estimate - p.ring_route;
        r.prediction_quadrature_error = p.quadrature_error;
    }
    return r;
}

}  // namespace crofton
