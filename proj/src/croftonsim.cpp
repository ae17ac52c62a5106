#include "crofton/croftonsim.hpp"

#include "crofton/error.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace crofton {

double kappa(int d) {
    require(d >= 1, "kappa: dimension must be positive");
    return std::exp(std::lgamma(0.5 * d) - std::lgamma(0.5 * (d + 1))) / std::sqrt(std::numbers::pi);
}

Vec sample_unit_vector(int d, Rng& rng) {
    require(d >= 1, "sample_unit_vector: dimension must be positive");
    std::normal_distribution<double> normal;
    Vec v(d);
    for (;;) {
        for (int k = 0; k < d; ++k) v[k] = normal(rng);
        const double len = v.norm();
        if (len > 1e-300) return v / len;
    }
}

OracleEstimate kappa_monte_carlo(int d, std::size_t n, std::uint64_t seed) {
    require(n >= 2, "kappa_monte_carlo: need at least 2 samples");
    Rng rng(seed);
    CompensatedSum s, s2;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = std::fabs(sample_unit_vector(d, rng)[0]);
        s.add(x);
        s2.add(x * x);
    }
    const double nn = static_cast<double>(n);
    const double mean = s.value() / nn;
    const double var = std::max(0.0, (s2.value() - nn * mean * mean) / (nn - 1.0));
    return {mean, std::sqrt(var / nn)};
}

Hyperplane sample_euclid_hyperplane(int d, double radius, Rng& rng) {
    require(radius > 0.0, "sample_euclid_hyperplane: radius must be positive");
    Hyperplane h;
    h.normal = sample_unit_vector(d, rng);
    h.offset = std::uniform_real_distribution<double>(-radius, radius)(rng);
    return h;
}

Vec sample_great_subsphere(int d, Rng& rng) {
    require(d >= 2, "sample_great_subsphere: need d >= 2");
    return sample_unit_vector(d, rng);
}

CroftonData CroftonData::euclid(int d, double radius) {
    require(d >= 1, "CroftonData::euclid: dimension must be positive");
    require(radius > 0.0 && std::isfinite(radius), "CroftonData::euclid: radius must be positive");
    CroftonData c;
    c.kind_ = Kind::euclid;
    c.dim_ = d;
    c.radius_ = radius;
    return c;
}

CroftonData CroftonData::sphere(int d) {
    require(d >= 2, "CroftonData::sphere: need d >= 2");
    CroftonData c;
    c.kind_ = Kind::sphere;
    c.dim_ = d;
    c.radius_ = 1.0;
    return c;
}

CroftonData CroftonData::product(std::vector<CroftonData> factors) {
    require(!factors.empty(), "CroftonData::product: no factors");
    CroftonData c;
    c.kind_ = Kind::product;
    for (auto& f : factors)
        for (auto& g : f.factors()) c.parts_.push_back(std::move(g));
    for (const auto& f : c.parts_) c.dim_ += f.dim_;
    return c;
}

int CroftonData::ambient_dim() const { return dim_; }

std::vector<CroftonData> CroftonData::factors() const {
    if (kind_ == Kind::product) return parts_;
    return {*this};
}

double CroftonData::mass() const {
    switch (kind_) {
        case Kind::euclid: return 2.0 * radius_ / kappa(dim_);
        case Kind::sphere: return 1.0;
        case Kind::product: {
            double m = 1.0;
            for (const auto& f : parts_) m *= f.mass();
            return m;
        }
    }
    return 0.0;
}

std::vector<Hyperplane> CroftonData::sample(Rng& rng) const {
    std::vector<Hyperplane> out;
    for (const auto& f : factors()) {
        if (f.kind_ == Kind::euclid)
            out.push_back(sample_euclid_hyperplane(f.dim_, f.radius_, rng));
        else
            out.push_back({sample_great_subsphere(f.dim_, rng), 0.0});
    }
    return out;
}

double CroftonData::density_constant() const {
    switch (kind_) {
        case Kind::euclid: return 1.0;
        case Kind::sphere: return 1.0 / std::numbers::pi;
        case Kind::product: break;
    }
    double c = 1.0;
    for (const auto& f : parts_) c *= f.density_constant();
    return c;
}

EllipsoidDensity CroftonData::predicted_density() const {
    std::vector<EllipsoidDensity> ds;
    int offset = 0;
    for (const auto& f : factors()) {
        ds.push_back(scaled(vol1_density(block_metric(dim_, offset, f.dim_)), f.density_constant()));
        offset += f.dim_;
    }
    return ring_product(ds);
}

JointCounter::JointCounter(const ParamManifold& m, std::vector<FeatureMap> phis, const CountOptions& opts)
    : n_(phis.size()) {
    if (n_ == 1)
        curve_.emplace(m, std::move(phis[0]), opts);
    else if (n_ == 2)
        surface_.emplace(m, std::array<FeatureMap, 2>{std::move(phis[0]), std::move(phis[1])}, opts);
    else
        throw ContractError("JointCounter: only 1 or 2 equations are supported");
}

CountOutcome JointCounter::count(const std::vector<Hyperplane>& hs, CountScratch& scratch) const {
    require(hs.size() == n_, "JointCounter::count: wrong number of hyperplanes");
    if (curve_) return curve_->count(hs[0].normal, hs[0].offset, scratch);
    return surface_->count({hs[0].normal, hs[1].normal}, {hs[0].offset, hs[1].offset}, scratch);
}

double JointCounter::radius(int i) const {
    if (curve_) return curve_->radius();
    return surface_->radius(i);
}

TrialCounts run_trials(const JointCounter& counter, std::size_t n, std::uint64_t seed, unsigned threads,
                       const std::function<std::vector<Hyperplane>(Rng&)>& draw) {
    constexpr int max_attempts = 1000;
    TrialCounts out;
    out.counts.assign(n, 0);
    std::vector<std::uint32_t> degenerate(n, 0), failed(n, 0);
    parallel_for(n, threads, [&](std::size_t i) {
        thread_local CountScratch scratch;
        Rng rng = substream(seed, i);
        for (int attempt = 0;; ++attempt) {
            if (attempt == max_attempts) {
                std::ostringstream msg;
                msg << "trial " << i << ": no countable draw in " << max_attempts << " attempts ("
                    << degenerate[i] << " degenerate, " << failed[i] << " unstable)";
                throw CountingFailure(msg.str());
            }
            const CountOutcome r = counter.count(draw(rng), scratch);
            if (r.status == CountStatus::ok) {
                out.counts[i] = static_cast<std::uint32_t>(r.count);
                return;
            }
            if (r.status == CountStatus::degenerate)
                ++degenerate[i];
            else
                ++failed[i];
        }
    });
    for (std::size_t i = 0; i < n; ++i) {
        out.degenerate_events += degenerate[i];
        out.counting_failures += failed[i];
    }
    if (static_cast<double>(out.counting_failures) > 1e-3 * static_cast<double>(n)) {
        std::ostringstream msg;
        msg << "counting failed to stabilize on " << out.counting_failures << " of " << n
            << " draws; refine the counting grid";
        throw CountingFailure(msg.str());
    }
    return out;
}

EstimateReport summarize(const TrialCounts& t, double mass, std::uint64_t seed) {
    const std::size_t n = t.counts.size();
    require(n >= 2, "summarize: need at least 2 trials");
    unsigned __int128 sum = 0, sum2 = 0;
    for (auto c : t.counts) {
        sum += c;
        sum2 += static_cast<unsigned __int128>(c) * c;
    }
    const long double nn = static_cast<long double>(n);
    const long double s = static_cast<long double>(sum);
    const long double mean = s / nn;
    const long double var = (nn * static_cast<long double>(sum2) - s * s) / (nn * (nn - 1.0L));
    EstimateReport r;
    r.n_samples = n;
    r.seed = seed;
    r.mean_count = static_cast<double>(mean);
    r.estimate = mass * static_cast<double>(mean);
    r.std_error = mass * std::sqrt(static_cast<double>(std::max(var, 0.0L) / nn));
    r.degenerate_events = t.degenerate_events;
    r.counting_failures = t.counting_failures;
    r.flagged = static_cast<double>(t.degenerate_events) >= 1e-3 * static_cast<double>(n);
    return r;
}

namespace {

void check_placement(const ParamManifold& m, const CroftonData& data, const JointCounter& counter, double tol) {
    int offset = 0;
    int i = 0;
    for (const auto& f : data.factors()) {
        if (f.kind() == CroftonData::Kind::euclid) {
            const double r = std::max(counter.radius(i), m.bounding_radius(offset, f.ambient_dim()));
            if (r > f.radius() * (1.0 + tol)) {
                std::ostringstream msg;
                msg << "Euclidean factor " << i << ": radius " << f.radius() << " is smaller than the bounding radius "
                    << r << " of '" << m.name() << "'";
                throw ContractError(msg.str());
            }
        } else {
            for (const auto& node : m.quadrature(64)) {
                const double len = m.point(node.where).segment(offset, f.ambient_dim()).norm();
                if (std::fabs(len - 1.0) > 1e-6)
                    throw ContractError("sphere factor " + std::to_string(i) + ": '" + m.name() +
                                        "' does not lie on the unit sphere");
            }
        }
        offset += f.ambient_dim();
        ++i;
    }
}

}  // namespace

EstimateReport estimate_crofton(const ParamManifold& m, const CroftonData& data, const EstimateOptions& opts) {
    require(m.ambient_dim() == data.ambient_dim(), "estimate_crofton: ambient dimensions differ");
    require(m.param_dim() == data.codim(), "estimate_crofton: dim M must equal the codimension of the data");
    require(opts.n_samples >= 2, "estimate_crofton: need at least 2 samples");
    std::vector<FeatureMap> phis;
    int offset = 0;
    for (const auto& f : data.factors()) {
        phis.push_back(immersion_block(m, offset, f.ambient_dim()));
        offset += f.ambient_dim();
    }
    const JointCounter counter(m, std::move(phis), opts.counting);
    check_placement(m, data, counter, opts.radius_tolerance);
    const TrialCounts t =
        run_trials(counter, opts.n_samples, opts.seed, opts.threads, [&data](Rng& rng) { return data.sample(rng); });
    EstimateReport r = summarize(t, data.mass(), opts.seed);
    if (opts.predict) {
        IntegrationOptions io = opts.integration;
        const IntegralResult p = integrate_density(m, data.predicted_density(), io);
        r.prediction = p.value;
        r.prediction_error = r.estimate - p.value;
        r.prediction_quadrature_error = p.error_estimate;
    }
    return r;
}

ProductPrediction predict_product(const ParamManifold& m, const CroftonData& data, const IntegrationOptions& opts) {
    require(m.ambient_dim() == data.ambient_dim(), "predict_product: ambient dimensions differ");
    require(m.param_dim() == data.codim(), "predict_product: dim M must equal the codimension of the data");
    ProductPrediction out;
    const IntegralResult ring = integrate_density(m, data.predicted_density(), opts);
    out.ring_route = ring.value;

    std::vector<FinslerField> gs;
    int offset = 0;
    double denom = 1.0;
    for (const auto& f : data.factors()) {
        gs.push_back(block_metric(data.ambient_dim(), offset, f.ambient_dim()));
        out.constant_product *= f.density_constant();
        denom *= unit_ball_volume(1);
        offset += f.ambient_dim();
    }
    const int n = data.codim();
    out.theorem_constant = std::tgamma(n + 1.0) * unit_ball_volume(n) / denom;
    const IntegralResult vol = integrate_density(m, mixed_riemannian_density(gs), opts);
    out.mixed_riemannian_volume = vol.value;
    out.mixed_riemannian_route = out.constant_product * out.theorem_constant * vol.value;
    out.quadrature_error = std::max(ring.error_estimate, out.constant_product * out.theorem_constant * vol.error_estimate);

    const double tol = std::max(1e-8 * std::fabs(out.ring_route), 3.0 * out.quadrature_error);
    if (std::fabs(out.ring_route - out.mixed_riemannian_route) > tol) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "predict_product: ring route " << out.ring_route << " and mixed Riemannian route "
            << out.mixed_riemannian_route << " disagree";
        throw std::logic_error(msg.str());
    }
    return out;
}

}  // namespace crofton
