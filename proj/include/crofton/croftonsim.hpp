#pragma once

// Crofton data as samplers plus counters, Monte Carlo estimates of the
// average number of intersection points, and closed-form predictions.
//
// Euclidean data restrict the translation-invariant hyperplane measure to
// hyperplanes meeting the ball of radius R (mass 2R / kappa_d, so that a unit
// segment is hit with measure 1). Sphere data use the rotation-invariant
// probability measure on great hyperspheres.

#include "crofton/counting.hpp"
#include "crofton/densities.hpp"
#include "crofton/parallel.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace crofton {

// Mean of |<u, e>| over the unit sphere S^{d-1}.
double kappa(int d);

struct OracleEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};
// Sample mean of |u_0| for uniform u on S^{d-1}.
OracleEstimate kappa_monte_carlo(int d, std::size_t n, std::uint64_t seed);

// Uniform point on S^{d-1}.
Vec sample_unit_vector(int d, Rng& rng);

struct Hyperplane {
    Vec normal;
    double offset = 0.0;
};

Hyperplane sample_euclid_hyperplane(int d, double radius, Rng& rng);
Vec sample_great_subsphere(int d, Rng& rng);

class CroftonData {
public:
    enum class Kind { euclid, sphere, product };

    static CroftonData euclid(int d, double radius);
    static CroftonData sphere(int d);
    // Nested products are flattened.
    static CroftonData product(std::vector<CroftonData> factors);

    Kind kind() const { return kind_; }
    // Ambient dimension of one factor, or the total for a product.
    int ambient_dim() const;
    // Number of equations; every factor has codimension one.
    int codim() const { return static_cast<int>(factors().size()); }
    double radius() const { return radius_; }
    double mass() const;
    // The simple factors; a non-product is its own single factor.
    std::vector<CroftonData> factors() const;

    // One hyperplane per factor (offset 0 for sphere factors).
    std::vector<Hyperplane> sample(Rng& rng) const;

    // C_i in Omega_i = C_i vol_{1, g_i}: 1 for Euclidean, 1/pi for sphere data.
    double density_constant() const;
    // Ring product of the lifted factor densities C_i vol_{1, h_i} on the total ambient space.
    EllipsoidDensity predicted_density() const;

private:
    Kind kind_ = Kind::euclid;
    int dim_ = 0;
    double radius_ = 0.0;
    std::vector<CroftonData> parts_;
};

struct EstimateOptions {
    std::size_t n_samples = 100000;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    CountOptions counting{};
    bool predict = true;
    IntegrationOptions integration{};
    // Slack on R versus the sampled bounding radius of M.
    double radius_tolerance = 1e-9;
};

struct EstimateReport {
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t n_samples = 0;
    std::optional<double> prediction;
    std::optional<double> prediction_error;  // estimate - prediction
    double prediction_quadrature_error = 0.0;
    std::uint64_t seed = 0;
    std::size_t degenerate_events = 0;
    std::size_t counting_failures = 0;
    bool flagged = false;  // degenerate_events / n_samples >= 1e-3
    double mean_count = 0.0;
};

// Trial i draws hyperplanes from substream(seed, i) and counts joint
// solutions; degenerate trials are redrawn from the same stream. Throws
// CountingFailure if more than 0.1% of draws fail to stabilize.
EstimateReport estimate_crofton(const ParamManifold& m, const CroftonData& data, const EstimateOptions& opts = {});

// Shared Monte Carlo loop over per-factor counters: counts[i] for trials
// i < n, resampling degenerate draws. `draw(rng)` returns the equations of a
// trial as hyperplanes.
struct TrialCounts {
    std::vector<std::uint32_t> counts;
    std::size_t degenerate_events = 0;
    std::size_t counting_failures = 0;
};

class JointCounter {
public:
    JointCounter(const ParamManifold& m, std::vector<FeatureMap> phis, const CountOptions& opts);
    CountOutcome count(const std::vector<Hyperplane>& hs, CountScratch& scratch) const;
    double radius(int i) const;
    int equations() const { return static_cast<int>(n_); }

private:
    std::size_t n_;
    std::optional<CurveCounter> curve_;
    std::optional<SurfaceCounter> surface_;
};

TrialCounts run_trials(const JointCounter& counter, std::size_t n, std::uint64_t seed, unsigned threads,
                       const std::function<std::vector<Hyperplane>(Rng&)>& draw);

// Fills estimate, std_error, n_samples and the degenerate bookkeeping.
EstimateReport summarize(const TrialCounts& t, double mass, std::uint64_t seed);

struct ProductPrediction {
    double ring_route = 0.0;          // integral of the ring product of C_i vol_{1,h_i}
    double mixed_riemannian_route = 0.0;  // C_1...C_m * n! v_n / prod(n_i! v_{n_i}) * vol_{h}(M)
    double theorem_constant = 0.0;    // n! v_n / prod(n_i! v_{n_i})
    double constant_product = 1.0;    // C_1 ... C_m
    double mixed_riemannian_volume = 0.0;
    double quadrature_error = 0.0;
};

// Both routes; throws std::logic_error if they disagree beyond quadrature tolerance.
ProductPrediction predict_product(const ParamManifold& m, const CroftonData& data,
                                  const IntegrationOptions& opts = {});

}  // namespace crofton
