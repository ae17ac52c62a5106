#include "crofton/mixvol.hpp"

#include "crofton/error.hpp"
#include "crofton/parallel.hpp"
#include "crofton/simd/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>
#include <string>

namespace crofton {
namespace {

constexpr double kRankTol = 1e-12;

struct TrigTable {
    std::vector<double> cosv, sinv;
};

const TrigTable& trig_table(std::size_t n) {
    static std::mutex mutex;
    static std::map<std::size_t, std::unique_ptr<TrigTable>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[n];
    if (!slot) {
        slot = std::make_unique<TrigTable>();
        slot->cosv.resize(n);
        slot->sinv.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double t = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
            slot->cosv[j] = std::cos(t);
            slot->sinv[j] = std::sin(t);
        }
        // Exact values at the quarter turns keep segment kinks on nodes.
        if (n % 4 == 0) {
            for (std::size_t q = 0; q < 4; ++q) {
                const std::size_t j = q * n / 4;
                slot->cosv[j] = q == 0 ? 1.0 : q == 2 ? -1.0 : 0.0;
                slot->sinv[j] = q == 1 ? 1.0 : q == 3 ? -1.0 : 0.0;
            }
        }
    }
    return *slot;
}

// Half-axis vector a of a rank-one form Q = a a^T.
Vec rank_one_axis(const QuadForm& q) {
    const Eigen::Index top = q.dim() - 1;  // eigenvalues ascending
    return std::sqrt(q.eigenvalues()[top]) * q.eigenvectors().col(top);
}

double segment_against(const QuadForm& segment, const QuadForm& other) {
    const Vec a = rank_one_axis(segment);
    Vec perp(2);
    perp << -a[1], a[0];
    return 2.0 * std::sqrt(std::max(other(perp), 0.0));
}

bool form_less(const QuadForm& a, const QuadForm& b) {
    const Mat& x = a.matrix();
    const Mat& y = b.matrix();
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x.data()[i] < y.data()[i]) return true;
        if (x.data()[i] > y.data()[i]) return false;
    }
    return false;
}

using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 8, 8>;

}  // namespace

std::string_view method_name(MixedVolumeMethod m) {
    switch (m) {
        case MixedVolumeMethod::exact1d: return "exact1d";
        case MixedVolumeMethod::exact2d: return "exact2d";
        case MixedVolumeMethod::gauss_estimator: return "gauss_estimator";
        case MixedVolumeMethod::oracle_polyfit: return "oracle_polyfit";
    }
    return "unknown";
}

double ellipsoid_volume(const QuadForm& q) {
    double det = 1.0;
    for (Eigen::Index i = 0; i < q.eigenvalues().size(); ++i) det *= q.eigenvalues()[i];
    return unit_ball_volume(q.dim()) * std::sqrt(std::max(det, 0.0));
}

MixedVolumeResult mixed_area_2d(const QuadForm& q1, const QuadForm& q2, std::size_t nodes) {
    require(q1.dim() == 2 && q2.dim() == 2, "mixed_area_2d: forms must be 2x2");
    require(nodes >= 16, "mixed_area_2d: too few quadrature nodes");
    MixedVolumeResult out{0.0, 0.0, MixedVolumeMethod::exact2d};
    const int r1 = q1.rank(kRankTol);
    const int r2 = q2.rank(kRankTol);
    if (r1 == 0 || r2 == 0) return out;
    if (r1 == 1) {
        out.value = segment_against(q1, q2);
        return out;
    }
    if (r2 == 1) {
        out.value = segment_against(q2, q1);
        return out;
    }
    const TrigTable& trig = trig_table(nodes);
    const std::array<double, 3> a{q1.matrix()(0, 0), q1.matrix()(0, 1), q1.matrix()(1, 1)};
    const std::array<double, 3> b{q2.matrix()(0, 0), q2.matrix()(0, 1), q2.matrix()(1, 1)};
    const double sum =
        simd::kernels().support_cross_sum(trig.cosv.data(), trig.sinv.data(), nodes, a.data(), b.data());
    out.value = 0.5 * sum * (2.0 * std::numbers::pi / static_cast<double>(nodes));
    return out;
}

double expected_abs_det_gaussian(int m) {
    require(m >= 1, "expected_abs_det_gaussian: m must be positive");
    double prod = 1.0;
    for (int k = 1; k <= m; ++k)
        prod *= std::sqrt(2.0) * std::exp(std::lgamma(0.5 * (k + 1)) - std::lgamma(0.5 * k));
    return prod;
}

double gauss_calibration_constant(int m) {
    return unit_ball_volume(m) / expected_abs_det_gaussian(m);
}

MixedVolumeResult mixed_volume_gauss(std::span<const QuadForm> qs, std::size_t n_samples,
                                     std::uint64_t seed, unsigned threads) {
    const int m = static_cast<int>(qs.size());
    require(m >= 1 && m <= 8, "mixed_volume_gauss: need 1 <= m <= 8 forms");
    for (const auto& q : qs) require(q.dim() == m, "mixed_volume_gauss: forms must be m x m");
    if (m == 1)
        return {2.0 * std::sqrt(std::max(qs[0].matrix()(0, 0), 0.0)), 0.0, MixedVolumeMethod::exact1d};
    require(n_samples >= 100, "mixed_volume_gauss: n_samples must be at least 100");

    std::vector<QuadForm> sorted(qs.begin(), qs.end());
    std::stable_sort(sorted.begin(), sorted.end(), form_less);
    std::vector<SmallMat> factors;
    factors.reserve(m);
    for (const auto& q : sorted) factors.emplace_back(q.sqrt_factor());

    std::vector<double> dets(n_samples);
    parallel_for(n_samples, threads, [&](std::size_t i) {
        Rng rng = substream(seed, i);
        std::normal_distribution<double> normal;
        SmallMat x(m, m);
        Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 8, 1> g(m);
        for (int j = 0; j < m; ++j) {
            for (int k = 0; k < m; ++k) g[k] = normal(rng);
            x.col(j) = factors[j] * g;
        }
        dets[i] = std::fabs(x.determinant());
    });

    CompensatedSum sum;
    for (double d : dets) sum.add(d);
    const double mean = sum.value() / static_cast<double>(n_samples);
    CompensatedSum sq;
    for (double d : dets) sq.add((d - mean) * (d - mean));
    const double var = sq.value() / static_cast<double>(n_samples - 1);
    const double c = gauss_calibration_constant(m);
    return {c * mean, c * std::sqrt(var / static_cast<double>(n_samples)),
            MixedVolumeMethod::gauss_estimator};
}

namespace {

struct DirectionSet {
    int m = 0;
    std::vector<std::vector<double>> rows;  // m arrays of length n
    std::size_t size() const { return rows.empty() ? 0 : rows[0].size(); }
    Vec direction(std::size_t j) const {
        Vec u(m);
        for (int k = 0; k < m; ++k) u[k] = rows[k][j];
        return u;
    }
};

DirectionSet make_directions(int m, std::size_t n) {
    DirectionSet set;
    set.m = m;
    set.rows.assign(m, {});
    if (m == 1) {
        set.rows[0] = {1.0, -1.0};
    } else if (m == 2) {
        for (std::size_t j = 0; j < n; ++j) {
            const double t = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
            set.rows[0].push_back(std::cos(t));
            set.rows[1].push_back(std::sin(t));
        }
    } else {
        // Fibonacci lattice on S^2.
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (std::size_t j = 0; j < n; ++j) {
            const double z = 1.0 - (2.0 * static_cast<double>(j) + 1.0) / static_cast<double>(n);
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double phi = golden * static_cast<double>(j);
            set.rows[0].push_back(r * std::cos(phi));
            set.rows[1].push_back(r * std::sin(phi));
            set.rows[2].push_back(z);
        }
    }
    return set;
}

// Largest distance from a fine direction to its nearest coarse direction.
double covering_chord(const DirectionSet& fine, const DirectionSet& coarse) {
    double worst = 0.0;
    for (std::size_t j = 0; j < fine.size(); ++j) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < coarse.size(); ++i) {
            double d2 = 0.0;
            for (int k = 0; k < fine.m; ++k) {
                const double diff = fine.rows[k][j] - coarse.rows[k][i];
                d2 += diff * diff;
            }
            best = std::min(best, d2);
        }
        worst = std::max(worst, best);
    }
    return std::sqrt(worst);
}

std::vector<double> supports_on(const QuadForm& q, const DirectionSet& dirs) {
    std::vector<double> h(dirs.size());
    const Ellipsoid e(q);
    for (std::size_t j = 0; j < dirs.size(); ++j) h[j] = support(e, dirs.direction(j));
    return h;
}

void enumerate_monomials(int m, int remaining, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (static_cast<int>(cur.size()) == m - 1) {
        cur.push_back(remaining);
        out.push_back(cur);
        cur.pop_back();
        return;
    }
    for (int e = remaining; e >= 0; --e) {
        cur.push_back(e);
        enumerate_monomials(m, remaining - e, cur, out);
        cur.pop_back();
    }
}

}  // namespace

MixedVolumeResult mixed_volume_oracle(std::span<const QuadForm> qs, const OracleOptions& opts) {
    const int m = static_cast<int>(qs.size());
    require(m >= 1 && m <= 3, "mixed_volume_oracle: supports 1 <= m <= 3");
    for (const auto& q : qs) require(q.dim() == m, "mixed_volume_oracle: forms must be m x m");
    const int grid = opts.grid_size == 0 ? m + 1 : opts.grid_size;
    require(grid >= m + 1, "mixed_volume_oracle: grid_size must be at least m + 1");
    require(opts.n_membership >= 100, "mixed_volume_oracle: too few membership samples");
    require(m == 1 || opts.n_directions >= 64, "mixed_volume_oracle: too few directions");

    const DirectionSet fine = make_directions(m, opts.n_directions);
    const DirectionSet coarse =
        m == 1 ? fine : make_directions(m, std::max<std::size_t>(16, opts.n_directions / 20));
    const double chord = m == 1 ? 0.0 : covering_chord(fine, coarse);

    std::vector<std::vector<double>> h_fine, h_coarse;
    std::vector<double> lipschitz;
    for (const auto& q : qs) {
        h_fine.push_back(supports_on(q, fine));
        h_coarse.push_back(supports_on(q, coarse));
        lipschitz.push_back(std::sqrt(std::max(q.largest_eigenvalue(), 0.0)));
    }

    // Lambda grid: every tuple of values (k + 1) / grid.
    std::size_t n_points = 1;
    for (int i = 0; i < m; ++i) n_points *= static_cast<std::size_t>(grid);
    std::vector<std::vector<double>> lambdas(n_points, std::vector<double>(m));
    for (std::size_t p = 0; p < n_points; ++p) {
        std::size_t rest = p;
        for (int i = 0; i < m; ++i) {
            lambdas[p][i] = static_cast<double>(rest % grid + 1) / static_cast<double>(grid);
            rest /= grid;
        }
    }

    std::vector<double> vol(n_points), var(n_points);
    const auto& kern = simd::kernels();
    parallel_for(n_points, opts.threads, [&](std::size_t p) {
        const auto& lam = lambdas[p];
        std::vector<double> bound_fine(fine.size(), 0.0), bound_coarse(coarse.size(), 0.0);
        for (int i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < fine.size(); ++j) bound_fine[j] += lam[i] * h_fine[i][j];
            for (std::size_t j = 0; j < coarse.size(); ++j) bound_coarse[j] += lam[i] * h_coarse[i][j];
        }
        std::vector<double> half(m, 0.0);
        double box = 1.0;
        double lip_bodies = 0.0;
        for (int i = 0; i < m; ++i) lip_bodies += lam[i] * lipschitz[i];
        for (int a = 0; a < m; ++a) {
            for (int i = 0; i < m; ++i) half[a] += lam[i] * std::sqrt(std::max(qs[i].matrix()(a, a), 0.0));
            box *= 2.0 * half[a];
        }
        if (box == 0.0) {
            vol[p] = 0.0;
            var[p] = 0.0;
            return;
        }
        std::vector<const double*> fine_rows(m), coarse_rows(m);
        for (int k = 0; k < m; ++k) {
            fine_rows[k] = fine.rows[k].data();
            coarse_rows[k] = coarse.rows[k].data();
        }
        Rng rng = substream(opts.seed, p);
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        std::vector<double> x(m);
        std::size_t hits = 0;
        for (std::size_t s = 0; s < opts.n_membership; ++s) {
            double norm2 = 0.0;
            for (int a = 0; a < m; ++a) {
                x[a] = half[a] * unit(rng);
                norm2 += x[a] * x[a];
            }
            const double coarse_margin =
                kern.min_margin(coarse_rows.data(), m, coarse.size(), bound_coarse.data(), x.data());
            if (coarse_margin < 0.0) continue;
            if (coarse_margin >= (lip_bodies + std::sqrt(norm2)) * chord) {
                ++hits;
                continue;
            }
            if (kern.min_margin(fine_rows.data(), m, fine.size(), bound_fine.data(), x.data()) >= 0.0)
                ++hits;
        }
        const double frac = static_cast<double>(hits) / static_cast<double>(opts.n_membership);
        vol[p] = box * frac;
        var[p] = box * box * frac * (1.0 - frac) / static_cast<double>(opts.n_membership);
    });

    std::vector<std::vector<int>> monomials;
    std::vector<int> cur;
    enumerate_monomials(m, m, cur, monomials);
    Mat design(static_cast<Eigen::Index>(n_points), static_cast<Eigen::Index>(monomials.size()));
    for (std::size_t p = 0; p < n_points; ++p)
        for (std::size_t c = 0; c < monomials.size(); ++c) {
            double v = 1.0;
            for (int i = 0; i < m; ++i) v *= std::pow(lambdas[p][i], monomials[c][i]);
            design(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(c)) = v;
        }
    Eigen::JacobiSVD<Mat> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vec& sv = svd.singularValues();
    const double cond = sv[0] / sv[sv.size() - 1];
    if (!std::isfinite(cond) || cond > 1e8)
        throw OracleFailure("mixed_volume_oracle: polynomial fit condition number " + std::to_string(cond));
    const Mat pinv = svd.matrixV() * sv.cwiseInverse().asDiagonal() * svd.matrixU().transpose();

    std::size_t mixed = 0;
    for (std::size_t c = 0; c < monomials.size(); ++c)
        if (std::all_of(monomials[c].begin(), monomials[c].end(), [](int e) { return e == 1; })) mixed = c;
    double coef = 0.0, coef_var = 0.0;
    for (std::size_t p = 0; p < n_points; ++p) {
        const double w = pinv(static_cast<Eigen::Index>(mixed), static_cast<Eigen::Index>(p));
        coef += w * vol[p];
        coef_var += w * w * var[p];
    }
    const double fact = std::tgamma(m + 1.0);
    return {coef / fact, std::sqrt(coef_var) / fact, MixedVolumeMethod::oracle_polyfit};
}

MixedVolumeResult mixed_volume(std::span<const QuadForm> qs, const MixedVolumeOptions& opts) {
    const int m = static_cast<int>(qs.size());
    require(m >= 1, "mixed_volume: empty list");
    for (const auto& q : qs) require(q.dim() == m, "mixed_volume: forms must be m x m");
    if (m == 1)
        return {2.0 * std::sqrt(std::max(qs[0].matrix()(0, 0), 0.0)), 0.0, MixedVolumeMethod::exact1d};
    if (m == 2) return mixed_area_2d(qs[0], qs[1], opts.quadrature_nodes);
    return mixed_volume_gauss(qs, opts.gauss_samples, opts.seed, opts.threads);
}

MixedVolumeResult eval_d_m(std::span<const Ellipsoid> bodies, const Frame& f,
                           const MixedVolumeOptions& opts) {
    const int m = f.size();
    require(static_cast<int>(bodies.size()) == m, "eval_d_m: need one body per frame vector");
    require(m >= 1, "eval_d_m: empty frame");
    for (const auto& b : bodies) require(b.dim() == f.ambient_dim(), "eval_d_m: dimension mismatch");
    require(m <= f.ambient_dim(), "eval_d_m: more frame vectors than ambient dimension");

    const Mat& cols = f.columns();
    const Mat gram = cols.transpose() * cols;
    double scale = 1.0;
    for (int i = 0; i < m; ++i) scale *= gram(i, i);
    const MixedVolumeMethod route = m == 1   ? MixedVolumeMethod::exact1d
                                    : m == 2 ? MixedVolumeMethod::exact2d
                                             : MixedVolumeMethod::gauss_estimator;
    if (scale == 0.0 || gram.determinant() <= 1e-14 * scale) return {0.0, 0.0, route};

    std::vector<QuadForm> restricted;
    restricted.reserve(m);
    for (const auto& b : bodies) restricted.push_back(restrict_form(b.form(), f));
    return mixed_volume(restricted, opts);
}

}  // namespace crofton
