#pragma once

// Mixed volumes of centrally symmetric ellipsoids and the m-densities
// d_m(A_1, ..., A_m) they induce on frames.
//
// Normalization: V(K, ..., K) = Vol(K), so in the plane
// Area(K + L) = Area(K) + 2 V(K, L) + Area(L).

#include "crofton/geomcore.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace crofton {

enum class MixedVolumeMethod { exact1d, exact2d, gauss_estimator, oracle_polyfit };

std::string_view method_name(MixedVolumeMethod m);

struct MixedVolumeResult {
    double value = 0.0;
    double std_error = 0.0;  // zero for the exact routes
    MixedVolumeMethod method = MixedVolumeMethod::exact1d;
};

// v_m * sqrt(det Q).
double ellipsoid_volume(const QuadForm& q);

// Planar mixed area V(E1, E2). Full-rank pairs go through the support-function
// quadrature (1/2) * integral of (h1 h2 - h1' h2') on `nodes` equispaced angles,
// the polarization of Area = (1/2) * integral of (h^2 - h'^2). A segment
// [-a, a] against any ellipse E has the closed form 2 * h_E(a_perp).
MixedVolumeResult mixed_area_2d(const QuadForm& q1, const QuadForm& q2, std::size_t nodes = 4096);

// E|det G| for an m x m matrix of iid standard normals: the product of the
// means of chi_1, ..., chi_m.
double expected_abs_det_gaussian(int m);

// c_m = v_m / E|det G|, fixed by V(B, ..., B) = v_m.
double gauss_calibration_constant(int m);

// c_m * mean |det(X_1, ..., X_m)| with X_i ~ N(0, Q_i) independent.
// Sample i draws from substream(seed, i). The forms are put in a canonical
// order first, so the result does not depend on their order in `qs`.
// m = 1 short-circuits to the exact segment length 2 sqrt(q).
MixedVolumeResult mixed_volume_gauss(std::span<const QuadForm> qs, std::size_t n_samples,
                                     std::uint64_t seed, unsigned threads = 1);

struct OracleOptions {
    int grid_size = 0;               // lambda values per axis; 0 means m + 1
    std::size_t n_membership = 4000;  // uniform box samples per lambda point
    std::size_t n_directions = 10000;
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

// Brute-force reference: Vol(sum lambda_i E_i) by Monte Carlo membership on a
// lambda grid, least-squares fit of the degree-m homogeneous polynomial, and
// the lambda_1 ... lambda_m coefficient divided by m!. Membership of x is
// decided by min over a direction set of [sum lambda_i h_i(u) - <x, u>] >= 0.
// Supports m <= 3. Throws OracleFailure if the fit is ill-conditioned.
MixedVolumeResult mixed_volume_oracle(std::span<const QuadForm> qs, const OracleOptions& opts = {});

struct MixedVolumeOptions {
    std::size_t quadrature_nodes = 4096;
    std::size_t gauss_samples = 20000;
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

// Route selection by dimension: exact1d, exact2d, otherwise the Gaussian estimator.
MixedVolumeResult mixed_volume(std::span<const QuadForm> qs, const MixedVolumeOptions& opts = {});

// d_m(A_1, ..., A_m)(f): mixed m-volume of the bodies projected onto span(f),
// in coordinates where the frame vectors are the standard basis. Zero on
// rank-deficient frames.
MixedVolumeResult eval_d_m(std::span<const Ellipsoid> bodies, const Frame& f,
                           const MixedVolumeOptions& opts = {});

}  // namespace crofton
