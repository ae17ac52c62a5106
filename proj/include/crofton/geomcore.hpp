#pragma once

// Small-dimension linear algebra shared by every other module: PSD quadratic
// forms, frames of tangent vectors, ellipsoids given by their support
// functions, and Gram volumes.
//
// All geometry lives in explicit chart coordinates. Tangent and cotangent
// spaces are identified through the chart basis, so a form g on T_x and the
// ellipsoid with support function sqrt(g) in T_x^* share one matrix.

#include <Eigen/Dense>

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace crofton {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Volume of the unit ball in R^k.
double unit_ball_volume(int k);

// Symmetric positive-semidefinite bilinear form on R^dim.
//
// Eigenvalues in [-1e-10 * lambda_max, 0) are clamped to zero on construction
// (pullbacks are PSD only up to round-off); anything more negative is rejected
// with ContractError, as is an asymmetric matrix.
class QuadForm {
public:
    QuadForm() = default;
    explicit QuadForm(const Mat& matrix);
    // Products such as B^T Q B carry absolute round-off of order eps*|B|^2*|Q|;
    // eigenvalues down to -noise_floor are clamped as well.
    QuadForm(const Mat& matrix, double noise_floor);

    static QuadForm identity(int dim);
    static QuadForm zero(int dim);
    static QuadForm diagonal(std::initializer_list<double> entries);
    static QuadForm diagonal(const Vec& entries);

    int dim() const { return static_cast<int>(matrix_.rows()); }
    const Mat& matrix() const { return matrix_; }

    // Ascending eigenvalues (after clamping) and matching orthonormal eigenvectors.
    const Vec& eigenvalues() const { return eigenvalues_; }
    const Mat& eigenvectors() const { return eigenvectors_; }

    double largest_eigenvalue() const;
    // Number of eigenvalues above rel_tol * largest eigenvalue.
    int rank(double rel_tol = 1e-12) const;

    // Symmetric square root S with S*S = matrix.
    Mat sqrt_factor() const;

    double operator()(const Vec& u) const { return u.dot(matrix_ * u); }
    double operator()(const Vec& u, const Vec& v) const { return u.dot(matrix_ * v); }

    QuadForm scaled(double factor) const;

private:
    Mat matrix_;
    Vec eigenvalues_;
    Mat eigenvectors_;
};

// Ordered tuple of k vectors in R^ambient_dim, standing for xi_1 ^ ... ^ xi_k.
class Frame {
public:
    Frame() = default;
    // Vectors are the columns of `columns`.
    explicit Frame(Mat columns);
    Frame(std::initializer_list<std::initializer_list<double>> vectors);

    static Frame standard(int ambient_dim, int k);

    int ambient_dim() const { return static_cast<int>(columns_.rows()); }
    int size() const { return static_cast<int>(columns_.cols()); }
    const Mat& columns() const { return columns_; }
    Vec vector(int i) const { return columns_.col(i); }

private:
    Mat columns_;
};

// Centrally symmetric ellipsoid {S x : |x| <= 1}, S = sqrt(Q); support u -> sqrt(u^T Q u).
// Rank-deficient Q gives a flat ellipsoid, segment, or the point body {0}.
class Ellipsoid {
public:
    Ellipsoid() = default;
    explicit Ellipsoid(QuadForm q) : q_(std::move(q)) {}

    int dim() const { return q_.dim(); }
    const QuadForm& form() const { return q_; }

private:
    QuadForm q_;
};

double support(const Ellipsoid& e, const Vec& u);

// sqrt(det(B^T g B)) with B the frame matrix; zero for g-dependent vectors.
double gram_volume(const QuadForm& g, const Frame& f);

// B^T Q B: the projection of Ellipsoid(Q) onto span(f), in coordinates where
// the frame vectors form the standard basis.
QuadForm restrict_form(const QuadForm& q, const Frame& f);

Ellipsoid ellipsoid_of_form(const QuadForm& g);

// Round-off floor for the PSD check of B^T Q B.
double product_noise(const Mat& q, const Mat& b);

}  // namespace crofton
