#include "crofton/geomcore.hpp"

#include "crofton/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace crofton {

double unit_ball_volume(int k) {
    require(k >= 0, "unit_ball_volume: negative dimension");
    return std::pow(std::numbers::pi, 0.5 * k) / std::tgamma(0.5 * k + 1.0);
}

QuadForm::QuadForm(const Mat& matrix) : QuadForm(matrix, 0.0) {}

QuadForm::QuadForm(const Mat& matrix, double noise_floor) {
    require(matrix.rows() == matrix.cols() && matrix.rows() > 0,
            "QuadForm: matrix must be square and non-empty");
    require(matrix.allFinite(), "QuadForm: non-finite entry");
    const double scale = matrix.cwiseAbs().maxCoeff();
    const double asym = (matrix - matrix.transpose()).cwiseAbs().maxCoeff();
    require(asym <= 1e-12 * scale, "QuadForm: matrix is not symmetric");

    const Mat sym = 0.5 * (matrix + matrix.transpose());
    if (scale == 0.0) {
        matrix_ = sym;
        eigenvalues_ = Vec::Zero(sym.rows());
        eigenvectors_ = Mat::Identity(sym.rows(), sym.rows());
        return;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(sym);
    Vec lambda = es.eigenvalues();
    const double top = std::max(lambda.maxCoeff(), 0.0);
    bool clamped = false;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (lambda[i] >= 0.0) continue;
        if (lambda[i] < -std::max(1e-10 * top, noise_floor))
            throw ContractError("QuadForm: matrix is not positive semidefinite (eigenvalue " +
                                std::to_string(lambda[i]) + ")");
        lambda[i] = 0.0;
        clamped = true;
    }
    eigenvalues_ = lambda;
    eigenvectors_ = es.eigenvectors();
    if (clamped) {
        const Mat& v = eigenvectors_;
        matrix_ = v * lambda.asDiagonal() * v.transpose();
        matrix_ = 0.5 * (matrix_ + matrix_.transpose()).eval();
    } else {
        matrix_ = sym;
    }
}

QuadForm QuadForm::identity(int dim) { return QuadForm(Mat::Identity(dim, dim)); }

QuadForm QuadForm::zero(int dim) { return QuadForm(Mat::Zero(dim, dim)); }

QuadForm QuadForm::diagonal(std::initializer_list<double> entries) {
    Vec d(static_cast<Eigen::Index>(entries.size()));
    Eigen::Index i = 0;
    for (double e : entries) d[i++] = e;
    return diagonal(d);
}

QuadForm QuadForm::diagonal(const Vec& entries) { return QuadForm(Mat(entries.asDiagonal())); }

double QuadForm::largest_eigenvalue() const {
    return eigenvalues_.size() ? eigenvalues_.maxCoeff() : 0.0;
}

int QuadForm::rank(double rel_tol) const {
    const double top = largest_eigenvalue();
    if (top <= 0.0) return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i)
        if (eigenvalues_[i] > rel_tol * top) ++r;
    return r;
}

Mat QuadForm::sqrt_factor() const {
    return eigenvectors_ * eigenvalues_.cwiseSqrt().asDiagonal() * eigenvectors_.transpose();
}

QuadForm QuadForm::scaled(double factor) const {
    require(factor >= 0.0, "QuadForm::scaled: negative factor");
    return QuadForm(matrix_ * factor);
}

Frame::Frame(Mat columns) : columns_(std::move(columns)) {
    require(columns_.rows() > 0, "Frame: ambient dimension must be positive");
    require(columns_.cols() <= columns_.rows(), "Frame: more vectors than ambient dimension");
}

Frame::Frame(std::initializer_list<std::initializer_list<double>> vectors) {
    require(vectors.size() > 0, "Frame: at least one vector required");
    const auto d = static_cast<Eigen::Index>(vectors.begin()->size());
    Mat cols(d, static_cast<Eigen::Index>(vectors.size()));
    Eigen::Index j = 0;
    for (const auto& v : vectors) {
        require(static_cast<Eigen::Index>(v.size()) == d, "Frame: ragged vectors");
        Eigen::Index i = 0;
        for (double x : v) cols(i++, j) = x;
        ++j;
    }
    *this = Frame(std::move(cols));
}

Frame Frame::standard(int ambient_dim, int k) {
    return Frame(Mat::Identity(ambient_dim, k));
}

double product_noise(const Mat& q, const Mat& b) {
    const double nb = b.norm();
    return 64.0 * std::numeric_limits<double>::epsilon() * nb * nb * q.norm();
}

double support(const Ellipsoid& e, const Vec& u) {
    require(u.size() == e.dim(), "support: dimension mismatch");
    return std::sqrt(std::max(e.form()(u), 0.0));
}

double gram_volume(const QuadForm& g, const Frame& f) {
    require(f.ambient_dim() == g.dim(), "gram_volume: dimension mismatch");
    if (f.size() == 0) return 1.0;
    const Mat m = f.columns().transpose() * g.matrix() * f.columns();
    return std::sqrt(std::max(m.determinant(), 0.0));
}

QuadForm restrict_form(const QuadForm& q, const Frame& f) {
    require(f.ambient_dim() == q.dim(), "restrict_form: dimension mismatch");
    require(f.size() > 0, "restrict_form: empty frame");
    const Mat m = f.columns().transpose() * q.matrix() * f.columns();
    return QuadForm(Mat(0.5 * (m + m.transpose())), product_noise(q.matrix(), f.columns()));
}

Ellipsoid ellipsoid_of_form(const QuadForm& g) { return Ellipsoid(g); }

}  // namespace crofton
