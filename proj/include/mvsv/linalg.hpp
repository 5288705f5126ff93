#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "mvsv/error.hpp"

namespace mvsv {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

/// (M + M')/2.
template <typename Derived>
Matrix<typename Derived::Scalar> symmetrize(const Eigen::MatrixBase<Derived>& m) {
    return (m + m.transpose()) / typename Derived::Scalar(2);
}

/// Upper-triangular C with M = C'C and a strictly positive diagonal.
template <typename Derived>
Matrix<typename Derived::Scalar> cholesky_upper(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw Error(ErrorCode::kDimensionMismatch, "cholesky_upper needs a non-empty square matrix");
    }
    Eigen::LLT<Matrix<Scalar>> llt(symmetrize(m));
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::kNonPositiveDefinite, "Cholesky factorization failed");
    }
    Matrix<Scalar> upper = llt.matrixU();
    for (Eigen::Index i = 0; i < upper.rows(); ++i) {
        if (!(upper(i, i) > Scalar(0))) {
            throw Error(ErrorCode::kNonPositiveDefinite, "Cholesky factor has a non-positive pivot");
        }
    }
    return upper;
}

/// Symmetrizes M and checks it with a Cholesky factorization. On failure one
/// retry is made with 1e-10 * tr(M)/dim added to the diagonal; the jittered
/// matrix is returned if that succeeds.
template <typename Derived>
Matrix<typename Derived::Scalar> make_spd(const Eigen::MatrixBase<Derived>& m, const std::string& what) {
    using Scalar = typename Derived::Scalar;
    Matrix<Scalar> sym = symmetrize(m);
    if (!sym.allFinite()) {
        throw Error(ErrorCode::kNonPositiveDefinite, what + " has non-finite entries");
    }
    Eigen::LLT<Matrix<Scalar>> llt(sym);
    if (llt.info() == Eigen::Success) return sym;
    const auto dim = static_cast<Scalar>(sym.rows());
    const Scalar jitter = Scalar(1e-10) * sym.trace() / dim;
    if (jitter > Scalar(0)) {
        sym.diagonal().array() += jitter;
        llt.compute(sym);
        if (llt.info() == Eigen::Success) return sym;
    }
    throw Error(ErrorCode::kNonPositiveDefinite, what + " is not positive definite");
}

template <typename Derived>
bool is_spd(const Eigen::MatrixBase<Derived>& m) {
    if (m.rows() != m.cols() || m.rows() == 0 || !m.allFinite()) return false;
    Eigen::LLT<Matrix<typename Derived::Scalar>> llt(symmetrize(m));
    return llt.info() == Eigen::Success;
}

/// log|M| for SPD M.
template <typename Derived>
typename Derived::Scalar log_det_spd(const Eigen::MatrixBase<Derived>& m) {
    const auto c = cholesky_upper(m);
    return typename Derived::Scalar(2) * c.diagonal().array().log().sum();
}

template <typename Derived>
Matrix<typename Derived::Scalar> spd_inverse(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    Eigen::LLT<Matrix<Scalar>> llt(symmetrize(m));
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::kNonPositiveDefinite, "cannot invert a non-SPD matrix");
    }
    return symmetrize(llt.solve(Matrix<Scalar>::Identity(m.rows(), m.cols())));
}

/// Symmetric (spectral) square root of an SPD matrix.
template <typename Derived>
Matrix<typename Derived::Scalar> spectral_sqrt(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(symmetrize(m));
    if (es.info() != Eigen::Success || (es.eigenvalues().array() <= Scalar(0)).any()) {
        throw Error(ErrorCode::kNonPositiveDefinite, "spectral square root of a non-SPD matrix");
    }
    return es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

/// log of the multivariate gamma function Gamma_p(a).
template <typename Scalar>
Scalar log_mvgamma(int p, Scalar a) {
    using std::lgamma;
    using std::log;
    Scalar out = Scalar(p) * Scalar(p - 1) / Scalar(4) * log(std::numbers::pi_v<Scalar>);
    for (int j = 0; j < p; ++j) out += lgamma(a - Scalar(j) / Scalar(2));
    return out;
}

/// D M D for a diagonal D given by its entries.
template <typename DerivedM, typename DerivedD>
Matrix<typename DerivedM::Scalar> diag_sandwich(const Eigen::MatrixBase<DerivedM>& m,
                                                const Eigen::MatrixBase<DerivedD>& d) {
    return d.asDiagonal() * m * d.asDiagonal();
}

/// Lower-triangle stacking, column by column.
template <typename Derived>
Vector<typename Derived::Scalar> vech(const Eigen::MatrixBase<Derived>& m) {
    const Eigen::Index p = m.rows();
    Vector<typename Derived::Scalar> out(p * (p + 1) / 2);
    Eigen::Index k = 0;
    for (Eigen::Index j = 0; j < p; ++j) {
        for (Eigen::Index i = j; i < p; ++i) out(k++) = m(i, j);
    }
    return out;
}

}  // namespace mvsv
