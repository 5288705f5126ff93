#pragma once

#include <cmath>
#include <string>

#include "mvsv/distributions.hpp"
#include "mvsv/linalg.hpp"

namespace mvsv {

/// Which square root of Q* = (k - 2) Q^{-1} S*^{-1} whitens the forecast error.
enum class SqrtConvention { kSpectral, kCholesky };

inline const char* sqrt_name(SqrtConvention c) { return c == SqrtConvention::kSpectral ? "spectral" : "cholesky"; }

inline SqrtConvention parse_sqrt(const std::string& s) {
    if (s == "spectral") return SqrtConvention::kSpectral;
    if (s == "cholesky") return SqrtConvention::kCholesky;
    throw Error(ErrorCode::kInvalidArgument, "unknown square-root convention '" + s + "'");
}

/// u = {(k - 2) Q^{-1} S*^{-1}}^{1/2} e where S* = beta^{1/2} S_{t-1} beta^{1/2} is the
/// prior inverted-Wishart scale and k the forecast degrees of freedom.
template <typename Scalar>
Vector<Scalar> standardize(const Vector<Scalar>& e, Scalar q, const Matrix<Scalar>& prior_scale, Scalar k,
                           SqrtConvention convention = SqrtConvention::kSpectral) {
    if (!(k > Scalar(2))) throw Error(ErrorCode::kDofTooSmall, "standardized errors need k > 2");
    using std::sqrt;
    const Scalar factor = sqrt((k - Scalar(2)) / q);
    if (convention == SqrtConvention::kCholesky) return factor * (cholesky_upper(spd_inverse(prior_scale)) * e);
    // S*^{-1/2} from the eigendecomposition of S* itself; inverting first loses the
    // small eigenvalues when S* is badly conditioned.
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(symmetrize(prior_scale));
    if (es.info() != Eigen::Success || (es.eigenvalues().array() <= Scalar(0)).any()) {
        throw Error(ErrorCode::kNonPositiveDefinite, "prior scale is not positive definite");
    }
    const auto& v = es.eigenvectors();
    return factor * (v * (es.eigenvalues().array().rsqrt().matrix().asDiagonal() * (v.transpose() * e)));
}

template <typename Scalar>
Vector<Scalar> standardize(const Vector<Scalar>& e, Scalar q, const Matrix<Scalar>& s_prev, const Vector<Scalar>& beta,
                           Scalar k, SqrtConvention convention = SqrtConvention::kSpectral) {
    const Vector<Scalar> root = beta.cwiseSqrt();
    return standardize(e, q, diag_sandwich(s_prev, root), k, convention);
}

/// Log density of u ~ T_{p x 1}(k, 0, 1, (k - 2) I), the law of a standardized error.
template <typename Scalar>
Scalar standardized_logpdf(const Vector<Scalar>& u, Scalar k) {
    const auto p = u.size();
    return mvt_logpdf(u, MultiTParams<Scalar>{k, Vector<Scalar>::Zero(p), Scalar(1),
                                              Matrix<Scalar>::Identity(p, p) * (k - Scalar(2))});
}

}  // namespace mvsv
