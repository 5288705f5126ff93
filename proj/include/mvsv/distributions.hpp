#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "mvsv/linalg.hpp"

namespace mvsv {

/// Inverted Wishart IW_p(k, S) in the (k, S) convention where Sigma^{-1} ~ W_p(k - p - 1, S^{-1})
/// and the density is proper for k > 2p.
template <typename Scalar>
struct InvWishartParams {
    Scalar dof = Scalar(0);
    Matrix<Scalar> scale;
};

/// Singular multivariate beta B_p(a, b). Only b = 1/2 (I - B of rank one) is supported.
template <typename Scalar>
struct SingularBetaParams {
    Scalar shape_a = Scalar(0);
    Scalar shape_b = Scalar(0.5);
    int p = 1;
};

/// One-row matrix-variate t, T_{p x 1}(dof, location, scale_row, scale_col).
/// Its covariance is scale_row * scale_col / (dof - 2) when dof > 2.
template <typename Scalar>
struct MultiTParams {
    Scalar dof = Scalar(0);
    Vector<Scalar> location;
    Scalar scale_row = Scalar(1);
    Matrix<Scalar> scale_col;
};

/// Log of the inverted-Wishart density
///   2^{-(k-p-1)p/2} |S|^{(k-p-1)/2} / (Gamma_p((k-p-1)/2) |X|^{k/2}) etr(-S X^{-1} / 2).
template <typename Scalar>
Scalar invwishart_logpdf(const Matrix<Scalar>& x, const InvWishartParams<Scalar>& params) {
    const auto p = static_cast<int>(x.rows());
    if (params.scale.rows() != p || params.scale.cols() != p || x.cols() != p) {
        throw Error(ErrorCode::kDimensionMismatch, "invwishart_logpdf: shape mismatch");
    }
    const Scalar k = params.dof;
    if (!(k > Scalar(2 * p))) throw Error(ErrorCode::kDofTooSmall, "inverted Wishart needs k > 2p");
    const Scalar h = (k - Scalar(p) - Scalar(1)) / Scalar(2);
    const Matrix<Scalar> x_inv = spd_inverse(x);
    using std::log;
    return -h * Scalar(p) * log(Scalar(2)) + h * log_det_spd(params.scale) - log_mvgamma(p, h) -
           k / Scalar(2) * log_det_spd(x) - (params.scale * x_inv).trace() / Scalar(2);
}

/// Log of the one-row matrix t density
///   Gamma_p((nu+p)/2) / (pi^{p/2} Gamma_p((nu+p-1)/2)) |U|^{-p/2} |S|^{(nu+p-1)/2}
///   |S + (x-M)' U^{-1} (x-M)|^{-(nu+p)/2}.
template <typename Scalar>
Scalar mvt_logpdf(const Vector<Scalar>& x, const MultiTParams<Scalar>& params) {
    const auto p = static_cast<int>(x.size());
    if (params.location.size() != p || params.scale_col.rows() != p || params.scale_col.cols() != p) {
        throw Error(ErrorCode::kDimensionMismatch, "mvt_logpdf: shape mismatch");
    }
    if (!(params.scale_row > Scalar(0))) throw Error(ErrorCode::kNonPositiveDefinite, "mvt row scale");
    const Scalar nu = params.dof;
    const Vector<Scalar> z = x - params.location;
    const Matrix<Scalar> inflated = params.scale_col + z * z.transpose() / params.scale_row;
    using std::log;
    return log_mvgamma(p, (nu + Scalar(p)) / Scalar(2)) - log_mvgamma(p, (nu + Scalar(p) - Scalar(1)) / Scalar(2)) -
           Scalar(p) / Scalar(2) * log(std::numbers::pi_v<Scalar>) - Scalar(p) / Scalar(2) * log(params.scale_row) +
           (nu + Scalar(p) - Scalar(1)) / Scalar(2) * log_det_spd(params.scale_col) -
           (nu + Scalar(p)) / Scalar(2) * log_det_spd(inflated);
}

/// p = 1 density of X = a^2 / B with B ~ Beta(m/2, 1/2), written in the
/// singular-beta inversion form c(m) a^m L^{-1/2} X^{-(m+2)/2}, L = 1 - a^2/X.
template <typename Scalar>
Scalar inverse_beta_logpdf(Scalar x, Scalar a, Scalar m) {
    using std::lgamma;
    using std::log;
    const Scalar a2 = a * a;
    if (!(x > a2)) return -std::numeric_limits<Scalar>::infinity();
    const Scalar ell = Scalar(1) - a2 / x;
    const Scalar log_norm = lgamma((m + Scalar(1)) / Scalar(2)) - lgamma(Scalar(0.5)) - lgamma(m / Scalar(2));
    return log_norm + m * log(std::abs(a)) - log(ell) / Scalar(2) - (m + Scalar(2)) / Scalar(2) * log(x);
}

template <typename Scalar, typename Rng>
Matrix<Scalar> standard_normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
    Matrix<Scalar> z(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) z(i, j) = normal(rng);
    }
    return z;
}

/// Lower-triangular Bartlett factor T with T T' ~ W_p(dof, I). Requires dof > p - 1.
template <typename Scalar, typename Rng>
Matrix<Scalar> bartlett_factor(int p, Scalar dof, Rng& rng) {
    if (!(dof > Scalar(p - 1))) throw Error(ErrorCode::kDofTooSmall, "Wishart needs dof > p - 1");
    std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
    Matrix<Scalar> t = Matrix<Scalar>::Zero(p, p);
    for (int i = 0; i < p; ++i) {
        std::gamma_distribution<Scalar> chi2((dof - Scalar(i)) / Scalar(2), Scalar(2));
        t(i, i) = std::sqrt(chi2(rng));
        for (int j = 0; j < i; ++j) t(i, j) = normal(rng);
    }
    return t;
}

/// W_p(dof, scale) via the Bartlett decomposition.
template <typename Scalar, typename Rng>
Matrix<Scalar> wishart_sample(Scalar dof, const Matrix<Scalar>& scale, Rng& rng) {
    const auto p = static_cast<int>(scale.rows());
    const Matrix<Scalar> lower = cholesky_upper(scale).transpose();
    const Matrix<Scalar> lt = lower * bartlett_factor<Scalar>(p, dof, rng);
    return symmetrize(Matrix<Scalar>(lt * lt.transpose()));
}

template <typename Scalar, typename Rng>
Matrix<Scalar> invwishart_sample(const InvWishartParams<Scalar>& params, Rng& rng) {
    const auto p = static_cast<int>(params.scale.rows());
    const Matrix<Scalar> phi = wishart_sample(params.dof - Scalar(p) - Scalar(1), spd_inverse(params.scale), rng);
    return spd_inverse(phi);
}

/// X = M + L_row Z L_col' with Z standard normal, so vec(X) ~ N(vec(M), col_cov (x) row_cov).
template <typename Scalar, typename Rng>
Matrix<Scalar> matrix_normal_sample(const Matrix<Scalar>& mean, const Matrix<Scalar>& row_cov,
                                    const Matrix<Scalar>& col_cov, Rng& rng) {
    const Matrix<Scalar> z = standard_normal_matrix<Scalar>(mean.rows(), mean.cols(), rng);
    Matrix<Scalar> row_factor = Matrix<Scalar>::Zero(mean.rows(), mean.rows());
    if (row_cov.norm() > Scalar(0)) row_factor = cholesky_upper(make_spd(row_cov, "row covariance")).transpose();
    const Matrix<Scalar> col_factor = cholesky_upper(col_cov).transpose();
    return mean + row_factor * z * col_factor.transpose();
}

/// Shape parameters ((tr(beta)/p * n + p - 1)/2, 1/2) of the evolution's beta matrix.
template <typename Scalar>
SingularBetaParams<Scalar> evolution_beta_params(const Vector<Scalar>& beta, Scalar n) {
    const auto p = static_cast<int>(beta.size());
    const Scalar tau = beta.sum() / Scalar(p);
    return {(tau * n + Scalar(p) - Scalar(1)) / Scalar(2), Scalar(0.5), p};
}

/// B = (C')^{-1} A C^{-1}, with A ~ W_p(2a, I), u ~ N_p(0, I) and C'C = A + uu'.
template <typename Scalar, typename Rng>
Matrix<Scalar> singular_beta_sample(const SingularBetaParams<Scalar>& params, Rng& rng) {
    if (params.shape_b != Scalar(0.5)) {
        throw Error(ErrorCode::kInvalidArgument, "singular beta sampler supports shape_b = 1/2 only");
    }
    const int p = params.p;
    if (!(params.shape_a > Scalar(p - 1) / Scalar(2))) {
        throw Error(ErrorCode::kDofTooSmall, "singular beta needs shape_a > (p - 1)/2");
    }
    const Matrix<Scalar> t = bartlett_factor<Scalar>(p, Scalar(2) * params.shape_a, rng);
    const Matrix<Scalar> a = t * t.transpose();
    const Vector<Scalar> u = standard_normal_matrix<Scalar>(p, 1, rng);
    const Matrix<Scalar> c = cholesky_upper(Matrix<Scalar>(a + u * u.transpose()));
    // (C')^{-1} A C^{-1} = (C')^{-1} T T' C^{-1}; solve C' X = T.
    const Matrix<Scalar> w = c.transpose().template triangularView<Eigen::Lower>().solve(t);
    return symmetrize(Matrix<Scalar>(w * w.transpose()));
}

/// One stochastic step Phi_t = beta^{-1/2} C' B C beta^{-1/2}, where Phi_{t-1} = C'C
/// and B ~ B_p((tr(beta)/p * n + p - 1)/2, 1/2).
template <typename Scalar, typename Rng>
Matrix<Scalar> evolve_precision(const Matrix<Scalar>& phi_prev, const Vector<Scalar>& beta, Scalar n, Rng& rng) {
    if (phi_prev.rows() != beta.size()) throw Error(ErrorCode::kDimensionMismatch, "evolve_precision");
    const Matrix<Scalar> c = cholesky_upper(phi_prev);
    const Matrix<Scalar> b = singular_beta_sample(evolution_beta_params(beta, n), rng);
    const Vector<Scalar> inv_sqrt_beta = beta.array().rsqrt().matrix();
    return make_spd(diag_sandwich(Matrix<Scalar>(c.transpose() * b * c), inv_sqrt_beta), "evolved precision");
}

}  // namespace mvsv
