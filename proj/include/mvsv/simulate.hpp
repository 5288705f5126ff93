#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "mvsv/distributions.hpp"
#include "mvsv/model.hpp"

namespace mvsv {

using Rng = std::mt19937_64;

/// Independent stream `index` derived from a master seed.
inline Rng make_stream(std::uint64_t master_seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return Rng(seq);
}

template <typename Scalar>
struct SimPath {
    Matrix<Scalar> observations;               // N x p, row t-1 is y_t'
    std::vector<Matrix<Scalar>> states;        // Theta_0..Theta_N
    std::vector<Matrix<Scalar>> volatilities;  // Sigma_0..Sigma_N
    std::uint64_t seed = 0;
};

/// Draws Sigma_0 ~ IW_p(n + 2p, S_0) and Theta_0 | Sigma_0 ~ N(m_0, P_0, Sigma_0), then for
/// t = 1..N evolves the precision, the state (omega_t ~ N(0, Omega_t, Sigma_t)) and emits
/// y_t' = F_t' Theta_t + eps_t'. Omega_t uses the discount construction applied to the
/// simulator's own left-covariance recursion started at P_0.
template <typename Scalar, typename Urbg>
SimPath<Scalar> simulate(const ModelSpec<Scalar>& spec, const Priors<Scalar>& priors, int horizon, Urbg& rng) {
    if (horizon < 1) throw Error(ErrorCode::kInvalidArgument, "simulation horizon must be at least 1");
    const auto report = validate(spec, priors);
    const bool constant = report.branch == Branch::kConstantVolatility;
    const Scalar n = report.n;
    const int p = spec.p;

    SimPath<Scalar> path;
    path.observations.resize(horizon, p);
    path.states.reserve(static_cast<std::size_t>(horizon) + 1);
    path.volatilities.reserve(static_cast<std::size_t>(horizon) + 1);

    Matrix<Scalar> phi = wishart_sample(n + Scalar(p - 1), spd_inverse(priors.S0), rng);
    Matrix<Scalar> sigma = spd_inverse(phi);
    Matrix<Scalar> theta = matrix_normal_sample(priors.m0, priors.P0, sigma, rng);
    Matrix<Scalar> p_left = symmetrize(priors.P0);
    path.volatilities.push_back(sigma);
    path.states.push_back(theta);

    for (int t = 1; t <= horizon; ++t) {
        const Matrix<Scalar>& g = spec.evolution.at(t);
        const Vector<Scalar>& f = spec.design.at(t);
        const Matrix<Scalar> omega = evolution_covariance(spec, p_left, t);
        if (!constant) {
            phi = evolve_precision(phi, spec.vol_discounts, n, rng);
            sigma = spd_inverse(phi);
        }
        const Matrix<Scalar> zero_state = Matrix<Scalar>::Zero(spec.d, p);
        theta = g * theta + matrix_normal_sample(zero_state, omega, sigma, rng);
        const Matrix<Scalar> eps = matrix_normal_sample(Matrix<Scalar>(Matrix<Scalar>::Zero(1, p)),
                                                        Matrix<Scalar>(Matrix<Scalar>::Ones(1, 1)), sigma, rng);
        path.observations.row(t - 1) = f.transpose() * theta + eps;

        const Matrix<Scalar> r = symmetrize(Matrix<Scalar>(g * p_left * g.transpose() + omega));
        const Vector<Scalar> rf = r * f;
        p_left = symmetrize(Matrix<Scalar>(r - rf * rf.transpose() / (f.dot(rf) + Scalar(1))));

        path.states.push_back(theta);
        path.volatilities.push_back(sigma);
    }
    return path;
}

template <typename Scalar>
SimPath<Scalar> simulate(const ModelSpec<Scalar>& spec, const Priors<Scalar>& priors, int horizon,
                         std::uint64_t seed) {
    Rng rng(seed);
    auto path = simulate(spec, priors, horizon, rng);
    path.seed = seed;
    return path;
}

/// Generating configuration of the metals-style scenario: p = 4 local-level model with
/// F = [1 0]', G = I_2, paired volatility discounts beta = (b1, b2, b2, b1).
template <typename Scalar>
struct Scenario {
    ModelSpec<Scalar> spec;
    Priors<Scalar> priors;
};

template <typename Scalar>
Scenario<Scalar> lme_style_config(Scalar beta1 = Scalar(0.75), Scalar beta2 = Scalar(0.95),
                                  Scalar delta = Scalar(0.9), Scalar daily_variance = Scalar(1e-4)) {
    Vector<Scalar> beta(4);
    beta << beta1, beta2, beta2, beta1;
    Scenario<Scalar> out;
    out.spec = ModelSpec<Scalar>::local_level(4, 2, delta, beta);
    const Scalar n = compute_n(beta);
    out.priors.m0 = Matrix<Scalar>::Zero(2, 4);
    out.priors.P0 = Matrix<Scalar>::Identity(2, 2);
    // E(Sigma_0) = S_0/(n - 2) = daily_variance * I.
    out.priors.S0 = Matrix<Scalar>::Identity(4, 4) * daily_variance * (n - Scalar(2));
    out.priors.n0 = Scalar(0);
    return out;
}

/// 333 x 4 return-like path with two volatility regimes (series 1 and 4 share a fast
/// discount, series 2 and 3 a slow one).
template <typename Scalar>
SimPath<Scalar> lme_style_scenario(std::uint64_t seed, int horizon = 333) {
    const auto sc = lme_style_config<Scalar>();
    return simulate(sc.spec, sc.priors, horizon, seed);
}

}  // namespace mvsv
