#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mvsv/distributions.hpp"
#include "mvsv/model.hpp"
#include "mvsv/standardize.hpp"

namespace mvsv {

/// One-step forecast quantities at time t given y^{t-1}.
template <typename Scalar>
struct Prediction {
    int t = 0;
    Vector<Scalar> design;      // F_t
    Matrix<Scalar> state_mean;  // G_t m_{t-1}
    Matrix<Scalar> R;           // G_t P_{t-1} G_t' + Omega_t
    Scalar Q = Scalar(1);       // F_t' R_t F_t + 1
    Vector<Scalar> f;           // m_{t-1}' G_t' F_t
    InvWishartParams<Scalar> sigma_prior;
    Scalar forecast_dof = Scalar(0);  // k: e_t ~ T(k, 0, Q_t, sigma_prior.scale)
};

template <typename Scalar>
struct StepResult {
    int t = 0;
    Vector<Scalar> f;
    Scalar Q = Scalar(1);
    Matrix<Scalar> R;
    Vector<Scalar> e;
    Vector<Scalar> r;
    std::optional<Vector<Scalar>> u;
    std::optional<Scalar> u_logpdf;
    Scalar forecast_dof = Scalar(0);
    InvWishartParams<Scalar> sigma_prior;
    InvWishartParams<Scalar> sigma_post;
};

template <typename Scalar>
struct Trajectory {
    Branch branch = Branch::kTimeVarying;
    SqrtConvention sqrt_convention = SqrtConvention::kSpectral;
    Vector<Scalar> beta;
    FilterState<Scalar> initial;
    std::vector<StepResult<Scalar>> steps;
    FilterState<Scalar> final;

    int p() const { return static_cast<int>(initial.S.rows()); }
    std::size_t size() const { return steps.size(); }
};

struct FilterOptions {
    SqrtConvention sqrt_convention = SqrtConvention::kSpectral;
    bool check_closed_form = true;
};

/// E(Sigma_t | y^{t-1}) = S*/(k - 2); needs k > 2 (tr(beta)/p > 2/3 in the time-varying branch).
template <typename Scalar>
Matrix<Scalar> forecast_volatility_mean(const InvWishartParams<Scalar>& sigma_prior, Scalar forecast_dof) {
    if (!(forecast_dof > Scalar(2))) {
        throw Error(ErrorCode::kFeatureUnavailable, "forecast mean of Sigma_t needs k > 2");
    }
    return sigma_prior.scale / (forecast_dof - Scalar(2));
}

/// E(Sigma_t | y^t) = S_t/(n - 2); needs n > 2 (tr(beta)/p > 1/2 in the time-varying branch).
template <typename Scalar>
Matrix<Scalar> posterior_volatility_mean(const Matrix<Scalar>& s, Scalar n) {
    if (!(n > Scalar(2))) throw Error(ErrorCode::kFeatureUnavailable, "posterior mean of Sigma_t needs n > 2");
    return s / (n - Scalar(2));
}

template <typename Scalar>
Prediction<Scalar> predict(const FilterState<Scalar>& state, const ModelSpec<Scalar>& spec, int t) {
    const Matrix<Scalar>& g = spec.evolution.at(t);
    const Vector<Scalar>& f_vec = spec.design.at(t);
    const Scalar tau = spec.mean_beta();
    const Vector<Scalar> root_beta = spec.vol_discounts.cwiseSqrt();

    Prediction<Scalar> out;
    out.t = t;
    out.design = f_vec;
    out.state_mean = g * state.m;
    out.R = make_spd(Matrix<Scalar>(g * state.P * g.transpose() + evolution_covariance(spec, state.P, t)), "R_t");
    out.Q = f_vec.dot(out.R * f_vec) + Scalar(1);
    out.f = out.state_mean.transpose() * f_vec;
    out.sigma_prior.dof = tau * state.n + Scalar(2 * spec.p);
    out.sigma_prior.scale = make_spd(diag_sandwich(state.S, root_beta), "prior Sigma scale");
    out.forecast_dof = tau * state.n;
    return out;
}

/// Observation update. Returns the step byproducts and advances `state` to time t.
template <typename Scalar>
StepResult<Scalar> update(FilterState<Scalar>& state, const Vector<Scalar>& y, const ModelSpec<Scalar>& spec, int t,
                          SqrtConvention convention = SqrtConvention::kSpectral) {
    if (y.size() != spec.p) throw Error(ErrorCode::kDimensionMismatch, "observation must have p entries");
    if (!y.allFinite()) {
        throw Error(ErrorCode::kInvalidArgument, "observation at t=" + std::to_string(t) + " has missing components");
    }
    const Prediction<Scalar> pred = predict(state, spec, t);
    const Scalar tau = spec.mean_beta();
    const bool constant = spec.constant_volatility();

    StepResult<Scalar> step;
    step.t = t;
    step.f = pred.f;
    step.Q = pred.Q;
    step.R = pred.R;
    step.e = y - pred.f;
    step.sigma_prior = pred.sigma_prior;
    step.forecast_dof = pred.forecast_dof;

    const Vector<Scalar> gain = pred.R * pred.design / pred.Q;  // A_t
    state.m = pred.state_mean + gain * step.e.transpose();
    state.P = make_spd(Matrix<Scalar>(pred.R - gain * gain.transpose() * pred.Q), "P_t");
    state.S = make_spd(Matrix<Scalar>(pred.sigma_prior.scale + step.e * step.e.transpose() / pred.Q), "S_t");

    const Scalar n_star = tau * state.n + Scalar(1);
    if (!constant) {
        using std::abs;
        if (abs(n_star - state.n) > Scalar(1e-12) * state.n) {
            throw Error(ErrorCode::kInvariantViolated, "degrees of freedom drifted from the fixed point");
        }
    } else {
        state.n = n_star;
    }
    state.t = t;

    step.r = y - state.m.transpose() * pred.design;
    step.sigma_post.dof = state.n + Scalar(2 * spec.p);
    step.sigma_post.scale = state.S;
    if (pred.forecast_dof > Scalar(2)) {
        step.u = standardize(step.e, pred.Q, pred.sigma_prior.scale, pred.forecast_dof, convention);
        step.u_logpdf = standardized_logpdf(*step.u, pred.forecast_dof);
    }
    return step;
}

/// beta^{T/2} S_0 beta^{T/2} + sum_{i=0}^{T-1} beta^{i/2} r_{T-i} e_{T-i}' beta^{i/2}.
template <typename Scalar>
Matrix<Scalar> closed_form_scale(const Trajectory<Scalar>& traj) {
    const auto p = traj.p();
    const auto steps = static_cast<int>(traj.steps.size());
    const Vector<Scalar> log_beta = traj.beta.array().log().matrix();
    Matrix<Scalar> log_pair(p, p);
    for (int i = 0; i < p; ++i) {
        for (int j = 0; j < p; ++j) log_pair(i, j) = (log_beta(i) + log_beta(j)) / Scalar(2);
    }
    auto decay = [&](int power) { return (log_pair * Scalar(power)).array().exp().matrix(); };
    Matrix<Scalar> out = traj.initial.S.cwiseProduct(decay(steps));
    for (int i = 0; i < steps; ++i) {
        const auto& step = traj.steps[static_cast<std::size_t>(steps - 1 - i)];
        out += Matrix<Scalar>(step.r * step.e.transpose()).cwiseProduct(decay(i));
    }
    return out;
}

template <typename Scalar>
Trajectory<Scalar> run_from(const ModelSpec<Scalar>& spec, FilterState<Scalar> state, Branch branch,
                            const Matrix<Scalar>& observations, const FilterOptions& options) {
    if (observations.rows() > 0 && observations.cols() != spec.p) {
        throw Error(ErrorCode::kDimensionMismatch, "observations must have p columns");
    }
    Trajectory<Scalar> traj;
    traj.branch = branch;
    traj.sqrt_convention = options.sqrt_convention;
    traj.beta = spec.vol_discounts;
    traj.initial = state;
    traj.steps.reserve(static_cast<std::size_t>(observations.rows()));
    for (Eigen::Index i = 0; i < observations.rows(); ++i) {
        const int t = state.t + 1;
        traj.steps.push_back(
            update(state, Vector<Scalar>(observations.row(i).transpose()), spec, t, options.sqrt_convention));
    }
    traj.final = state;

    if (options.check_closed_form && !traj.steps.empty()) {
        const Matrix<Scalar> closed = closed_form_scale(traj);
        const Scalar rel = (closed - traj.final.S).norm() / traj.final.S.norm();
        if (!(rel <= Scalar(1e-8))) {
            throw Error(ErrorCode::kInvariantViolated,
                        "closed-form S_T disagrees with the recursion (relative " +
                            std::to_string(static_cast<double>(rel)) + ")");
        }
    }
    return traj;
}

/// Sequential filter over the rows of `observations` (N x p). The branch is chosen by
/// validate(): constant volatility when every beta_i = 1, time-varying otherwise.
template <typename Scalar>
Trajectory<Scalar> run(const ModelSpec<Scalar>& spec, const Priors<Scalar>& priors, const Matrix<Scalar>& observations,
                       const FilterOptions& options = {}) {
    const auto report = validate(spec, priors);
    return run_from(spec, initial_state(priors, report.n), report.branch, observations, options);
}

template <typename Scalar>
Trajectory<Scalar> run_constant_volatility(const ModelSpec<Scalar>& spec, const Priors<Scalar>& priors,
                                           const Matrix<Scalar>& observations, const FilterOptions& options = {}) {
    if (!spec.constant_volatility()) {
        throw Error(ErrorCode::kInvalidArgument, "run_constant_volatility requires every beta_i = 1");
    }
    return run(spec, priors, observations, options);
}

/// N^{-1} sum r_t e_t', the maximum likelihood estimator of a constant Sigma.
template <typename Scalar>
Matrix<Scalar> mle_constant(const Trajectory<Scalar>& traj) {
    if (traj.steps.empty()) throw Error(ErrorCode::kEmptyData, "mle_constant needs at least one observation");
    Matrix<Scalar> acc = Matrix<Scalar>::Zero(traj.p(), traj.p());
    for (const auto& step : traj.steps) acc += step.r * step.e.transpose();
    return symmetrize(Matrix<Scalar>(acc / Scalar(traj.steps.size())));
}

/// e_t, r_t and Q_t do not depend on beta or S, so the estimator is computed on the
/// beta = I version of the model.
template <typename Scalar>
Matrix<Scalar> mle_constant(const ModelSpec<Scalar>& spec, const Priors<Scalar>& priors,
                            const Matrix<Scalar>& observations) {
    ModelSpec<Scalar> constant = spec;
    constant.vol_discounts = Vector<Scalar>::Ones(spec.p);
    FilterOptions options;
    options.check_closed_form = false;
    return mle_constant(run(constant, priors, observations, options));
}

template <typename Scalar>
struct LinearTransformResult {
    Trajectory<Scalar> original;
    Trajectory<Scalar> transformed;
    bool exact = false;           // scalar beta: S*_t = A S_t A' was asserted
    Scalar max_deviation = Scalar(0);  // max_t ||S*_t - A S_t A'|| / ||A S_t A'||
    Scalar marginal_n = Scalar(0);     // n + 2(p - q)
    Scalar marginal_dof = Scalar(0);   // IW_q dof of the marginal posterior, n + 2(p - q) + 2q
    std::vector<std::string> warnings;
};

/// Filter y*_t = A y_t with priors (m0 A', P0, A S0 A') and compare with the full run.
template <typename Scalar>
LinearTransformResult<Scalar> linear_transform(const ModelSpec<Scalar>& spec, const Priors<Scalar>& priors,
                                               const Matrix<Scalar>& observations, const Matrix<Scalar>& a,
                                               const FilterOptions& options = {}) {
    const auto q = static_cast<int>(a.rows());
    if (a.cols() != spec.p || q < 1 || q > spec.p) {
        throw Error(ErrorCode::kDimensionMismatch, "A must be q x p with 1 <= q <= p");
    }
    Eigen::FullPivLU<Matrix<Scalar>> lu(a);
    if (lu.rank() != q) throw Error(ErrorCode::kRankDeficient, "A must have full row rank");

    LinearTransformResult<Scalar> out;
    const Scalar b = spec.mean_beta();
    out.exact = (spec.vol_discounts.array() == spec.vol_discounts(0)).all();
    if (!out.exact) {
        out.warnings.push_back("beta is not scalar; the transformed model uses tr(beta)/p * I_q and closure is not exact");
    }

    ModelSpec<Scalar> tspec = spec;
    tspec.p = q;
    tspec.vol_discounts = Vector<Scalar>::Constant(q, b);
    Priors<Scalar> tpriors{priors.m0 * a.transpose(), priors.P0,
                           symmetrize(Matrix<Scalar>(a * priors.S0 * a.transpose())),
                           priors.n0 + Scalar(2 * (spec.p - q))};

    out.original = run(spec, priors, observations, options);
    out.transformed = run(tspec, tpriors, Matrix<Scalar>(observations * a.transpose()), options);
    for (std::size_t i = 0; i < out.original.steps.size(); ++i) {
        const Matrix<Scalar> expected = a * out.original.steps[i].sigma_post.scale * a.transpose();
        const Scalar dev = (out.transformed.steps[i].sigma_post.scale - expected).norm() / expected.norm();
        out.max_deviation = std::max(out.max_deviation, dev);
    }
    if (out.exact && out.max_deviation > Scalar(1e-10)) {
        throw Error(ErrorCode::kInvariantViolated, "transformed scale differs from A S_t A'");
    }
    out.marginal_n = out.original.final.n + Scalar(2 * (spec.p - q));
    out.marginal_dof = out.marginal_n + Scalar(2 * q);
    return out;
}

}  // namespace mvsv
