#pragma once

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <tuple>
#include <type_traits>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "mvsv/filter.hpp"

namespace mvsv {

template <typename Scalar>
struct DiagnosticsReport {
    Vector<Scalar> msse;
    Vector<Scalar> mae;
    Vector<Scalar> me;
    std::optional<Scalar> loglik;
    std::size_t n_obs = 0;           // steps averaged for MAE and ME
    std::size_t n_standardized = 0;  // steps with k > 2, averaged for MSSE
    SqrtConvention sqrt_convention = SqrtConvention::kSpectral;
};

/// MSSE, MAE and ME. MSSE averages the steps whose forecast law has k > 2; in the
/// time-varying branch with tr(beta)/p > 2/3 that is every step.
template <typename Scalar>
DiagnosticsReport<Scalar> msse_mae_me(const Trajectory<Scalar>& traj) {
    if (traj.steps.empty()) throw Error(ErrorCode::kEmptyData, "no steps to summarize");
    const auto p = traj.p();
    DiagnosticsReport<Scalar> report;
    report.sqrt_convention = traj.sqrt_convention;
    report.msse = Vector<Scalar>::Zero(p);
    report.mae = Vector<Scalar>::Zero(p);
    report.me = Vector<Scalar>::Zero(p);
    for (const auto& step : traj.steps) {
        report.mae += step.e.cwiseAbs();
        report.me += step.e;
        if (step.u) {
            report.msse += step.u->cwiseAbs2();
            ++report.n_standardized;
        }
    }
    report.n_obs = traj.steps.size();
    report.mae /= Scalar(report.n_obs);
    report.me /= Scalar(report.n_obs);
    if (report.n_standardized == 0) {
        throw Error(ErrorCode::kFeatureUnavailable, "no step has k > 2; MSSE undefined");
    }
    report.msse /= Scalar(report.n_standardized);
    return report;
}

/// Sigma_0, ..., Sigma_N replaced by the posterior means S_t/(n_t - 2).
template <typename Scalar>
std::vector<Matrix<Scalar>> posterior_mean_path(const Trajectory<Scalar>& traj) {
    std::vector<Matrix<Scalar>> path;
    path.reserve(traj.steps.size() + 1);
    path.push_back(posterior_volatility_mean(traj.initial.S, traj.initial.n));
    const auto p = traj.p();
    for (const auto& step : traj.steps) {
        path.push_back(posterior_volatility_mean(step.sigma_post.scale, step.sigma_post.dof - Scalar(2 * p)));
    }
    return path;
}

/// Sigma_t replaced by the one-step forecast means S*_t/(k - 2); Sigma_0 by the prior posterior mean.
template <typename Scalar>
std::vector<Matrix<Scalar>> forecast_mean_path(const Trajectory<Scalar>& traj) {
    std::vector<Matrix<Scalar>> path;
    path.reserve(traj.steps.size() + 1);
    path.push_back(posterior_volatility_mean(traj.initial.S, traj.initial.n));
    for (const auto& step : traj.steps) path.push_back(forecast_volatility_mean(step.sigma_prior, step.forecast_dof));
    return path;
}

/// The parameter m = tau/(1 - tau) + p - 1 of the volatility-transition density.
template <typename Scalar>
Scalar transition_shape(const Vector<Scalar>& beta) {
    const Scalar tau = beta.mean();
    if (!(tau < Scalar(1))) throw Error(ErrorCode::kDegenerateDegrees, "tr(beta)/p = 1: transition shape is infinite");
    return tau / (Scalar(1) - tau) + Scalar(beta.size()) - Scalar(1);
}

/// Log-likelihood of a volatility path Sigma_1..Sigma_N (with Sigma_0 at index 0):
///   c - 1/2 sum_t [ p log Q_t + (p - m) log|Sigma_{t-1}| + e_t' Q_t^{-1} Sigma_t^{-1} e_t
///                   + p log|L_t| + (m - p - 2) log|Sigma_t| ],
///   c = N(m - p)/2 sum log beta_i + N log Gamma_p((m+1)/2) - pN/2 log 2 - pN log pi - N log Gamma_p(m/2),
/// where |L_t| is the product of the positive eigenvalues of
/// I - (C_{t-1}')^{-1} beta^{1/2} Sigma_t^{-1} beta^{1/2} C_{t-1}^{-1} with Sigma_{t-1}^{-1} = C_{t-1}'C_{t-1}.
template <typename Scalar>
Scalar loglik_path(const Trajectory<Scalar>& traj, const std::vector<Matrix<Scalar>>& sigma_path,
                       const Vector<Scalar>& beta) {
    const auto n_steps = traj.steps.size();
    if (n_steps == 0) throw Error(ErrorCode::kEmptyData, "log-likelihood of an empty trajectory");
    if (sigma_path.size() != n_steps + 1) {
        throw Error(ErrorCode::kLengthMismatch, "sigma path must hold Sigma_0..Sigma_N");
    }
    const auto p = traj.p();
    if (beta.size() != p) throw Error(ErrorCode::kDimensionMismatch, "beta must have p entries");
    const Scalar m = transition_shape(beta);
    if (!(m > Scalar(p - 1))) {
        throw Error(ErrorCode::kFeatureUnavailable, "Gamma_p(m/2) undefined: m <= p - 1");
    }
    using std::log;
    const Scalar big_n = Scalar(n_steps);
    const Scalar c = big_n * (m - Scalar(p)) / Scalar(2) * beta.array().log().sum() +
                     big_n * log_mvgamma(p, (m + Scalar(1)) / Scalar(2)) -
                     Scalar(p) * big_n / Scalar(2) * log(Scalar(2)) -
                     Scalar(p) * big_n * log(std::numbers::pi_v<Scalar>) - big_n * log_mvgamma(p, m / Scalar(2));

    const Vector<Scalar> root_beta = beta.cwiseSqrt();
    const Matrix<Scalar> identity = Matrix<Scalar>::Identity(p, p);
    Scalar sum = Scalar(0);
    Matrix<Scalar> prev_precision = spd_inverse(sigma_path[0]);
    Scalar prev_logdet = log_det_spd(sigma_path[0]);
    for (std::size_t i = 0; i < n_steps; ++i) {
        const auto& step = traj.steps[i];
        const Matrix<Scalar>& sigma = sigma_path[i + 1];
        const Matrix<Scalar> precision = spd_inverse(sigma);
        const Scalar logdet = log_det_spd(sigma);

        const Matrix<Scalar> c_prev = cholesky_upper(prev_precision);
        // W = (C')^{-1} beta^{1/2} Phi_t beta^{1/2} C^{-1}
        const Matrix<Scalar> inner = diag_sandwich(precision, root_beta);
        const Matrix<Scalar> left = c_prev.transpose().template triangularView<Eigen::Lower>().solve(inner);
        const Matrix<Scalar> w =
            c_prev.transpose().template triangularView<Eigen::Lower>().solve(Matrix<Scalar>(left.transpose()));
        Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(symmetrize(Matrix<Scalar>(identity - w)),
                                                         Eigen::EigenvaluesOnly);
        const auto& ev = es.eigenvalues();
        const Scalar threshold = Scalar(1e-10) * ev.cwiseAbs().maxCoeff();
        Scalar log_l = Scalar(0);
        int positive = 0;
        for (Eigen::Index j = 0; j < ev.size(); ++j) {
            if (ev(j) > threshold) {
                log_l += log(ev(j));
                ++positive;
            }
        }
        if (positive == 0) {
            throw Error(ErrorCode::kNoPositiveEigenvalues, "L_t is empty at t=" + std::to_string(step.t));
        }

        const Scalar quad = step.e.dot(precision * step.e) / step.Q;
        sum += Scalar(p) * log(step.Q) + (Scalar(p) - m) * prev_logdet + quad + Scalar(p) * log_l +
               (m - Scalar(p) - Scalar(2)) * logdet;
        prev_precision = precision;
        prev_logdet = logdet;
    }
    return c - sum / Scalar(2);
}

/// Path log-likelihood at the posterior-mean plug-in path.
template <typename Scalar>
Scalar loglik_path(const Trajectory<Scalar>& traj) {
    return loglik_path(traj, posterior_mean_path(traj), traj.beta);
}

/// Constant-volatility log-likelihood
///   -pN/2 log(2 pi) - p/2 sum log Q_t - N/2 log|Sigma| - 1/2 sum e_t' Q_t^{-1} Sigma^{-1} e_t.
template <typename Scalar>
Scalar loglik_constant(const Trajectory<Scalar>& traj, const Matrix<Scalar>& sigma) {
    if (traj.branch != Branch::kConstantVolatility) {
        throw Error(ErrorCode::kFeatureUnavailable, "loglik_constant applies to the beta = I branch");
    }
    if (traj.steps.empty()) throw Error(ErrorCode::kEmptyData, "log-likelihood of an empty trajectory");
    const auto p = traj.p();
    const Matrix<Scalar> precision = spd_inverse(sigma);
    const Scalar logdet = log_det_spd(sigma);
    using std::log;
    const Scalar big_n = Scalar(traj.steps.size());
    Scalar out = -Scalar(p) * big_n / Scalar(2) * log(Scalar(2) * std::numbers::pi_v<Scalar>) - big_n / Scalar(2) * logdet;
    for (const auto& step : traj.steps) {
        out -= Scalar(p) / Scalar(2) * log(step.Q);
        out -= step.e.dot(precision * step.e) / (Scalar(2) * step.Q);
    }
    return out;
}

enum class QuantileFamily { kModelT, kNormal };

inline const char* family_name(QuantileFamily f) { return f == QuantileFamily::kModelT ? "t" : "normal"; }

inline QuantileFamily parse_family(const std::string& s) {
    if (s == "t") return QuantileFamily::kModelT;
    if (s == "normal") return QuantileFamily::kNormal;
    throw Error(ErrorCode::kInvalidArgument, "unknown quantile family '" + s + "'");
}

template <typename Scalar>
struct VaRConfig {
    Vector<Scalar> weights;
    Scalar alpha = Scalar(95);  // confidence percentage in (0, 100)
    QuantileFamily family = QuantileFamily::kModelT;
    Scalar dof = Scalar(0);     // k of the model-t family
};

template <typename Scalar>
void check_weights(const Vector<Scalar>& w) {
    using std::abs;
    if (w.size() == 0 || (w.array() < Scalar(0)).any() || abs(w.sum() - Scalar(1)) > Scalar(1e-10)) {
        throw Error(ErrorCode::kInvalidWeights, "weights must be nonnegative and sum to 1");
    }
}

/// Quantile of the standardized (zero-mean, unit-variance) return distribution.
template <typename Scalar>
Scalar standardized_quantile(Scalar prob, QuantileFamily family, Scalar dof) {
    const double pr = static_cast<double>(prob);
    if (family == QuantileFamily::kNormal) {
        return Scalar(boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), pr));
    }
    if (!(dof > Scalar(2))) throw Error(ErrorCode::kDofTooSmall, "unit-variance t quantile needs k > 2");
    const double k = static_cast<double>(dof);
    return Scalar(boost::math::quantile(boost::math::students_t_distribution<double>(k), pr) * std::sqrt((k - 2.0) / k));
}

/// mu_N + F_N^{-1}(alpha/100) sigma_N for the portfolio z = w'x, sigma_N^2 = w' Sigma_N w.
template <typename Scalar>
Scalar var_portfolio(const Vector<Scalar>& mu, const Matrix<Scalar>& sigma, const VaRConfig<Scalar>& config) {
    check_weights(config.weights);
    if (mu.size() != config.weights.size() || sigma.rows() != mu.size() || sigma.cols() != mu.size()) {
        throw Error(ErrorCode::kDimensionMismatch, "var_portfolio: shape mismatch");
    }
    if (!(config.alpha > Scalar(0) && config.alpha < Scalar(100))) {
        throw Error(ErrorCode::kInvalidArgument, "alpha must lie in (0, 100)");
    }
    if (!is_spd(sigma)) throw Error(ErrorCode::kNonPositiveDefinite, "Sigma_N");
    const Scalar mean = config.weights.dot(mu);
    using std::sqrt;
    const Scalar sd = sqrt(config.weights.dot(sigma * config.weights));
    return mean + standardized_quantile(config.alpha / Scalar(100), config.family, config.dof) * sd;
}

/// VaR at the last step of a trajectory, from f_N and the forecast mean E(Sigma_N | y^{N-1}).
/// The model-t family uses that step's forecast degrees of freedom.
template <typename Scalar>
Scalar var_at_end(const Trajectory<Scalar>& traj, VaRConfig<Scalar> config) {
    if (traj.steps.empty()) throw Error(ErrorCode::kEmptyData, "VaR of an empty trajectory");
    const auto& last = traj.steps.back();
    config.dof = last.forecast_dof;
    return var_portfolio(last.f, forecast_volatility_mean(last.sigma_prior, last.forecast_dof), config);
}

template <typename Scalar>
struct LbfSeries {
    std::vector<Scalar> values;
    std::pair<std::string, std::string> model_labels;

    Scalar cumulative() const {
        Scalar s = Scalar(0);
        for (auto v : values) s += v;
        return s;
    }
};

/// LBF(t) = log p(u_t | M1) - log p(u_t | M2) from per-step log densities.
template <typename Scalar>
LbfSeries<Scalar> lbf(std::span<const Scalar> logpdf_model1, std::span<const Scalar> logpdf_model2,
                      std::pair<std::string, std::string> labels = {"M1", "M2"}) {
    if (logpdf_model1.size() != logpdf_model2.size()) {
        throw Error(ErrorCode::kLengthMismatch, "LBF needs equally long density series");
    }
    LbfSeries<Scalar> out;
    out.model_labels = std::move(labels);
    out.values.resize(logpdf_model1.size());
    for (std::size_t i = 0; i < logpdf_model1.size(); ++i) out.values[i] = logpdf_model1[i] - logpdf_model2[i];
    return out;
}

template <typename Scalar>
std::vector<Scalar> standardized_log_densities(const Trajectory<Scalar>& traj) {
    std::vector<Scalar> out;
    out.reserve(traj.steps.size());
    for (const auto& step : traj.steps) {
        if (!step.u_logpdf) {
            throw Error(ErrorCode::kFeatureUnavailable,
                        "standardized error undefined at t=" + std::to_string(step.t) + " (k <= 2)");
        }
        out.push_back(*step.u_logpdf);
    }
    return out;
}

/// log p(e_t | y^{t-1}) with e_t ~ T_{p x 1}(k, 0, Q_t, S*_t). Equals the density of u_t
/// times the Jacobian |Q*_t|^{1/2}, so two models are compared on the same data scale.
template <typename Scalar>
std::vector<Scalar> forecast_log_densities(const Trajectory<Scalar>& traj) {
    std::vector<Scalar> out;
    out.reserve(traj.steps.size());
    for (const auto& step : traj.steps) {
        if (!(step.forecast_dof > Scalar(0))) {
            throw Error(ErrorCode::kFeatureUnavailable,
                        "forecast density undefined at t=" + std::to_string(step.t) + " (k <= 0)");
        }
        const auto p = step.e.size();
        out.push_back(mvt_logpdf(step.e, MultiTParams<Scalar>{step.forecast_dof, Vector<Scalar>::Zero(p), step.Q,
                                                              step.sigma_prior.scale}));
    }
    return out;
}

/// Sum of one-step forecast log densities (prediction-error decomposition).
template <typename Scalar>
Scalar loglik_predictive(const Trajectory<Scalar>& traj) {
    if (traj.steps.empty()) throw Error(ErrorCode::kEmptyData, "log-likelihood of an empty trajectory");
    Scalar s = Scalar(0);
    for (auto v : forecast_log_densities(traj)) s += v;
    return s;
}

/// LBF(t) from the one-step forecast densities of both models.
template <typename Scalar>
LbfSeries<Scalar> lbf(const Trajectory<Scalar>& model1, const Trajectory<Scalar>& model2,
                      std::pair<std::string, std::string> labels = {"M1", "M2"}) {
    if (model1.size() != model2.size()) throw Error(ErrorCode::kLengthMismatch, "LBF needs equal horizons");
    const auto d1 = forecast_log_densities(model1);
    const auto d2 = forecast_log_densities(model2);
    return lbf(std::span<const Scalar>(d1), std::span<const Scalar>(d2), std::move(labels));
}

template <typename Scalar>
struct GridRow {
    Scalar delta = Scalar(0);
    Vector<Scalar> beta;
    bool excluded = false;
    std::string note;  // exclusion reason or likelihood remark
    Vector<Scalar> msse;
    Vector<Scalar> me;
    std::optional<Scalar> loglik;
    std::optional<Scalar> pred_loglik;
    std::optional<Scalar> var95;
    std::optional<Scalar> var99;
};

/// Criterion used to rank grid rows.
enum class RankBy { kPath, kPredictive };

inline const char* rank_name(RankBy r) { return r == RankBy::kPath ? "path" : "predictive"; }

inline RankBy parse_rank(const std::string& s) {
    if (s == "path") return RankBy::kPath;
    if (s == "predictive") return RankBy::kPredictive;
    throw Error(ErrorCode::kInvalidArgument, "unknown ranking criterion '" + s + "'");
}

struct GridOptions {
    FilterOptions filter;
    RankBy rank_by = RankBy::kPath;
    QuantileFamily var_family = QuantileFamily::kModelT;
    unsigned threads = 0;  // 0: hardware concurrency
};

namespace detail {

template <typename Scalar>
bool lex_less(const GridRow<Scalar>& a, const GridRow<Scalar>& b) {
    if (a.delta != b.delta) return a.delta < b.delta;
    return std::lexicographical_compare(a.beta.data(), a.beta.data() + a.beta.size(), b.beta.data(),
                                        b.beta.data() + b.beta.size());
}

template <typename Scalar>
GridRow<Scalar> evaluate_candidate(const ModelSpec<Scalar>& tmpl, const Priors<Scalar>& priors,
                                   const Matrix<Scalar>& observations, Scalar delta, const Vector<Scalar>& beta,
                                   const Vector<Scalar>& weights, const GridOptions& options) {
    GridRow<Scalar> row;
    row.delta = delta;
    row.beta = beta;
    ModelSpec<Scalar> spec = tmpl;
    spec.state_discounts = Vector<Scalar>::Constant(spec.d, delta);
    spec.vol_discounts = beta;
    if (beta.size() != spec.p) throw Error(ErrorCode::kDimensionMismatch, "grid beta must have p entries");
    const Scalar tau = beta.mean();
    if (!(tau > Scalar(2) / Scalar(3))) {
        row.excluded = true;
        row.note = "tr(beta)/p <= 2/3";
        return row;
    }
    try {
        const auto traj = run(spec, priors, observations, options.filter);
        const auto report = msse_mae_me(traj);
        row.msse = report.msse;
        row.me = report.me;
        if (traj.branch == Branch::kConstantVolatility) {
            const auto& last = traj.steps.back();
            row.loglik = loglik_constant(traj, posterior_volatility_mean(last.sigma_post.scale,
                                                                         last.sigma_post.dof - Scalar(2 * spec.p)));
            row.note = "constant-volatility likelihood";
        } else {
            row.loglik = loglik_path(traj);
        }
        try {
            row.pred_loglik = loglik_predictive(traj);
        } catch (const Error&) {
        }
        VaRConfig<Scalar> var{weights, Scalar(95), options.var_family, Scalar(0)};
        row.var95 = var_at_end(traj, var);
        var.alpha = Scalar(99);
        row.var99 = var_at_end(traj, var);
    } catch (const Error& err) {
        if (err.code() == ErrorCode::kDimensionMismatch) throw;
        row.note = err.what();
    }
    return row;
}

}  // namespace detail

/// Evaluates every (delta, beta) candidate and ranks feasible rows by the chosen LogL (descending),
/// ties broken by lexicographic (delta, beta). Rows without a likelihood follow, then
/// excluded rows. Candidates run concurrently; the merge is deterministic.
template <typename Scalar>
std::vector<GridRow<Scalar>> grid_search(const ModelSpec<Scalar>& tmpl, const Priors<Scalar>& priors,
                                         const std::type_identity_t<Matrix<Scalar>>& observations,
                                         const std::type_identity_t<std::vector<Scalar>>& delta_grid,
                                         const std::type_identity_t<std::vector<Vector<Scalar>>>& beta_grid,
                                         const std::type_identity_t<Vector<Scalar>>& weights,
                                         const GridOptions& options = {}) {
    if (delta_grid.empty() || beta_grid.empty()) throw Error(ErrorCode::kEmptyGrid, "grid has no candidates");
    check_weights(weights);
    std::vector<std::pair<Scalar, Vector<Scalar>>> cands;
    for (Scalar delta : delta_grid) {
        for (const auto& beta : beta_grid) cands.emplace_back(delta, beta);
    }
    std::vector<GridRow<Scalar>> rows(cands.size());
    unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(cands.size()));
    std::vector<std::future<void>> jobs;
    for (unsigned w = 0; w < threads; ++w) {
        jobs.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t i = w; i < cands.size(); i += threads) {
                rows[i] = detail::evaluate_candidate(tmpl, priors, observations, cands[i].first, cands[i].second,
                                                     weights, options);
            }
        }));
    }
    for (auto& job : jobs) job.get();

    const bool predictive = options.rank_by == RankBy::kPredictive;
    auto key = [predictive](const GridRow<Scalar>& r) { return predictive ? r.pred_loglik : r.loglik; };
    std::stable_sort(rows.begin(), rows.end(), [&](const GridRow<Scalar>& a, const GridRow<Scalar>& b) {
        auto rank = [&](const GridRow<Scalar>& r) { return r.excluded ? 2 : (key(r) ? 0 : 1); };
        if (rank(a) != rank(b)) return rank(a) < rank(b);
        if (rank(a) == 0 && *key(a) != *key(b)) return *key(a) > *key(b);
        return detail::lex_less(a, b);
    });
    return rows;
}

}  // namespace mvsv
