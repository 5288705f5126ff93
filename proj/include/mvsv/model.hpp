#pragma once

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mvsv/linalg.hpp"

namespace mvsv {

/// A value that is constant in t except for explicit per-step overrides.
template <typename T>
class Sequence {
public:
    Sequence() = default;
    explicit Sequence(T base) : base_(std::move(base)) {}

    const T& at(int t) const {
        if (!overrides_.empty()) {
            if (auto it = overrides_.find(t); it != overrides_.end()) return it->second;
        }
        return base_;
    }
    void set(int t, T value) { overrides_[t] = std::move(value); }

    const T& base() const { return base_; }
    const std::map<int, T>& overrides() const { return overrides_; }

private:
    T base_;
    std::map<int, T> overrides_;
};

/// Dimensions, design/evolution sequences and the two sets of discount factors.
/// state_discounts (delta) inflate the state covariance; vol_discounts (beta)
/// discount the volatility precision element by element.
template <typename Scalar>
struct ModelSpec {
    int p = 1;
    int d = 1;
    Sequence<Vector<Scalar>> design;
    Sequence<Matrix<Scalar>> evolution;
    Vector<Scalar> state_discounts;
    Vector<Scalar> vol_discounts;

    Scalar mean_beta() const { return vol_discounts.sum() / Scalar(p); }
    bool constant_volatility() const { return (vol_discounts.array() == Scalar(1)).all(); }

    /// Local-level model: F = e_1 in R^d, G = I_d, common state discount.
    static ModelSpec local_level(int p, int d, Scalar delta, Vector<Scalar> beta) {
        ModelSpec spec;
        spec.p = p;
        spec.d = d;
        Vector<Scalar> f = Vector<Scalar>::Zero(d);
        f(0) = Scalar(1);
        spec.design = Sequence<Vector<Scalar>>(f);
        spec.evolution = Sequence<Matrix<Scalar>>(Matrix<Scalar>::Identity(d, d));
        spec.state_discounts = Vector<Scalar>::Constant(d, delta);
        spec.vol_discounts = std::move(beta);
        return spec;
    }
};

template <typename Scalar>
struct Priors {
    Matrix<Scalar> m0;  // d x p
    Matrix<Scalar> P0;  // d x d
    Matrix<Scalar> S0;  // p x p
    Scalar n0 = Scalar(0);  // only read in the constant-volatility branch
};

template <typename Scalar>
struct FilterState {
    int t = 0;
    Matrix<Scalar> m;
    Matrix<Scalar> P;
    Matrix<Scalar> S;
    Scalar n = Scalar(0);
};

enum class Branch { kTimeVarying, kConstantVolatility };

inline const char* branch_name(Branch b) {
    return b == Branch::kTimeVarying ? "time-varying" : "constant-volatility";
}

template <typename Scalar>
struct ValidationReport {
    Scalar n = Scalar(0);
    Scalar mean_beta = Scalar(0);
    Branch branch = Branch::kTimeVarying;
    bool forecast_moments = false;  // mean_beta > 2/3
    bool posterior_mean = false;    // mean_beta > 1/2
    std::vector<std::string> notes;
};

/// 1 / (1 - tr(beta)/p).
template <typename Derived>
typename Derived::Scalar compute_n(const Eigen::MatrixBase<Derived>& beta) {
    using Scalar = typename Derived::Scalar;
    if (beta.size() == 0) throw Error(ErrorCode::kDimensionMismatch, "empty discount vector");
    const Scalar tau = beta.sum() / Scalar(beta.size());
    if (!(tau < Scalar(1))) {
        throw Error(ErrorCode::kDegenerateDegrees,
                    "tr(beta)/p = 1; use the constant-volatility branch");
    }
    return Scalar(1) / (Scalar(1) - tau);
}

namespace detail {

template <typename Scalar>
void check_discounts(const Vector<Scalar>& v, const char* name) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!(v(i) > Scalar(0) && v(i) <= Scalar(1))) {
            throw Error(ErrorCode::kDiscountOutOfRange,
                        std::string(name) + "[" + std::to_string(i + 1) + "] = " +
                            std::to_string(static_cast<double>(v(i))) + " is outside (0, 1]");
        }
    }
}

template <typename Scalar>
void check_shape(const Matrix<Scalar>& m, Eigen::Index rows, Eigen::Index cols, const char* name) {
    if (m.rows() != rows || m.cols() != cols) {
        throw Error(ErrorCode::kDimensionMismatch,
                    std::string(name) + " must be " + std::to_string(rows) + "x" + std::to_string(cols) +
                        ", got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
}

}  // namespace detail

template <typename Scalar>
ValidationReport<Scalar> validate(const ModelSpec<Scalar>& spec, const Priors<Scalar>& priors) {
    if (spec.p < 1 || spec.d < 1) throw Error(ErrorCode::kInvalidArgument, "p and d must be at least 1");
    if (spec.vol_discounts.size() != spec.p) {
        throw Error(ErrorCode::kDimensionMismatch, "vol_discounts must have p entries");
    }
    if (spec.state_discounts.size() != spec.d) {
        throw Error(ErrorCode::kDimensionMismatch, "state_discounts must have d entries");
    }
    detail::check_discounts(spec.state_discounts, "delta");
    detail::check_discounts(spec.vol_discounts, "beta");

    auto check_f = [&](const Vector<Scalar>& f) {
        if (f.size() != spec.d) throw Error(ErrorCode::kDimensionMismatch, "design vector must have d entries");
    };
    auto check_g = [&](const Matrix<Scalar>& g) { detail::check_shape(g, spec.d, spec.d, "evolution matrix"); };
    check_f(spec.design.base());
    for (const auto& [t, f] : spec.design.overrides()) check_f(f);
    check_g(spec.evolution.base());
    for (const auto& [t, g] : spec.evolution.overrides()) check_g(g);

    detail::check_shape(priors.m0, spec.d, spec.p, "m0");
    detail::check_shape(priors.P0, spec.d, spec.d, "P0");
    detail::check_shape(priors.S0, spec.p, spec.p, "S0");
    if (!is_spd(priors.P0)) throw Error(ErrorCode::kNonPositiveDefinite, "P0");
    if (!is_spd(priors.S0)) throw Error(ErrorCode::kNonPositiveDefinite, "S0");

    ValidationReport<Scalar> report;
    report.mean_beta = spec.mean_beta();
    if (spec.constant_volatility()) {
        report.branch = Branch::kConstantVolatility;
        report.n = priors.n0;
        report.notes.push_back("all beta_i = 1: constant volatility, degrees of freedom n0 + t");
    } else {
        report.branch = Branch::kTimeVarying;
        report.n = compute_n(spec.vol_discounts);
    }
    report.forecast_moments = report.mean_beta > Scalar(2) / Scalar(3);
    report.posterior_mean = report.mean_beta > Scalar(1) / Scalar(2);
    if (!report.posterior_mean) {
        report.notes.push_back("mean_beta <= 1/2: posterior mean of Sigma_t unavailable");
    }
    if (!report.forecast_moments) {
        report.notes.push_back("mean_beta <= 2/3: forecast mean of Sigma_t and standardized errors unavailable");
    }
    return report;
}

/// Omega_t = Delta^{1/2} G_t P_{t-1} G_t' Delta^{1/2}, Delta = diag((1 - delta_i)/delta_i).
template <typename Scalar>
Matrix<Scalar> evolution_covariance(const ModelSpec<Scalar>& spec, const Matrix<Scalar>& p_prev, int t) {
    const Matrix<Scalar>& g = spec.evolution.at(t);
    const Vector<Scalar> delta_sqrt =
        ((Scalar(1) - spec.state_discounts.array()) / spec.state_discounts.array()).sqrt().matrix();
    return symmetrize(diag_sandwich(Matrix<Scalar>(g * p_prev * g.transpose()), delta_sqrt));
}

template <typename Scalar>
FilterState<Scalar> initial_state(const Priors<Scalar>& priors, Scalar n) {
    return FilterState<Scalar>{0, priors.m0, symmetrize(priors.P0), symmetrize(priors.S0), n};
}

}  // namespace mvsv
