#pragma once

// Independent reference implementations used by the tests. Nothing here calls the
// library code under test.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// sup |F_n - F| for a sample against a continuous CDF.
inline double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}

/// Scalar filter (p = d = 1, F = G = 1) written directly from the recursions.
struct ScalarStep {
    double f, Q, e, m, P, S, r;
};

inline std::vector<ScalarStep> scalar_filter(const std::vector<double>& y, double m0, double p0, double s0,
                                             double delta, double beta) {
    std::vector<ScalarStep> out;
    double m = m0;
    double p = p0;
    double s = s0;
    for (double yt : y) {
        const double r_state = p / delta;  // P + (1 - delta)/delta * P
        const double q = r_state + 1.0;
        const double f = m;
        const double e = yt - f;
        m = m + r_state / q * e;
        p = r_state - r_state * r_state / q;
        s = beta * s + e * e / q;
        out.push_back({f, q, e, m, p, s, yt - m});
    }
    return out;
}

/// Path log-likelihood for p = 1 with L_t = 1 - beta * phi_t / phi_{t-1}.
inline double scalar_path_loglik(const std::vector<double>& e, const std::vector<double>& q,
                              const std::vector<double>& sigma, double beta) {
    const double n_steps = static_cast<double>(e.size());
    const double m = beta / (1.0 - beta);
    const double c = n_steps * (m - 1.0) / 2.0 * std::log(beta) + n_steps * std::lgamma((m + 1.0) / 2.0) -
                     n_steps / 2.0 * std::log(2.0) - n_steps * std::log(std::numbers::pi) -
                     n_steps * std::lgamma(m / 2.0);
    double sum = 0.0;
    for (std::size_t t = 0; t < e.size(); ++t) {
        const double prev = sigma[t];
        const double cur = sigma[t + 1];
        const double ell = 1.0 - beta * prev / cur;
        sum += std::log(q[t]) + (1.0 - m) * std::log(prev) + e[t] * e[t] / (q[t] * cur) + std::log(ell) +
               (m - 3.0) * std::log(cur);
    }
    return c - sum / 2.0;
}

/// Inverse-gamma log density with shape a and scale b.
inline double inverse_gamma_logpdf(double x, double a, double b) {
    return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(x) - b / x;
}

/// Location-scale Student t log density.
inline double student_t_logpdf(double x, double nu, double loc, double scale) {
    const double z = (x - loc) / scale;
    return std::lgamma((nu + 1.0) / 2.0) - std::lgamma(nu / 2.0) - 0.5 * std::log(nu * std::numbers::pi) -
           std::log(scale) - (nu + 1.0) / 2.0 * std::log1p(z * z / nu);
}

/// 2 x 2 rotation.
inline Eigen::Matrix2d rotation(double radians) {
    Eigen::Matrix2d r;
    r << std::cos(radians), -std::sin(radians), std::sin(radians), std::cos(radians);
    return r;
}

}  // namespace oracle
