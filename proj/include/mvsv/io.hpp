#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mvsv/diagnostics.hpp"
#include "mvsv/simulate.hpp"

namespace mvsv {

struct PriceTable {
    std::vector<std::string> dates;  // ISO yyyy-mm-dd, strictly increasing
    std::vector<std::string> names;
    MatrixXd prices;  // N x p, strictly positive
};

struct ReturnTable {
    std::vector<std::string> dates;  // dates[t] labels the return ending on that day
    std::vector<std::string> names;
    MatrixXd returns;  // (N - 1) x p
};

/// Parses `date,<name1>,...,<namep>`. Rows and columns in errors are 1-based, the header
/// being row 1.
PriceTable parse_prices(std::istream& in);
PriceTable ingest(const std::string& path);

/// returns(t) = log prices(t + 1) - log prices(t).
ReturnTable to_returns(const PriceTable& prices);

/// Writes a price table with round-trip precision.
void write_prices(std::ostream& out, const PriceTable& prices);

/// Price table whose compound returns are the simulated observations: the first row is
/// 100 on `start_date`, one row per calendar day after it.
PriceTable prices_from_path(const SimPath<double>& path, const std::vector<std::string>& names,
                            const std::string& start_date = "2000-01-03");

/// t, f_1..f_p, e_1..e_p, u_1..u_p, Q, vech posterior mean, vech forecast mean.
/// Row t = 0 carries only the prior posterior mean; undefined cells are empty.
std::vector<std::string> trajectory_header(int p);
void write_trajectory(std::ostream& out, const Trajectory<double>& traj);

/// Steps read back from a trajectory CSV together with the posterior-mean path Sigma_0..Sigma_N.
struct StoredTrajectory {
    Trajectory<double> traj;
    std::vector<MatrixXd> posterior_means;
    bool complete_path = false;  // every posterior mean present
};
StoredTrajectory read_trajectory(std::istream& in);

/// delta, beta_1..beta_p, msse_1..msse_p, me_1..me_p, loglik, var95, var99, pred_loglik.
void write_grid(std::ostream& out, const std::vector<GridRow<double>>& rows, int p);

/// t, posterior-mean variances sigma_ii, forecast-mean variances for plotting.
void write_volatility_series(std::ostream& out, const Trajectory<double>& traj);
/// t, forecast-mean correlations rho_ij for i < j.
void write_correlation_series(std::ostream& out, const Trajectory<double>& traj);

void write_lbf(std::ostream& out, const LbfSeries<double>& series);

/// Round-trip formatting of a double.
std::string format_number(double x);

}  // namespace mvsv
