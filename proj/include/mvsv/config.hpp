#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mvsv/diagnostics.hpp"

namespace mvsv {

/// Key-value run configuration. One `key = value` per line, `#` starts a comment.
/// Lists are comma separated, matrices row-major, beta_grid candidates separated by ';'.
///
///   p, d                     dimensions (required)
///   design                   F (d entries); design[t] overrides F_t for one t
///   evolution                G (d x d, default I); evolution[t] overrides G_t
///   state_discounts          delta (d entries, or one value for all)
///   vol_discounts            beta (p entries)
///   m0, P0, S0, n0           priors (m0 d x p default 0, P0 d x d, S0 p x p, n0 default 0)
///   delta_grid, beta_grid    grid-search candidates
///   weights                  portfolio weights (default 1/p each)
///   seed, horizon            simulation seed (default 1) and length (default 333)
///   names                    series names (default s1..sp)
///   label                    model label used by `compare`
///   sqrt, var_family, rank   spectral|cholesky, t|normal, path|predictive
struct RunConfig {
    ModelSpec<double> spec;
    Priors<double> priors;
    std::vector<double> delta_grid;
    std::vector<VectorXd> beta_grid;
    VectorXd weights;
    std::uint64_t seed = 1;
    int horizon = 333;
    std::vector<std::string> names;
    std::string label;
    SqrtConvention sqrt_convention = SqrtConvention::kSpectral;
    QuantileFamily var_family = QuantileFamily::kModelT;
    RankBy rank_by = RankBy::kPath;
};

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

}  // namespace mvsv
