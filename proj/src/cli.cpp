#include "mvsv/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mvsv/config.hpp"
#include "mvsv/io.hpp"

namespace mvsv {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Flags {
    std::string config;
    std::string config2;
    std::string data;
    std::string trajectory;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    std::string sqrt;
    std::string var_family;
    std::string rank;
    unsigned threads = 0;
};

RunConfig load(const std::string& path, const Flags& flags) {
    RunConfig cfg = load_config(path);
    if (flags.seed) cfg.seed = *flags.seed;
    if (!flags.sqrt.empty()) cfg.sqrt_convention = parse_sqrt(flags.sqrt);
    if (!flags.var_family.empty()) cfg.var_family = parse_family(flags.var_family);
    if (!flags.rank.empty()) cfg.rank_by = parse_rank(flags.rank);
    return cfg;
}

MatrixXd load_returns(const std::string& path, const RunConfig& cfg) {
    const ReturnTable returns = to_returns(ingest(path));
    if (returns.returns.cols() != cfg.spec.p) {
        throw Error(ErrorCode::kDimensionMismatch, "data has " + std::to_string(returns.returns.cols()) +
                                                       " series, config has p = " + std::to_string(cfg.spec.p));
    }
    return returns.returns;
}

std::ofstream open_out(const Flags& flags, const std::string& name) {
    std::error_code ec;
    fs::create_directories(flags.out, ec);
    const fs::path path = fs::path(flags.out) / name;
    std::ofstream file(path);
    if (!file) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
    return file;
}

json to_json(const VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json opt_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

/// Likelihood of a fitted trajectory: the path likelihood at the posterior means in the
/// time-varying branch, the constant-volatility expression at S_N/(n_N - 2) otherwise.
std::pair<std::optional<double>, std::string> fitted_loglik(const Trajectory<double>& traj) {
    try {
        if (traj.branch == Branch::kConstantVolatility) {
            return {loglik_constant(traj, posterior_volatility_mean(traj.final.S, traj.final.n)), "constant"};
        }
        return {loglik_path(traj), "path"};
    } catch (const Error& e) {
        return {std::nullopt, e.what()};
    }
}

json report_json(const Trajectory<double>& traj, const RunConfig& cfg) {
    const auto report = msse_mae_me(traj);
    const auto [loglik, kind] = fitted_loglik(traj);
    json j;
    j["branch"] = branch_name(traj.branch);
    j["sqrt_convention"] = sqrt_name(traj.sqrt_convention);
    j["n_obs"] = report.n_obs;
    j["n_standardized"] = report.n_standardized;
    j["beta"] = to_json(traj.beta);
    j["msse"] = to_json(report.msse);
    j["mae"] = to_json(report.mae);
    j["me"] = to_json(report.me);
    j["loglik"] = opt_json(loglik);
    j["loglik_kind"] = kind;
    std::optional<double> pred;
    try {
        pred = loglik_predictive(traj);
    } catch (const Error&) {
    }
    j["pred_loglik"] = opt_json(pred);
    VaRConfig<double> var{cfg.weights, 95.0, cfg.var_family, 0.0};
    try {
        j["var95"] = var_at_end(traj, var);
        var.alpha = 99.0;
        j["var99"] = var_at_end(traj, var);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::kInvalidWeights) throw;
        j["var95"] = nullptr;
        j["var99"] = nullptr;
    }
    j["var_family"] = family_name(cfg.var_family);
    return j;
}

void print_vector(std::ostream& out, const char* name, const VectorXd& v) {
    out << std::left << std::setw(8) << name;
    for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << format_number(v(i));
    out << '\n';
}

int cmd_fit(const Flags& flags, std::ostream& out) {
    const RunConfig cfg = load(flags.config, flags);
    const MatrixXd y = load_returns(flags.data, cfg);
    const auto traj = run(cfg.spec, cfg.priors, y, FilterOptions{cfg.sqrt_convention, true});
    {
        auto f = open_out(flags, "trajectory.csv");
        write_trajectory(f, traj);
    }
    {
        auto f = open_out(flags, "volatility.csv");
        write_volatility_series(f, traj);
    }
    {
        auto f = open_out(flags, "correlations.csv");
        write_correlation_series(f, traj);
    }
    const json j = report_json(traj, cfg);
    {
        auto f = open_out(flags, "report.json");
        f << j.dump(2) << '\n';
    }
    const auto report = msse_mae_me(traj);
    out << "steps   " << traj.size() << " (" << branch_name(traj.branch) << ", " << sqrt_name(traj.sqrt_convention)
        << ")\n";
    print_vector(out, "MSSE", report.msse);
    print_vector(out, "MAE", report.mae);
    print_vector(out, "ME", report.me);
    if (!j["loglik"].is_null()) out << "LogL    " << format_number(j["loglik"].get<double>()) << '\n';
    return 0;
}

int cmd_grid(const Flags& flags, std::ostream& out) {
    const RunConfig cfg = load(flags.config, flags);
    const MatrixXd y = load_returns(flags.data, cfg);
    const std::vector<double> deltas =
        cfg.delta_grid.empty() ? std::vector<double>{cfg.spec.state_discounts(0)} : cfg.delta_grid;
    const std::vector<VectorXd> betas = cfg.beta_grid.empty() ? std::vector<VectorXd>{cfg.spec.vol_discounts}
                                                              : cfg.beta_grid;
    GridOptions options;
    options.filter.sqrt_convention = cfg.sqrt_convention;
    options.var_family = cfg.var_family;
    options.rank_by = cfg.rank_by;
    options.threads = flags.threads;
    const auto rows = grid_search(cfg.spec, cfg.priors, y, deltas, betas, cfg.weights, options);
    {
        auto f = open_out(flags, "grid.csv");
        write_grid(f, rows, cfg.spec.p);
    }
    out << "candidates " << rows.size() << ", ranked by " << rank_name(cfg.rank_by) << '\n';
    const auto& best = rows.front();
    out << "best    delta " << format_number(best.delta);
    print_vector(out, " beta", best.beta);
    return 0;
}

int cmd_simulate(const Flags& flags, std::ostream& out) {
    const RunConfig cfg = load(flags.config, flags);
    const auto path = simulate(cfg.spec, cfg.priors, cfg.horizon, cfg.seed);
    auto f = open_out(flags, "simulated.csv");
    write_prices(f, prices_from_path(path, cfg.names));
    out << "simulated " << cfg.horizon << " x " << cfg.spec.p << " returns, seed " << cfg.seed << '\n';
    return 0;
}

int cmd_var(const Flags& flags, std::ostream& out) {
    const RunConfig cfg = load(flags.config, flags);
    const MatrixXd y = load_returns(flags.data, cfg);
    const auto traj = run(cfg.spec, cfg.priors, y, FilterOptions{cfg.sqrt_convention, true});
    VaRConfig<double> var{cfg.weights, 95.0, cfg.var_family, 0.0};
    const double v95 = var_at_end(traj, var);
    var.alpha = 99.0;
    const double v99 = var_at_end(traj, var);
    json j;
    j["var95"] = v95;
    j["var99"] = v99;
    j["weights"] = to_json(cfg.weights);
    j["var_family"] = family_name(cfg.var_family);
    j["t"] = traj.size();
    {
        auto f = open_out(flags, "var.json");
        f << j.dump(2) << '\n';
    }
    out << "VaR(N,95) " << format_number(v95) << "\nVaR(N,99) " << format_number(v99) << '\n';
    return 0;
}

int cmd_compare(const Flags& flags, std::ostream& out) {
    const RunConfig c1 = load(flags.config, flags);
    const RunConfig c2 = load(flags.config2, flags);
    if (c1.spec.p != c2.spec.p) throw Error(ErrorCode::kDimensionMismatch, "compared models differ in p");
    const MatrixXd y = load_returns(flags.data, c1);
    const auto t1 = run(c1.spec, c1.priors, y, FilterOptions{c1.sqrt_convention, true});
    const auto t2 = run(c2.spec, c2.priors, y, FilterOptions{c2.sqrt_convention, true});
    const auto series = lbf(t1, t2, {c1.label, c2.label});
    {
        auto f = open_out(flags, "lbf.csv");
        write_lbf(f, series);
    }
    const double total = series.cumulative();
    out << "cumulative LBF " << format_number(total) << " (" << (total > 0 ? c1.label : c2.label) << " favoured)\n";
    return 0;
}

int cmd_diagnose(const Flags& flags, std::ostream& out) {
    std::ifstream in(flags.trajectory);
    if (!in) throw Error(ErrorCode::kIo, "cannot open '" + flags.trajectory + "'");
    StoredTrajectory stored = read_trajectory(in);
    auto& traj = stored.traj;
    if (traj.steps.empty()) throw Error(ErrorCode::kEmptyData, "trajectory has no steps");
    const int p = static_cast<int>(traj.steps.front().e.size());
    traj.initial.S = MatrixXd::Zero(p, p);
    const auto report = msse_mae_me(traj);
    json j;
    j["n_obs"] = report.n_obs;
    j["n_standardized"] = report.n_standardized;
    j["msse"] = to_json(report.msse);
    j["mae"] = to_json(report.mae);
    j["me"] = to_json(report.me);
    j["loglik"] = nullptr;
    if (!flags.config.empty()) {
        const RunConfig cfg = load(flags.config, flags);
        if (cfg.spec.p != p) throw Error(ErrorCode::kDimensionMismatch, "config p differs from trajectory");
        if (!cfg.spec.constant_volatility() && stored.complete_path) {
            j["loglik"] = loglik_path(traj, stored.posterior_means, cfg.spec.vol_discounts);
        }
    }
    {
        auto f = open_out(flags, "diagnostics.json");
        f << j.dump(2) << '\n';
    }
    print_vector(out, "MSSE", report.msse);
    print_vector(out, "MAE", report.mae);
    print_vector(out, "ME", report.me);
    if (!j["loglik"].is_null()) out << "LogL    " << format_number(j["loglik"].get<double>()) << '\n';
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sequential Bayesian estimation of multivariate stochastic volatility", "mvsv"};
    app.require_subcommand(1);
    Flags flags;
    auto common = [&](CLI::App* sub, bool data) {
        sub->add_option("--config", flags.config, "run configuration file")->required();
        if (data) sub->add_option("--data", flags.data, "price CSV (date,<names>)")->required();
        sub->add_option("--out", flags.out, "output directory");
        sub->add_option("--seed", flags.seed, "override the configured seed");
        sub->add_option("--sqrt", flags.sqrt, "spectral|cholesky")->check(CLI::IsMember({"spectral", "cholesky"}));
        sub->add_option("--var-family", flags.var_family, "t|normal")->check(CLI::IsMember({"t", "normal"}));
    };
    auto* fit = app.add_subcommand("fit", "filter the data; write trajectory, report and volatility series");
    common(fit, true);
    auto* grid = app.add_subcommand("grid", "rank (delta, beta) candidates by log-likelihood");
    common(grid, true);
    grid->add_option("--rank", flags.rank, "path|predictive")->check(CLI::IsMember({"path", "predictive"}));
    grid->add_option("--threads", flags.threads, "worker threads (0: all cores)");
    auto* sim = app.add_subcommand("simulate", "simulate a price CSV from the configured model");
    common(sim, false);
    auto* var = app.add_subcommand("var", "portfolio VaR(N, 95) and VaR(N, 99)");
    common(var, true);
    auto* cmp = app.add_subcommand("compare", "log Bayes factors of two configurations");
    common(cmp, true);
    cmp->add_option("--config2", flags.config2, "configuration of the second model")->required();
    auto* diag = app.add_subcommand("diagnose", "recompute diagnostics from a stored trajectory");
    diag->add_option("--trajectory", flags.trajectory, "trajectory CSV written by fit")->required();
    diag->add_option("--config", flags.config, "configuration (enables the log-likelihood)");
    diag->add_option("--out", flags.out, "output directory");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return 0;
        }
        err << "InvalidArgument: " << e.what() << '\n';
        return static_cast<int>(ErrorCode::kInvalidArgument);
    }

    try {
        if (fit->parsed()) return cmd_fit(flags, out);
        if (grid->parsed()) return cmd_grid(flags, out);
        if (sim->parsed()) return cmd_simulate(flags, out);
        if (var->parsed()) return cmd_var(flags, out);
        if (cmp->parsed()) return cmd_compare(flags, out);
        return cmd_diagnose(flags, out);
    } catch (const Error& e) {
        err << e.what() << '\n';
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace mvsv
