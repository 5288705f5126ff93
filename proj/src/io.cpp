#include "mvsv/io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

namespace mvsv {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, sep)) out.push_back(cell);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string where(std::size_t row, std::size_t col) {
    return "row " + std::to_string(row) + ", column " + std::to_string(col);
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

std::chrono::year_month_day parse_date(const std::string& s, std::size_t row) {
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    const bool shaped = s.size() == 10 && s[4] == '-' && s[7] == '-';
    if (shaped) {
        const auto ry = std::from_chars(s.data(), s.data() + 4, y);
        const auto rm = std::from_chars(s.data() + 5, s.data() + 7, m);
        const auto rd = std::from_chars(s.data() + 8, s.data() + 10, d);
        const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
        if (ry.ptr == s.data() + 4 && rm.ptr == s.data() + 7 && rd.ptr == s.data() + 10 && ymd.ok()) return ymd;
    }
    throw Error(ErrorCode::kParseError, where(row, 1) + ": '" + s + "' is not an ISO-8601 date");
}

std::string format_date(std::chrono::year_month_day ymd) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
    return buf;
}

void write_row(std::ostream& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out << ',';
        out << cells[i];
    }
    out << '\n';
}

void append_vech(std::vector<std::string>& cells, const MatrixXd& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = j; i < m.rows(); ++i) cells.push_back(format_number(m(i, j)));
    }
}

void append_blank(std::vector<std::string>& cells, std::size_t count) { cells.insert(cells.end(), count, ""); }

}  // namespace

std::string format_number(double x) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

PriceTable parse_prices(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::kParseError, "row 1: missing header");
    const auto header = split(trim(line), ',');
    if (header.size() < 2 || trim(header[0]) != "date") {
        throw Error(ErrorCode::kParseError, "row 1: header must be 'date,<name1>,...'");
    }
    PriceTable table;
    for (std::size_t j = 1; j < header.size(); ++j) table.names.push_back(trim(header[j]));
    const std::size_t p = table.names.size();

    std::vector<std::vector<double>> rows;
    std::size_t row = 1;
    std::string prev;
    while (std::getline(in, line)) {
        ++row;
        line = trim(line);
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != p + 1) {
            const std::size_t col = cells.size() < p + 1 ? cells.size() + 1 : p + 2;
            throw Error(ErrorCode::kParseError, where(row, col) + ": expected " + std::to_string(p + 1) +
                                                    " cells, found " + std::to_string(cells.size()));
        }
        const std::string date = trim(cells[0]);
        parse_date(date, row);
        if (!prev.empty() && !(prev < date)) {
            throw Error(ErrorCode::kNonMonotoneDates,
                        "row " + std::to_string(row) + ": date " + date + " does not follow " + prev);
        }
        prev = date;
        std::vector<double> values(p);
        for (std::size_t j = 0; j < p; ++j) {
            const std::string cell = trim(cells[j + 1]);
            if (!parse_double(cell, values[j])) {
                throw Error(ErrorCode::kParseError, where(row, j + 2) + ": '" + cell + "' is not a number");
            }
            if (!(values[j] > 0.0)) {
                throw Error(ErrorCode::kNonPositivePrice, where(row, j + 2) + ": price " + cell + " is not positive");
            }
        }
        table.dates.push_back(date);
        rows.push_back(std::move(values));
    }
    table.prices.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < p; ++j) table.prices(i, j) = rows[i][j];
    }
    return table;
}

PriceTable ingest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
    return parse_prices(in);
}

ReturnTable to_returns(const PriceTable& prices) {
    const auto n = prices.prices.rows();
    if (n < 2) throw Error(ErrorCode::kTooFewRows, "returns need at least two price rows");
    ReturnTable out;
    out.names = prices.names;
    out.dates.assign(prices.dates.begin() + 1, prices.dates.end());
    const MatrixXd logs = prices.prices.array().log().matrix();
    out.returns = logs.bottomRows(n - 1) - logs.topRows(n - 1);
    return out;
}

void write_prices(std::ostream& out, const PriceTable& prices) {
    std::vector<std::string> cells{"date"};
    cells.insert(cells.end(), prices.names.begin(), prices.names.end());
    write_row(out, cells);
    for (Eigen::Index i = 0; i < prices.prices.rows(); ++i) {
        cells = {prices.dates[static_cast<std::size_t>(i)]};
        for (Eigen::Index j = 0; j < prices.prices.cols(); ++j) cells.push_back(format_number(prices.prices(i, j)));
        write_row(out, cells);
    }
}

PriceTable prices_from_path(const SimPath<double>& path, const std::vector<std::string>& names,
                            const std::string& start_date) {
    const auto n = path.observations.rows();
    const auto p = path.observations.cols();
    if (static_cast<Eigen::Index>(names.size()) != p) {
        throw Error(ErrorCode::kDimensionMismatch, "need one series name per column");
    }
    PriceTable table;
    table.names = names;
    table.prices.resize(n + 1, p);
    table.prices.row(0).setConstant(100.0);
    Eigen::RowVectorXd level = Eigen::RowVectorXd::Zero(p);
    for (Eigen::Index t = 0; t < n; ++t) {
        level += path.observations.row(t);
        table.prices.row(t + 1) = 100.0 * level.array().exp();
        if (!table.prices.row(t + 1).allFinite() || (table.prices.row(t + 1).array() <= 0.0).any()) {
            throw Error(ErrorCode::kNonPositivePrice, "simulated price at row " + std::to_string(t + 2) +
                                                          " is zero or not finite; the volatility path diverged");
        }
    }
    auto day = std::chrono::sys_days{parse_date(start_date, 1)};
    for (Eigen::Index t = 0; t <= n; ++t) {
        table.dates.push_back(format_date(std::chrono::year_month_day{day}));
        day += std::chrono::days{1};
    }
    return table;
}

std::vector<std::string> trajectory_header(int p) {
    std::vector<std::string> h{"t"};
    for (const char* prefix : {"f", "e", "u"}) {
        for (int i = 1; i <= p; ++i) h.push_back(prefix + std::to_string(i));
    }
    h.emplace_back("Q");
    for (const char* prefix : {"post", "fcst"}) {
        for (int j = 1; j <= p; ++j) {
            for (int i = j; i <= p; ++i) h.push_back(std::string(prefix) + "_" + std::to_string(i) + "_" + std::to_string(j));
        }
    }
    return h;
}

void write_trajectory(std::ostream& out, const Trajectory<double>& traj) {
    const int p = traj.p();
    const std::size_t vech = static_cast<std::size_t>(p * (p + 1) / 2);
    write_row(out, trajectory_header(p));

    std::vector<std::string> cells{"0"};
    append_blank(cells, static_cast<std::size_t>(3 * p + 1));
    if (traj.initial.n > 2.0) {
        append_vech(cells, posterior_volatility_mean(traj.initial.S, traj.initial.n));
    } else {
        append_blank(cells, vech);
    }
    append_blank(cells, vech);
    write_row(out, cells);

    for (const auto& step : traj.steps) {
        cells = {std::to_string(step.t)};
        for (int i = 0; i < p; ++i) cells.push_back(format_number(step.f(i)));
        for (int i = 0; i < p; ++i) cells.push_back(format_number(step.e(i)));
        if (step.u) {
            for (int i = 0; i < p; ++i) cells.push_back(format_number((*step.u)(i)));
        } else {
            append_blank(cells, static_cast<std::size_t>(p));
        }
        cells.push_back(format_number(step.Q));
        const double n = step.sigma_post.dof - 2.0 * p;
        if (n > 2.0) {
            append_vech(cells, posterior_volatility_mean(step.sigma_post.scale, n));
        } else {
            append_blank(cells, vech);
        }
        if (step.forecast_dof > 2.0) {
            append_vech(cells, forecast_volatility_mean(step.sigma_prior, step.forecast_dof));
        } else {
            append_blank(cells, vech);
        }
        write_row(out, cells);
    }
}

StoredTrajectory read_trajectory(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::kParseError, "row 1: missing header");
    const auto header = split(trim(line), ',');
    const auto width = header.size();
    // width = 1 + 3p + 1 + p(p + 1)
    int p = 0;
    while (static_cast<std::size_t>(2 + 3 * p + p * (p + 1)) < width) ++p;
    if (p == 0 || static_cast<std::size_t>(2 + 3 * p + p * (p + 1)) != width || header != trajectory_header(p)) {
        throw Error(ErrorCode::kParseError, "row 1: not a trajectory header");
    }
    const std::size_t vech = static_cast<std::size_t>(p * (p + 1) / 2);
    auto unvech = [p](const std::vector<double>& v) {
        MatrixXd m(p, p);
        std::size_t k = 0;
        for (int j = 0; j < p; ++j) {
            for (int i = j; i < p; ++i) m(i, j) = m(j, i) = v[k++];
        }
        return m;
    };

    StoredTrajectory out;
    out.traj.initial.S = MatrixXd::Zero(p, p);
    out.complete_path = true;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        line = trim(line);
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != width) {
            throw Error(ErrorCode::kParseError, "row " + std::to_string(row) + ": expected " + std::to_string(width) +
                                                    " cells, found " + std::to_string(cells.size()));
        }
        std::vector<std::optional<double>> v(width);
        for (std::size_t j = 0; j < width; ++j) {
            const std::string c = trim(cells[j]);
            if (c.empty()) continue;
            double x = 0.0;
            if (!parse_double(c, x)) throw Error(ErrorCode::kParseError, where(row, j + 1) + ": '" + c + "' is not a number");
            v[j] = x;
        }
        auto block = [&](std::size_t first, std::size_t count) -> std::optional<std::vector<double>> {
            std::vector<double> b;
            for (std::size_t j = first; j < first + count; ++j) {
                if (!v[j]) return std::nullopt;
                b.push_back(*v[j]);
            }
            return b;
        };
        if (!v[0]) throw Error(ErrorCode::kParseError, where(row, 1) + ": missing t");
        const int t = static_cast<int>(*v[0]);
        const std::size_t post_at = static_cast<std::size_t>(2 + 3 * p);
        const auto post = block(post_at, vech);
        if (post) {
            out.posterior_means.push_back(unvech(*post));
        } else {
            out.complete_path = false;
            out.posterior_means.push_back(MatrixXd::Zero(p, p));
        }
        if (t == 0) continue;

        StepResult<double> step;
        step.t = t;
        const auto f = block(1, static_cast<std::size_t>(p));
        const auto e = block(static_cast<std::size_t>(1 + p), static_cast<std::size_t>(p));
        const auto q = block(static_cast<std::size_t>(1 + 3 * p), 1);
        if (!f || !e || !q) throw Error(ErrorCode::kParseError, "row " + std::to_string(row) + ": missing f, e or Q");
        step.f = Eigen::Map<const VectorXd>(f->data(), p);
        step.e = Eigen::Map<const VectorXd>(e->data(), p);
        step.Q = (*q)[0];
        step.r = step.e / step.Q;
        if (const auto u = block(static_cast<std::size_t>(1 + 2 * p), static_cast<std::size_t>(p))) {
            step.u = Eigen::Map<const VectorXd>(u->data(), p);
        }
        out.traj.steps.push_back(std::move(step));
    }
    if (out.posterior_means.size() != out.traj.steps.size() + 1) {
        throw Error(ErrorCode::kParseError, "trajectory must start with the t = 0 row");
    }
    return out;
}

void write_grid(std::ostream& out, const std::vector<GridRow<double>>& rows, int p) {
    std::vector<std::string> cells{"delta"};
    for (const char* prefix : {"beta_", "msse_", "me_"}) {
        for (int i = 1; i <= p; ++i) cells.push_back(prefix + std::to_string(i));
    }
    cells.insert(cells.end(), {"loglik", "var95", "var99", "pred_loglik"});
    write_row(out, cells);
    auto opt = [](const std::optional<double>& x) { return x ? format_number(*x) : std::string(); };
    for (const auto& r : rows) {
        cells = {format_number(r.delta)};
        for (int i = 0; i < p; ++i) cells.push_back(format_number(r.beta(i)));
        for (const VectorXd* v : {&r.msse, &r.me}) {
            for (int i = 0; i < p; ++i) cells.push_back(v->size() == p ? format_number((*v)(i)) : std::string());
        }
        cells.push_back(opt(r.loglik));
        cells.push_back(opt(r.var95));
        cells.push_back(opt(r.var99));
        cells.push_back(opt(r.pred_loglik));
        write_row(out, cells);
    }
}

void write_volatility_series(std::ostream& out, const Trajectory<double>& traj) {
    const int p = traj.p();
    std::vector<std::string> cells{"t"};
    for (int i = 1; i <= p; ++i) cells.push_back("post_var_" + std::to_string(i));
    for (int i = 1; i <= p; ++i) cells.push_back("fcst_var_" + std::to_string(i));
    write_row(out, cells);
    for (const auto& step : traj.steps) {
        cells = {std::to_string(step.t)};
        const double n = step.sigma_post.dof - 2.0 * p;
        for (int i = 0; i < p; ++i) cells.push_back(n > 2.0 ? format_number(step.sigma_post.scale(i, i) / (n - 2.0)) : "");
        const double k = step.forecast_dof;
        for (int i = 0; i < p; ++i) cells.push_back(k > 2.0 ? format_number(step.sigma_prior.scale(i, i) / (k - 2.0)) : "");
        write_row(out, cells);
    }
}

void write_correlation_series(std::ostream& out, const Trajectory<double>& traj) {
    const int p = traj.p();
    std::vector<std::string> cells{"t"};
    for (int i = 1; i <= p; ++i) {
        for (int j = i + 1; j <= p; ++j) cells.push_back("rho_" + std::to_string(i) + "_" + std::to_string(j));
    }
    write_row(out, cells);
    for (const auto& step : traj.steps) {
        cells = {std::to_string(step.t)};
        const MatrixXd& s = step.sigma_prior.scale;
        for (int i = 0; i < p; ++i) {
            for (int j = i + 1; j < p; ++j) cells.push_back(format_number(s(i, j) / std::sqrt(s(i, i) * s(j, j))));
        }
        write_row(out, cells);
    }
}

void write_lbf(std::ostream& out, const LbfSeries<double>& series) {
    write_row(out, {"t", "lbf", "cumulative"});
    double cum = 0.0;
    for (std::size_t i = 0; i < series.values.size(); ++i) {
        cum += series.values[i];
        write_row(out, {std::to_string(i + 1), format_number(series.values[i]), format_number(cum)});
    }
}

}  // namespace mvsv
