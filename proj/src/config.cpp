#include "mvsv/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace mvsv {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct Entry {
    std::string value;
    int line = 0;
};

class Reader {
public:
    explicit Reader(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    const Entry& entry(const std::string& key) const {
        const auto it = entries_.find(key);
        if (it == entries_.end()) throw Error(ErrorCode::kParseError, "config: missing key '" + key + "'");
        return it->second;
    }

    std::vector<double> list(const std::string& key) const {
        const Entry& e = entry(key);
        std::vector<double> out;
        std::istringstream ss(e.value);
        std::string cell;
        while (std::getline(ss, cell, ',')) out.push_back(number(trim(cell), key, e.line));
        if (out.empty()) fail(key, e.line, "empty list");
        return out;
    }

    double scalar(const std::string& key) const {
        const auto v = list(key);
        if (v.size() != 1) fail(key, entry(key).line, "expected one value");
        return v[0];
    }

    int integer(const std::string& key) const {
        const double x = scalar(key);
        if (x != std::floor(x) || x < 1 || x > 1e6) fail(key, entry(key).line, "expected a positive integer");
        return static_cast<int>(x);
    }

    VectorXd vector(const std::string& key, Eigen::Index size) const {
        const auto v = list(key);
        if (static_cast<Eigen::Index>(v.size()) != size) {
            throw Error(ErrorCode::kDimensionMismatch, "config line " + std::to_string(entry(key).line) + ": '" +
                                                           key + "' needs " + std::to_string(size) + " entries");
        }
        return Eigen::Map<const VectorXd>(v.data(), size);
    }

    MatrixXd matrix(const std::string& key, Eigen::Index rows, Eigen::Index cols) const {
        const VectorXd v = vector(key, rows * cols);
        return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(v.data(), rows,
                                                                                                        cols);
    }

    /// Keys of the form `name[t]`.
    std::vector<std::pair<int, std::string>> indexed(const std::string& name) const {
        std::vector<std::pair<int, std::string>> out;
        for (const auto& [key, e] : entries_) {
            if (key.size() > name.size() + 2 && key.compare(0, name.size() + 1, name + "[") == 0 && key.back() == ']') {
                const std::string idx = key.substr(name.size() + 1, key.size() - name.size() - 2);
                int t = 0;
                const auto [ptr, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), t);
                if (ec != std::errc() || ptr != idx.data() + idx.size() || t < 1) fail(key, e.line, "bad time index");
                out.emplace_back(t, key);
            }
        }
        return out;
    }

    [[noreturn]] static void fail(const std::string& key, int line, const std::string& what) {
        throw Error(ErrorCode::kParseError, "config line " + std::to_string(line) + ": '" + key + "': " + what);
    }

private:
    static double number(const std::string& s, const std::string& key, int line) {
        double x = 0.0;
        const char* first = s.data();
        if (!s.empty() && *first == '+') ++first;
        const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), x);
        if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(x)) {
            fail(key, line, "'" + s + "' is not a number");
        }
        return x;
    }

    std::map<std::string, Entry> entries_;
};

const std::vector<std::string> kKnownKeys = {
    "p",          "d",         "design",  "evolution", "state_discounts", "vol_discounts", "m0",
    "P0",         "S0",        "n0",      "delta_grid", "beta_grid",      "weights",       "seed",
    "horizon",    "names",     "label",   "sqrt",       "var_family",     "rank"};

}  // namespace

RunConfig parse_config(std::istream& in) {
    std::map<std::string, Entry> entries;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::kParseError, "config line " + std::to_string(number) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string base = key.substr(0, key.find('['));
        if (std::find(kKnownKeys.begin(), kKnownKeys.end(), base) == kKnownKeys.end() ||
            (base != key && base != "design" && base != "evolution")) {
            throw Error(ErrorCode::kParseError, "config line " + std::to_string(number) + ": unknown key '" + key + "'");
        }
        if (entries.count(key)) {
            throw Error(ErrorCode::kParseError, "config line " + std::to_string(number) + ": duplicate key '" + key + "'");
        }
        entries[key] = Entry{trim(line.substr(eq + 1)), number};
    }
    const Reader r(std::move(entries));

    RunConfig cfg;
    const int p = r.integer("p");
    const int d = r.integer("d");
    auto& spec = cfg.spec;
    spec.p = p;
    spec.d = d;
    spec.design = Sequence<VectorXd>(r.vector("design", d));
    for (const auto& [t, key] : r.indexed("design")) spec.design.set(t, r.vector(key, d));
    spec.evolution = Sequence<MatrixXd>(r.has("evolution") ? r.matrix("evolution", d, d) : MatrixXd::Identity(d, d));
    for (const auto& [t, key] : r.indexed("evolution")) spec.evolution.set(t, r.matrix(key, d, d));
    const auto deltas = r.list("state_discounts");
    spec.state_discounts = deltas.size() == 1 ? VectorXd::Constant(d, deltas[0]) : r.vector("state_discounts", d);
    spec.vol_discounts = r.vector("vol_discounts", p);

    auto& pr = cfg.priors;
    pr.m0 = r.has("m0") ? r.matrix("m0", d, p) : MatrixXd::Zero(d, p);
    pr.P0 = r.matrix("P0", d, d);
    pr.S0 = r.matrix("S0", p, p);
    pr.n0 = r.has("n0") ? r.scalar("n0") : 0.0;

    if (r.has("delta_grid")) cfg.delta_grid = r.list("delta_grid");
    if (r.has("beta_grid")) {
        const Entry& e = r.entry("beta_grid");
        std::istringstream ss(e.value);
        std::string cand;
        while (std::getline(ss, cand, ';')) {
            std::map<std::string, Entry> tmp{{"b", Entry{trim(cand), e.line}}};
            cfg.beta_grid.push_back(Reader(tmp).vector("b", p));
        }
    }
    cfg.weights = r.has("weights") ? r.vector("weights", p) : VectorXd::Constant(p, 1.0 / p);
    if (r.has("seed")) {
        const double s = r.scalar("seed");
        if (s < 0 || s != std::floor(s) || s > 9.007199254740992e15) {
            Reader::fail("seed", r.entry("seed").line, "expected a nonnegative integer");
        }
        cfg.seed = static_cast<std::uint64_t>(s);
    }
    if (r.has("horizon")) cfg.horizon = r.integer("horizon");
    if (r.has("names")) {
        std::istringstream ss(r.entry("names").value);
        std::string cell;
        while (std::getline(ss, cell, ',')) cfg.names.push_back(trim(cell));
        if (static_cast<int>(cfg.names.size()) != p) {
            throw Error(ErrorCode::kDimensionMismatch, "config: 'names' needs p entries");
        }
    } else {
        for (int i = 1; i <= p; ++i) cfg.names.push_back("s" + std::to_string(i));
    }
    cfg.label = r.has("label") ? r.entry("label").value : "model";
    if (r.has("sqrt")) cfg.sqrt_convention = parse_sqrt(r.entry("sqrt").value);
    if (r.has("var_family")) cfg.var_family = parse_family(r.entry("var_family").value);
    if (r.has("rank")) cfg.rank_by = parse_rank(r.entry("rank").value);

    check_weights(cfg.weights);
    validate(cfg.spec, cfg.priors);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
    return parse_config(in);
}

}  // namespace mvsv
