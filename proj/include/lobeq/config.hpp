#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lobeq/csv.hpp"
#include "lobeq/equilibrium.hpp"
#include "lobeq/inelastic.hpp"
#include "lobeq/market.hpp"
#include "lobeq/simulator.hpp"

namespace lobeq::config {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat dotted-key configuration document. Unset keys fall back to the
/// built-in reference market.
using ConfigMap = std::map<std::string, std::string>;

inline const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "lambda", "mu", "epsilon", "n_ticks",
        "demand.kind", "demand.values", "demand.scale", "demand.base", "demand.pivot",
        "patience.kind", "patience.delta_bar", "patience.gamma", "patience.table",
        "alpha.values",
        "solver.tol", "solver.max_iter", "solver.restarts", "solver.eta",
        "sim.mode", "sim.horizon", "sim.warmup_fraction", "sim.batches", "sim.discipline",
        "inelastic.rho", "inelastic.mu", "inelastic.delta_bar", "inelastic.gamma",
        "inelastic.p_max", "inelastic.s_values",
        "two_price.p1", "two_price.p2", "two_price.mu1", "two_price.mu2",
    };
    return keys;
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(key + ": not a number: '" + v + "'");
    }
}

inline long long to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const long long x = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(key + ": not an integer: '" + v + "'");
    }
}

inline std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
}

}  // namespace detail

inline void set_key(ConfigMap& map, const std::string& key, const std::string& value) {
    if (!known_keys().count(key)) throw ConfigError("unknown config key: " + key);
    map[key] = value;
}

/// Parses "key = value" lines; '#' starts a comment, blank lines are skipped.
inline ConfigMap parse_text(const std::string& text) {
    ConfigMap map;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        set_key(map, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
    return map;
}

inline ConfigMap load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str());
}

/// Applies one "key=value" command-line override.
inline void apply_override(ConfigMap& map, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override must look like key=value: '" + assignment + "'");
    set_key(map, detail::trim(assignment.substr(0, eq)), detail::trim(assignment.substr(eq + 1)));
}

inline std::string canonical_text(const ConfigMap& map) {
    std::ostringstream os;
    for (const auto& [k, v] : map) os << k << " = " << v << '\n';
    return os.str();
}

inline std::uint64_t hash(const ConfigMap& map) { return csv::fnv1a(canonical_text(map)); }

inline std::string get(const ConfigMap& map, const std::string& key, const std::string& fallback) {
    const auto it = map.find(key);
    return it == map.end() ? fallback : it->second;
}

inline double get_double(const ConfigMap& map, const std::string& key, double fallback) {
    const auto it = map.find(key);
    return it == map.end() ? fallback : detail::to_double(key, it->second);
}

inline long long get_int(const ConfigMap& map, const std::string& key, long long fallback) {
    const auto it = map.find(key);
    return it == map.end() ? fallback : detail::to_int(key, it->second);
}

/// Builds the market; any field not present falls back to the reference
/// market (lambda 3, mu 12, 50 unit ticks, the quadratic demand family,
/// uniform patience on [0, 160]).
inline MarketConfig market_from(const ConfigMap& map) {
    MarketConfig cfg = default_market_config();
    cfg.lambda = get_double(map, "lambda", cfg.lambda);
    cfg.mu = get_double(map, "mu", cfg.mu);
    cfg.epsilon = get_double(map, "epsilon", cfg.epsilon);
    cfg.n_ticks = static_cast<int>(get_int(map, "n_ticks", cfg.n_ticks));

    const std::string dkind = get(map, "demand.kind", "quadratic");
    if (dkind == "vector") {
        if (!map.count("demand.values")) throw ConfigError("demand.values: required for demand.kind = vector");
        cfg.demand.beta = detail::to_list("demand.values", map.at("demand.values"));
    } else if (dkind == "quadratic") {
        cfg.demand = quadratic_demand(cfg.n_ticks, get_double(map, "demand.scale", 1.0 / 12.0),
                                      get_double(map, "demand.base", 0.5),
                                      get_double(map, "demand.pivot", 15.0));
    } else {
        throw ConfigError("demand.kind: must be 'vector' or 'quadratic'");
    }

    const std::string pkind = get(map, "patience.kind", "uniform");
    const double dbar = get_double(map, "patience.delta_bar", 160.0);
    if (pkind == "uniform") {
        cfg.patience = PatienceDistribution::Uniform(dbar);
    } else if (pkind == "power") {
        cfg.patience = PatienceDistribution::Power(dbar, get_double(map, "patience.gamma", 1.0));
    } else if (pkind == "tabulated") {
        if (!map.count("patience.table")) throw ConfigError("patience.table: required for patience.kind = tabulated");
        std::vector<std::pair<double, double>> knots;
        std::stringstream ss(map.at("patience.table"));
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto colon = item.find(':');
            if (colon == std::string::npos)
                throw ConfigError("patience.table: entries must look like x:F");
            knots.emplace_back(detail::to_double("patience.table", detail::trim(item.substr(0, colon))),
                               detail::to_double("patience.table", detail::trim(item.substr(colon + 1))));
        }
        cfg.patience = PatienceDistribution::Tabulated(std::move(knots));
    } else {
        throw ConfigError("patience.kind: must be 'uniform', 'power' or 'tabulated'");
    }
    return cfg;
}

inline SolverOptions solver_from(const ConfigMap& map, std::uint64_t seed) {
    SolverOptions opt;
    opt.tol = get_double(map, "solver.tol", opt.tol);
    opt.max_iter = static_cast<int>(get_int(map, "solver.max_iter", opt.max_iter));
    opt.n_restarts = static_cast<int>(get_int(map, "solver.restarts", opt.n_restarts));
    opt.eta0 = get_double(map, "solver.eta", opt.eta0);
    opt.seed = seed;
    return opt;
}

/// Simulation settings; posting law and mode are resolved by the caller.
inline SimConfig sim_from(const ConfigMap& map, const MarketConfig& market, std::uint64_t seed) {
    SimConfig sim;
    sim.market = market;
    sim.horizon = get_int(map, "sim.horizon", sim.horizon);
    sim.warmup_fraction = get_double(map, "sim.warmup_fraction", sim.warmup_fraction);
    sim.n_batches = static_cast<int>(get_int(map, "sim.batches", sim.n_batches));
    sim.seed = seed;
    const std::string mode = get(map, "sim.mode", "alpha");
    if (mode == "alpha") sim.mode = SellerMode::AlphaDriven;
    else if (mode == "strategy") sim.mode = SellerMode::StrategyDriven;
    else throw ConfigError("sim.mode: must be 'alpha' or 'strategy'");
    const std::string disc = get(map, "sim.discipline", "fifo");
    if (disc == "fifo") sim.discipline = TickDiscipline::Fifo;
    else if (disc == "random") sim.discipline = TickDiscipline::RandomPick;
    else throw ConfigError("sim.discipline: must be 'fifo' or 'random'");
    return sim;
}

inline inelastic::InelasticParams inelastic_from(const ConfigMap& map) {
    inelastic::InelasticParams par;
    par.rho = get_double(map, "inelastic.rho", 0.5);
    par.mu = get_double(map, "inelastic.mu", 12.0);
    par.delta_bar = get_double(map, "inelastic.delta_bar", 160.0);
    par.gamma = get_double(map, "inelastic.gamma", 1.0);
    return par;
}

inline TwoPriceProblem two_price_from(const ConfigMap& map, const MarketConfig& market) {
    TwoPriceProblem pr;
    pr.p1 = get_double(map, "two_price.p1", 1.0);
    pr.p2 = get_double(map, "two_price.p2", 2.0);
    pr.mu1 = get_double(map, "two_price.mu1", 2.0);
    pr.mu2 = get_double(map, "two_price.mu2", 1.0);
    pr.patience = market.patience;
    return pr;
}

inline std::vector<double> alpha_values(const ConfigMap& map) {
    if (!map.count("alpha.values")) return {};
    return detail::to_list("alpha.values", map.at("alpha.values"));
}

}  // namespace lobeq::config
