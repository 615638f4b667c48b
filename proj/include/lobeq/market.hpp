#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lobeq {

/// Per-tick buy probabilities: beta[j-1] is the probability that an arriving
/// buyer purchases when the lowest outstanding tick is j. Must be in (0, 1]
/// and non-increasing in j.
struct DemandCurve {
    std::vector<double> beta;

    std::size_t size() const { return beta.size(); }
};

/// Demand family beta_j = scale * (base + ((n - j + 1) / pivot)^2).
inline DemandCurve quadratic_demand(int n_ticks, double scale, double base, double pivot) {
    DemandCurve d;
    d.beta.reserve(static_cast<std::size_t>(std::max(n_ticks, 0)));
    for (int j = 1; j <= n_ticks; ++j) {
        const double u = (n_ticks - j + 1) / pivot;
        d.beta.push_back(scale * (base + u * u));
    }
    return d;
}

enum class PatienceKind { Uniform, Power, Tabulated };

/// Distribution of a seller's waiting-cost rate delta on [0, delta_bar].
///
/// Power: F(x) = (x / delta_bar)^gamma with gamma in (1/2, 1]; Uniform is the
/// gamma = 1 special case. Tabulated: piecewise-linear interpolation through
/// strictly increasing knots (x, F(x)) with F(0) = 0 and F(delta_bar) = 1.
/// Immutable after construction; sampling takes a caller-owned engine.
class PatienceDistribution {
public:
    PatienceDistribution() = default;

    static PatienceDistribution Uniform(double delta_bar) {
        PatienceDistribution d;
        d.kind_ = PatienceKind::Uniform;
        d.delta_bar_ = delta_bar;
        d.gamma_ = 1.0;
        return d;
    }

    static PatienceDistribution Power(double delta_bar, double gamma) {
        PatienceDistribution d;
        d.kind_ = PatienceKind::Power;
        d.delta_bar_ = delta_bar;
        d.gamma_ = gamma;
        return d;
    }

    static PatienceDistribution Tabulated(std::vector<std::pair<double, double>> knots) {
        PatienceDistribution d;
        d.kind_ = PatienceKind::Tabulated;
        d.table_ = std::move(knots);
        d.delta_bar_ = d.table_.empty() ? 0.0 : d.table_.back().first;
        d.gamma_ = 1.0;
        return d;
    }

    PatienceKind kind() const { return kind_; }
    double delta_bar() const { return delta_bar_; }
    double gamma() const { return gamma_; }
    const std::vector<std::pair<double, double>>& table() const { return table_; }

    /// F(min(x, delta_bar)), clamped to [0, 1]. Negative x is an input error.
    double cdf(double x) const {
        if (x < 0.0) throw std::domain_error("patience cdf: negative argument");
        x = std::min(x, delta_bar_);
        double f = 0.0;
        switch (kind_) {
            case PatienceKind::Uniform:
                f = x / delta_bar_;
                break;
            case PatienceKind::Power:
                f = std::pow(x / delta_bar_, gamma_);
                break;
            case PatienceKind::Tabulated:
                f = table_cdf(x);
                break;
        }
        return std::clamp(f, 0.0, 1.0);
    }

    /// Inverse CDF at u in [0, 1].
    double quantile(double u) const {
        if (u < 0.0 || u > 1.0) throw std::domain_error("patience quantile: u outside [0, 1]");
        switch (kind_) {
            case PatienceKind::Uniform:
                return u * delta_bar_;
            case PatienceKind::Power:
                return delta_bar_ * std::pow(u, 1.0 / gamma_);
            case PatienceKind::Tabulated:
                return table_quantile(u);
        }
        return 0.0;
    }

    template <typename Engine>
    double sample(Engine& rng) const {
        return quantile(std::uniform_real_distribution<double>(0.0, 1.0)(rng));
    }

    /// Structural problems, empty if the distribution is usable.
    std::vector<std::string> check() const {
        std::vector<std::string> issues;
        if (!(delta_bar_ > 0.0)) issues.push_back("patience.delta_bar: must be > 0");
        if (kind_ == PatienceKind::Power && !(gamma_ > 0.5 && gamma_ <= 1.0))
            issues.push_back("patience.gamma: must lie in (1/2, 1]");
        if (kind_ == PatienceKind::Tabulated) {
            if (table_.size() < 2) {
                issues.push_back("patience.table: needs at least two knots");
            } else {
                if (table_.front().first != 0.0 || table_.front().second != 0.0)
                    issues.push_back("patience.table: first knot must be (0, 0)");
                if (table_.back().second != 1.0)
                    issues.push_back("patience.table: last knot must have F = 1");
                for (std::size_t i = 1; i < table_.size(); ++i) {
                    if (!(table_[i].first > table_[i - 1].first))
                        issues.push_back("patience.table: x grid must be strictly increasing");
                    if (table_[i].second < table_[i - 1].second)
                        issues.push_back("patience.table: F values must be non-decreasing");
                }
            }
        }
        return issues;
    }

private:
    double table_cdf(double x) const {
        auto it = std::upper_bound(table_.begin(), table_.end(), x,
                                   [](double v, const auto& k) { return v < k.first; });
        if (it == table_.begin()) return table_.front().second;
        if (it == table_.end()) return table_.back().second;
        const auto& hi = *it;
        const auto& lo = *(it - 1);
        const double t = (x - lo.first) / (hi.first - lo.first);
        return lo.second + t * (hi.second - lo.second);
    }

    double table_quantile(double u) const {
        // first knot with F >= u, interpolating over the preceding segment
        auto it = std::lower_bound(table_.begin(), table_.end(), u,
                                   [](const auto& k, double v) { return k.second < v; });
        if (it == table_.begin()) return table_.front().first;
        if (it == table_.end()) return table_.back().first;
        const auto& hi = *it;
        const auto& lo = *(it - 1);
        if (hi.second == lo.second) return lo.first;
        const double t = (u - lo.second) / (hi.second - lo.second);
        return lo.first + t * (hi.first - lo.first);
    }

    PatienceKind kind_ = PatienceKind::Uniform;
    double delta_bar_ = 1.0;
    double gamma_ = 1.0;
    std::vector<std::pair<double, double>> table_;
};

/// Exogenous market parameters.
struct MarketConfig {
    double lambda = 0.0;   ///< seller arrival rate, > 0
    double mu = 0.0;       ///< buyer arrival rate, > 0
    double epsilon = 0.0;  ///< tick size, > 0
    int n_ticks = 0;       ///< number of allowed price ticks, >= 1
    DemandCurve demand;
    PatienceDistribution patience;
};

struct ValidationIssue {
    std::string field;
    std::string rule;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;

    bool ok() const { return issues.empty(); }

    std::string to_string() const {
        if (ok()) return "pass";
        std::ostringstream os;
        for (const auto& i : issues) os << i.field << ": " << i.rule << '\n';
        return os.str();
    }
};

inline ValidationReport validate(const MarketConfig& cfg) {
    ValidationReport r;
    auto fail = [&r](std::string field, std::string rule) {
        r.issues.push_back({std::move(field), std::move(rule)});
    };
    if (!(cfg.lambda > 0.0)) fail("lambda", "must be > 0");
    if (!(cfg.mu > 0.0)) fail("mu", "must be > 0");
    if (!(cfg.epsilon > 0.0)) fail("epsilon", "must be > 0");
    if (cfg.n_ticks < 1) fail("n_ticks", "must be >= 1");
    if (cfg.demand.size() != static_cast<std::size_t>(std::max(cfg.n_ticks, 0)))
        fail("demand", "must have exactly n_ticks entries");
    for (std::size_t i = 0; i < cfg.demand.size(); ++i) {
        const double b = cfg.demand.beta[i];
        if (!(b > 0.0 && b <= 1.0)) {
            fail("demand", "beta_" + std::to_string(i + 1) + " must lie in (0, 1]");
            break;
        }
    }
    for (std::size_t i = 1; i < cfg.demand.size(); ++i) {
        if (cfg.demand.beta[i] > cfg.demand.beta[i - 1]) {
            fail("demand", "not non-increasing at tick " + std::to_string(i + 1));
            break;
        }
    }
    for (auto& msg : cfg.patience.check()) {
        auto colon = msg.find(": ");
        fail(msg.substr(0, colon), msg.substr(colon + 2));
    }
    return r;
}

/// Built-in reference market: 50 ticks of unit size, lambda = 3, mu = 12,
/// beta_j = (1/12)(0.5 + ((N - j + 1)/15)^2), delta uniform on [0, 160].
inline MarketConfig default_market_config() {
    MarketConfig cfg;
    cfg.lambda = 3.0;
    cfg.mu = 12.0;
    cfg.epsilon = 1.0;
    cfg.n_ticks = 50;
    cfg.demand = quadratic_demand(50, 1.0 / 12.0, 0.5, 15.0);
    cfg.patience = PatienceDistribution::Uniform(160.0);
    return cfg;
}

}  // namespace lobeq
