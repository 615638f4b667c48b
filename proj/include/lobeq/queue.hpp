#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "lobeq/market.hpp"

namespace lobeq {

inline constexpr double kInfinite = std::numeric_limits<double>::infinity();

/// Cumulative load this close to 1 (or beyond) is treated as unstable.
inline constexpr double kStabilityMargin = 1e-9;

/// Probability that an arriving seller posts at each tick.
struct ThinningDistribution {
    std::vector<double> alpha;

    std::size_t size() const { return alpha.size(); }

    /// Normalizes a non-negative weight vector onto the simplex.
    static ThinningDistribution normalized(std::vector<double> w) {
        double s = 0.0;
        for (double v : w) {
            if (v < 0.0 || !std::isfinite(v))
                throw std::invalid_argument("thinning distribution: entries must be finite and >= 0");
            s += v;
        }
        if (!(s > 0.0)) throw std::invalid_argument("thinning distribution: total mass must be > 0");
        for (double& v : w) v /= s;
        return ThinningDistribution{std::move(w)};
    }

    static ThinningDistribution uniform(int n) {
        if (n < 1) throw std::invalid_argument("thinning distribution: n must be >= 1");
        return ThinningDistribution{std::vector<double>(n, 1.0 / n)};
    }

    static ThinningDistribution point_mass(int n, int tick) {
        if (tick < 1 || tick > n) throw std::invalid_argument("thinning distribution: tick out of range");
        std::vector<double> a(n, 0.0);
        a[tick - 1] = 1.0;
        return ThinningDistribution{std::move(a)};
    }
};

/// rho_j = (lambda / mu) * alpha_j / beta_j.
inline std::vector<double> traffic_intensity(const MarketConfig& cfg,
                                             const ThinningDistribution& thin) {
    if (thin.size() != cfg.demand.size())
        throw std::invalid_argument("traffic_intensity: alpha/beta size mismatch");
    std::vector<double> rho(thin.size());
    for (std::size_t i = 0; i < rho.size(); ++i)
        rho[i] = (cfg.lambda / cfg.mu) * thin.alpha[i] / cfg.demand.beta[i];
    return rho;
}

/// Stationary expected time to sale at each tick under the preemptive-priority
/// reduction of the book: lower ticks are always bought first, so tick j is
/// served only while ticks below it are empty.
///
/// With c_j = sum_{i<=j} rho_i and s_j = sum_{i<=j} rho_i / beta_i,
///   T(j) = (1/mu) * 1/(1 - c_{j-1}) * [1/beta_j + s_j / (1 - c_j)]
/// whenever c_j < 1, and infinity otherwise (the tick-j queue grows without
/// bound). T is non-decreasing in j on its finite range.
inline std::vector<double> execution_time_from_rho(std::span<const double> rho,
                                                   std::span<const double> beta,
                                                   double mu) {
    std::vector<double> T(rho.size(), kInfinite);
    double cum = 0.0, cum_prev = 0.0, s = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        cum += rho[i];
        s += rho[i] / beta[i];
        if (cum < 1.0 - kStabilityMargin)
            T[i] = (1.0 / mu) * (1.0 / (1.0 - cum_prev)) * (1.0 / beta[i] + s / (1.0 - cum));
        cum_prev = cum;
    }
    return T;
}

inline std::vector<double> execution_time(const MarketConfig& cfg,
                                          const ThinningDistribution& thin) {
    return execution_time_from_rho(traffic_intensity(cfg, thin), cfg.demand.beta, cfg.mu);
}

/// Little's law: Q_j = lambda * alpha_j * T(j). A tick with no arrivals holds
/// no inventory even when its hypothetical execution time is infinite.
inline std::vector<double> expected_inventory(const MarketConfig& cfg,
                                              const ThinningDistribution& thin) {
    const auto T = execution_time(cfg, thin);
    std::vector<double> q(T.size());
    for (std::size_t i = 0; i < T.size(); ++i)
        q[i] = thin.alpha[i] == 0.0 ? 0.0 : cfg.lambda * thin.alpha[i] * T[i];
    return q;
}

/// Mean outstanding count in the tick block [j, k] given ticks below j are
/// empty. With r1 the combined load of ticks < j and r2 the load of [j, k]:
///   r2 * (1 - 2 r1 + r1^2 + r1 r2) / ((1 - r1)^2 (1 - r1 - r2)).
/// Returns infinity when r1 + r2 reaches 1 (no stationary regime).
inline double conditional_inventory(std::span<const double> rho, int j, int k) {
    const int n = static_cast<int>(rho.size());
    if (j < 1 || k < j || k > n)
        throw std::invalid_argument("conditional_inventory: need 1 <= j <= k <= n");
    double r1 = 0.0, r2 = 0.0;
    for (int i = 0; i < j - 1; ++i) r1 += rho[i];
    for (int i = j - 1; i < k; ++i) r2 += rho[i];
    if (r1 + r2 >= 1.0 - kStabilityMargin) return kInfinite;
    const double om1 = 1.0 - r1;
    return r2 * (1.0 - 2.0 * r1 + r1 * r1 + r1 * r2) / (om1 * om1 * (1.0 - r1 - r2));
}

/// P(best outstanding price > j * epsilon) = max(0, 1 - sum_{k<=j} rho_k).
inline std::vector<double> price_tail(std::span<const double> rho) {
    std::vector<double> tail(rho.size());
    double cum = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        cum += rho[i];
        tail[i] = std::max(0.0, 1.0 - cum);
    }
    return tail;
}

/// Closed-form stationary quantities for one (config, alpha) pair.
struct QueueAnalytics {
    std::vector<double> rho;
    std::vector<double> cum_rho;
    std::vector<double> exec_time;
    std::vector<double> inventory;
    std::vector<double> tail;
    int stable_up_to = 0;  ///< largest tick with cumulative load < 1, 0 if none

    bool fully_stable() const { return stable_up_to == static_cast<int>(rho.size()); }
};

inline QueueAnalytics analyze_queue(const MarketConfig& cfg, const ThinningDistribution& thin) {
    QueueAnalytics a;
    a.rho = traffic_intensity(cfg, thin);
    a.cum_rho.resize(a.rho.size());
    std::partial_sum(a.rho.begin(), a.rho.end(), a.cum_rho.begin());
    a.exec_time = execution_time_from_rho(a.rho, cfg.demand.beta, cfg.mu);
    a.inventory.resize(a.rho.size());
    for (std::size_t i = 0; i < a.rho.size(); ++i)
        a.inventory[i] = thin.alpha[i] == 0.0 ? 0.0 : cfg.lambda * thin.alpha[i] * a.exec_time[i];
    a.tail = price_tail(a.rho);
    a.stable_up_to = 0;
    for (std::size_t i = 0; i < a.cum_rho.size(); ++i)
        if (a.cum_rho[i] < 1.0 - kStabilityMargin) a.stable_up_to = static_cast<int>(i) + 1;
    return a;
}

}  // namespace lobeq
