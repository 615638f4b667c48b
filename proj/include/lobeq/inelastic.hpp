#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "lobeq/queue.hpp"

namespace lobeq::inelastic {

/// Continuous-price market with price-insensitive buyers. rho = 1 is the
/// congested limit and runs on its own closed forms; the rho < 1 closed form
/// requires uniform patience (gamma = 1).
struct InelasticParams {
    double rho = 0.5;        ///< traffic intensity lambda/mu, in (0, 1]
    double mu = 1.0;         ///< buyer arrival rate
    double delta_bar = 1.0;  ///< patience upper bound
    double gamma = 1.0;      ///< patience exponent, in (1/2, 1]

    bool congested() const { return rho == 1.0; }
};

inline void check_params(const InelasticParams& par) {
    if (!(par.rho > 0.0 && par.rho <= 1.0))
        throw std::invalid_argument("inelastic: rho must lie in (0, 1]");
    if (!(par.mu > 0.0)) throw std::invalid_argument("inelastic: mu must be > 0");
    if (!(par.delta_bar > 0.0)) throw std::invalid_argument("inelastic: delta_bar must be > 0");
    if (!(par.gamma > 0.5 && par.gamma <= 1.0))
        throw std::invalid_argument("inelastic: gamma must lie in (1/2, 1]");
}

/// Upper endpoint K = (delta_bar / mu) rho / (1 - rho) of the equilibrium
/// price support (rho < 1).
inline double price_support(const InelasticParams& par) {
    if (par.congested()) return kInfinite;
    return (par.delta_bar / par.mu) * par.rho / (1.0 - par.rho);
}

/// Expected surplus of posting at price p for a seller with waiting-cost rate
/// delta, when the equilibrium CDF below p carries load rho * F:
///   h = p - (delta / mu) [ rF / (1 - rF)^2 + 1 / (1 - rF) ].
/// Returns -infinity when the load at p admits no stationary wait.
inline double surplus(const InelasticParams& par, double p, double delta, double F_at_p) {
    if (F_at_p < 0.0 || F_at_p > 1.0)
        throw std::domain_error("surplus: F_at_p outside [0, 1]");
    const double rf = par.rho * F_at_p;
    if (rf >= 1.0 - kStabilityMargin) return -kInfinite;
    const double om = 1.0 - rf;
    return p - (delta / par.mu) * (rf / (om * om) + 1.0 / om);
}

/// First-order condition inverted for patience: the waiting-cost rate of the
/// seller indifferent at price p, delta(p) = (mu/2) (1 - rho F)^3 / (rho a_P).
inline double delta_of_price(const InelasticParams& par, double F_at_p, double density_at_p) {
    if (!(density_at_p > 0.0))
        throw std::domain_error("delta_of_price: density must be > 0");
    const double om = 1.0 - par.rho * F_at_p;
    return 0.5 * par.mu * om * om * om / (par.rho * density_at_p);
}

/// Survival 1 - F of the uncongested (rho < 1, gamma = 1) equilibrium price
/// law, in a form free of cancellation near the upper support:
///   1 - F = (rho (1 - p/K) + sqrt(1 - p/K)) / (1 + rho w), w = 1 + (mu/dbar) p.
inline double equilibrium_survival(const InelasticParams& par, double p) {
    if (par.congested() || par.gamma != 1.0)
        throw std::domain_error("equilibrium_survival: needs rho < 1 and gamma = 1");
    if (p <= 0.0) return 1.0;
    const double K = price_support(par);
    if (p >= K) return 0.0;
    const double w = 1.0 + (par.mu / par.delta_bar) * p;
    const double rem = 1.0 - p / K;
    return (par.rho * rem + std::sqrt(rem)) / (1.0 + par.rho * w);
}

/// CDF of the uncongested equilibrium price law:
///   F(p) = (w - sqrt(1 - p/K)) / (1 + rho w), 0 <= p <= K.
inline double equilibrium_cdf(const InelasticParams& par, double p) {
    if (par.congested())
        throw std::domain_error("equilibrium_cdf: rho = 1 has its own closed form (limit_cdf)");
    if (par.gamma != 1.0)
        throw std::domain_error("equilibrium_cdf: closed form requires gamma = 1");
    if (p <= 0.0) return 0.0;
    const double K = price_support(par);
    if (p >= K) return 1.0;
    const double w = 1.0 + (par.mu / par.delta_bar) * p;
    return (w - std::sqrt(1.0 - p / K)) / (1.0 + par.rho * w);
}

/// Congested-limit survival 2 dbar / (2 dbar + mu p) = 1 / (1 + c p).
inline double limit_survival(const InelasticParams& par, double p) {
    if (p < 0.0) throw std::domain_error("limit_survival: negative price");
    return 1.0 / (1.0 + par.mu / (2.0 * par.delta_bar) * p);
}

/// Congested-limit price CDF, F(p) = 1 - 2 dbar / (2 dbar + mu p).
inline double limit_cdf(const InelasticParams& par, double p) {
    return 1.0 - limit_survival(par, p);
}

/// Survival of the congested (rho = 1) price law for the power-patience
/// family: 1 - F = (1 + c p)^(-gamma/(2 gamma - 1)),
/// c = (2 gamma - 1) mu / (2 gamma dbar). gamma = 1 reduces to limit_cdf.
inline double gamma_tail(const InelasticParams& par, double p) {
    if (!par.congested()) throw std::domain_error("gamma_tail: defined at rho = 1");
    if (p < 0.0) throw std::domain_error("gamma_tail: negative price");
    const double c = (2.0 * par.gamma - 1.0) * par.mu / (2.0 * par.gamma * par.delta_bar);
    return std::pow(1.0 + c * p, -par.gamma / (2.0 * par.gamma - 1.0));
}

/// CDF along whichever closed-form regime the parameters select.
inline double price_cdf(const InelasticParams& par, double p) {
    return par.congested() ? 1.0 - gamma_tail(par, p) : equilibrium_cdf(par, p);
}

inline double price_survival(const InelasticParams& par, double p) {
    return par.congested() ? gamma_tail(par, p) : equilibrium_survival(par, p);
}

/// Right-hand side of the equilibrium ODE,
///   dF/dp = (mu / (2 dbar)) (1 - rho F)^3 / (rho (1 - F)^(1/gamma)),
/// written in terms of the survival S = 1 - F to stay accurate as F -> 1.
inline double ode_rhs_survival(const InelasticParams& par, double S) {
    const double loaded = 1.0 - par.rho + par.rho * S;  // = 1 - rho F
    return (par.mu / (2.0 * par.delta_bar)) * loaded * loaded * loaded /
           (par.rho * std::pow(S, 1.0 / par.gamma));
}

inline double ode_rhs(const InelasticParams& par, double F) {
    return ode_rhs_survival(par, 1.0 - F);
}

/// Equilibrium price density along the closed form (the ODE right-hand side
/// evaluated at the closed-form survival). Zero outside the support.
inline double equilibrium_density(const InelasticParams& par, double p) {
    if (p < 0.0) return 0.0;
    if (!par.congested() && p >= price_support(par)) return 0.0;
    return ode_rhs_survival(par, price_survival(par, p));
}

/// Sup over interior grid points of |dF/dp - rhs(F)|, the derivative taken by
/// (non-uniform) central differences. Points with F >= 1 - 1e-6 are skipped.
inline double ode_residual(const InelasticParams& par, std::span<const double> grid,
                           std::span<const double> F) {
    if (grid.size() != F.size() || grid.size() < 3)
        throw std::invalid_argument("ode_residual: need a grid of at least 3 points");
    for (std::size_t i = 1; i < F.size(); ++i)
        if (F[i] < F[i - 1] - 1e-12 || F[i] > 1.0 + 1e-12)
            throw std::invalid_argument("ode_residual: F must be monotone within [0, 1)");
    double sup = 0.0;
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
        if (F[i] >= 1.0 - 1e-6) continue;
        const double hm = grid[i] - grid[i - 1];
        const double hp = grid[i + 1] - grid[i];
        const double d =
            (hm * hm * F[i + 1] + (hp * hp - hm * hm) * F[i] - hp * hp * F[i - 1]) /
            (hm * hp * (hm + hp));
        sup = std::max(sup, std::fabs(d - ode_rhs(par, F[i])));
    }
    return sup;
}

/// n points on [lo, hi] clustered toward hi with spacing ~ (hi - p)^(1-1/k);
/// k = 2 resolves a square-root endpoint singularity.
inline std::vector<double> graded_grid(double lo, double hi, int n, double k) {
    if (n < 2) throw std::invalid_argument("graded_grid: need n >= 2");
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) {
        const double s = static_cast<double>(i) / (n - 1);
        g[i] = hi - (hi - lo) * std::pow(1.0 - s, k);
    }
    g.front() = lo;
    g.back() = hi;
    return g;
}

struct OdeSolution {
    std::vector<double> grid;
    std::vector<double> f;
    double reached_p = 0.0;
    bool step_underflow = false;  ///< stopped because steps vanished at the singularity
};

/// Integrates the equilibrium ODE from F(0) = 0 with classical fourth-order
/// steps. Near F = 1 the right-hand side is singular for rho < 1, so a step
/// is halved until it consumes at most a quarter of the remaining headroom
/// 1 - F; integration stops at F = 1 - 1e-9, at p_max, or on step underflow.
inline OdeSolution integrate_ode(const InelasticParams& par, double p_max, int base_steps = 4000) {
    check_params(par);
    if (!(p_max > 0.0) || base_steps < 1)
        throw std::invalid_argument("integrate_ode: need p_max > 0 and base_steps >= 1");
    constexpr double terminal = 1e-9;
    constexpr double shrink_at = 1e-3;
    const double h0 = p_max / base_steps;
    auto f = [&par](double F) { return ode_rhs(par, std::min(F, 1.0 - 1e-15)); };

    OdeSolution out;
    out.grid.push_back(0.0);
    out.f.push_back(0.0);
    double p = 0.0, F = 0.0;
    while (p < p_max && F < 1.0 - terminal) {
        double h = std::min(h0, p_max - p);
        double dF;
        for (;;) {
            const double k1 = f(F);
            const double k2 = f(F + 0.5 * h * k1);
            const double k3 = f(F + 0.5 * h * k2);
            const double k4 = f(F + h * k3);
            dF = (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            const double headroom = 1.0 - F;
            const bool near_top = headroom < shrink_at || dF > shrink_at;
            if (!std::isfinite(dF) || (near_top && dF > 0.25 * headroom)) {
                h *= 0.5;
                if (h < 1e-15 * p_max) {
                    out.reached_p = p;
                    out.step_underflow = true;
                    return out;
                }
                continue;
            }
            break;
        }
        p += h;
        F = std::min(F + dF, 1.0);
        out.grid.push_back(p);
        out.f.push_back(F);
    }
    out.reached_p = p;
    return out;
}

/// Stationary inventory density at price p. Uncongested regime:
///   Q(p) = (mu / (2 dbar)) (1 + (1 - rho) F / (1 - F)), p in [0, K);
/// congested regime: Q(p) = (mu / (2 dbar)) (1 + c p)^((1-gamma)/(2gamma-1)).
inline double inventory_density(const InelasticParams& par, double p) {
    if (par.congested()) {
        if (p < 0.0) throw std::domain_error("inventory_density: negative price");
        const double c = (2.0 * par.gamma - 1.0) * par.mu / (2.0 * par.gamma * par.delta_bar);
        return (par.mu / (2.0 * par.delta_bar)) *
               std::pow(1.0 + c * p, (1.0 - par.gamma) / (2.0 * par.gamma - 1.0));
    }
    if (p < 0.0 || p >= price_support(par))
        throw std::domain_error("inventory_density: price outside [0, K)");
    const double S = equilibrium_survival(par, p);
    return (par.mu / (2.0 * par.delta_bar)) * (1.0 + (1.0 - par.rho) * (1.0 - S) / S);
}

/// Expected density of outstanding orders at price p given the current best
/// price is s <= p. With v1 = rho F(s) and v2 = rho F(p):
///   Qc(p, s) = (1 - 3 v1 + v1^2 + 2 v1 v2 - v1 v2^2)
///              / ((1 - v1)^2 (1 - v2)^2) * rho * a_P(p),
/// the price derivative of the conditional block mean over (s, p].
inline double conditional_density(const InelasticParams& par, double p, double s) {
    if (!(s >= 0.0 && p >= s)) throw std::domain_error("conditional_density: need p >= s >= 0");
    const double v1 = par.rho * price_cdf(par, s);
    const double v2 = par.rho * price_cdf(par, p);
    if (v2 >= 1.0 - kStabilityMargin) return kInfinite;
    const double num = 1.0 - 3.0 * v1 + v1 * v1 + 2.0 * v1 * v2 - v1 * v2 * v2;
    const double om1 = 1.0 - v1;
    const double om2 = 1.0 - v2;
    return num / (om1 * om1 * om2 * om2) * par.rho * equilibrium_density(par, p);
}

/// Market depth D(p): expected count of outstanding orders priced in [0, p],
/// by composite-Simpson quadrature of the inventory density.
inline double market_depth(const InelasticParams& par, double p, int subdivisions = 2000) {
    if (!par.congested()) throw std::domain_error("market_depth: defined at rho = 1");
    if (p < 0.0) throw std::domain_error("market_depth: negative price");
    if (p == 0.0) return 0.0;
    const int n = 2 * std::max(subdivisions / 2, 1);
    const double h = p / n;
    double acc = inventory_density(par, 0.0) + inventory_density(par, p);
    for (int i = 1; i < n; ++i)
        acc += inventory_density(par, i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

/// Equilibrium posted price of a seller with patience delta in the congested
/// regime: p(delta) = (2 gamma dbar / (mu (2 gamma - 1)))((dbar/delta)^(2gamma-1) - 1).
/// Decreasing in delta; diverges as delta -> 0.
inline double price_of_delta(const InelasticParams& par, double delta) {
    if (!par.congested()) throw std::domain_error("price_of_delta: defined at rho = 1");
    if (delta < 0.0 || delta > par.delta_bar)
        throw std::domain_error("price_of_delta: delta outside [0, delta_bar]");
    if (delta == 0.0) return kInfinite;
    const double tg = 2.0 * par.gamma - 1.0;
    return (2.0 * par.gamma * par.delta_bar / (par.mu * tg)) *
           (std::pow(par.delta_bar / delta, tg) - 1.0);
}

}  // namespace lobeq::inelastic
