#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "lobeq/market.hpp"
#include "lobeq/queue.hpp"

namespace lobeq {

struct PartitionCell {
    int tick = 0;       ///< 1-based tick assigned on this delta interval
    double lo = 0.0;    ///< interval [lo, hi); the last cell is closed at delta_bar
    double hi = 0.0;
    double measure = 0.0;  ///< F_delta(hi) - F_delta(lo)
};

/// Best-response partition of the patience range: which tick a seller with
/// waiting-cost rate delta posts at. Cells are listed in increasing delta
/// order; at a shared boundary the lower tick wins.
struct BestResponsePartition {
    std::vector<PartitionCell> cells;
    double delta_bar = 0.0;

    int tick_at(double delta) const {
        if (delta < 0.0 || delta > delta_bar)
            throw std::domain_error("tick_at: delta outside [0, delta_bar]");
        int best = 0;
        for (const auto& c : cells)
            if (delta >= c.lo && delta <= c.hi && (best == 0 || c.tick < best)) best = c.tick;
        if (best == 0) throw std::logic_error("tick_at: partition does not cover delta");
        return best;
    }

    /// Per-tick measures; this is the image of the best-response map.
    std::vector<double> tick_measures(int n_ticks) const {
        std::vector<double> m(n_ticks, 0.0);
        for (const auto& c : cells) m[c.tick - 1] += c.measure;
        return m;
    }

    /// True when the assigned tick never increases with delta.
    bool ticks_non_increasing() const {
        for (std::size_t i = 1; i < cells.size(); ++i)
            if (cells[i].tick > cells[i - 1].tick) return false;
        return true;
    }
};

namespace detail {

struct Line {
    double slope;
    double intercept;
    int tick;
};

inline double intersect_x(const Line& a, const Line& b) {
    return (a.intercept - b.intercept) / (b.slope - a.slope);
}

}  // namespace detail

/// Partitions [0, delta_bar] by the argmax of the seller surplus
/// j * epsilon - delta * T(j), computed as the upper envelope of one line per
/// tick with finite execution time (slope -T(j), intercept j * epsilon).
/// Ticks with infinite T never win for delta > 0 and are excluded; sellers
/// with delta = 0 therefore get the highest tick with finite T.
inline BestResponsePartition best_response(std::span<const double> exec_time, double epsilon,
                                           const PatienceDistribution& patience) {
    using detail::Line;
    std::vector<Line> lines;
    lines.reserve(exec_time.size());
    for (std::size_t i = 0; i < exec_time.size(); ++i)
        if (std::isfinite(exec_time[i]))
            lines.push_back({-exec_time[i], (static_cast<double>(i) + 1.0) * epsilon,
                             static_cast<int>(i) + 1});
    if (lines.empty())
        throw std::runtime_error("best_response: no tick has finite execution time");

    std::sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
        return a.slope < b.slope || (a.slope == b.slope && a.intercept < b.intercept);
    });
    // equal slopes: only the highest intercept can appear on the envelope
    std::vector<Line> uniq;
    for (const auto& l : lines) {
        if (!uniq.empty() && uniq.back().slope == l.slope) uniq.back() = l;
        else uniq.push_back(l);
    }

    // upper envelope over the whole real line, slopes ascending left to right
    std::vector<Line> hull;
    for (const auto& l : uniq) {
        while (hull.size() >= 2 &&
               detail::intersect_x(l, hull[hull.size() - 2]) <=
                   detail::intersect_x(hull.back(), hull[hull.size() - 2]))
            hull.pop_back();
        hull.push_back(l);
    }

    const double dbar = patience.delta_bar();
    BestResponsePartition part;
    part.delta_bar = dbar;
    double lo = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const double hi = i + 1 < hull.size() ? detail::intersect_x(hull[i + 1], hull[i])
                                              : std::numeric_limits<double>::infinity();
        const double a = std::max(lo, 0.0);
        const double b = std::min(hi, dbar);
        if (a < b) {
            PartitionCell cell;
            cell.tick = hull[i].tick;
            cell.lo = a;
            cell.hi = b;
            cell.measure = patience.cdf(b) - patience.cdf(a);
            part.cells.push_back(cell);
        }
        lo = hi;
        if (lo >= dbar) break;
    }
    return part;
}

/// One application of the best-response map: loads -> execution times ->
/// optimal-tick partition -> induced thinning distribution.
inline ThinningDistribution psi_map(const MarketConfig& cfg, const ThinningDistribution& thin) {
    const auto T = execution_time(cfg, thin);
    const auto part = best_response(T, cfg.epsilon, cfg.patience);
    return ThinningDistribution::normalized(part.tick_measures(cfg.n_ticks));
}

inline double residual_norm(const MarketConfig& cfg, const ThinningDistribution& thin) {
    const auto img = psi_map(cfg, thin);
    double s = 0.0;
    for (std::size_t i = 0; i < thin.size(); ++i) {
        const double d = img.alpha[i] - thin.alpha[i];
        s += d * d;
    }
    return std::sqrt(s);
}

struct SolverOptions {
    double tol = 1e-8;
    int max_iter = 20000;
    int n_restarts = 20;
    double eta0 = 0.5;          ///< initial damping of the fixed-point step
    int stagnation_window = 60;  ///< iterations without progress before eta halves
    double eta_floor = 1e-4;
    std::uint64_t seed = 1;
    bool nelder_mead_fallback = true;
    int nelder_mead_evals = 40000;
};

struct EquilibriumResult {
    ThinningDistribution alpha_star;
    QueueAnalytics analytics;      ///< recomputed from alpha_star
    double residual = kInfinite;   ///< ||Psi(alpha*) - alpha*||_2, re-evaluated
    BestResponsePartition partition;
    bool strategy_monotone = false;
    bool converged = false;
    bool multiple_solutions = false;  ///< restarts disagreed by > 1e-4 sup-norm
    int restarts_used = 0;
    std::vector<double> restart_residuals;
};

namespace detail {

inline void renormalize(std::vector<double>& a) {
    double s = 0.0;
    for (double& v : a) {
        if (v < 0.0) v = 0.0;
        s += v;
    }
    if (s <= 0.0) {
        std::fill(a.begin(), a.end(), 1.0 / a.size());
        return;
    }
    for (double& v : a) v /= s;
}

/// Euclidean projection onto the probability simplex.
inline std::vector<double> project_simplex(std::vector<double> v) {
    std::vector<double> u = v;
    std::sort(u.begin(), u.end(), std::greater<>());
    double css = 0.0, tau = 0.0;
    int r = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        css += u[i];
        const double t = (css - 1.0) / (static_cast<double>(i) + 1.0);
        if (u[i] - t > 0.0) {
            r = static_cast<int>(i) + 1;
            tau = t;
        }
    }
    for (double& x : v) x = std::max(x - tau, 0.0);
    if (r == 0) std::fill(v.begin(), v.end(), 1.0 / v.size());
    return v;
}

struct Iterate {
    std::vector<double> alpha;
    double residual = kInfinite;
};

/// Damped iteration alpha <- alpha + eta (Psi(alpha) - alpha). The damping
/// halves whenever the best residual seen stops improving for a window of
/// iterations; the iterate with the smallest residual is kept.
inline Iterate damped_iteration(const MarketConfig& cfg, std::vector<double> a,
                                const SolverOptions& opt) {
    Iterate best;
    double eta = opt.eta0;
    double window_best = kInfinite;
    int since = 0;
    for (int it = 0; it < opt.max_iter; ++it) {
        ThinningDistribution img;
        try {
            img = psi_map(cfg, ThinningDistribution{a});
        } catch (const std::runtime_error&) {
            break;  // every tick unstable here: no response defined, give up on this path
        }
        double nr = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double d = img.alpha[i] - a[i];
            nr += d * d;
        }
        nr = std::sqrt(nr);
        if (nr < best.residual) {
            best.residual = nr;
            best.alpha = a;
        }
        if (nr < opt.tol) break;
        if (nr < window_best * 0.999) {
            window_best = nr;
            since = 0;
        } else if (++since >= opt.stagnation_window) {
            eta = std::max(eta * 0.5, opt.eta_floor);
            since = 0;
        }
        for (std::size_t i = 0; i < a.size(); ++i)
            a[i] += eta * (img.alpha[i] - a[i]);
        renormalize(a);
    }
    return best;
}

/// Nelder-Mead on the squared residual, evaluated after projecting the
/// candidate onto the simplex. Used only as a polish when damping stalls.
inline Iterate nelder_mead_polish(const MarketConfig& cfg, const Iterate& start,
                                  const SolverOptions& opt) {
    const std::size_t n = start.alpha.size();
    auto eval = [&cfg](const std::vector<double>& x) {
        const auto p = project_simplex(x);
        try {
            const auto img = psi_map(cfg, ThinningDistribution{p});
            double s = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i) {
                const double d = img.alpha[i] - p[i];
                s += d * d;
            }
            return s;
        } catch (const std::runtime_error&) {
            return kInfinite;
        }
    };
    struct Vertex {
        std::vector<double> x;
        double f;
    };
    std::vector<Vertex> simp(n + 1);
    simp[0] = {start.alpha, eval(start.alpha)};
    const double step = 0.02;
    for (std::size_t k = 1; k <= n; ++k) {
        auto x = start.alpha;
        x[k - 1] += step;
        simp[k] = {x, eval(x)};
    }
    int evals = static_cast<int>(n) + 1;
    auto by_f = [](const Vertex& a, const Vertex& b) { return a.f < b.f; };
    while (evals < opt.nelder_mead_evals) {
        std::sort(simp.begin(), simp.end(), by_f);
        if (simp[0].f < opt.tol * opt.tol) break;
        if (simp.back().f - simp[0].f < 1e-24) break;
        std::vector<double> centroid(n, 0.0);
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < n; ++i) centroid[i] += simp[k].x[i] / n;
        auto blend = [&](double t) {
            std::vector<double> x(n);
            for (std::size_t i = 0; i < n; ++i)
                x[i] = centroid[i] + t * (centroid[i] - simp.back().x[i]);
            return x;
        };
        auto xr = blend(1.0);
        const double fr = eval(xr);
        ++evals;
        if (fr < simp[0].f) {
            auto xe = blend(2.0);
            const double fe = eval(xe);
            ++evals;
            simp.back() = fe < fr ? Vertex{xe, fe} : Vertex{xr, fr};
        } else if (fr < simp[n - 1].f) {
            simp.back() = {xr, fr};
        } else {
            auto xc = blend(fr < simp.back().f ? 0.5 : -0.5);
            const double fc = eval(xc);
            ++evals;
            if (fc < std::min(fr, simp.back().f)) {
                simp.back() = {xc, fc};
            } else {
                for (std::size_t k = 1; k <= n; ++k) {
                    for (std::size_t i = 0; i < n; ++i)
                        simp[k].x[i] = simp[0].x[i] + 0.5 * (simp[k].x[i] - simp[0].x[i]);
                    simp[k].f = eval(simp[k].x);
                }
                evals += static_cast<int>(n);
            }
        }
    }
    std::sort(simp.begin(), simp.end(), by_f);
    Iterate out;
    out.alpha = project_simplex(simp[0].x);
    out.residual = std::sqrt(simp[0].f);
    return out;
}

}  // namespace detail

/// True when T is strictly increasing with non-decreasing differences, the
/// premise under which the equilibrium strategy is guaranteed monotone.
inline bool execution_time_convex_increasing(std::span<const double> T) {
    for (double t : T)
        if (!std::isfinite(t)) return false;
    double prev_diff = -kInfinite;
    for (std::size_t i = 1; i < T.size(); ++i) {
        const double d = T[i] - T[i - 1];
        if (!(d > 0.0)) return false;
        if (d < prev_diff * (1.0 - 1e-12)) return false;
        prev_diff = d;
    }
    return true;
}

/// Finds a fixed point of the best-response map by damped iteration from the
/// uniform start plus random restarts, keeping the best residual; when
/// damping stalls a Nelder-Mead polish on the squared residual runs from the
/// stalled iterate.
inline EquilibriumResult solve_equilibrium(const MarketConfig& cfg,
                                           const SolverOptions& opt = {}) {
    {
        const auto report = validate(cfg);
        if (!report.ok())
            throw std::invalid_argument("solve_equilibrium: invalid config:\n" + report.to_string());
    }
    const int n = cfg.n_ticks;
    std::mt19937_64 rng(opt.seed);
    std::exponential_distribution<double> expo(1.0);

    detail::Iterate global;
    std::vector<std::vector<double>> solutions;
    std::vector<double> residuals;
    int restarts = 0;
    for (int r = 0; r < std::max(opt.n_restarts, 1); ++r) {
        std::vector<double> a0(n, 1.0 / n);
        if (r > 0) {
            for (double& v : a0) v = expo(rng);
            detail::renormalize(a0);
        }
        auto it = detail::damped_iteration(cfg, std::move(a0), opt);
        if (it.residual >= opt.tol && opt.nelder_mead_fallback && n > 1) {
            auto polished = detail::nelder_mead_polish(cfg, it, opt);
            if (polished.residual < it.residual) it = polished;
        }
        ++restarts;
        residuals.push_back(it.residual);
        if (it.residual < opt.tol) solutions.push_back(it.alpha);
        if (it.residual < global.residual) global = it;
    }

    if (global.alpha.empty())
        throw std::runtime_error(
            "solve_equilibrium: no tested distribution admits a stable tick (market oversupplied)");

    EquilibriumResult out;
    out.alpha_star = ThinningDistribution::normalized(global.alpha);
    out.analytics = analyze_queue(cfg, out.alpha_star);
    out.partition = best_response(out.analytics.exec_time, cfg.epsilon, cfg.patience);
    out.residual = residual_norm(cfg, out.alpha_star);
    out.converged = out.residual < opt.tol;
    out.restarts_used = restarts;
    out.restart_residuals = std::move(residuals);
    for (std::size_t i = 0; i + 1 < solutions.size() && !out.multiple_solutions; ++i)
        for (std::size_t k = i + 1; k < solutions.size(); ++k) {
            double d = 0.0;
            for (int t = 0; t < n; ++t)
                d = std::max(d, std::fabs(solutions[i][t] - solutions[k][t]));
            if (d > 1e-4) {
                out.multiple_solutions = true;
                break;
            }
        }
    out.strategy_monotone = execution_time_convex_increasing(out.analytics.exec_time) &&
                            out.partition.ticks_non_increasing();
    return out;
}

inline int strategy_of_delta(const EquilibriumResult& result, double delta) {
    return result.partition.tick_at(delta);
}

/// Two posted prices p1 < p2 with buyer rates mu1 > mu2. The equilibrium
/// probability a2 of choosing the higher price solves
///   a2 = F_delta( mu1 mu2 (p2 - p1) / (mu1 - mu2 + (a2 / 2)(mu1 + mu2)) ).
struct TwoPriceProblem {
    double p1 = 0.0;
    double p2 = 0.0;
    double mu1 = 0.0;
    double mu2 = 0.0;
    PatienceDistribution patience;
};

struct TwoPriceResult {
    double alpha2 = 0.0;
    double residual = 0.0;
    bool boundary = false;  ///< no interior sign change; nearest endpoint reported
};

inline TwoPriceResult two_price_equilibrium(const TwoPriceProblem& pr) {
    if (!(pr.mu1 > pr.mu2 && pr.mu2 > 0.0))
        throw std::invalid_argument("two_price: need mu1 > mu2 > 0");
    if (!(pr.p2 >= pr.p1))
        throw std::invalid_argument("two_price: need p1 <= p2");
    const double c = pr.mu1 * pr.mu2 * (pr.p2 - pr.p1);
    const double b = pr.mu1 - pr.mu2;
    const double s = 0.5 * (pr.mu1 + pr.mu2);
    auto g = [&](double a) { return a - pr.patience.cdf(c / (b + s * a)); };

    TwoPriceResult out;
    double lo = 0.0, hi = 1.0;
    const double glo = g(lo), ghi = g(hi);
    if (glo > 0.0 || ghi < 0.0) {
        out.boundary = true;
        out.alpha2 = std::fabs(glo) <= std::fabs(ghi) ? lo : hi;
        out.residual = std::fabs(g(out.alpha2));
        return out;
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) < 0.0 ? lo : hi) = mid;
    }
    out.alpha2 = 0.5 * (lo + hi);
    out.residual = std::fabs(g(out.alpha2));
    return out;
}

}  // namespace lobeq
