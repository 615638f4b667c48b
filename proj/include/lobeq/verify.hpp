#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "lobeq/equilibrium.hpp"
#include "lobeq/inelastic.hpp"
#include "lobeq/market.hpp"
#include "lobeq/queue.hpp"
#include "lobeq/simulator.hpp"
#include "lobeq/stats.hpp"

namespace lobeq::verify {

struct VerifyOptions {
    bool quick = false;  ///< horizons cut 10x, simulation tolerances doubled
    std::uint64_t seed = 1;
};

struct CriterionResult {
    std::string id;
    std::string label;
    bool pass = false;
    std::string detail;
};

namespace detail {

inline std::string fmt(const char* pattern, auto... vals) {
    char buf[512];
    std::snprintf(buf, sizeof buf, pattern, vals...);
    return buf;
}

inline MarketConfig mm1_market() {
    MarketConfig cfg;
    cfg.lambda = 3.0;
    cfg.mu = 12.0;
    cfg.epsilon = 1.0;
    cfg.n_ticks = 1;
    cfg.demand.beta = {1.0};
    cfg.patience = PatienceDistribution::Uniform(1.0);
    return cfg;
}

}  // namespace detail

/// Single-tick market with unit demand reduces to M/M/1: wait 1/(mu - lambda),
/// inventory rho/(1 - rho), both to 1e-12.
inline CriterionResult check_mm1_exactness() {
    const auto cfg = detail::mm1_market();
    const auto thin = ThinningDistribution::point_mass(1, 1);
    const double T = execution_time(cfg, thin)[0];
    const double Q = expected_inventory(cfg, thin)[0];
    const double errT = std::fabs(T - 1.0 / 9.0);
    const double errQ = std::fabs(Q - 1.0 / 3.0);
    return {"A1", "single-tick M/M/1 exactness", errT < 1e-12 && errQ < 1e-12,
            detail::fmt("wait err %.2e, inventory err %.2e (tol 1e-12)", errT, errQ)};
}

/// Per-tick simulated mean waits against the closed-form execution times at
/// the solved equilibrium, on ticks with enough trades.
inline CriterionResult check_wait_formula_vs_sim(const EquilibriumResult& eq,
                                                 const SimEstimates& est,
                                                 const VerifyOptions& opt) {
    const double tol = opt.quick ? 0.10 : 0.05;
    double worst = 0.0;
    int checked = 0, worst_tick = 0;
    for (int j = 0; j < est.n_ticks; ++j) {
        if (est.trades[j] < 1000 || !est.stationary[j]) continue;
        const double rel =
            std::fabs(est.mean_wait[j] - eq.analytics.exec_time[j]) / eq.analytics.exec_time[j];
        ++checked;
        if (rel > worst) {
            worst = rel;
            worst_tick = j + 1;
        }
    }
    return {"A2", "execution-time formula vs simulation",
            checked > 0 && worst <= tol,
            detail::fmt("%d ticks checked, worst rel err %.4f at tick %d (tol %.2f)", checked,
                        worst, worst_tick, tol)};
}

/// Conditional block inventory: closed form vs a two-class simulation, plus
/// the unconditioned single-class reduction.
inline CriterionResult check_conditional_inventory(const VerifyOptions& opt) {
    MarketConfig cfg;
    cfg.lambda = 1.0;
    cfg.mu = 2.0;
    cfg.epsilon = 1.0;
    cfg.n_ticks = 2;
    cfg.demand.beta = {1.0, 1.0};
    cfg.patience = PatienceDistribution::Uniform(1.0);
    const auto thin = ThinningDistribution{{0.5, 0.5}};
    const auto rho = traffic_intensity(cfg, thin);  // (0.25, 0.25)

    const double closed = conditional_inventory(rho, 2, 2);
    const double reduction = conditional_inventory(rho, 1, 2);
    const double r = rho[0] + rho[1];
    const double err_reduction = std::fabs(reduction - r / (1.0 - r));

    SimConfig sim;
    sim.market = cfg;
    sim.alpha = thin;
    sim.horizon = opt.quick ? 200'000 : 2'000'000;
    sim.seed = opt.seed + 3;
    const auto est = run(sim);
    const double tol = opt.quick ? 0.20 : 0.10;
    const bool enough = est.cond_time_fraction[1] >= 0.01;
    const double rel = std::fabs(est.cond_inventory[1] - closed) / closed;
    return {"A3", "conditional inventory vs two-class simulation",
            enough && rel <= tol && err_reduction < 1e-12,
            detail::fmt("sim %.4f vs closed %.4f (rel %.3f, tol %.2f); reduction err %.2e",
                        est.cond_inventory[1], closed, rel, tol, err_reduction)};
}

/// Reference-market equilibrium: residual, posted-price and time-average
/// price moments, and strategy monotonicity.
inline CriterionResult check_reference_equilibrium(const EquilibriumResult& eq,
                                                   const MarketConfig& cfg) {
    double mean_a = 0.0, m2_a = 0.0, sum_r = 0.0, mean_r = 0.0, m2_r = 0.0;
    for (int j = 0; j < cfg.n_ticks; ++j) {
        const double tick = j + 1.0;
        mean_a += tick * eq.alpha_star.alpha[j];
        m2_a += tick * tick * eq.alpha_star.alpha[j];
        sum_r += eq.analytics.rho[j];
    }
    for (int j = 0; j < cfg.n_ticks; ++j) {
        const double tick = j + 1.0;
        const double w = eq.analytics.rho[j] / sum_r;
        mean_r += tick * w;
        m2_r += tick * tick * w;
    }
    const double std_a = std::sqrt(m2_a - mean_a * mean_a);
    const double std_r = std::sqrt(m2_r - mean_r * mean_r);
    const bool pass = eq.residual < 1e-6 && std::fabs(mean_a - 12.70) <= 1.0 &&
                      std::fabs(std_a - 10.52) <= 1.0 && std::fabs(mean_r - 23.77) <= 1.0 &&
                      std::fabs(std_r - 15.55) <= 1.0 && eq.strategy_monotone;
    return {"A4", "reference-market equilibrium reproduction", pass,
            detail::fmt("residual %.2e; alpha mean/std %.2f/%.2f (want 12.70/10.52 +-1); "
                        "price mean/std %.2f/%.2f (want 23.77/15.55 +-1); monotone %d",
                        eq.residual, mean_a, std_a, mean_r, std_r,
                        static_cast<int>(eq.strategy_monotone))};
}

/// Closed forms against the equilibrium ODE and the numerical integrator.
inline CriterionResult check_ode_agreement() {
    using namespace inelastic;
    const InelasticParams sub{0.5, 12.0, 160.0, 1.0};
    const InelasticParams cong{1.0, 12.0, 160.0, 0.75};
    const double K = price_support(sub);

    const auto grid_sub = graded_grid(0.0, 0.999 * K, 10'000, 2.0);
    std::vector<double> f_sub(grid_sub.size());
    for (std::size_t i = 0; i < grid_sub.size(); ++i) f_sub[i] = equilibrium_cdf(sub, grid_sub[i]);
    const double res_sub = ode_residual(sub, grid_sub, f_sub);

    const double pmax = 10.0 * cong.delta_bar / cong.mu;
    std::vector<double> grid_cong(10'000), f_cong(10'000);
    for (int i = 0; i < 10'000; ++i) {
        grid_cong[i] = pmax * i / 9999.0;
        f_cong[i] = 1.0 - gamma_tail(cong, grid_cong[i]);
    }
    const double res_cong = ode_residual(cong, grid_cong, f_cong);

    const auto ode_sub = integrate_ode(sub, 1.2 * K);
    double err_sub = 0.0, p_hit = kInfinite;
    for (std::size_t i = 0; i < ode_sub.grid.size(); ++i) {
        if (ode_sub.f[i] <= 0.99)
            err_sub = std::max(err_sub,
                               std::fabs(ode_sub.f[i] - equilibrium_cdf(sub, ode_sub.grid[i])));
        if (ode_sub.f[i] >= 1.0 - 1e-4 && p_hit == kInfinite) p_hit = ode_sub.grid[i];
    }
    const double terminal_gap = std::fabs(p_hit - K) / K;

    const auto ode_cong = integrate_ode(cong, pmax);
    double err_cong = 0.0;
    for (std::size_t i = 0; i < ode_cong.grid.size(); ++i)
        err_cong = std::max(err_cong, std::fabs(ode_cong.f[i] -
                                                (1.0 - gamma_tail(cong, ode_cong.grid[i]))));
    const InelasticParams cong1{1.0, 12.0, 160.0, 1.0};
    const auto ode_lim = integrate_ode(cong1, pmax);
    double err_lim = 0.0;
    for (std::size_t i = 0; i < ode_lim.grid.size(); ++i)
        err_lim = std::max(err_lim,
                           std::fabs(ode_lim.f[i] - limit_cdf(cong1, ode_lim.grid[i])));

    const double end0 = std::fabs(equilibrium_cdf(sub, 0.0));
    const double endK = std::fabs(equilibrium_cdf(sub, K) - 1.0);

    const bool pass = res_sub < 1e-6 && res_cong < 1e-6 && err_sub < 1e-6 &&
                      terminal_gap < 1e-3 && err_cong < 1e-6 && err_lim < 1e-6 &&
                      end0 < 1e-9 && endK < 1e-9;
    return {"A5", "closed-form / ODE agreement", pass,
            detail::fmt("residuals %.2e / %.2e; integration err %.2e (support gap %.1e), "
                        "%.2e, %.2e; endpoints %.1e / %.1e",
                        res_sub, res_cong, err_sub, terminal_gap, err_cong, err_lim, end0, endK)};
}

/// Congested-limit convergence and the power-law tail, depth and price-impact
/// exponents of the gamma = 3/4 family.
inline CriterionResult check_power_law_limit() {
    using namespace inelastic;
    const InelasticParams near_cong{0.999, 12.0, 160.0, 1.0};
    const InelasticParams cong{1.0, 12.0, 160.0, 1.0};
    double sup = 0.0;
    const double pmax = 100.0 * cong.delta_bar / cong.mu;
    for (int i = 0; i <= 20'000; ++i) {
        const double p = pmax * i / 20'000.0;
        sup = std::max(sup, std::fabs(equilibrium_cdf(near_cong, p) - limit_cdf(cong, p)));
    }

    // gamma = 3/4 with mu = delta_bar so the tail scale is (1 + p/3)
    const InelasticParams fam{1.0, 1.0, 1.0, 0.75};
    const double c = (2.0 * fam.gamma - 1.0) * fam.mu / (2.0 * fam.gamma * fam.delta_bar);
    const int n = 400;
    std::vector<double> x(n), tail(n), depth(n);
    for (int i = 0; i < n; ++i) {
        const double p = 10.0 + (1000.0 - 10.0) * i / (n - 1.0);
        x[i] = std::log(1.0 + c * p);
        tail[i] = std::log(gamma_tail(fam, p));
        depth[i] = std::log(market_depth(fam, p));
    }
    const double slope_tail = stats::lsq_slope(x, tail);
    const double slope_depth = stats::lsq_slope(x, depth);
    const double slope_impact = stats::lsq_slope(depth, x);

    const bool pass = sup < 0.01 && std::fabs(slope_tail + 1.5) <= 0.01 &&
                      std::fabs(slope_depth - 1.5) <= 0.01 &&
                      std::fabs(slope_impact - 2.0 / 3.0) <= 0.01;
    return {"A6", "power-law limit and depth exponents", pass,
            detail::fmt("sup|F_0.999 - F_lim| %.4f (tol 0.01); slopes tail %.4f (want -1.5), "
                        "depth %.4f (want 1.5), impact %.4f (want 0.667)",
                        sup, slope_tail, slope_depth, slope_impact)};
}

/// Equilibrium self-consistency through the simulator: the replication-mean
/// empirical best response at the solved law stays close to it, and a
/// perturbed law (tick-1 mass pushed to the top tick) is flagged as far from
/// equilibrium.
inline CriterionResult check_self_consistency(const MarketConfig& cfg,
                                              const EquilibriumResult& eq,
                                              const VerifyOptions& opt) {
    const double tol = opt.quick ? 0.10 : 0.05;

    SimConfig sim;
    sim.market = cfg;
    sim.alpha = eq.alpha_star;
    sim.horizon = opt.quick ? 1'000'000 : 2'000'000;
    sim.seed = opt.seed + 100;
    const int reps = opt.quick ? 24 : 128;
    const auto response = averaged_best_response(sim, reps, cfg.epsilon, cfg.patience, 100);
    const double tv_eq = total_variation(response.alpha, eq.alpha_star.alpha);

    auto perturbed = eq.alpha_star.alpha;
    const double moved = std::min(0.10, perturbed.front());
    perturbed.front() -= moved;
    perturbed.back() += moved;
    SimConfig sim_p = sim;
    sim_p.alpha = ThinningDistribution::normalized(perturbed);
    sim_p.seed = opt.seed + 500;
    const auto response_p = averaged_best_response(sim_p, reps, cfg.epsilon, cfg.patience, 100);
    const double tv_p = total_variation(response_p.alpha, sim_p.alpha.alpha);

    return {"A7", "equilibrium self-consistency through the simulator",
            tv_eq < tol && tv_p > tol,
            detail::fmt("mean-response TV at equilibrium %.4f (< %.2f); "
                        "TV after perturbation %.4f (> %.2f); %d replications",
                        tv_eq, tol, tv_p, tol, reps)};
}

/// Two-price root: fixed-point residual and the quadratic it must satisfy
/// under uniform patience.
inline CriterionResult check_two_price() {
    TwoPriceProblem pr;
    pr.p1 = 1.0;
    pr.p2 = 1.5;
    pr.mu1 = 2.0;
    pr.mu2 = 1.0;
    pr.patience = PatienceDistribution::Uniform(1.0);
    const auto sol = two_price_equilibrium(pr);
    const double a = 0.5 * (pr.mu1 + pr.mu2);
    const double b = pr.mu1 - pr.mu2;
    const double c = pr.mu1 * pr.mu2 * (pr.p2 - pr.p1);
    const double quad = std::fabs(a * sol.alpha2 * sol.alpha2 + b * sol.alpha2 - c);
    return {"A8", "two-price equilibrium root", sol.residual < 1e-10 && quad < 1e-10,
            detail::fmt("alpha2 %.10f, fixed-point residual %.2e, quadratic residual %.2e "
                        "(tol 1e-10)",
                        sol.alpha2, sol.residual, quad)};
}

/// Runs every acceptance criterion; shared artifacts (the reference-market
/// equilibrium and a simulation at it) are computed once.
inline std::vector<CriterionResult> run_verification(const VerifyOptions& opt = {}) {
    std::vector<CriterionResult> out;
    out.push_back(check_mm1_exactness());

    const auto cfg = default_market_config();
    SolverOptions sopt;
    sopt.seed = opt.seed;
    sopt.n_restarts = opt.quick ? 3 : 20;
    const auto eq = solve_equilibrium(cfg, sopt);

    SimConfig sim;
    sim.market = cfg;
    sim.alpha = eq.alpha_star;
    sim.horizon = opt.quick ? 100'000 : 1'000'000;
    sim.seed = opt.seed + 1;
    const auto est = run(sim);

    out.push_back(check_wait_formula_vs_sim(eq, est, opt));
    out.push_back(check_conditional_inventory(opt));
    out.push_back(check_reference_equilibrium(eq, cfg));
    out.push_back(check_ode_agreement());
    out.push_back(check_power_law_limit());
    out.push_back(check_self_consistency(cfg, eq, opt));
    out.push_back(check_two_price());
    return out;
}

inline bool all_passed(const std::vector<CriterionResult>& results) {
    for (const auto& r : results)
        if (!r.pass) return false;
    return true;
}

}  // namespace lobeq::verify
