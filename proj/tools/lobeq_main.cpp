// Command-line front end: equilibrium computation, closed-form analytics,
// discrete-event simulation and the verification suite for the posted-price
// exchange model.
//
// Exit codes: 0 success, 1 validation/usage error, 2 convergence failure,
// 3 verification failure.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lobeq/lobeq.hpp"
#include "lobeq/verify.hpp"

namespace fs = std::filesystem;
using namespace lobeq;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNoConvergence = 2;
constexpr int kExitVerifyFailed = 3;

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 1;
    std::vector<std::string> overrides;
    std::string alpha_from;
    bool quick = false;
};

config::ConfigMap load_map(const CommonArgs& args) {
    config::ConfigMap map;
    if (!args.config_path.empty()) map = config::load_file(args.config_path);
    for (const auto& o : args.overrides) config::apply_override(map, o);
    return map;
}

fs::path out_file(const CommonArgs& args, const std::string& name) {
    fs::create_directories(args.out_dir);
    return fs::path(args.out_dir) / name;
}

MarketConfig validated_market(const config::ConfigMap& map) {
    auto market = config::market_from(map);
    const auto report = validate(market);
    if (!report.ok())
        throw config::ConfigError("invalid market config:\n" + report.to_string());
    return market;
}

/// Reads a posting law: an explicit alpha.values list, or the alpha_star /
/// alpha column of a previously written CSV.
ThinningDistribution resolve_alpha(const config::ConfigMap& map, const CommonArgs& args, int n) {
    if (!args.alpha_from.empty()) {
        const auto table = csv::read(args.alpha_from);
        const std::string col = table.column_index("alpha_star") >= 0 ? "alpha_star" : "alpha";
        auto values = table.numeric_column(col);
        if (static_cast<int>(values.size()) != n)
            throw config::ConfigError("--alpha-from: expected " + std::to_string(n) + " rows");
        return ThinningDistribution{std::move(values)};
    }
    auto values = config::alpha_values(map);
    if (values.empty())
        throw config::ConfigError("no posting law: give alpha.values or --alpha-from");
    if (static_cast<int>(values.size()) != n)
        throw config::ConfigError("alpha.values: expected " + std::to_string(n) + " entries");
    return ThinningDistribution{std::move(values)};
}

void write_analytics_csv(const fs::path& path, const MarketConfig& cfg,
                         const ThinningDistribution& thin, const QueueAnalytics& a,
                         std::uint64_t cfg_hash, std::uint64_t seed,
                         const char* alpha_col = "alpha") {
    csv::Writer w(path.string(), cfg_hash, seed);
    w.header({"tick", alpha_col, "rho", "exec_time", "inventory", "tail"});
    for (int j = 0; j < cfg.n_ticks; ++j)
        w.row(j + 1, thin.alpha[j], a.rho[j], a.exec_time[j], a.inventory[j], a.tail[j]);
}

int cmd_analyze(const CommonArgs& args) {
    const auto map = load_map(args);
    const auto market = validated_market(map);
    const auto thin = resolve_alpha(map, args, market.n_ticks);
    const auto analytics = analyze_queue(market, thin);
    write_analytics_csv(out_file(args, "analytics.csv"), market, thin, analytics,
                        config::hash(map), args.seed);
    std::cout << "analytics.csv written (" << market.n_ticks << " ticks)\n";
    return kExitOk;
}

int cmd_equilibrate(const CommonArgs& args) {
    const auto map = load_map(args);
    const auto market = validated_market(map);
    const auto opt = config::solver_from(map, args.seed);
    const auto eq = solve_equilibrium(market, opt);
    const auto cfg_hash = config::hash(map);

    write_analytics_csv(out_file(args, "equilibrium.csv"), market, eq.alpha_star, eq.analytics,
                        cfg_hash, args.seed, "alpha_star");
    {
        csv::Writer w(out_file(args, "partition.csv").string(), cfg_hash, args.seed);
        w.header({"delta_lo", "delta_hi", "tick"});
        for (const auto& c : eq.partition.cells) w.row(c.lo, c.hi, c.tick);
    }

    double mean_a = 0.0, m2_a = 0.0, sum_r = 0.0, mean_r = 0.0, m2_r = 0.0;
    for (int j = 0; j < market.n_ticks; ++j) {
        const double tick = j + 1.0;
        mean_a += tick * eq.alpha_star.alpha[j];
        m2_a += tick * tick * eq.alpha_star.alpha[j];
        sum_r += eq.analytics.rho[j];
    }
    for (int j = 0; j < market.n_ticks; ++j) {
        const double tick = j + 1.0;
        mean_r += tick * eq.analytics.rho[j] / sum_r;
        m2_r += tick * tick * eq.analytics.rho[j] / sum_r;
    }
    {
        std::ofstream s(out_file(args, "summary.txt"));
        s << "status = " << (eq.converged ? "CONVERGED" : "FAILED") << '\n'
          << "residual = " << csv::format(eq.residual) << '\n'
          << "alpha_mean_tick = " << csv::format(mean_a) << '\n'
          << "alpha_std_tick = " << csv::format(std::sqrt(m2_a - mean_a * mean_a)) << '\n'
          << "price_mean_tick = " << csv::format(mean_r) << '\n'
          << "price_std_tick = " << csv::format(std::sqrt(m2_r - mean_r * mean_r)) << '\n'
          << "strategy_monotone = " << (eq.strategy_monotone ? "true" : "false") << '\n'
          << "restarts_used = " << eq.restarts_used << '\n'
          << "multiple_solutions = " << (eq.multiple_solutions ? "true" : "false") << '\n';
    }
    std::cout << "equilibrium residual " << eq.residual
              << (eq.converged ? "" : " (FAILED to reach tolerance)") << '\n';
    return eq.converged ? kExitOk : kExitNoConvergence;
}

int cmd_simulate(const CommonArgs& args) {
    const auto map = load_map(args);
    const auto market = validated_market(map);
    auto sim = config::sim_from(map, market, args.seed);
    if (args.quick) sim.horizon = std::max<long long>(sim.horizon / 10, 10 * sim.n_batches);

    if (sim.mode == SellerMode::AlphaDriven) {
        if (!args.alpha_from.empty() || map.count("alpha.values")) {
            sim.alpha = resolve_alpha(map, args, market.n_ticks);
        } else {
            const auto eq = solve_equilibrium(market, config::solver_from(map, args.seed));
            if (!eq.converged) {
                std::cerr << "equilibrium solve failed; simulate with an explicit alpha\n";
                return kExitNoConvergence;
            }
            sim.alpha = eq.alpha_star;
        }
    } else {
        const auto eq = solve_equilibrium(market, config::solver_from(map, args.seed));
        if (!eq.converged) return kExitNoConvergence;
        sim.partition = eq.partition;
    }

    const auto est = run(sim);
    const auto cfg_hash = config::hash(map);
    {
        csv::Writer w(out_file(args, "sim.csv").string(), cfg_hash, args.seed);
        w.header({"tick", "posts", "trades", "empirical_alpha", "mean_wait", "wait_hw",
                  "inventory", "inventory_hw", "tail", "tail_hw", "exec_pmf",
                  "cond_inventory", "cond_time_fraction", "cond_low_confidence", "stationary"});
        for (int j = 0; j < est.n_ticks; ++j)
            w.row(j + 1, est.posts[j], est.trades[j], est.empirical_alpha[j], est.mean_wait[j],
                  est.wait_half_width[j], est.time_avg_inventory[j], est.inventory_half_width[j],
                  est.best_price_tail[j], est.best_price_tail_half_width[j],
                  est.exec_price_pmf[j], est.cond_inventory[j], est.cond_time_fraction[j],
                  int(est.cond_low_confidence[j]), int(est.stationary[j]));
        w.comment("n_trades=" + std::to_string(est.n_trades) +
                  " n_lost_buyers=" + std::to_string(est.n_lost_buyers) +
                  " buyer_arrivals=" + std::to_string(est.buyer_arrivals));
        w.comment("measured_time=" + csv::format(est.measured_time) +
                  " seed=" + std::to_string(est.seed));
    }
    {
        const auto driving = sim.mode == SellerMode::AlphaDriven
                                 ? sim.alpha
                                 : ThinningDistribution::normalized(
                                       sim.partition.tick_measures(market.n_ticks));
        const auto analytics = analyze_queue(market, driving);
        const double tol = args.quick ? 0.10 : 0.05;
        csv::Writer w(out_file(args, "comparison.csv").string(), cfg_hash, args.seed);
        w.header({"tick", "alpha", "exec_time_analytic", "mean_wait_sim", "wait_hw", "rel_err",
                  "trades", "stationary", "pass"});
        for (int j = 0; j < est.n_ticks; ++j) {
            const double rel = std::isfinite(analytics.exec_time[j]) && est.trades[j] > 0
                                   ? std::fabs(est.mean_wait[j] - analytics.exec_time[j]) /
                                         analytics.exec_time[j]
                                   : std::numeric_limits<double>::quiet_NaN();
            const bool judged = est.trades[j] >= 1000 && est.stationary[j];
            const int pass = judged ? (rel <= tol ? 1 : 0) : -1;  // -1: not judged
            w.row(j + 1, driving.alpha[j], analytics.exec_time[j], est.mean_wait[j],
                  est.wait_half_width[j], rel, est.trades[j], int(est.stationary[j]), pass);
        }
    }
    std::cout << "sim.csv and comparison.csv written (" << est.n_trades << " trades)\n";
    return kExitOk;
}

int cmd_inelastic(const CommonArgs& args) {
    using namespace inelastic;
    const auto map = load_map(args);
    const auto par = config::inelastic_from(map);
    check_params(par);
    const auto cfg_hash = config::hash(map);

    const bool cong = par.congested();
    const double K = cong ? kInfinite : price_support(par);
    const double p_cap = config::get_double(
        map, "inelastic.p_max", cong ? 10.0 * par.delta_bar / par.mu : 0.995 * K);
    const double p_max = cong ? p_cap : std::min(p_cap, 0.995 * K);

    auto cdf_at = [&](double p) { return price_cdf(par, p); };
    auto quantile = [&](double u) {
        double lo = 0.0, hi = cong ? p_cap : K;
        while (cong && cdf_at(hi) < u) hi *= 2.0;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (cdf_at(mid) < u ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };

    const int n_grid = 1000;
    std::vector<double> grid(n_grid);
    for (int i = 0; i < n_grid; ++i) grid[i] = p_max * i / (n_grid - 1.0);
    {
        csv::Writer w(out_file(args, "curves.csv").string(), cfg_hash, args.seed);
        w.header({"p", "F", "Q", "D"});
        double depth = 0.0, prev_p = 0.0, prev_q = inventory_density(par, 0.0);
        for (int i = 0; i < n_grid; ++i) {
            const double p = grid[i];
            const double q = inventory_density(par, p);
            if (cong) {
                depth = market_depth(par, p);
            } else {
                depth += 0.5 * (q + prev_q) * (p - prev_p);  // running trapezoid
            }
            w.row(p, cdf_at(p), q, depth);
            prev_p = p;
            prev_q = q;
        }
    }
    {
        std::vector<double> s_list = map.count("inelastic.s_values")
                                         ? config::detail::to_list("inelastic.s_values",
                                                                   map.at("inelastic.s_values"))
                                         : std::vector<double>{0.0, quantile(0.25), quantile(0.5),
                                                               quantile(0.75)};
        csv::Writer w(out_file(args, "conditional.csv").string(), cfg_hash, args.seed);
        w.header({"p", "s", "Qc"});
        for (const double s : s_list)
            for (int i = 0; i < n_grid; ++i)
                if (grid[i] >= s) w.row(grid[i], s, conditional_density(par, grid[i], s));
    }
    {
        std::ofstream out(out_file(args, "ode_check.txt"));
        if (!cong) {
            const auto g = graded_grid(0.0, 0.999 * K, 10'000, 2.0);
            std::vector<double> f(g.size());
            for (std::size_t i = 0; i < g.size(); ++i) f[i] = equilibrium_cdf(par, g[i]);
            out << "support_K = " << csv::format(K) << '\n';
            out << "closed_form_ode_residual = " << csv::format(ode_residual(par, g, f)) << '\n';
            const auto ode = integrate_ode(par, 1.2 * K);
            double err = 0.0;
            for (std::size_t i = 0; i < ode.grid.size(); ++i)
                if (ode.f[i] <= 0.99)
                    err = std::max(err, std::fabs(ode.f[i] - equilibrium_cdf(par, ode.grid[i])));
            out << "integration_max_err = " << csv::format(err) << '\n';
        } else {
            std::vector<double> f(grid.size());
            for (std::size_t i = 0; i < grid.size(); ++i) f[i] = cdf_at(grid[i]);
            out << "closed_form_ode_residual = "
                << csv::format(ode_residual(par, grid, f)) << '\n';
            const auto ode = integrate_ode(par, p_max);
            double err = 0.0;
            for (std::size_t i = 0; i < ode.grid.size(); ++i)
                err = std::max(err, std::fabs(ode.f[i] - cdf_at(ode.grid[i])));
            out << "integration_max_err = " << csv::format(err) << '\n';
            if (par.gamma < 1.0) {
                const double c =
                    (2.0 * par.gamma - 1.0) * par.mu / (2.0 * par.gamma * par.delta_bar);
                const int n = 400;
                std::vector<double> x(n), y(n);
                for (int i = 0; i < n; ++i) {
                    const double p = 10.0 + (1000.0 - 10.0) * i / (n - 1.0);
                    x[i] = std::log(1.0 + c * p);
                    y[i] = std::log(gamma_tail(par, p));
                }
                out << "tail_loglog_slope = " << csv::format(stats::lsq_slope(x, y)) << '\n';
            }
        }
    }
    std::cout << "curves.csv, conditional.csv and ode_check.txt written\n";
    return kExitOk;
}

int cmd_two_price(const CommonArgs& args) {
    const auto map = load_map(args);
    const auto market = config::market_from(map);  // carries the patience family
    const auto pr = config::two_price_from(map, market);
    const auto sol = two_price_equilibrium(pr);
    {
        std::ofstream out(out_file(args, "two_price.txt"));
        out << "alpha2 = " << csv::format(sol.alpha2) << '\n'
            << "residual = " << csv::format(sol.residual) << '\n'
            << "boundary = " << (sol.boundary ? "true" : "false") << '\n';
    }
    std::cout << "alpha2 = " << sol.alpha2 << " (residual " << sol.residual << ")\n";
    return kExitOk;
}

int cmd_verify(const CommonArgs& args) {
    verify::VerifyOptions opt;
    opt.quick = args.quick;
    opt.seed = args.seed;
    const auto results = verify::run_verification(opt);
    for (const auto& r : results)
        std::cout << r.id << "  " << (r.pass ? "PASS" : "FAIL") << "  " << r.label << " — "
                  << r.detail << '\n';
    const bool ok = verify::all_passed(results);
    std::cout << (ok ? "all criteria passed\n" : "some criteria FAILED\n");
    return ok ? kExitOk : kExitVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"equilibrium analytics and simulation for a posted-price exchange"};
    app.require_subcommand(1);

    CommonArgs args;
    auto add_common = [&args](CLI::App* cmd, bool with_alpha = false) {
        cmd->add_option("--config", args.config_path, "key = value config file");
        cmd->add_option("--out", args.out_dir, "output directory");
        cmd->add_option("--seed", args.seed, "random seed");
        cmd->add_option("--set", args.overrides, "override a config key (key=value)");
        cmd->add_flag("--quick", args.quick, "reduced budgets, widened simulation tolerances");
        if (with_alpha)
            cmd->add_option("--alpha-from", args.alpha_from,
                            "CSV with an alpha or alpha_star column");
    };

    auto* c_analyze = app.add_subcommand("analyze", "closed-form per-tick analytics");
    add_common(c_analyze, true);
    auto* c_eq = app.add_subcommand("equilibrate", "solve for the equilibrium posting law");
    add_common(c_eq);
    auto* c_sim = app.add_subcommand("simulate", "discrete-event simulation plus comparison");
    add_common(c_sim, true);
    auto* c_inel = app.add_subcommand("inelastic", "continuous-price closed forms");
    add_common(c_inel);
    auto* c_two = app.add_subcommand("two-price", "two-price equilibrium root");
    add_common(c_two);
    auto* c_verify = app.add_subcommand("verify", "run the verification suite");
    add_common(c_verify);

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_analyze->parsed()) return cmd_analyze(args);
        if (c_eq->parsed()) return cmd_equilibrate(args);
        if (c_sim->parsed()) return cmd_simulate(args);
        if (c_inel->parsed()) return cmd_inelastic(args);
        if (c_two->parsed()) return cmd_two_price(args);
        if (c_verify->parsed()) return cmd_verify(args);
    } catch (const config::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
