#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "lobeq/equilibrium.hpp"
#include "lobeq/market.hpp"
#include "lobeq/queue.hpp"

using namespace lobeq;

namespace {

PatienceDistribution uniform_patience(double dbar) {
    return PatienceDistribution::Uniform(dbar);
}

// independently computed image of the best-response map at the uniform
// posting law on the reference market (regression fixture)
constexpr double kPsiUniformFixture[50] = {
    0.0, 0.0, 0.0, 0.0, 0.0,
    0.0036229473739266549, 0.075455613527961263, 0.071512132296747022,
    0.067678188499123326,  0.06395359551508395,  0.060338159864248286,
    0.056831680220254754,  0.053433946263677701, 0.050144737343963963,
    0.046963820914814547,  0.043890950700621878, 0.040925864543063961,
    0.038068281867909892,  0.03531790070042079,  0.032674394146331109,
    0.030137406241881215,  0.027706547064569126, 0.025381386986730675,
    0.023161449952120716,  0.021046205669053047, 0.019035060656047292,
    0.017127348171312451,  0.015322317245809888, 0.013619121388260824,
    0.012016808150050087,  0.0105143118072452,   0.0091104532178829037,
    0.0078039538715369422, 0.0065934758677465809, 0.0054777067880680541,
    0.0044555188273456958, 0.003526244982877914, 0.0026901288803264176,
    0.0019490103179583859, 0.0013072864744098115, 0.00077310717579365208,
    0.00035959500898973223, 7.3341475834289683e-05, 0.0, 0.0, 0.0, 0.0, 0.0,
    0.0, 0.0};

}  // namespace

TEST_CASE("parallel waits hand the whole range to the higher tick") {
    const std::vector<double> T = {1.0, 1.0};
    const auto part = best_response(T, 1.0, uniform_patience(2.0));
    const auto m = part.tick_measures(2);
    REQUIRE(m[0] == 0.0);
    REQUIRE(m[1] == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("two ticks split at the indifference point") {
    // 1 - d = 2 - 2d at d = 1; uniform patience on [0, 2] splits evenly
    const std::vector<double> T = {1.0, 2.0};
    const auto part = best_response(T, 1.0, uniform_patience(2.0));
    REQUIRE(part.cells.size() == 2);
    REQUIRE(part.cells[0].tick == 2);
    REQUIRE(part.cells[0].hi == Catch::Approx(1.0).margin(1e-12));
    const auto m = part.tick_measures(2);
    REQUIRE(m[0] == Catch::Approx(0.5).margin(1e-12));
    REQUIRE(m[1] == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("unpostable ticks get no measure") {
    const std::vector<double> T = {1.0, kInfinite};
    const auto part = best_response(T, 1.0, uniform_patience(2.0));
    const auto m = part.tick_measures(2);
    REQUIRE(m[0] == Catch::Approx(1.0).margin(1e-15));
    REQUIRE(m[1] == 0.0);

    const std::vector<double> none = {kInfinite, kInfinite};
    REQUIRE_THROWS_AS(best_response(none, 1.0, uniform_patience(2.0)), std::runtime_error);
}

TEST_CASE("partition lookup follows the tie and endpoint rules") {
    const std::vector<double> T = {1.0, 2.0};
    const auto part = best_response(T, 1.0, uniform_patience(2.0));
    REQUIRE(part.tick_at(0.0) == 2);   // zero waiting cost takes the top tick
    REQUIRE(part.tick_at(1.0) == 1);   // boundary resolves to the lower tick
    REQUIRE(part.tick_at(2.0) == 1);
    REQUIRE_THROWS_AS(part.tick_at(-0.1), std::domain_error);
    REQUIRE_THROWS_AS(part.tick_at(2.1), std::domain_error);

    const std::vector<double> T3 = {0.5, 1.0, kInfinite};
    const auto part3 = best_response(T3, 1.0, uniform_patience(4.0));
    REQUIRE(part3.tick_at(0.0) == 2);  // highest tick with a finite wait
}

TEST_CASE("the assigned tick maximizes the surplus (envelope brute force)") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 20);
        std::vector<double> T(n);
        double t = 0.05 + unif(rng);
        for (auto& v : T) {
            t += 0.3 * unif(rng);
            v = t;
        }
        if (trial % 3 == 0) std::shuffle(T.begin(), T.end(), rng);  // non-monotone waits
        if (trial % 4 == 0) T[rng() % n] = kInfinite;
        const double dbar = 0.5 + 8.0 * unif(rng);
        const auto patience = uniform_patience(dbar);
        const auto part = best_response(T, 1.0, patience);

        for (int k = 0; k < 50; ++k) {
            const double d = dbar * unif(rng);
            const int tick = part.tick_at(d);
            double best = -kInfinite;
            for (int j = 0; j < n; ++j)
                if (std::isfinite(T[j])) best = std::max(best, (j + 1) * 1.0 - d * T[j]);
            const double got = tick * 1.0 - d * T[tick - 1];
            REQUIRE(got >= best - 1e-12);
        }
    }
}

TEST_CASE("the best-response map preserves the simplex") {
    const auto cfg = default_market_config();
    std::mt19937_64 rng(23);
    std::exponential_distribution<double> expo(1.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> w(cfg.n_ticks);
        for (auto& v : w) v = expo(rng);
        const auto img = psi_map(cfg, ThinningDistribution::normalized(std::move(w)));
        double s = 0.0;
        for (double v : img.alpha) {
            REQUIRE(v >= 0.0);
            s += v;
        }
        REQUIRE(std::fabs(s - 1.0) < 1e-10);
    }
}

TEST_CASE("best-response image of the uniform law matches the fixture") {
    const auto cfg = default_market_config();
    const auto img = psi_map(cfg, ThinningDistribution::uniform(50));
    double low_mass = 0.0;
    for (int j = 0; j < 50; ++j) {
        REQUIRE(img.alpha[j] == Catch::Approx(kPsiUniformFixture[j]).margin(1e-12));
        if (j < 10) low_mass += img.alpha[j];
    }
    // mass concentrates at low ticks relative to the uniform 0.2
    REQUIRE(low_mass > 0.2);
}

TEST_CASE("single tick equilibrium is immediate") {
    MarketConfig cfg;
    cfg.lambda = 3.0;
    cfg.mu = 12.0;
    cfg.epsilon = 1.0;
    cfg.n_ticks = 1;
    cfg.demand.beta = {1.0};
    cfg.patience = uniform_patience(1.0);

    const auto img = psi_map(cfg, ThinningDistribution::point_mass(1, 1));
    REQUIRE(img.alpha[0] == 1.0);

    SolverOptions opt;
    opt.n_restarts = 2;
    const auto eq = solve_equilibrium(cfg, opt);
    REQUIRE(eq.converged);
    REQUIRE(eq.alpha_star.alpha[0] == 1.0);
    REQUIRE(eq.residual < 1e-12);
}

TEST_CASE("reference market equilibrium certificate") {
    const auto cfg = default_market_config();
    SolverOptions opt;
    opt.n_restarts = 2;
    opt.seed = 42;
    const auto eq = solve_equilibrium(cfg, opt);
    REQUIRE(eq.converged);
    REQUIRE(eq.residual < opt.tol);

    // the returned residual is a direct re-evaluation at alpha*
    REQUIRE(residual_norm(cfg, eq.alpha_star) == Catch::Approx(eq.residual).margin(1e-14));

    // full support and stable at the fixed point
    REQUIRE(eq.analytics.fully_stable());
    REQUIRE(eq.analytics.cum_rho.back() < 1.0);

    // waits are strictly increasing and convex here, so the strategy must be
    // monotone: the most patient sellers take the highest prices
    REQUIRE(execution_time_convex_increasing(eq.analytics.exec_time));
    REQUIRE(eq.strategy_monotone);
    REQUIRE(strategy_of_delta(eq, cfg.patience.delta_bar()) == 1);
    const int top = strategy_of_delta(eq, 0.0);
    for (int j = 0; j < cfg.n_ticks; ++j) REQUIRE(std::isfinite(eq.analytics.exec_time[j]));
    REQUIRE(top == cfg.n_ticks);

    // restarts agree on the fixed point
    REQUIRE_FALSE(eq.multiple_solutions);
}

TEST_CASE("two-price equilibrium") {
    SECTION("no price gap sends everyone to the low price") {
        TwoPriceProblem pr{1.0, 1.0, 2.0, 1.0, uniform_patience(1.0)};
        const auto sol = two_price_equilibrium(pr);
        REQUIRE(sol.alpha2 == Catch::Approx(0.0).margin(1e-12));
        REQUIRE(sol.residual < 1e-10);
    }
    SECTION("uniform patience on the unit interval gives the quadratic root") {
        TwoPriceProblem pr{1.0, 1.5, 2.0, 1.0, uniform_patience(1.0)};
        const auto sol = two_price_equilibrium(pr);
        // a2 = 1/(1 + 1.5 a2)  =>  a2 = (-1 + sqrt 7) / 3
        REQUIRE(sol.alpha2 ==
                Catch::Approx((-1.0 + std::sqrt(7.0)) / 3.0).margin(1e-12));
        REQUIRE(sol.residual < 1e-10);
    }
    SECTION("the root satisfies the implied quadratic for random instances") {
        std::mt19937_64 rng(31);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (int trial = 0; trial < 50; ++trial) {
            TwoPriceProblem pr;
            pr.mu2 = 0.5 + unif(rng);
            pr.mu1 = pr.mu2 + 0.2 + unif(rng);
            pr.p1 = unif(rng);
            pr.p2 = pr.p1 + 2.0 * unif(rng);
            const double dbar = 0.5 + 2.0 * unif(rng);
            pr.patience = uniform_patience(dbar);
            const auto sol = two_price_equilibrium(pr);
            REQUIRE(sol.residual < 1e-10);
            if (!sol.boundary && sol.alpha2 < 1.0) {
                const double a = 0.5 * (pr.mu1 + pr.mu2);
                const double b = pr.mu1 - pr.mu2;
                const double c = pr.mu1 * pr.mu2 * (pr.p2 - pr.p1);
                REQUIRE(std::fabs(a * sol.alpha2 * sol.alpha2 + b * sol.alpha2 - c / dbar) <
                        1e-9);
            }
        }
    }
    SECTION("invalid orderings are rejected") {
        REQUIRE_THROWS_AS(
            two_price_equilibrium({2.0, 1.0, 2.0, 1.0, uniform_patience(1.0)}),
            std::invalid_argument);
        REQUIRE_THROWS_AS(
            two_price_equilibrium({1.0, 2.0, 1.0, 2.0, uniform_patience(1.0)}),
            std::invalid_argument);
    }
}
