#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lobeq/queue.hpp"
#include "lobeq/simulator.hpp"

using namespace lobeq;

namespace {

MarketConfig flat_market(int n, double lambda, double mu) {
    MarketConfig cfg;
    cfg.lambda = lambda;
    cfg.mu = mu;
    cfg.epsilon = 1.0;
    cfg.n_ticks = n;
    cfg.demand.beta.assign(n, 1.0);
    cfg.patience = PatienceDistribution::Uniform(1.0);
    return cfg;
}

SimConfig mm1_sim(long long horizon, std::uint64_t seed) {
    SimConfig sim;
    sim.market = flat_market(1, 3.0, 12.0);
    sim.alpha = ThinningDistribution::point_mass(1, 1);
    sim.horizon = horizon;
    sim.seed = seed;
    return sim;
}

// bitwise equality, treating NaN slots (ticks that never traded) as equal
bool same_values(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i] && !(std::isnan(a[i]) && std::isnan(b[i]))) return false;
    return true;
}

}  // namespace

TEST_CASE("single-tick run matches the M/M/1 sojourn time") {
    const auto est = run(mm1_sim(1'000'000, 2024));
    REQUIRE(est.trades[0] > 100'000);
    REQUIRE(std::fabs(est.mean_wait[0] - 1.0 / 9.0) / (1.0 / 9.0) < 0.02);
    REQUIRE(est.stationary[0] == 1);

    // best-price tail ~ idle probability 0.75 within two half widths
    REQUIRE(std::fabs(est.best_price_tail[0] - 0.75) <
            2.0 * est.best_price_tail_half_width[0] + 1e-3);

    // little's law closure
    const double lam_hat = 3.0 * est.empirical_alpha[0];
    REQUIRE(std::fabs(est.time_avg_inventory[0] - lam_hat * est.mean_wait[0]) <
            3.0 * (est.inventory_half_width[0] + lam_hat * est.wait_half_width[0]));
}

TEST_CASE("no sellers means no trades") {
    SimConfig sim = mm1_sim(10'000, 5);
    sim.market.lambda = 0.0;
    const auto est = run(sim);
    REQUIRE(est.n_trades == 0);
    REQUIRE(est.n_lost_buyers == est.buyer_arrivals);
    REQUIRE(std::isnan(est.mean_wait[0]));
}

TEST_CASE("identical seeds reproduce estimates exactly") {
    SimConfig sim;
    sim.market = default_market_config();
    sim.alpha = ThinningDistribution::uniform(50);
    sim.horizon = 50'000;
    sim.seed = 77;
    const auto a = run(sim);
    const auto b = run(sim);
    REQUIRE(same_values(a.mean_wait, b.mean_wait));
    REQUIRE(same_values(a.time_avg_inventory, b.time_avg_inventory));
    REQUIRE(same_values(a.best_price_tail, b.best_price_tail));
    REQUIRE(a.n_trades == b.n_trades);
    REQUIRE(a.n_lost_buyers == b.n_lost_buyers);

    sim.seed = 78;
    const auto c = run(sim);
    REQUIRE_FALSE(same_values(a.mean_wait, c.mean_wait));
}

TEST_CASE("every measured buyer either trades or is lost") {
    SimConfig sim;
    sim.market = default_market_config();
    sim.alpha = ThinningDistribution::uniform(50);
    sim.horizon = 100'000;
    sim.seed = 3;
    const auto est = run(sim);
    REQUIRE(est.n_trades + est.n_lost_buyers == est.buyer_arrivals);

    double pmf = 0.0;
    for (double p : est.exec_price_pmf) pmf += p;
    REQUIRE(pmf == Catch::Approx(1.0).margin(1e-12));

    for (int j = 1; j < est.n_ticks; ++j)
        REQUIRE(est.best_price_tail[j] <= est.best_price_tail[j - 1] + 1e-15);
}

TEST_CASE("within-tick discipline does not move the mean waits") {
    SimConfig fifo;
    fifo.market = flat_market(2, 1.2, 2.0);
    fifo.alpha = ThinningDistribution{{0.5, 0.5}};
    fifo.horizon = 400'000;
    fifo.seed = 99;
    auto random_pick = fifo;
    random_pick.discipline = TickDiscipline::RandomPick;
    const auto a = run(fifo);
    const auto b = run(random_pick);
    for (int j = 0; j < 2; ++j) {
        const double gap = std::fabs(a.mean_wait[j] - b.mean_wait[j]);
        REQUIRE(gap < a.wait_half_width[j] + b.wait_half_width[j]);
    }
}

TEST_CASE("work conservation: empty-prefix time matches the tail formula") {
    SimConfig sim;
    sim.market = flat_market(2, 1.0, 2.0);
    sim.alpha = ThinningDistribution{{0.5, 0.5}};
    sim.horizon = 500'000;
    sim.seed = 11;
    const auto est = run(sim);
    const auto rho = traffic_intensity(sim.market, sim.alpha);  // (0.25, 0.25)
    const auto tail = price_tail(rho);
    for (int j = 0; j < 2; ++j)
        REQUIRE(std::fabs(est.best_price_tail[j] - tail[j]) <
                2.0 * est.best_price_tail_half_width[j] + 1e-3);
}

TEST_CASE("conditional inventory estimate matches the closed form") {
    SimConfig sim;
    sim.market = flat_market(2, 1.0, 2.0);
    sim.alpha = ThinningDistribution{{0.5, 0.5}};
    sim.horizon = 2'000'000;
    sim.seed = 42;
    const auto est = run(sim);
    const auto rho = traffic_intensity(sim.market, sim.alpha);
    const double closed = conditional_inventory(rho, 2, 2);  // 5/9
    REQUIRE(est.cond_time_fraction[1] > 0.01);
    REQUIRE(est.cond_low_confidence[1] == 0);
    REQUIRE(std::fabs(est.cond_inventory[1] - closed) / closed < 0.10);

    // unconditioned block: time-average of everything
    const double total = est.time_avg_inventory[0] + est.time_avg_inventory[1];
    REQUIRE(est.cond_inventory[0] == Catch::Approx(total).margin(1e-9));
}

TEST_CASE("unstable ticks are flagged non-stationary") {
    SimConfig sim;
    sim.market = flat_market(2, 3.0, 2.0);  // rho = (0.75, 0.75): tick 2 unstable
    sim.alpha = ThinningDistribution{{0.5, 0.5}};
    sim.horizon = 20'000;
    sim.seed = 1;
    const auto est = run(sim);
    REQUIRE(est.stationary[0] == 1);
    REQUIRE(est.stationary[1] == 0);
}

TEST_CASE("strategy-driven mode posts along the partition") {
    const auto cfg = flat_market(2, 1.0, 2.0);
    // indifference at delta = 1/ (T2 - T1) ... build via best_response on known waits
    const std::vector<double> T = {0.5, 1.0};
    SimConfig sim;
    sim.market = cfg;
    sim.mode = SellerMode::StrategyDriven;
    sim.partition = best_response(T, 1.0, cfg.patience);
    sim.horizon = 100'000;
    sim.seed = 15;
    const auto est = run(sim);
    const auto expected = sim.partition.tick_measures(2);
    REQUIRE(est.empirical_alpha[0] == Catch::Approx(expected[0]).margin(0.01));
    REQUIRE(est.empirical_alpha[1] == Catch::Approx(expected[1]).margin(0.01));
}

TEST_CASE("empirical best response on a single tick returns the point mass") {
    const auto sim = mm1_sim(20'000, 8);
    const auto est = run(sim);
    const auto ebr = empirical_best_response(sim, est, 1.0, sim.market.patience);
    REQUIRE(ebr.alpha.alpha[0] == 1.0);
    REQUIRE(ebr.excluded_ticks.empty());
}

TEST_CASE("simulator rejects malformed runs") {
    SimConfig sim = mm1_sim(100, 1);
    sim.horizon = 0;
    REQUIRE_THROWS_AS(run(sim), std::invalid_argument);
    sim = mm1_sim(10'000, 1);
    sim.warmup_fraction = 1.0;
    REQUIRE_THROWS_AS(run(sim), std::invalid_argument);
    sim = mm1_sim(10'000, 1);
    sim.alpha.alpha = {0.5, 0.5};  // wrong length
    REQUIRE_THROWS_AS(run(sim), std::invalid_argument);
}
