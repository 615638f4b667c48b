#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "lobeq/market.hpp"
#include "lobeq/stats.hpp"

using namespace lobeq;

TEST_CASE("reference config validates clean") {
    const auto cfg = default_market_config();
    REQUIRE(validate(cfg).ok());
    // the steepest demand entry stays a probability
    REQUIRE(cfg.demand.beta[0] <= 1.0);
    REQUIRE(cfg.demand.beta[0] == Catch::Approx(0.9675925925925926).epsilon(1e-12));
    for (std::size_t i = 1; i < cfg.demand.size(); ++i)
        REQUIRE(cfg.demand.beta[i] <= cfg.demand.beta[i - 1]);
}

TEST_CASE("validation reports each violated rule") {
    auto cfg = default_market_config();

    SECTION("increasing demand is rejected") {
        cfg.n_ticks = 2;
        cfg.demand.beta = {0.2, 0.5};
        const auto r = validate(cfg);
        REQUIRE_FALSE(r.ok());
        REQUIRE(r.issues[0].field == "demand");
    }
    SECTION("zero seller rate is rejected") {
        cfg.lambda = 0.0;
        const auto r = validate(cfg);
        REQUIRE_FALSE(r.ok());
        REQUIRE(r.issues[0].field == "lambda");
    }
    SECTION("demand length must match the tick count") {
        cfg.n_ticks = 3;
        const auto r = validate(cfg);
        REQUIRE_FALSE(r.ok());
    }
    SECTION("gamma at or below 1/2 is rejected") {
        cfg.patience = PatienceDistribution::Power(1.0, 0.5);
        REQUIRE_FALSE(validate(cfg).ok());
        cfg.patience = PatienceDistribution::Power(1.0, 0.51);
        REQUIRE(validate(cfg).ok());
    }
    SECTION("beta must stay in (0, 1]") {
        cfg.demand.beta[0] = 1.5;
        REQUIRE_FALSE(validate(cfg).ok());
    }
}

TEST_CASE("patience cdf values") {
    const auto uni = PatienceDistribution::Uniform(160.0);
    REQUIRE(uni.cdf(80.0) == Catch::Approx(0.5).margin(1e-15));
    REQUIRE(uni.cdf(1000.0) == 1.0);  // clamped beyond the support

    const auto pow34 = PatienceDistribution::Power(1.0, 0.75);
    REQUIRE(pow34.cdf(1.0) == 1.0);
    REQUIRE(pow34.cdf(0.5) == Catch::Approx(std::pow(0.5, 0.75)).margin(1e-15));

    REQUIRE_THROWS_AS(uni.cdf(-1.0), std::domain_error);
}

TEST_CASE("patience cdf is a proper distribution function") {
    const auto dists = {PatienceDistribution::Uniform(160.0),
                        PatienceDistribution::Power(2.5, 0.6),
                        PatienceDistribution::Tabulated({{0.0, 0.0}, {1.0, 0.3}, {4.0, 1.0}})};
    for (const auto& d : dists) {
        double prev = -1.0;
        for (int i = 0; i <= 10'000; ++i) {
            const double x = d.delta_bar() * i / 10'000.0;
            const double f = d.cdf(x);
            REQUIRE(f >= prev);
            prev = f;
        }
        REQUIRE(d.cdf(0.0) == 0.0);
        REQUIRE(d.cdf(d.delta_bar()) == 1.0);
    }
}

TEST_CASE("sampling means match the analytic first moment") {
    std::mt19937_64 rng(99);

    SECTION("uniform") {
        const auto d = PatienceDistribution::Uniform(160.0);
        double s = 0.0;
        for (int i = 0; i < 1'000'000; ++i) s += d.sample(rng);
        REQUIRE(s / 1e6 == Catch::Approx(80.0).margin(0.2));
    }
    SECTION("power") {
        // E[delta] = delta_bar * gamma / (gamma + 1) = 3/7 for gamma = 3/4
        const auto d = PatienceDistribution::Power(1.0, 0.75);
        double s = 0.0;
        for (int i = 0; i < 1'000'000; ++i) s += d.sample(rng);
        REQUIRE(s / 1e6 == Catch::Approx(3.0 / 7.0).margin(0.01));
    }
}

TEST_CASE("two-knot table reproduces the uniform distribution") {
    const auto tab = PatienceDistribution::Tabulated({{0.0, 0.0}, {160.0, 1.0}});
    const auto uni = PatienceDistribution::Uniform(160.0);
    for (int i = 0; i <= 1000; ++i) {
        const double x = 160.0 * i / 1000.0;
        REQUIRE(tab.cdf(x) == Catch::Approx(uni.cdf(x)).margin(1e-12));
    }
    REQUIRE(tab.quantile(0.25) == Catch::Approx(40.0).margin(1e-12));
}

TEST_CASE("inverse-cdf sampling passes a KS check") {
    std::mt19937_64 rng(7);
    const auto dists = {PatienceDistribution::Uniform(160.0),
                        PatienceDistribution::Power(1.0, 0.75),
                        PatienceDistribution::Tabulated({{0.0, 0.0}, {0.5, 0.7}, {2.0, 1.0}})};
    for (const auto& d : dists) {
        std::vector<double> samples(100'000);
        for (auto& s : samples) s = d.sample(rng);
        const double ks = stats::ks_statistic(std::move(samples),
                                              [&d](double x) { return d.cdf(x); });
        REQUIRE(ks < 0.01);
    }
}

TEST_CASE("quadratic demand family") {
    const auto d = quadratic_demand(50, 1.0 / 12.0, 0.5, 15.0);
    REQUIRE(d.size() == 50);
    REQUIRE(d.beta[49] == Catch::Approx((0.5 + 1.0 / 225.0) / 12.0).epsilon(1e-14));
}
