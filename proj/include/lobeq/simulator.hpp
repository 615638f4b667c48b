#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "lobeq/equilibrium.hpp"
#include "lobeq/market.hpp"
#include "lobeq/queue.hpp"
#include "lobeq/stats.hpp"

namespace lobeq {

enum class SellerMode { AlphaDriven, StrategyDriven };
enum class TickDiscipline { Fifo, RandomPick };

struct SimConfig {
    MarketConfig market;
    SellerMode mode = SellerMode::AlphaDriven;
    ThinningDistribution alpha;       ///< posting law in AlphaDriven mode
    BestResponsePartition partition;  ///< delta -> tick map in StrategyDriven mode
    long long horizon = 1'000'000;    ///< buyer arrivals to simulate
    double warmup_fraction = 0.2;     ///< leading fraction of the horizon discarded
    int n_batches = 20;               ///< batch count for batch-means half widths
    std::uint64_t seed = 1;
    TickDiscipline discipline = TickDiscipline::Fifo;
};

/// Empirical counterparts of the closed-form stationary quantities, with
/// nominal-95% batch-means half widths. Entries are indexed by tick - 1.
struct SimEstimates {
    int n_ticks = 0;
    std::vector<double> mean_wait;
    std::vector<double> wait_half_width;
    std::vector<double> time_avg_inventory;
    std::vector<double> inventory_half_width;
    std::vector<double> best_price_tail;  ///< fraction of time ticks 1..j all empty
    std::vector<double> best_price_tail_half_width;
    std::vector<double> exec_price_pmf;   ///< share of trades executed at each tick
    std::vector<double> cond_inventory;   ///< avg count at ticks >= j while ticks < j empty
    std::vector<double> cond_time_fraction;
    std::vector<char> cond_low_confidence;  ///< under 1% conditioning time
    std::vector<char> stationary;           ///< cumulative load below 1 at this tick
    std::vector<long long> posts;
    std::vector<long long> trades;
    std::vector<double> empirical_alpha;  ///< posting fractions over the measured window
    long long n_trades = 0;
    long long n_lost_buyers = 0;  ///< measured buyers that bought nothing
    long long buyer_arrivals = 0;  ///< measured buyer arrivals
    double measured_time = 0.0;
    std::uint64_t seed = 0;
};

namespace detail {

inline std::vector<double> driving_alpha(const SimConfig& sim) {
    if (sim.mode == SellerMode::AlphaDriven) {
        if (sim.alpha.size() != static_cast<std::size_t>(sim.market.n_ticks))
            throw std::invalid_argument("simulator: alpha must have n_ticks entries");
        return sim.alpha.alpha;
    }
    if (sim.partition.cells.empty())
        throw std::invalid_argument("simulator: strategy mode needs a partition");
    auto m = sim.partition.tick_measures(sim.market.n_ticks);
    detail::renormalize(m);
    return m;
}

}  // namespace detail

/// Runs the exchange: sellers arrive at rate lambda and enqueue one unit at
/// their chosen tick; buyers arrive at rate mu, inspect the lowest nonempty
/// tick j, buy its head-of-line unit with probability beta_j and otherwise
/// leave without looking further up the book. Buyers finding an empty book
/// are lost. Simultaneous events resolve seller-first. Statistics cover the
/// post-warmup window; identical configs and seeds give identical estimates.
inline SimEstimates run(const SimConfig& sim) {
    const MarketConfig& m = sim.market;
    const int N = m.n_ticks;
    if (N < 1 || m.demand.size() != static_cast<std::size_t>(N))
        throw std::invalid_argument("simulator: demand must have n_ticks entries");
    if (!(m.mu > 0.0) || m.lambda < 0.0)
        throw std::invalid_argument("simulator: need mu > 0 and lambda >= 0");
    if (sim.horizon < 10LL * sim.n_batches || sim.n_batches < 1)
        throw std::invalid_argument("simulator: horizon must cover at least 10 per batch");
    if (!(sim.warmup_fraction >= 0.0 && sim.warmup_fraction < 1.0))
        throw std::invalid_argument("simulator: warmup_fraction must lie in [0, 1)");

    const auto alpha = detail::driving_alpha(sim);
    std::vector<double> alpha_cdf(alpha.size());
    std::partial_sum(alpha.begin(), alpha.end(), alpha_cdf.begin());

    const long long warmup = static_cast<long long>(sim.warmup_fraction * sim.horizon);
    const long long measured_span = sim.horizon - warmup;
    const int B = sim.n_batches;

    std::mt19937_64 rng(sim.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto exp_draw = [&](double rate) { return -std::log1p(-unit(rng)) / rate; };

    std::vector<std::deque<double>> book(N);
    long long total_units = 0;
    int lowest = N;  // index of lowest nonempty tick, N when the book is empty

    double now = 0.0;
    double next_seller = m.lambda > 0.0 ? exp_draw(m.lambda) : kInfinite;
    double next_buyer = exp_draw(m.mu);

    // Per-batch accumulators over the measured window; [tick * B + batch].
    // Inventory integrals are flushed lazily (a tick's count only changes on
    // its own trades/posts, and at batch boundaries); the time the book
    // spends with each lowest-nonempty tick is binned directly, and tails /
    // conditional integrals fall out as suffix sums at the end.
    std::vector<double> wait_sum(N * B, 0.0), inv_integral(N * B, 0.0);
    std::vector<long long> wait_cnt(N * B, 0);
    std::vector<double> lowest_time((N + 1) * B, 0.0), lowest_weighted((N + 1) * B, 0.0);
    std::vector<double> batch_duration(B, 0.0);
    std::vector<double> last_flush(N, 0.0);
    std::vector<long long> posts(N, 0), trades(N, 0);
    long long lost = 0;
    long long buyers_seen = 0;
    bool measuring = false;
    int cur_batch = 0;
    double measure_start = 0.0;

    auto batch_of = [&]() {
        const long long done = buyers_seen - warmup;
        return static_cast<int>(std::min<long long>(B - 1, done * B / measured_span));
    };
    auto flush_tick = [&](int j, int b) {
        inv_integral[j * B + b] += static_cast<double>(book[j].size()) * (now - last_flush[j]);
        last_flush[j] = now;
    };
    auto begin_measuring = [&]() {
        measuring = true;
        measure_start = now;
        cur_batch = 0;
        std::fill(last_flush.begin(), last_flush.end(), now);
    };
    if (warmup == 0) begin_measuring();

    while (buyers_seen < sim.horizon) {
        const double t_next = std::min(next_seller, next_buyer);
        if (measuring) {
            const double dt = t_next - now;
            batch_duration[cur_batch] += dt;
            lowest_time[lowest * B + cur_batch] += dt;
            lowest_weighted[lowest * B + cur_batch] += static_cast<double>(total_units) * dt;
        }
        now = t_next;

        if (next_seller <= next_buyer) {
            int tick;
            if (sim.mode == SellerMode::AlphaDriven) {
                const double u = unit(rng);
                tick = static_cast<int>(
                    std::upper_bound(alpha_cdf.begin(), alpha_cdf.end(), u) - alpha_cdf.begin());
                tick = std::min(tick, N - 1);
            } else {
                tick = sim.partition.tick_at(m.patience.sample(rng)) - 1;
            }
            if (measuring) {
                flush_tick(tick, cur_batch);
                ++posts[tick];
            }
            book[tick].push_back(now);
            ++total_units;
            lowest = std::min(lowest, tick);
            next_seller = now + exp_draw(m.lambda);
        } else {
            ++buyers_seen;
            if (measuring && batch_of() != cur_batch) {
                for (int j = 0; j < N; ++j) flush_tick(j, cur_batch);
                cur_batch = batch_of();
            }
            if (lowest == N) {
                if (measuring) ++lost;
            } else {
                const int j = lowest;
                if (unit(rng) < m.demand.beta[j]) {
                    if (measuring) flush_tick(j, cur_batch);
                    double arrived;
                    if (sim.discipline == TickDiscipline::Fifo) {
                        arrived = book[j].front();
                        book[j].pop_front();
                    } else {
                        const auto idx = static_cast<std::size_t>(unit(rng) * book[j].size());
                        const auto at = book[j].begin() + std::min(idx, book[j].size() - 1);
                        arrived = *at;
                        book[j].erase(at);
                    }
                    --total_units;
                    while (lowest < N && book[lowest].empty()) ++lowest;
                    if (measuring) {
                        ++trades[j];
                        wait_sum[j * B + cur_batch] += now - arrived;
                        ++wait_cnt[j * B + cur_batch];
                    }
                } else {
                    if (measuring) ++lost;  // declined buyers leave entirely
                }
            }
            if (!measuring && buyers_seen >= warmup) begin_measuring();
            next_buyer = now + exp_draw(m.mu);
        }
    }
    for (int j = 0; j < N; ++j) flush_tick(j, cur_batch);

    // tails and conditional blocks from the lowest-tick occupation times:
    // ticks 1..j all empty while the lowest nonempty index exceeds j-1
    std::vector<double> tail_time(N * B, 0.0), cond_time(N * B, 0.0), cond_integral(N * B, 0.0);
    for (int b = 0; b < B; ++b) {
        double t_above = lowest_time[N * B + b];
        double w_above = lowest_weighted[N * B + b];
        for (int j = N - 1; j >= 0; --j) {
            tail_time[j * B + b] = t_above;
            cond_time[j * B + b] = t_above + lowest_time[j * B + b];
            cond_integral[j * B + b] = w_above + lowest_weighted[j * B + b];
            t_above += lowest_time[j * B + b];
            w_above += lowest_weighted[j * B + b];
        }
    }

    SimEstimates est;
    est.n_ticks = N;
    est.seed = sim.seed;
    est.buyer_arrivals = measured_span;
    est.measured_time = now - measure_start;
    est.posts = posts;
    est.trades = trades;
    est.n_lost_buyers = lost;
    for (long long c : trades) est.n_trades += c;

    const double total_time = est.measured_time;
    long long total_posts = 0;
    for (long long c : posts) total_posts += c;

    est.mean_wait.assign(N, std::numeric_limits<double>::quiet_NaN());
    est.wait_half_width.assign(N, kInfinite);
    est.time_avg_inventory.assign(N, 0.0);
    est.inventory_half_width.assign(N, kInfinite);
    est.best_price_tail.assign(N, 0.0);
    est.best_price_tail_half_width.assign(N, kInfinite);
    est.exec_price_pmf.assign(N, 0.0);
    est.cond_inventory.assign(N, std::numeric_limits<double>::quiet_NaN());
    est.cond_time_fraction.assign(N, 0.0);
    est.cond_low_confidence.assign(N, 1);
    est.empirical_alpha.assign(N, 0.0);

    std::vector<double> ratios;
    for (int j = 0; j < N; ++j) {
        double ws = 0.0;
        long long wc = 0;
        ratios.clear();
        for (int b = 0; b < B; ++b) {
            ws += wait_sum[j * B + b];
            wc += wait_cnt[j * B + b];
            if (wait_cnt[j * B + b] > 0)
                ratios.push_back(wait_sum[j * B + b] / wait_cnt[j * B + b]);
        }
        if (wc > 0) est.mean_wait[j] = ws / wc;
        if (ratios.size() >= 2) est.wait_half_width[j] = stats::batch_means(ratios).half_width;

        ratios.clear();
        double integ = 0.0;
        for (int b = 0; b < B; ++b) {
            integ += inv_integral[j * B + b];
            if (batch_duration[b] > 0.0)
                ratios.push_back(inv_integral[j * B + b] / batch_duration[b]);
        }
        est.time_avg_inventory[j] = total_time > 0.0 ? integ / total_time : 0.0;
        if (ratios.size() >= 2) est.inventory_half_width[j] = stats::batch_means(ratios).half_width;

        ratios.clear();
        double tl = 0.0;
        for (int b = 0; b < B; ++b) {
            tl += tail_time[j * B + b];
            if (batch_duration[b] > 0.0) ratios.push_back(tail_time[j * B + b] / batch_duration[b]);
        }
        est.best_price_tail[j] = total_time > 0.0 ? tl / total_time : 0.0;
        if (ratios.size() >= 2)
            est.best_price_tail_half_width[j] = stats::batch_means(ratios).half_width;

        double ct = 0.0, ci = 0.0;
        for (int b = 0; b < B; ++b) {
            ct += cond_time[j * B + b];
            ci += cond_integral[j * B + b];
        }
        if (ct > 0.0) est.cond_inventory[j] = ci / ct;
        est.cond_time_fraction[j] = total_time > 0.0 ? ct / total_time : 0.0;
        est.cond_low_confidence[j] = est.cond_time_fraction[j] < 0.01 ? 1 : 0;

        if (est.n_trades > 0) est.exec_price_pmf[j] = static_cast<double>(trades[j]) / est.n_trades;
        if (total_posts > 0) est.empirical_alpha[j] = static_cast<double>(posts[j]) / total_posts;
    }

    est.stationary.assign(N, 1);
    if (m.lambda > 0.0) {
        double cum = 0.0;
        for (int j = 0; j < N; ++j) {
            cum += (m.lambda / m.mu) * alpha[j] / m.demand.beta[j];
            est.stationary[j] = cum < 1.0 - kStabilityMargin ? 1 : 0;
        }
    }
    return est;
}

struct EmpiricalBestResponse {
    ThinningDistribution alpha;
    std::vector<int> excluded_ticks;  ///< ticks with too few trades to estimate a wait
};

/// Feeds the empirical per-tick mean waits back through the best-response
/// map. At a fixed point of the analytic map the result should be close to
/// the driving distribution. Ticks with fewer than min_trades executions
/// have no usable wait estimate and are excluded (treated as unpostable).
inline EmpiricalBestResponse empirical_best_response(const SimConfig& sim,
                                                     const SimEstimates& est, double epsilon,
                                                     const PatienceDistribution& patience,
                                                     long long min_trades = 1) {
    const int N = est.n_ticks;
    if (N != sim.market.n_ticks)
        throw std::invalid_argument("empirical_best_response: estimates do not match the config");
    std::vector<double> that(N, kInfinite);
    EmpiricalBestResponse out;
    for (int j = 0; j < N; ++j) {
        if (est.trades[j] >= std::max<long long>(min_trades, 1) &&
            std::isfinite(est.mean_wait[j]))
            that[j] = est.mean_wait[j];
        else
            out.excluded_ticks.push_back(j + 1);
    }
    const auto part = best_response(that, epsilon, patience);
    out.alpha = ThinningDistribution::normalized(part.tick_measures(N));
    return out;
}

/// Total-variation distance between two distributions on the same ticks.
inline double total_variation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("total_variation: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
    return 0.5 * s;
}

/// Empirical best response averaged over independent replications with
/// consecutive seeds. One replication's response is extremely noisy — the
/// argmax regions react to every wobble in the wait estimates — but the
/// wobble is close to symmetric, so the replication mean settles near the
/// response to the true waits. Replications run concurrently; the average
/// is taken in seed order, so results are reproducible.
inline ThinningDistribution averaged_best_response(const SimConfig& base, int replications,
                                                   double epsilon,
                                                   const PatienceDistribution& patience,
                                                   long long min_trades = 1) {
    if (replications < 1)
        throw std::invalid_argument("averaged_best_response: need at least one replication");
    std::vector<std::vector<double>> responses(replications);
    const unsigned workers =
        std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                        static_cast<unsigned>(replications)));
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (int r = next.fetch_add(1); r < replications; r = next.fetch_add(1)) {
            SimConfig rep = base;
            rep.seed = base.seed + static_cast<std::uint64_t>(r);
            const auto est = run(rep);
            responses[r] =
                empirical_best_response(rep, est, epsilon, patience, min_trades).alpha.alpha;
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::vector<double> mean(base.market.n_ticks, 0.0);
    for (const auto& resp : responses)
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += resp[i];
    for (double& v : mean) v /= replications;
    return ThinningDistribution::normalized(std::move(mean));
}

}  // namespace lobeq
