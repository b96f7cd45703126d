#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qrelay/engine.hpp"
#include "qrelay/metrics.hpp"
#include "qrelay/model.hpp"

using namespace qrelay;

namespace {

SimConfig make_config(Protocol protocol, std::uint32_t n, std::uint32_t m,
                      double p, std::uint64_t seed) {
    SimConfig cfg;
    cfg.protocol = protocol;
    cfg.n_repeaters = n;
    cfg.m_per_node = m;
    cfg.p_success = p;
    cfg.seed = seed;
    return cfg;
}

/// Synthetic run carrying only a completion series; enough for the slope.
RunResult synthetic_series(std::vector<SeriesPoint> series, std::uint64_t total) {
    RunResult run;
    run.total_slots = total;
    run.completed_count = series.back().completions;
    run.completion_series = std::move(series);
    return run;
}

RunResult completed_pair(std::uint64_t t_first, std::uint64_t t_second) {
    RunResult run;
    run.total_slots = 100;
    run.completed_count = 2;
    for (std::uint64_t t : {t_first, t_second}) {
        QubitRecord record;
        record.qubit_id = run.records.size();
        record.injected_slot = 0;
        record.hops.push_back(Hop{0, 0});
        record.completed_slot = t;
        run.records.push_back(record);
    }
    return run;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("latency is the first completed slot") {
    SimConfig deep = make_config(Protocol::kMultiplexed, 10, 1, 1.0, 0);
    deep.target_completions = 1;
    CHECK(latency_slots(run(deep)) == 11);

    // Extra units do not change the deterministic lead qubit's path.
    SimConfig wide = make_config(Protocol::kMultiplexed, 10, 10, 1.0, 0);
    wide.target_completions = 1;
    CHECK(latency_slots(run(wide)) == 11);

    SimConfig tiny = make_config(Protocol::kParallelized, 1, 1, 1.0, 0);
    tiny.target_completions = 1;
    CHECK(latency_slots(run(tiny)) == 2);
}

TEST_CASE("latency without a completion is an error") {
    SimConfig cfg = make_config(Protocol::kMultiplexed, 2, 2, 0.0, 0);
    cfg.max_slots = 50;
    CHECK_THROWS_AS((void)latency_slots(run(cfg)), NoCompletionError);
}

TEST_CASE("steady throughput of the half-rate staircase is exactly 1/2") {
    // Completions at every even slot: {(2k, k)}. With total 1000 and the
    // default burn-in the window is [300, 1000]; both endpoints sit on the
    // same phase of the staircase and the least-squares slope is exactly
    // one half, to roundoff, because the sufficient statistics are integer.
    std::vector<SeriesPoint> series;
    for (std::uint64_t k = 0; k <= 500; ++k) series.push_back(SeriesPoint{2 * k, k});
    const RunResult run = synthetic_series(std::move(series), 1000);
    const ThroughputEstimate estimate = steady_throughput(run);
    CHECK(std::abs(estimate.per_slot - 0.5) <= 1e-12);
    CHECK(estimate.se > 0.0);  // the staircase does leave residuals
}

TEST_CASE("steady throughput of an exactly linear series has zero residual") {
    std::vector<SeriesPoint> series;
    for (std::uint64_t k = 0; k <= 1000; ++k) series.push_back(SeriesPoint{k, 3 * k});
    const RunResult run = synthetic_series(std::move(series), 1000);
    const ThroughputEstimate estimate = steady_throughput(run);
    CHECK(std::abs(estimate.per_slot - 3.0) <= 1e-12);
    CHECK(estimate.se <= 1e-9);
}

TEST_CASE("P=1 multiplexed pipeline measures slope 1 with zero error") {
    SimConfig cfg = make_config(Protocol::kMultiplexed, 10, 10, 1.0, 0);
    cfg.max_slots = 1000;
    const ThroughputEstimate estimate = steady_throughput(run(cfg));
    CHECK(std::abs(estimate.per_slot - 1.0) <= 1e-12);
    CHECK(estimate.se <= 1e-9);
}

TEST_CASE("P=1 parallelized throughput approaches M/2") {
    SimConfig cfg = make_config(Protocol::kParallelized, 10, 4, 1.0, 0);
    cfg.max_slots = 1000;
    const ThroughputEstimate estimate = steady_throughput(run(cfg));
    CHECK(estimate.per_slot == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("steady throughput rejects unusable inputs") {
    SimConfig cfg = make_config(Protocol::kMultiplexed, 10, 1, 1.0, 0);
    cfg.target_completions = 1;
    const RunResult latency_run = run(cfg);
    // 1 completion < 10: not a throughput run.
    CHECK_THROWS_AS((void)steady_throughput(latency_run), InsufficientDataError);
    CHECK_THROWS_AS((void)steady_throughput(latency_run, -0.1), std::invalid_argument);
    CHECK_THROWS_AS((void)steady_throughput(latency_run, 1.0), std::invalid_argument);

    SimConfig blip = make_config(Protocol::kMultiplexed, 1, 1, 1.0, 0);
    blip.max_slots = 2;
    CHECK_THROWS_AS((void)steady_throughput(run(blip), 0.9), InsufficientDataError);
}

TEST_CASE("transfer stats over a known pair of records") {
    const RunResult run = completed_pair(10, 20);
    const TransferStats stats = transfer_time_stats(run);
    CHECK(stats.mean_slots == 15.0);
    CHECK(stats.max_slots == 20);
    CHECK(stats.completed == 2);
    CHECK(stats.in_flight == 0);
    // Sample variance of {10, 20} is 50; the SE of the mean is 5.
    CHECK(stats.se == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("deterministic transfer and residence at P=1") {
    SimConfig cfg = make_config(Protocol::kMultiplexed, 10, 1, 1.0, 0);
    cfg.target_completions = 1;
    const RunResult result = run(cfg);
    const TransferStats stats = transfer_time_stats(result);
    CHECK(stats.mean_slots == 11.0);
    CHECK(stats.max_slots == 11);
    CHECK(stats.completed == 1);
    // The lead qubit spends exactly one slot in each of its 11 stations.
    REQUIRE(stats.residence.size() == 1);
    CHECK(stats.residence.at(1) == 11);
}

TEST_CASE("mean transfer time cannot beat the hop count") {
    SimConfig cfg = make_config(Protocol::kParallelized, 4, 2, 0.4, 21);
    cfg.max_slots = 4000;
    const TransferStats stats = transfer_time_stats(run(cfg));
    CHECK(stats.completed > 10);
    CHECK(stats.mean_slots >= 5.0);  // N+1 slots is the physical floor
}

TEST_CASE("transfer stats without a completion is an error") {
    SimConfig cfg = make_config(Protocol::kMultiplexed, 2, 2, 0.0, 0);
    cfg.max_slots = 40;
    CHECK_THROWS_AS((void)transfer_time_stats(run(cfg)), NoCompletionError);
}

TEST_CASE("summary statistics over explicit latency readings") {
    MetricsSummary summary;
    summary.latencies = {ReplicationLatency{0, 10}, ReplicationLatency{1, 14}};
    CHECK(summary.latency_mean() == 12.0);
    // Sample sd of {10, 14} is sqrt(8); SE is 2; the 95% band is 3.92.
    CHECK(summary.latency_ci95() == doctest::Approx(3.92).epsilon(1e-12));
}

TEST_CASE("merge pools replications exactly") {
    SimConfig cfg = make_config(Protocol::kMultiplexed, 3, 2, 0.3, 17);
    cfg.max_slots = 4000;
    const RunResult r0 = run(cfg, 0);
    const RunResult r1 = run(cfg, 1);
    const MetricsSummary s0 = summarize(r0);
    const MetricsSummary s1 = summarize(r1);
    const MetricsSummary merged = merge(s0, s1);

    CHECK(merged.replications == 2);
    REQUIRE(merged.latencies.size() == 2);
    CHECK(merged.latencies[0].latency_slots == latency_slots(r0));
    CHECK(merged.latencies[1].latency_slots == latency_slots(r1));

    // Brute-force oracle: pool the raw transfer times of both runs.
    std::vector<double> pooled;
    std::uint64_t max_transfer = 0, in_flight = 0;
    for (const RunResult* r : {&r0, &r1}) {
        for (const QubitRecord& record : r->records) {
            if (!record.completed()) {
                in_flight += 1;
                continue;
            }
            pooled.push_back(static_cast<double>(record.transfer_slots()));
            max_transfer = std::max(max_transfer, record.transfer_slots());
        }
    }
    double sum = 0.0;
    for (double t : pooled) sum += t;
    CHECK(merged.transfer_count == pooled.size());
    CHECK(merged.transfer_mean() == doctest::Approx(sum / pooled.size()).epsilon(1e-12));
    CHECK(merged.transfer_max == max_transfer);
    CHECK(merged.in_flight == in_flight);

    double sq = 0.0;
    for (double t : pooled) sq += (t - sum / pooled.size()) * (t - sum / pooled.size());
    const double se = std::sqrt(sq / (pooled.size() - 1) / pooled.size());
    CHECK(merged.transfer_se() == doctest::Approx(se).epsilon(1e-9));
}

TEST_CASE("merge is commutative, associative, and has the empty identity") {
    SimConfig cfg = make_config(Protocol::kParallelized, 2, 2, 0.5, 8);
    cfg.max_slots = 2000;
    const MetricsSummary a = summarize(run(cfg, 0));
    const MetricsSummary b = summarize(run(cfg, 1));
    const MetricsSummary c = summarize(run(cfg, 2));

    CHECK(merge(a, b) == merge(b, a));
    CHECK(merge(merge(a, b), c) == merge(a, merge(b, c)));
    CHECK(merge(empty_summary(cfg), a) == a);
    CHECK(merge(a, empty_summary(cfg)) == a);
}

TEST_CASE("merge refuses mismatched configurations") {
    SimConfig cfg = make_config(Protocol::kMultiplexed, 2, 2, 0.5, 8);
    cfg.max_slots = 1000;
    SimConfig other = cfg;
    other.seed = 9;
    CHECK_THROWS_AS((void)merge(empty_summary(cfg), empty_summary(other)),
                    std::invalid_argument);
}

TEST_CASE("normalize_sweep rescales by the smallest-M point") {
    const auto normalized = normalize_sweep({{2, 52.0}, {1, 100.0}});
    REQUIRE(normalized.size() == 2);
    CHECK(normalized[0] == std::pair<std::uint32_t, double>{1, 1.0});
    CHECK(normalized[1].first == 2);
    CHECK(normalized[1].second == doctest::Approx(0.52).epsilon(1e-12));
}

TEST_CASE("normalize_sweep rejects degenerate inputs") {
    CHECK_THROWS_AS((void)normalize_sweep({}), std::invalid_argument);
    CHECK_THROWS_AS((void)normalize_sweep({{1, 10.0}, {1, 12.0}}), std::invalid_argument);
    CHECK_THROWS_AS((void)normalize_sweep({{1, 10.0}, {2, 0.0}}), std::invalid_argument);
    CHECK_THROWS_AS((void)normalize_sweep({{1, -1.0}}), std::invalid_argument);
}

TEST_CASE("summarize skips the slope for latency-style runs") {
    SimConfig cfg = make_config(Protocol::kMultiplexed, 5, 2, 1.0, 4);
    cfg.target_completions = 1;
    const MetricsSummary summary = summarize(run(cfg));
    CHECK(summary.replications == 1);
    CHECK(summary.latencies.size() == 1);
    CHECK(summary.throughputs.empty());
    CHECK(std::isnan(summary.throughput_mean()));
    CHECK(summary.transfer_count >= 1);
}

}  // TEST_SUITE("metrics")
