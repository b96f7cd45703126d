#pragma once

// Figures of merit over RunResults: first-completion latency, steady-state
// throughput (OLS slope of the cumulative-completions step function), and
// end-to-end transfer-time statistics, plus a mergeable per-replication
// summary for aggregation across seeds.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qrelay/engine.hpp"
#include "qrelay/model.hpp"

namespace qrelay {

struct NoCompletionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InsufficientDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Slot of the first arrival at the receiver. Seconds = slots * t0_seconds.
/// Throws NoCompletionError when the run completed nothing.
std::uint64_t latency_slots(const RunResult& run);

struct ThroughputEstimate {
    double per_slot = 0.0;  // completions per slot (steady-state slope)
    double se = 0.0;        // regression standard error of the slope

    bool operator==(const ThroughputEstimate&) const = default;
};

/// Least-squares slope of cumulative completions over the integer slots
/// [floor(burn_in_fraction * total_slots), total_slots]. Sufficient
/// statistics are accumulated exactly over the change points of the step
/// function, so a synthetic linear series recovers its slope to roundoff.
/// Throws InsufficientDataError when the window is shorter than 3 slots or
/// holds fewer than 10 completions.
ThroughputEstimate steady_throughput(const RunResult& run,
                                     double burn_in_fraction = 0.3);

struct TransferStats {
    double mean_slots = 0.0;  // mean completed_slot - injected_slot
    double se = 0.0;          // standard error of that mean
    std::uint64_t max_slots = 0;
    std::uint64_t completed = 0;
    std::uint64_t in_flight = 0;
    /// Station residence time (slots held) -> occurrence count, over every
    /// hop of every completed qubit.
    std::map<std::uint64_t, std::uint64_t> residence;
};

/// Computed over completed qubits only; in-flight counted separately.
/// Throws NoCompletionError when the run completed nothing.
TransferStats transfer_time_stats(const RunResult& run);

struct ReplicationLatency {
    std::uint32_t replication = 0;
    std::uint64_t latency_slots = 0;

    bool operator==(const ReplicationLatency&) const = default;
    auto operator<=>(const ReplicationLatency&) const = default;
};

struct ReplicationThroughput {
    std::uint32_t replication = 0;
    double per_slot = 0.0;
    double se = 0.0;

    bool operator==(const ReplicationThroughput&) const = default;
    auto operator<=>(const ReplicationThroughput&) const = default;
};

/// Mergeable cross-replication aggregate. Per-replication readings are kept
/// as sorted lists and transfer times as integer sufficient statistics, so
/// merge is associative and commutative and never loses precision.
struct MetricsSummary {
    SimConfig config;
    std::uint32_t replications = 0;
    std::vector<ReplicationLatency> latencies;
    std::vector<ReplicationThroughput> throughputs;  // absent for short runs
    std::uint64_t transfer_count = 0;
    unsigned __int128 transfer_sum = 0;
    unsigned __int128 transfer_sumsq = 0;
    std::uint64_t transfer_max = 0;
    std::uint64_t in_flight = 0;
    std::map<std::uint64_t, std::uint64_t> residence;

    bool operator==(const MetricsSummary&) const = default;

    double latency_mean() const;
    double latency_ci95() const;  // 1.96 * SE over replication latencies
    double throughput_mean() const;
    /// SE over replication slopes; single replication falls back to its
    /// regression SE. NaN when no replication produced a slope.
    double throughput_se() const;
    double transfer_mean() const;
    double transfer_se() const;
};

MetricsSummary empty_summary(const SimConfig& config);

/// One replication's contribution: latency and transfer stats always,
/// throughput only when the run is long enough to support a slope.
MetricsSummary summarize(const RunResult& run, double burn_in_fraction = 0.3);

/// Throws std::invalid_argument when the config echoes differ.
MetricsSummary merge(const MetricsSummary& a, const MetricsSummary& b);

/// Rescales (M, mean_transfer) points by the value at the smallest M, which
/// maps to 1.0. Points are returned sorted by M. Throws std::invalid_argument
/// on an empty sweep, duplicate M, or nonpositive values.
std::vector<std::pair<std::uint32_t, double>> normalize_sweep(
    const std::vector<std::pair<std::uint32_t, double>>& points);

}  // namespace qrelay
