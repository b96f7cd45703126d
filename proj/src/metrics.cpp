#include "qrelay/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qrelay {

namespace {

using int128 = __int128;

// Sum of 0..m (inclusive); exact for the slot ranges we handle.
int128 triangular(std::uint64_t m) {
    return static_cast<int128>(m) * (static_cast<int128>(m) + 1) / 2;
}

// Sum of squares 0..m (inclusive).
int128 square_pyramidal(std::uint64_t m) {
    const int128 n = static_cast<int128>(m);
    return n * (n + 1) * (2 * n + 1) / 6;
}

// Inclusive integer range [a, b] in window coordinates.
struct Piece {
    std::uint64_t a;
    std::uint64_t b;
    std::uint64_t value;
};

double sample_se_of_mean(double sum, double sumsq, double count) {
    if (count < 2.0) return 0.0;
    const double mean = sum / count;
    double var = (sumsq - count * mean * mean) / (count - 1.0);
    if (var < 0.0) var = 0.0;  // roundoff guard
    return std::sqrt(var / count);
}

}  // namespace

std::uint64_t latency_slots(const RunResult& run) {
    std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
    for (const QubitRecord& record : run.records) {
        if (record.completed()) best = std::min(best, *record.completed_slot);
    }
    if (best == std::numeric_limits<std::uint64_t>::max()) {
        throw NoCompletionError("no completion: latency is undefined");
    }
    return best;
}

ThroughputEstimate steady_throughput(const RunResult& run,
                                     double burn_in_fraction) {
    if (!(burn_in_fraction >= 0.0) || burn_in_fraction >= 1.0) {
        throw std::invalid_argument("burn_in_fraction must be in [0, 1)");
    }
    const std::uint64_t s1 = run.total_slots;
    const std::uint64_t s0 =
        static_cast<std::uint64_t>(burn_in_fraction * static_cast<double>(s1));
    if (s1 < s0 + 2) {
        throw InsufficientDataError(
            "insufficient data: post-burn-in window shorter than 3 slots");
    }
    if (run.completed_count - run.completions_at(s0) < 10) {
        throw InsufficientDataError(
            "insufficient data: fewer than 10 completions after burn-in");
    }

    // Clip the step function's constant pieces to [s0, s1], in window
    // coordinates u = slot - s0.
    std::vector<Piece> pieces;
    const auto& series = run.completion_series;
    for (std::size_t j = 0; j < series.size(); ++j) {
        std::uint64_t lo = series[j].slot;
        std::uint64_t hi = (j + 1 < series.size()) ? series[j + 1].slot - 1 : s1;
        lo = std::max(lo, s0);
        hi = std::min(hi, s1);
        if (lo > hi) continue;
        pieces.push_back(Piece{lo - s0, hi - s0, series[j].completions});
    }

    // Exact sufficient statistics over u in [0, n-1].
    const int128 n = static_cast<int128>(s1 - s0 + 1);
    int128 su = 0, suu = 0, sy = 0, suy = 0;
    for (const Piece& p : pieces) {
        const int128 count = static_cast<int128>(p.b - p.a + 1);
        const int128 range_u = triangular(p.b) - (p.a ? triangular(p.a - 1) : 0);
        const int128 range_uu =
            square_pyramidal(p.b) - (p.a ? square_pyramidal(p.a - 1) : 0);
        su += range_u;
        suu += range_uu;
        sy += static_cast<int128>(p.value) * count;
        suy += static_cast<int128>(p.value) * range_u;
    }
    const int128 num = n * suy - su * sy;
    const int128 den = n * suu - su * su;  // n^2 (n^2 - 1) / 12 > 0
    const long double slope = static_cast<long double>(num) / static_cast<long double>(den);

    // Residual sum of squares from a second pass; the piece sums stay exact,
    // only the fitted line is floating point.
    const long double ybar = static_cast<long double>(sy) / static_cast<long double>(n);
    const long double ubar = static_cast<long double>(su) / static_cast<long double>(n);
    long double ssr = 0.0L;
    for (const Piece& p : pieces) {
        const long double count = static_cast<long double>(p.b - p.a + 1);
        const long double range_u = static_cast<long double>(
            triangular(p.b) - (p.a ? triangular(p.a - 1) : 0));
        const long double range_uu = static_cast<long double>(
            square_pyramidal(p.b) - (p.a ? square_pyramidal(p.a - 1) : 0));
        // residual(u) = c0 - slope * u on this piece
        const long double c0 =
            static_cast<long double>(p.value) - ybar + slope * ubar;
        ssr += count * c0 * c0 - 2.0L * c0 * slope * range_u +
               slope * slope * range_uu;
    }
    if (ssr < 0.0L) ssr = 0.0L;  // roundoff guard

    const long double sxx = static_cast<long double>(den) / static_cast<long double>(n);
    const long double var =
        ssr / (static_cast<long double>(n - 2) * sxx);
    return ThroughputEstimate{static_cast<double>(slope),
                              static_cast<double>(std::sqrt(var))};
}

TransferStats transfer_time_stats(const RunResult& run) {
    TransferStats stats;
    unsigned __int128 sum = 0, sumsq = 0;
    for (const QubitRecord& record : run.records) {
        if (!record.completed()) {
            stats.in_flight += 1;
            continue;
        }
        const std::uint64_t t = record.transfer_slots();
        stats.completed += 1;
        sum += t;
        sumsq += static_cast<unsigned __int128>(t) * t;
        stats.max_slots = std::max(stats.max_slots, t);
        for (std::size_t i = 0; i < record.hops.size(); ++i) {
            const std::uint64_t departure = (i + 1 < record.hops.size())
                                                ? record.hops[i + 1].arrival_slot
                                                : *record.completed_slot;
            stats.residence[departure - record.hops[i].arrival_slot] += 1;
        }
    }
    if (stats.completed == 0) {
        throw NoCompletionError("no completion: transfer stats are undefined");
    }
    const double count = static_cast<double>(stats.completed);
    stats.mean_slots = static_cast<double>(static_cast<long double>(sum) / count);
    stats.se = sample_se_of_mean(static_cast<double>(static_cast<long double>(sum)),
                                 static_cast<double>(static_cast<long double>(sumsq)),
                                 count);
    return stats;
}

double MetricsSummary::latency_mean() const {
    if (latencies.empty()) return std::numeric_limits<double>::quiet_NaN();
    long double sum = 0.0L;
    for (const auto& entry : latencies) sum += entry.latency_slots;
    return static_cast<double>(sum / latencies.size());
}

double MetricsSummary::latency_ci95() const {
    if (latencies.empty()) return std::numeric_limits<double>::quiet_NaN();
    long double sum = 0.0L, sumsq = 0.0L;
    for (const auto& entry : latencies) {
        sum += entry.latency_slots;
        sumsq += static_cast<long double>(entry.latency_slots) * entry.latency_slots;
    }
    return 1.96 * sample_se_of_mean(static_cast<double>(sum),
                                    static_cast<double>(sumsq),
                                    static_cast<double>(latencies.size()));
}

double MetricsSummary::throughput_mean() const {
    if (throughputs.empty()) return std::numeric_limits<double>::quiet_NaN();
    long double sum = 0.0L;
    for (const auto& entry : throughputs) sum += entry.per_slot;
    return static_cast<double>(sum / throughputs.size());
}

double MetricsSummary::throughput_se() const {
    if (throughputs.empty()) return std::numeric_limits<double>::quiet_NaN();
    if (throughputs.size() == 1) return throughputs.front().se;
    long double sum = 0.0L, sumsq = 0.0L;
    for (const auto& entry : throughputs) {
        sum += entry.per_slot;
        sumsq += static_cast<long double>(entry.per_slot) * entry.per_slot;
    }
    return sample_se_of_mean(static_cast<double>(sum), static_cast<double>(sumsq),
                             static_cast<double>(throughputs.size()));
}

double MetricsSummary::transfer_mean() const {
    if (transfer_count == 0) return std::numeric_limits<double>::quiet_NaN();
    return static_cast<double>(static_cast<long double>(transfer_sum) /
                               static_cast<long double>(transfer_count));
}

double MetricsSummary::transfer_se() const {
    if (transfer_count == 0) return std::numeric_limits<double>::quiet_NaN();
    return sample_se_of_mean(
        static_cast<double>(static_cast<long double>(transfer_sum)),
        static_cast<double>(static_cast<long double>(transfer_sumsq)),
        static_cast<double>(transfer_count));
}

MetricsSummary empty_summary(const SimConfig& config) {
    MetricsSummary summary;
    summary.config = config;
    return summary;
}

MetricsSummary summarize(const RunResult& run, double burn_in_fraction) {
    MetricsSummary summary = empty_summary(run.config);
    summary.replications = 1;
    summary.latencies.push_back(
        ReplicationLatency{run.replication_index, latency_slots(run)});
    try {
        const ThroughputEstimate estimate = steady_throughput(run, burn_in_fraction);
        summary.throughputs.push_back(ReplicationThroughput{
            run.replication_index, estimate.per_slot, estimate.se});
    } catch (const InsufficientDataError&) {
        // Latency-style runs stop at the first completion; no slope then.
    }
    const TransferStats stats = transfer_time_stats(run);
    summary.transfer_count = stats.completed;
    summary.in_flight = stats.in_flight;
    summary.transfer_max = stats.max_slots;
    for (const QubitRecord& record : run.records) {
        if (!record.completed()) continue;
        const std::uint64_t t = record.transfer_slots();
        summary.transfer_sum += t;
        summary.transfer_sumsq += static_cast<unsigned __int128>(t) * t;
    }
    summary.residence = stats.residence;
    return summary;
}

MetricsSummary merge(const MetricsSummary& a, const MetricsSummary& b) {
    if (!(a.config == b.config)) {
        throw std::invalid_argument("merge requires identical config echoes");
    }
    MetricsSummary out = empty_summary(a.config);
    out.replications = a.replications + b.replications;
    out.latencies.resize(a.latencies.size() + b.latencies.size());
    std::merge(a.latencies.begin(), a.latencies.end(), b.latencies.begin(),
               b.latencies.end(), out.latencies.begin());
    out.throughputs.resize(a.throughputs.size() + b.throughputs.size());
    std::merge(a.throughputs.begin(), a.throughputs.end(), b.throughputs.begin(),
               b.throughputs.end(), out.throughputs.begin());
    out.transfer_count = a.transfer_count + b.transfer_count;
    out.transfer_sum = a.transfer_sum + b.transfer_sum;
    out.transfer_sumsq = a.transfer_sumsq + b.transfer_sumsq;
    out.transfer_max = std::max(a.transfer_max, b.transfer_max);
    out.in_flight = a.in_flight + b.in_flight;
    out.residence = a.residence;
    for (const auto& [slots, count] : b.residence) out.residence[slots] += count;
    return out;
}

std::vector<std::pair<std::uint32_t, double>> normalize_sweep(
    const std::vector<std::pair<std::uint32_t, double>>& points) {
    if (points.empty()) {
        throw std::invalid_argument("normalize_sweep: missing baseline point");
    }
    std::vector<std::pair<std::uint32_t, double>> sorted = points;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (!(sorted[i].second > 0.0)) {
            throw std::invalid_argument(
                "normalize_sweep: transfer times must be positive");
        }
        if (i > 0 && sorted[i].first == sorted[i - 1].first) {
            throw std::invalid_argument("normalize_sweep: duplicate M value");
        }
    }
    const double baseline = sorted.front().second;
    for (auto& point : sorted) point.second /= baseline;
    return sorted;
}

}  // namespace qrelay
