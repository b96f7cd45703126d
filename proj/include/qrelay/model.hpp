#pragma once

// Domain types shared by the whole simulator, plus the closed-form
// mathematics of a single segment's entanglement attempt.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace qrelay {

enum class Protocol {
    kParallelized,  // M independent chains, one NV per chain per node
    kMultiplexed,   // all free NVs of the next node emit toward one receiver
};

std::string_view to_string(Protocol protocol);
std::optional<Protocol> protocol_from_string(std::string_view name);

/// Validated simulation parameters. N repeater nodes sit strictly between
/// the sender (station 0) and the receiver (station N+1); every station
/// carries M NV units. Time is slotted in units of t0: routing, state
/// preparation, Bell measurement, and heralding are all absorbed into the
/// slot. Exactly one of max_slots / target_completions is set.
struct SimConfig {
    Protocol protocol = Protocol::kMultiplexed;
    std::uint32_t n_repeaters = 1;   // N
    std::uint32_t m_per_node = 1;    // M
    double p_success = 1.0;          // P, per-photon heralded success probability
    double t0_seconds = 1.0;         // slot duration; 1.0 means "report in slots"
    std::optional<double> l0_meters; // descriptive only, echoed in outputs
    std::optional<std::uint64_t> max_slots;
    std::optional<std::uint64_t> target_completions;
    std::uint64_t seed = 0;
    std::uint32_t replications = 1;

    std::uint32_t station_count() const { return n_repeaters + 2; }
    std::uint32_t segment_count() const { return n_repeaters + 1; }
    std::uint32_t receiver_station() const { return n_repeaters + 1; }

    bool operator==(const SimConfig&) const = default;
};

/// Raw, not-yet-validated configuration as read from a file or flags.
struct SimConfigInput {
    std::optional<std::string> protocol;
    std::optional<std::int64_t> n_repeaters;
    std::optional<std::int64_t> m_per_node;
    std::optional<double> p_success;
    std::optional<double> t0_seconds;
    std::optional<double> l0_meters;
    std::optional<std::int64_t> max_slots;
    std::optional<std::int64_t> target_completions;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> replications;
};

struct ConfigValidation {
    std::optional<SimConfig> config;   // set iff errors is empty
    std::vector<std::string> errors;   // one entry per violated invariant
    bool ok() const { return errors.empty(); }
};

/// Enforces every SimConfig invariant, accumulating all violations instead
/// of stopping at the first. Defaults: t0_seconds = 1.0, replications = 1.
ConfigValidation validate_config(const SimConfigInput& raw);

inline constexpr std::uint64_t kNoQubit = ~std::uint64_t{0};

/// One NV unit: free, or holding exactly one in-transit qubit. The unit's
/// two physical memories (stored qubit + transient link half) collapse into
/// this single status because link creation and teleportation complete
/// within one slot.
struct NvUnit {
    std::uint64_t qubit_id = kNoQubit;
    std::uint64_t arrival_slot = 0;

    bool holding() const { return qubit_id != kNoQubit; }
    void clear() { qubit_id = kNoQubit; arrival_slot = 0; }
};

struct Station {
    std::vector<NvUnit> units;
    std::uint32_t holding_count = 0;  // maintained by the engine; lets slot
                                      // processing skip empty stations
};

struct Hop {
    std::uint32_t station = 0;
    std::uint64_t arrival_slot = 0;

    bool operator==(const Hop&) const = default;
};

/// Full itinerary of one qubit. hops[0] is the injection at the sender;
/// station indices increase by exactly one per entry.
struct QubitRecord {
    std::uint64_t qubit_id = 0;
    std::uint64_t injected_slot = 0;
    std::vector<Hop> hops;
    std::optional<std::uint64_t> completed_slot;

    bool completed() const { return completed_slot.has_value(); }
    std::uint64_t transfer_slots() const { return *completed_slot - injected_slot; }
};

/// Occupancy of the full chain at one instant.
struct NetworkState {
    std::vector<Station> stations;     // n_repeaters + 2 entries
    std::uint64_t current_slot = 0;
    std::vector<QubitRecord> records;  // indexed by qubit_id; in-flight and completed
    std::uint64_t next_qubit_id = 0;
    std::uint64_t completed_count = 0;
};

/// Outcome of one slotted entanglement attempt on a segment. On success,
/// emitter_index identifies the winning emitter as a 0-based position in
/// the ordered free-emitter list (emission order is ascending NV index).
struct AttemptOutcome {
    bool success = false;
    std::uint32_t emitter_index = 0;

    static AttemptOutcome failure() { return {}; }
    static AttemptOutcome success_at(std::uint32_t k) { return {true, k}; }

    bool operator==(const AttemptOutcome&) const = default;
};

/// 53-bit uniform variate in [0, 1). Defined here (rather than through
/// std::uniform_real_distribution) so traces are identical across standard
/// library implementations.
double next_uniform(std::mt19937_64& rng);

/// Probability that at least one of m_free sequential attempts with
/// per-attempt success probability p succeeds: 1 - (1-p)^m_free.
/// Throws std::domain_error if p is outside [0, 1].
double success_probability(std::uint64_t m_free, double p);

/// Samples one slot's multiplexed attempt: emitters fire in order, the
/// first absorbed photon wins. P(success at k) = (1-p)^k * p. Consumes
/// exactly one uniform variate per call (inverse CDF), so the RNG trace
/// length does not depend on outcomes.
AttemptOutcome sample_attempt(std::uint64_t m_free, double p, std::mt19937_64& rng);

/// Mean waiting time, in slots, for a segment with m_free emitters:
/// 1 / success_probability. Throws std::domain_error when the attempt can
/// never succeed (m_free == 0 or p == 0).
double expected_slots_to_success(std::uint64_t m_free, double p);

}  // namespace qrelay
