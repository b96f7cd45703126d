#pragma once

// Synchronous slotted state machine advancing a NetworkState under one of
// the two relay policies, with deterministic seeded randomness.
//
// Slot semantics: every segment attempt in slot s reads occupancy as it was
// at the start of slot s (after injection); all successful moves commit
// together at the slot boundary. A qubit therefore advances at most one
// segment per slot, and a unit never acts as both holder and emitter within
// the same slot.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qrelay/model.hpp"

namespace qrelay {

/// One segment (or chain-segment) attempt as seen by a SlotReport.
struct SegmentAttempt {
    std::uint32_t segment = 0;        // connects station `segment` to `segment + 1`
    std::uint32_t chain = 0;          // chain index (parallelized); 0 when multiplexed
    std::uint32_t receiver_unit = 0;  // holder's unit index at station `segment`
    std::uint64_t qubit_id = 0;
    std::uint32_t emitter_count = 0;  // eligible free units at station `segment + 1`
    AttemptOutcome outcome;
    std::uint32_t absorber_unit = 0;  // winning unit index at `segment + 1` (on success)
};

struct SlotReport {
    std::uint64_t slot = 0;
    std::uint32_t injections = 0;
    std::uint32_t completions = 0;
    std::vector<SegmentAttempt> attempts;
};

/// Change point of the cumulative-completions step function: `completions`
/// qubits have completed_slot <= `slot`. Slots between change points carry
/// the previous value.
struct SeriesPoint {
    std::uint64_t slot = 0;
    std::uint64_t completions = 0;

    bool operator==(const SeriesPoint&) const = default;
};

struct RunResult {
    SimConfig config;
    std::uint32_t replication_index = 0;
    std::uint64_t total_slots = 0;
    std::uint64_t completed_count = 0;
    std::vector<QubitRecord> records;          // all qubits, in-flight included
    std::vector<SeriesPoint> completion_series;

    /// Cumulative completions with completed_slot <= slot.
    std::uint64_t completions_at(std::uint64_t slot) const;
};

/// Raised when a target_completions run can make no progress (p == 0) or
/// exceeds the no-progress slot cap.
struct NoProgressError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Hard cap for target_completions runs; hitting it raises NoProgressError.
inline constexpr std::uint64_t kNoProgressSlotCap = 1'000'000'000;

/// Seed-splitting rule for replications: stream r uses
/// seed XOR (0x9E3779B97F4A7C15 * r), so replication 0 runs on the base seed.
std::uint64_t replication_seed(std::uint64_t seed, std::uint32_t replication_index);

/// All units free, slot counter 0.
NetworkState init_network(const SimConfig& config);

/// FIFO receiver choice: the holding unit with the smallest arrival_slot,
/// ties broken by smallest qubit_id. nullopt when the station holds nothing.
std::optional<std::uint32_t> select_receiver(const Station& station);

/// Ordered (ascending index) free units of a station: the multiplexed
/// emitter list for the segment ending at this station.
std::vector<std::uint32_t> eligible_emitters(const Station& station);

class Simulation {
  public:
    Simulation(const SimConfig& config, std::uint32_t replication_index);

    const SimConfig& config() const { return config_; }
    std::uint32_t replication_index() const { return replication_index_; }
    const NetworkState& network() const { return state_; }
    std::uint64_t current_slot() const { return state_.current_slot; }
    std::uint64_t completed_count() const { return state_.completed_count; }

    bool stopped() const;

    /// Advances exactly one slot: inject at the sender, attempt every
    /// segment against the slot-start snapshot, commit all moves, then
    /// advance the slot counter. The returned report is owned by the
    /// simulation and overwritten by the next step.
    const SlotReport& step_slot();

    /// Consumes the simulation into its RunResult.
    RunResult take_result() &&;

  private:
    void inject_at_sender();
    void decide_multiplexed();
    void decide_parallelized();
    void commit_moves();

    struct Move {
        std::uint32_t segment;
        std::uint32_t from_unit;
        std::uint32_t to_unit;
        std::uint64_t qubit_id;
    };

    SimConfig config_;
    std::uint32_t replication_index_;
    NetworkState state_;
    std::mt19937_64 rng_;
    std::vector<SeriesPoint> series_;
    SlotReport report_;
    std::vector<Move> moves_;
    std::vector<std::uint32_t> emitter_scratch_;
};

/// Steps a fresh simulation to its stop condition. Bit-identical results
/// for identical (config, replication_index).
RunResult run(const SimConfig& config, std::uint32_t replication_index = 0);

}  // namespace qrelay
