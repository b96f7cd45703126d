#include "qrelay/engine.hpp"

#include <algorithm>
#include <cassert>
#include <limits>

namespace qrelay {

std::uint64_t RunResult::completions_at(std::uint64_t slot) const {
    // Last change point with .slot <= slot.
    auto it = std::upper_bound(
        completion_series.begin(), completion_series.end(), slot,
        [](std::uint64_t s, const SeriesPoint& pt) { return s < pt.slot; });
    if (it == completion_series.begin()) return 0;
    return std::prev(it)->completions;
}

std::uint64_t replication_seed(std::uint64_t seed, std::uint32_t replication_index) {
    return seed ^ (0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(replication_index));
}

NetworkState init_network(const SimConfig& config) {
    NetworkState state;
    state.stations.resize(config.station_count());
    for (auto& station : state.stations) {
        station.units.assign(config.m_per_node, NvUnit{});
    }
    return state;
}

std::optional<std::uint32_t> select_receiver(const Station& station) {
    std::optional<std::uint32_t> best;
    for (std::uint32_t i = 0; i < station.units.size(); ++i) {
        const NvUnit& unit = station.units[i];
        if (!unit.holding()) continue;
        if (!best) {
            best = i;
            continue;
        }
        const NvUnit& incumbent = station.units[*best];
        if (unit.arrival_slot < incumbent.arrival_slot ||
            (unit.arrival_slot == incumbent.arrival_slot &&
             unit.qubit_id < incumbent.qubit_id)) {
            best = i;
        }
    }
    return best;
}

std::vector<std::uint32_t> eligible_emitters(const Station& station) {
    std::vector<std::uint32_t> free;
    for (std::uint32_t i = 0; i < station.units.size(); ++i) {
        if (!station.units[i].holding()) free.push_back(i);
    }
    return free;
}

Simulation::Simulation(const SimConfig& config, std::uint32_t replication_index)
    : config_(config),
      replication_index_(replication_index),
      state_(init_network(config)),
      rng_(replication_seed(config.seed, replication_index)) {
    series_.push_back(SeriesPoint{0, 0});
}

bool Simulation::stopped() const {
    if (config_.max_slots) return state_.current_slot >= *config_.max_slots;
    return state_.completed_count >= *config_.target_completions;
}

const SlotReport& Simulation::step_slot() {
    if (stopped()) {
        throw std::logic_error("step_slot called on a stopped simulation");
    }
    report_.slot = state_.current_slot;
    report_.injections = 0;
    report_.completions = 0;
    report_.attempts.clear();
    moves_.clear();

    inject_at_sender();
    if (config_.protocol == Protocol::kMultiplexed) {
        decide_multiplexed();
    } else {
        decide_parallelized();
    }
    commit_moves();

    state_.current_slot += 1;
    return report_;
}

void Simulation::inject_at_sender() {
    // Saturated source: every free sender unit loads a fresh qubit at the
    // start of the slot. Injected qubits are immediately eligible to emit.
    Station& sender = state_.stations.front();
    for (std::uint32_t i = 0; i < sender.units.size(); ++i) {
        NvUnit& unit = sender.units[i];
        if (unit.holding()) continue;
        unit.qubit_id = state_.next_qubit_id++;
        unit.arrival_slot = state_.current_slot;
        sender.holding_count += 1;
        QubitRecord record;
        record.qubit_id = unit.qubit_id;
        record.injected_slot = state_.current_slot;
        record.hops.push_back(Hop{0, state_.current_slot});
        state_.records.push_back(std::move(record));
        report_.injections += 1;
    }
}

void Simulation::decide_multiplexed() {
    // Segments in ascending order; each reads the same slot-start snapshot,
    // which stays valid because decisions only commit afterwards.
    const std::uint32_t segments = config_.segment_count();
    for (std::uint32_t seg = 0; seg < segments; ++seg) {
        const Station& from = state_.stations[seg];
        const Station& to = state_.stations[seg + 1];
        if (from.holding_count == 0 || to.holding_count == config_.m_per_node) {
            continue;  // no receiver / no free emitter: no attempt, no variate
        }
        auto receiver = select_receiver(from);
        if (!receiver) continue;
        emitter_scratch_ = eligible_emitters(to);
        if (emitter_scratch_.empty()) continue;

        AttemptOutcome outcome =
            sample_attempt(static_cast<std::uint32_t>(emitter_scratch_.size()),
                           config_.p_success, rng_);
        SegmentAttempt attempt;
        attempt.segment = seg;
        attempt.chain = 0;
        attempt.receiver_unit = *receiver;
        attempt.qubit_id = from.units[*receiver].qubit_id;
        attempt.emitter_count = static_cast<std::uint32_t>(emitter_scratch_.size());
        attempt.outcome = outcome;
        if (outcome.success) {
            attempt.absorber_unit = emitter_scratch_[outcome.emitter_index];
            moves_.push_back(Move{seg, *receiver, attempt.absorber_unit,
                                  attempt.qubit_id});
        }
        report_.attempts.push_back(attempt);
    }
}

void Simulation::decide_parallelized() {
    // Chain c owns unit c at every station; a pair is eligible when the
    // upstream unit holds and the downstream unit is free. Segment-major
    // order, chains ascending within a segment.
    const std::uint32_t segments = config_.segment_count();
    for (std::uint32_t seg = 0; seg < segments; ++seg) {
        const Station& from = state_.stations[seg];
        const Station& to = state_.stations[seg + 1];
        if (from.holding_count == 0 || to.holding_count == config_.m_per_node) {
            continue;  // no eligible (holder, free) pair on any chain
        }
        for (std::uint32_t chain = 0; chain < config_.m_per_node; ++chain) {
            const NvUnit& up = from.units[chain];
            const NvUnit& down = to.units[chain];
            if (!up.holding() || down.holding()) continue;

            AttemptOutcome outcome = sample_attempt(1, config_.p_success, rng_);
            SegmentAttempt attempt;
            attempt.segment = seg;
            attempt.chain = chain;
            attempt.receiver_unit = chain;
            attempt.qubit_id = up.qubit_id;
            attempt.emitter_count = 1;
            attempt.outcome = outcome;
            if (outcome.success) {
                attempt.absorber_unit = chain;
                moves_.push_back(Move{seg, chain, chain, attempt.qubit_id});
            }
            report_.attempts.push_back(attempt);
        }
    }
}

void Simulation::commit_moves() {
    // Snapshot reads guarantee no two moves share a source or destination
    // unit, so commits are order-independent.
    const std::uint32_t receiver_station = config_.receiver_station();
    const std::uint64_t arrival = state_.current_slot + 1;
    for (const Move& move : moves_) {
        Station& source = state_.stations[move.segment];
        NvUnit& from = source.units[move.from_unit];
        assert(from.holding() && from.qubit_id == move.qubit_id);
        from.clear();
        source.holding_count -= 1;

        QubitRecord& record = state_.records[move.qubit_id];
        if (move.segment + 1 == receiver_station) {
            record.completed_slot = arrival;
            state_.completed_count += 1;
            report_.completions += 1;
        } else {
            Station& target = state_.stations[move.segment + 1];
            NvUnit& to = target.units[move.to_unit];
            assert(!to.holding());
            to.qubit_id = move.qubit_id;
            to.arrival_slot = arrival;
            target.holding_count += 1;
            record.hops.push_back(Hop{move.segment + 1, arrival});
        }
    }
    if (report_.completions > 0) {
        series_.push_back(SeriesPoint{arrival, state_.completed_count});
    }
}

RunResult Simulation::take_result() && {
    RunResult result;
    result.config = config_;
    result.replication_index = replication_index_;
    result.total_slots = state_.current_slot;
    result.completed_count = state_.completed_count;
    result.records = std::move(state_.records);
    result.completion_series = std::move(series_);
    return result;
}

RunResult run(const SimConfig& config, std::uint32_t replication_index) {
    Simulation sim(config, replication_index);
    if (config.target_completions) {
        if (config.p_success == 0.0) {
            throw NoProgressError(
                "target_completions can never be reached with p_success = 0");
        }
        while (!sim.stopped()) {
            if (sim.current_slot() >= kNoProgressSlotCap) {
                throw NoProgressError(
                    "no-progress slot cap reached before target_completions");
            }
            sim.step_slot();
        }
    } else {
        while (!sim.stopped()) sim.step_slot();
    }
    return std::move(sim).take_result();
}

}  // namespace qrelay
