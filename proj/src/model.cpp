#include "qrelay/model.hpp"

#include <cmath>
#include <stdexcept>

namespace qrelay {

std::string_view to_string(Protocol protocol) {
    switch (protocol) {
        case Protocol::kParallelized: return "parallelized";
        case Protocol::kMultiplexed: return "multiplexed";
    }
    return "unknown";
}

std::optional<Protocol> protocol_from_string(std::string_view name) {
    if (name == "parallelized") return Protocol::kParallelized;
    if (name == "multiplexed") return Protocol::kMultiplexed;
    return std::nullopt;
}

ConfigValidation validate_config(const SimConfigInput& raw) {
    ConfigValidation result;
    auto fail = [&result](std::string message) {
        result.errors.push_back(std::move(message));
    };

    SimConfig cfg;

    if (raw.protocol) {
        if (auto p = protocol_from_string(*raw.protocol)) {
            cfg.protocol = *p;
        } else {
            fail("protocol must be one of {parallelized, multiplexed}, got \"" +
                 *raw.protocol + "\"");
        }
    }

    if (raw.n_repeaters) {
        if (*raw.n_repeaters < 1) {
            fail("n_repeaters must be a positive integer");
        } else {
            cfg.n_repeaters = static_cast<std::uint32_t>(*raw.n_repeaters);
        }
    } else {
        fail("n_repeaters is required");
    }

    if (raw.m_per_node) {
        if (*raw.m_per_node < 1) {
            fail("m_per_node must be a positive integer");
        } else {
            cfg.m_per_node = static_cast<std::uint32_t>(*raw.m_per_node);
        }
    } else {
        fail("m_per_node is required");
    }

    if (raw.p_success) {
        if (!(*raw.p_success > 0.0) || *raw.p_success > 1.0 ||
            !std::isfinite(*raw.p_success)) {
            fail("p_success must be in (0,1]");
        } else {
            cfg.p_success = *raw.p_success;
        }
    } else {
        fail("p_success is required");
    }

    cfg.t0_seconds = raw.t0_seconds.value_or(1.0);
    if (!(cfg.t0_seconds > 0.0) || !std::isfinite(cfg.t0_seconds)) {
        fail("t0_seconds must be a positive real");
    }

    if (raw.l0_meters) {
        if (!(*raw.l0_meters > 0.0) || !std::isfinite(*raw.l0_meters)) {
            fail("l0_meters must be a positive real");
        } else {
            cfg.l0_meters = raw.l0_meters;
        }
    }

    const bool has_slots = raw.max_slots.has_value();
    const bool has_target = raw.target_completions.has_value();
    if (has_slots == has_target) {
        fail("exactly one stop condition (max_slots or target_completions) must be set");
    } else if (has_slots) {
        if (*raw.max_slots < 1) {
            fail("max_slots must be a positive integer");
        } else {
            cfg.max_slots = static_cast<std::uint64_t>(*raw.max_slots);
        }
    } else {
        if (*raw.target_completions < 1) {
            fail("target_completions must be a positive integer");
        } else {
            cfg.target_completions = static_cast<std::uint64_t>(*raw.target_completions);
        }
    }

    cfg.seed = raw.seed.value_or(0);

    cfg.replications = 1;
    if (raw.replications) {
        if (*raw.replications < 1) {
            fail("replications must be a positive integer");
        } else {
            cfg.replications = static_cast<std::uint32_t>(*raw.replications);
        }
    }

    if (result.errors.empty()) {
        result.config = cfg;
    }
    return result;
}

double next_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

namespace {

void check_probability(double p) {
    if (!(p >= 0.0) || p > 1.0) {
        throw std::domain_error("success probability must lie in [0,1]");
    }
}

}  // namespace

double success_probability(std::uint64_t m_free, double p) {
    check_probability(p);
    if (m_free == 0) return 0.0;
    // -expm1 keeps precision when p*m_free is tiny.
    return -std::expm1(static_cast<double>(m_free) * std::log1p(-p));
}

AttemptOutcome sample_attempt(std::uint64_t m_free, double p, std::mt19937_64& rng) {
    check_probability(p);
    const double u = next_uniform(rng);
    if (m_free == 0 || p == 0.0) return AttemptOutcome::failure();
    if (p == 1.0) return AttemptOutcome::success_at(0);
    // Inverse CDF of the truncated geometric: the winning emitter index is
    // floor(log(1-u)/log(1-p)), a failure when that falls past the list.
    const double k = std::floor(std::log1p(-u) / std::log1p(-p));
    if (!(k < static_cast<double>(m_free))) return AttemptOutcome::failure();
    return AttemptOutcome::success_at(static_cast<std::uint32_t>(k));
}

double expected_slots_to_success(std::uint64_t m_free, double p) {
    check_probability(p);
    if (m_free == 0 || p == 0.0) {
        throw std::domain_error("attempt never succeeds: no emitters or p = 0");
    }
    return 1.0 / success_probability(m_free, p);
}

}  // namespace qrelay
