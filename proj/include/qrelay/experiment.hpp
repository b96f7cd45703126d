#pragma once

// Experiment orchestration: config ingestion (JSON file overlaid by CLI
// flags), replication/sweep execution, and bit-stable CSV/JSON serialization.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qrelay/metrics.hpp"
#include "qrelay/model.hpp"
#include "qrelay/oracle.hpp"

namespace qrelay {

/// Configuration mistakes: unknown keys, type mismatches, SimConfig
/// violations. Mapped to exit code 1 by the CLI.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One config source (file or flag set) before validation; every field
/// optional so sources can be overlaid. Long JSON key names have short
/// aliases matching the CLI flags (nodes, m, p, t0, slots, completions,
/// burn_in).
struct SpecInput {
    std::optional<std::vector<std::string>> protocols;
    std::optional<std::uint32_t> n_repeaters;
    std::optional<std::uint32_t> m_per_node;
    std::optional<std::vector<std::uint32_t>> sweep;
    std::optional<double> p_success;
    std::optional<double> t0_seconds;
    std::optional<double> l0_meters;
    std::optional<std::uint64_t> max_slots;
    std::optional<std::uint64_t> target_completions;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint32_t> replications;
    std::optional<std::string> output_dir;
    std::optional<std::vector<std::string>> formats;
    std::optional<std::uint64_t> sample_every;
    std::optional<double> burn_in_fraction;
};

/// Parses one flat JSON object; rejects unknown keys, wrong types, and a key
/// given in both long and alias form, naming the key in the error.
SpecInput spec_input_from_json(const nlohmann::json& object);

/// Reads and parses a config file. Throws ConfigError on I/O or JSON errors.
SpecInput load_spec_file(const std::filesystem::path& path);

/// Field-by-field overlay; values in `flags` win.
SpecInput overlay(const SpecInput& file, const SpecInput& flags);

struct ExperimentSpec {
    SimConfig base;                    // m_per_node = smallest sweep value
    std::vector<Protocol> protocols;   // nonempty, distinct, input order
    std::vector<std::uint32_t> sweep;  // nonempty, distinct, ascending
    std::filesystem::path output_dir;  // deployment detail, kept out of echo
    bool write_csv = true;
    bool write_json = true;
    std::uint64_t sample_every = 1000;
    double burn_in_fraction = 0.3;
};

/// Validates an overlaid input into a runnable spec. Exactly one of
/// m_per_node and sweep must be set (`run` vs `sweep` usage); defaults:
/// protocols required, output_dir ".", formats both, sample_every 1000,
/// burn_in 0.3. All violations are reported together in one ConfigError.
ExperimentSpec finalize_spec(const SpecInput& input);

/// The provenance block embedded in every output: experiment definition in
/// long key names plus the artifact version. output_dir is deliberately not
/// part of it, so reruns into different directories stay byte-comparable.
nlohmann::ordered_json spec_echo(const ExperimentSpec& spec);

/// Summary serialization shared by the JSON and CSV encoders; key order is
/// the schema order.
nlohmann::ordered_json summary_to_json(const MetricsSummary& summary);

struct CellGroupOutput {
    Protocol protocol;
    std::uint32_t m = 0;
    MetricsSummary summary;  // merged over replications
};

struct ExperimentOutput {
    std::vector<CellGroupOutput> groups;
    std::vector<std::filesystem::path> files;  // everything written, in order
};

/// Runs every (protocol, sweep M, replication) cell and writes per-cell
/// time-series and qubit CSVs plus one merged summary per (protocol, M).
/// Identical specs produce byte-identical files.
ExperimentOutput run_experiment(const ExperimentSpec& spec);

struct OracleSuiteReport {
    oracle::CorrectionTable link_table{};
    oracle::CorrectionTable teleport_table{};
    oracle::LinkReport link;
    double teleport_min_fidelity = 0.0;
    bool equiprobable = false;
    bool passed = false;
    std::vector<std::string> failures;  // names every failing branch
};

/// link_generation_check over all branches, teleport_check over 100 seeded
/// random payloads, equiprobability of the four Bell outcomes. The injected
/// table override is the fault-injection hook for tests.
OracleSuiteReport oracle_suite(
    const std::optional<oracle::CorrectionTable>& injected_link_table =
        std::nullopt);

nlohmann::ordered_json oracle_report_to_json(const OracleSuiteReport& report);

}  // namespace qrelay
