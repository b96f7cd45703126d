// qrelay command line front end.
//
// Subcommands:
//   run     one experiment (single M) over R replications
//   sweep   the same, across a list of M values
//   oracle  statevector verification of link generation and teleportation
//
// Exit codes: 0 success, 1 configuration error, 2 runtime error,
// 3 oracle failure. QRELAY_OUTPUT_DIR overrides any configured output
// directory.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qrelay/engine.hpp"
#include "qrelay/experiment.hpp"
#include "qrelay/version.hpp"

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitRuntimeError = 2;
constexpr int kExitOracleFailure = 3;

struct CommonFlags {
    std::optional<std::string> config_file;
    std::vector<std::string> protocols;
    std::optional<std::uint32_t> nodes;
    std::optional<double> p;
    std::optional<double> t0;
    std::optional<double> l0;
    std::optional<std::uint64_t> slots;
    std::optional<std::uint64_t> completions;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint32_t> replications;
    std::optional<std::string> out_dir;
    std::vector<std::string> formats;
    std::optional<std::uint64_t> sample_every;
    std::optional<double> burn_in;
};

void add_common_flags(CLI::App& cmd, CommonFlags& flags) {
    cmd.add_option("--config", flags.config_file,
                   "JSON config file; flags override its values");
    cmd.add_option("--protocol", flags.protocols,
                   "parallelized or multiplexed (repeatable)");
    cmd.add_option("--nodes", flags.nodes, "number of repeater nodes N");
    cmd.add_option("--p", flags.p, "per-attempt success probability P");
    cmd.add_option("--t0", flags.t0, "slot duration in seconds (default 1.0)");
    cmd.add_option("--l0", flags.l0,
                   "segment length in meters (descriptive, echoed only)");
    cmd.add_option("--slots", flags.slots, "stop after this many slots");
    cmd.add_option("--completions", flags.completions,
                   "stop once this many qubits completed");
    cmd.add_option("--seed", flags.seed, "base RNG seed (default 0)");
    cmd.add_option("--replications", flags.replications,
                   "independent replications per cell (default 1)");
    cmd.add_option("--out", flags.out_dir,
                   "output directory (QRELAY_OUTPUT_DIR overrides)");
    cmd.add_option("--format", flags.formats, "csv or json (repeatable)");
    cmd.add_option("--sample-every", flags.sample_every,
                   "time-series sampling stride in slots (default 1000)");
    cmd.add_option("--burn-in", flags.burn_in,
                   "burn-in fraction for the throughput fit (default 0.3)");
}

qrelay::SpecInput to_spec_input(const CommonFlags& flags) {
    qrelay::SpecInput input;
    if (!flags.protocols.empty()) input.protocols = flags.protocols;
    input.n_repeaters = flags.nodes;
    input.p_success = flags.p;
    input.t0_seconds = flags.t0;
    input.l0_meters = flags.l0;
    input.max_slots = flags.slots;
    input.target_completions = flags.completions;
    input.seed = flags.seed;
    input.replications = flags.replications;
    input.output_dir = flags.out_dir;
    if (!flags.formats.empty()) input.formats = flags.formats;
    input.sample_every = flags.sample_every;
    input.burn_in_fraction = flags.burn_in;
    return input;
}

int execute_experiment(const CommonFlags& flags, qrelay::SpecInput flag_input) {
    qrelay::SpecInput effective = flag_input;
    if (flags.config_file) {
        effective = qrelay::overlay(qrelay::load_spec_file(*flags.config_file),
                                    flag_input);
    }
    if (const char* env_dir = std::getenv("QRELAY_OUTPUT_DIR")) {
        if (*env_dir != '\0') effective.output_dir = std::string(env_dir);
    }
    const qrelay::ExperimentSpec spec = qrelay::finalize_spec(effective);
    const qrelay::ExperimentOutput output = qrelay::run_experiment(spec);
    for (const qrelay::CellGroupOutput& group : output.groups) {
        const auto summary = qrelay::summary_to_json(group.summary);
        std::cout << qrelay::to_string(group.protocol) << " m=" << group.m
                  << ": completed=" << summary["completed_count"]
                  << " latency_slots_mean=" << summary["latency_slots_mean"]
                  << " throughput_per_slot=" << summary["throughput_per_slot"]
                  << " mean_transfer_slots=" << summary["mean_transfer_slots"]
                  << "\n";
    }
    std::cout << output.files.size() << " files written to "
              << spec.output_dir.string() << "\n";
    return kExitSuccess;
}

int execute_oracle(bool as_json, const std::optional<std::string>& out_dir) {
    const qrelay::OracleSuiteReport report = qrelay::oracle_suite();
    const auto document = qrelay::oracle_report_to_json(report);
    if (as_json) {
        std::cout << document.dump(2) << "\n";
    } else {
        for (const auto& branch : report.link.branches) {
            std::cout << "link branch " << branch.outcome
                      << ": p=" << branch.probability << " correction="
                      << qrelay::oracle::to_string(branch.correction)
                      << " fidelity=" << branch.fidelity << " "
                      << (branch.passed ? "pass" : "FAIL") << "\n";
        }
        std::cout << "teleport min fidelity over 100 payloads: "
                  << report.teleport_min_fidelity << "\n";
        for (const std::string& failure : report.failures) {
            std::cout << "FAIL " << failure << "\n";
        }
        std::cout << (report.passed ? "oracle suite: pass" : "oracle suite: FAIL")
                  << "\n";
    }
    if (out_dir) {
        std::filesystem::path dir = *out_dir;
        std::filesystem::create_directories(dir);
        std::ofstream file(dir / "oracle_report.json", std::ios::binary);
        file << document.dump(2) << "\n";
        if (!file) {
            std::cerr << "error: cannot write oracle report\n";
            return kExitRuntimeError;
        }
    }
    return report.passed ? kExitSuccess : kExitOracleFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo simulator of slotted qubit-relay protocols"};
    app.set_version_flag("--version", std::string(qrelay::kVersion));
    app.require_subcommand(1);

    CommonFlags run_flags;
    std::optional<std::uint32_t> run_m;
    CLI::App* run_cmd =
        app.add_subcommand("run", "Execute one experiment at a single M");
    add_common_flags(*run_cmd, run_flags);
    run_cmd->add_option("--m", run_m, "NV units per station M");

    CommonFlags sweep_flags;
    std::vector<std::uint32_t> sweep_ms;
    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "Execute an M sweep of the same experiment");
    add_common_flags(*sweep_cmd, sweep_flags);
    sweep_cmd->add_option("--m", sweep_ms, "sweep value of M (repeatable)");

    bool oracle_json = false;
    std::optional<std::string> oracle_out;
    CLI::App* oracle_cmd = app.add_subcommand(
        "oracle", "Verify link generation and teleportation on statevectors");
    oracle_cmd->add_flag("--json", oracle_json, "emit the full JSON report");
    oracle_cmd->add_option("--out", oracle_out,
                           "also write oracle_report.json to this directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Help and version requests exit 0; every other parse problem is a
        // configuration error.
        const int code = app.exit(e);
        return code == 0 ? kExitSuccess : kExitConfigError;
    }

    try {
        if (run_cmd->parsed()) {
            qrelay::SpecInput input = to_spec_input(run_flags);
            input.m_per_node = run_m;
            return execute_experiment(run_flags, input);
        }
        if (sweep_cmd->parsed()) {
            qrelay::SpecInput input = to_spec_input(sweep_flags);
            if (!sweep_ms.empty()) input.sweep = sweep_ms;
            return execute_experiment(sweep_flags, input);
        }
        return execute_oracle(oracle_json, oracle_out);
    } catch (const qrelay::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntimeError;
    }
}
