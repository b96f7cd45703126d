#include "qrelay/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "qrelay/engine.hpp"
#include "qrelay/version.hpp"

namespace qrelay {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Shortest round-trip decimal rendering, identical in CSV and JSON output
// (and locale-independent). Non-finite values become "null".
std::string format_number(double value) { return json(value).dump(); }

[[noreturn]] void bad_key(const std::string& key, const std::string& what) {
    throw ConfigError("config key '" + key + "': " + what);
}

// Returns the value under `key` or its alias; rejects both at once.
const json* pick(const json& object, const char* key, const char* alias) {
    const auto primary = object.find(key);
    const auto secondary = alias ? object.find(alias) : object.end();
    if (primary != object.end() && secondary != object.end()) {
        throw ConfigError(std::string("config keys '") + key + "' and '" + alias +
                          "' are aliases; set only one");
    }
    if (primary != object.end()) return &*primary;
    if (secondary != object.end()) return &*secondary;
    return nullptr;
}

std::uint64_t as_uint(const json& value, const std::string& key,
                      std::uint64_t max) {
    if (!value.is_number_integer() && !value.is_number_unsigned()) {
        bad_key(key, "expected a nonnegative integer");
    }
    if (value.is_number_integer() && value.get<std::int64_t>() < 0) {
        bad_key(key, "expected a nonnegative integer");
    }
    const std::uint64_t out = value.get<std::uint64_t>();
    if (out > max) bad_key(key, "value out of range");
    return out;
}

double as_double(const json& value, const std::string& key) {
    if (!value.is_number()) bad_key(key, "expected a number");
    return value.get<double>();
}

std::string as_string(const json& value, const std::string& key) {
    if (!value.is_string()) bad_key(key, "expected a string");
    return value.get<std::string>();
}

std::vector<std::string> as_string_array(const json& value,
                                         const std::string& key) {
    if (!value.is_array()) bad_key(key, "expected an array of strings");
    std::vector<std::string> out;
    for (const json& item : value) out.push_back(as_string(item, key));
    return out;
}

std::vector<std::uint32_t> as_uint_array(const json& value,
                                         const std::string& key) {
    if (!value.is_array()) bad_key(key, "expected an array of integers");
    std::vector<std::uint32_t> out;
    for (const json& item : value) {
        out.push_back(static_cast<std::uint32_t>(
            as_uint(item, key, std::numeric_limits<std::uint32_t>::max())));
    }
    return out;
}

}  // namespace

SpecInput spec_input_from_json(const json& object) {
    if (!object.is_object()) {
        throw ConfigError("config root must be a flat JSON object");
    }
    static const std::set<std::string> known = {
        "protocol",       "protocols",          "n_repeaters", "nodes",
        "m_per_node",     "m",                  "sweep",       "p_success",
        "p",              "t0_seconds",         "t0",          "l0_meters",
        "l0",             "max_slots",
        "slots",          "target_completions", "completions", "seed",
        "replications",   "output_dir",         "formats",     "sample_every",
        "burn_in_fraction", "burn_in",
    };
    for (const auto& item : object.items()) {
        if (!known.count(item.key())) {
            throw ConfigError("unknown config key '" + item.key() + "'");
        }
    }

    SpecInput input;
    if (const json* v = pick(object, "protocols", "protocol")) {
        if (v->is_string()) {
            input.protocols = std::vector<std::string>{v->get<std::string>()};
        } else {
            input.protocols = as_string_array(*v, "protocols");
        }
    }
    constexpr std::uint64_t kU32 = std::numeric_limits<std::uint32_t>::max();
    constexpr std::uint64_t kU64 = std::numeric_limits<std::uint64_t>::max();
    if (const json* v = pick(object, "n_repeaters", "nodes")) {
        input.n_repeaters = static_cast<std::uint32_t>(as_uint(*v, "n_repeaters", kU32));
    }
    if (const json* v = pick(object, "m_per_node", "m")) {
        input.m_per_node = static_cast<std::uint32_t>(as_uint(*v, "m_per_node", kU32));
    }
    if (const json* v = pick(object, "sweep", nullptr)) {
        input.sweep = as_uint_array(*v, "sweep");
    }
    if (const json* v = pick(object, "p_success", "p")) {
        input.p_success = as_double(*v, "p_success");
    }
    if (const json* v = pick(object, "t0_seconds", "t0")) {
        input.t0_seconds = as_double(*v, "t0_seconds");
    }
    if (const json* v = pick(object, "l0_meters", "l0")) {
        input.l0_meters = as_double(*v, "l0_meters");
    }
    if (const json* v = pick(object, "max_slots", "slots")) {
        input.max_slots = as_uint(*v, "max_slots", kU64);
    }
    if (const json* v = pick(object, "target_completions", "completions")) {
        input.target_completions = as_uint(*v, "target_completions", kU64);
    }
    if (const json* v = pick(object, "seed", nullptr)) {
        input.seed = as_uint(*v, "seed", kU64);
    }
    if (const json* v = pick(object, "replications", nullptr)) {
        input.replications = static_cast<std::uint32_t>(as_uint(*v, "replications", kU32));
    }
    if (const json* v = pick(object, "output_dir", nullptr)) {
        input.output_dir = as_string(*v, "output_dir");
    }
    if (const json* v = pick(object, "formats", nullptr)) {
        input.formats = as_string_array(*v, "formats");
    }
    if (const json* v = pick(object, "sample_every", nullptr)) {
        input.sample_every = as_uint(*v, "sample_every", kU64);
    }
    if (const json* v = pick(object, "burn_in_fraction", "burn_in")) {
        input.burn_in_fraction = as_double(*v, "burn_in_fraction");
    }
    return input;
}

SpecInput load_spec_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file '" + path.string() + "'");
    }
    json parsed;
    try {
        parsed = json::parse(in);
    } catch (const json::parse_error& err) {
        throw ConfigError("config file '" + path.string() + "': " + err.what());
    }
    return spec_input_from_json(parsed);
}

SpecInput overlay(const SpecInput& file, const SpecInput& flags) {
    SpecInput out = file;
    if (flags.protocols) out.protocols = flags.protocols;
    if (flags.n_repeaters) out.n_repeaters = flags.n_repeaters;
    if (flags.m_per_node) out.m_per_node = flags.m_per_node;
    if (flags.sweep) out.sweep = flags.sweep;
    if (flags.p_success) out.p_success = flags.p_success;
    if (flags.t0_seconds) out.t0_seconds = flags.t0_seconds;
    if (flags.l0_meters) out.l0_meters = flags.l0_meters;
    if (flags.max_slots) out.max_slots = flags.max_slots;
    if (flags.target_completions) out.target_completions = flags.target_completions;
    if (flags.seed) out.seed = flags.seed;
    if (flags.replications) out.replications = flags.replications;
    if (flags.output_dir) out.output_dir = flags.output_dir;
    if (flags.formats) out.formats = flags.formats;
    if (flags.sample_every) out.sample_every = flags.sample_every;
    if (flags.burn_in_fraction) out.burn_in_fraction = flags.burn_in_fraction;
    return out;
}

ExperimentSpec finalize_spec(const SpecInput& input) {
    std::vector<std::string> errors;
    ExperimentSpec spec;

    if (input.m_per_node && input.sweep) {
        errors.push_back("set either m_per_node or sweep, not both");
    }
    if (input.sweep) {
        if (input.sweep->empty()) {
            errors.push_back("sweep must list at least one M value");
        }
        spec.sweep = *input.sweep;
        std::sort(spec.sweep.begin(), spec.sweep.end());
        if (std::adjacent_find(spec.sweep.begin(), spec.sweep.end()) !=
            spec.sweep.end()) {
            errors.push_back("sweep values must be distinct");
        }
        if (!spec.sweep.empty() && spec.sweep.front() == 0) {
            errors.push_back("sweep values must be positive");
        }
    }

    SimConfigInput raw;
    raw.protocol = "multiplexed";  // per-cell; placeholder for validation
    if (input.n_repeaters) raw.n_repeaters = *input.n_repeaters;
    if (input.m_per_node) {
        raw.m_per_node = *input.m_per_node;
    } else if (input.sweep && !spec.sweep.empty() && spec.sweep.front() > 0) {
        raw.m_per_node = spec.sweep.front();
    }
    // m_per_node left unset (when neither m nor sweep came in) falls through
    // to validate_config's "m_per_node is required".
    if (input.p_success) raw.p_success = *input.p_success;
    if (input.t0_seconds) raw.t0_seconds = *input.t0_seconds;
    if (input.l0_meters) raw.l0_meters = *input.l0_meters;
    if (input.max_slots) {
        raw.max_slots = static_cast<std::int64_t>(*input.max_slots);
    }
    if (input.target_completions) {
        raw.target_completions = static_cast<std::int64_t>(*input.target_completions);
    }
    if (input.seed) raw.seed = *input.seed;
    if (input.replications) raw.replications = *input.replications;

    ConfigValidation validation = validate_config(raw);
    errors.insert(errors.end(), validation.errors.begin(), validation.errors.end());

    if (!input.protocols || input.protocols->empty()) {
        errors.push_back("at least one protocol is required");
    } else {
        for (const std::string& name : *input.protocols) {
            const auto protocol = protocol_from_string(name);
            if (!protocol) {
                errors.push_back("unknown protocol '" + name +
                                 "' (expected parallelized or multiplexed)");
                continue;
            }
            if (std::find(spec.protocols.begin(), spec.protocols.end(),
                          *protocol) != spec.protocols.end()) {
                errors.push_back("protocol '" + name + "' listed twice");
                continue;
            }
            spec.protocols.push_back(*protocol);
        }
    }

    spec.output_dir = input.output_dir ? *input.output_dir : ".";
    if (input.formats) {
        spec.write_csv = false;
        spec.write_json = false;
        if (input.formats->empty()) {
            errors.push_back("at least one output format is required");
        }
        for (const std::string& format : *input.formats) {
            if (format == "csv") {
                spec.write_csv = true;
            } else if (format == "json") {
                spec.write_json = true;
            } else {
                errors.push_back("unknown format '" + format +
                                 "' (expected csv or json)");
            }
        }
    }
    if (input.sample_every) {
        if (*input.sample_every == 0) {
            errors.push_back("sample_every must be positive");
        }
        spec.sample_every = *input.sample_every;
    }
    if (input.burn_in_fraction) {
        if (!(*input.burn_in_fraction >= 0.0) || *input.burn_in_fraction >= 1.0) {
            errors.push_back("burn_in_fraction must be in [0, 1)");
        }
        spec.burn_in_fraction = *input.burn_in_fraction;
    }

    if (!errors.empty()) {
        std::string message = "invalid configuration:";
        for (const std::string& error : errors) message += "\n  - " + error;
        throw ConfigError(message);
    }

    spec.base = *validation.config;
    if (spec.sweep.empty()) spec.sweep = {spec.base.m_per_node};
    return spec;
}

nlohmann::ordered_json spec_echo(const ExperimentSpec& spec) {
    ordered_json protocols = ordered_json::array();
    for (Protocol protocol : spec.protocols) {
        protocols.push_back(std::string(to_string(protocol)));
    }
    ordered_json formats = ordered_json::array();
    if (spec.write_csv) formats.push_back("csv");
    if (spec.write_json) formats.push_back("json");

    ordered_json echo;
    echo["version"] = std::string(kVersion);
    echo["protocols"] = protocols;
    echo["n_repeaters"] = spec.base.n_repeaters;
    echo["sweep"] = spec.sweep;
    echo["p_success"] = spec.base.p_success;
    echo["t0_seconds"] = spec.base.t0_seconds;
    if (spec.base.l0_meters) echo["l0_meters"] = *spec.base.l0_meters;
    if (spec.base.max_slots) {
        echo["max_slots"] = *spec.base.max_slots;
    } else {
        echo["target_completions"] = *spec.base.target_completions;
    }
    echo["seed"] = spec.base.seed;
    echo["replications"] = spec.base.replications;
    echo["formats"] = formats;
    echo["sample_every"] = spec.sample_every;
    echo["burn_in_fraction"] = spec.burn_in_fraction;
    return echo;
}

namespace {

// JSON has no NaN; statistics with no data serialize as null.
ordered_json number_or_null(double value) {
    if (std::isnan(value)) return nullptr;
    return value;
}

}  // namespace

nlohmann::ordered_json summary_to_json(const MetricsSummary& summary) {
    ordered_json out;
    out["protocol"] = std::string(to_string(summary.config.protocol));
    out["n_repeaters"] = summary.config.n_repeaters;
    out["m_per_node"] = summary.config.m_per_node;
    out["p_success"] = summary.config.p_success;
    out["t0_seconds"] = summary.config.t0_seconds;
    out["replications"] = summary.replications;
    out["latency_slots_mean"] = number_or_null(summary.latency_mean());
    out["latency_slots_ci95"] = number_or_null(summary.latency_ci95());
    out["throughput_per_slot"] = number_or_null(summary.throughput_mean());
    out["throughput_se"] = number_or_null(summary.throughput_se());
    out["mean_transfer_slots"] = number_or_null(summary.transfer_mean());
    out["transfer_se"] = number_or_null(summary.transfer_se());
    out["max_transfer_slots"] = summary.transfer_max;
    out["completed_count"] = summary.transfer_count;
    out["in_flight_count"] = summary.in_flight;
    out["seed"] = summary.config.seed;
    return out;
}

namespace {

std::string provenance_line(const ExperimentSpec& spec) {
    return "# qrelay " + std::string(kVersion) + " spec=" +
           spec_echo(spec).dump() + "\n";
}

void write_file(const std::filesystem::path& path, const std::string& body,
                std::vector<std::filesystem::path>& files) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open output file '" + path.string() + "'");
    }
    out << body;
    if (!out) {
        throw std::runtime_error("failed writing output file '" + path.string() + "'");
    }
    files.push_back(path);
}

std::string cell_stem(Protocol protocol, std::uint32_t m) {
    return std::string(to_string(protocol)) + "_m" + std::to_string(m);
}

std::string timeseries_csv(const ExperimentSpec& spec, const RunResult& run) {
    std::string body = provenance_line(spec);
    body += "slot,time_seconds,completed_cumulative\n";
    const double t0 = run.config.t0_seconds;
    auto row = [&](std::uint64_t slot) {
        body += std::to_string(slot);
        body += ',';
        body += format_number(static_cast<double>(slot) * t0);
        body += ',';
        body += std::to_string(run.completions_at(slot));
        body += '\n';
    };
    for (std::uint64_t slot = 0; slot < run.total_slots; slot += spec.sample_every) {
        row(slot);
    }
    row(run.total_slots);
    return body;
}

std::string qubits_csv(const ExperimentSpec& spec, const RunResult& run) {
    std::string body = provenance_line(spec);
    body += "qubit_id,injected_slot,completed_slot,transfer_slots\n";
    for (const QubitRecord& record : run.records) {
        if (!record.completed()) continue;  // in-flight counted in the summary
        body += std::to_string(record.qubit_id);
        body += ',';
        body += std::to_string(record.injected_slot);
        body += ',';
        body += std::to_string(*record.completed_slot);
        body += ',';
        body += std::to_string(record.transfer_slots());
        body += '\n';
    }
    return body;
}

std::string summary_csv(const ExperimentSpec& spec, const ordered_json& summary) {
    std::string header;
    std::string row;
    for (const auto& item : summary.items()) {
        if (!header.empty()) {
            header += ',';
            row += ',';
        }
        header += item.key();
        row += item.value().is_string() ? item.value().get<std::string>()
                                        : item.value().dump();
    }
    return provenance_line(spec) + header + "\n" + row + "\n";
}

}  // namespace

ExperimentOutput run_experiment(const ExperimentSpec& spec) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(spec.output_dir, ec);
    if (ec) {
        throw ConfigError("cannot create output directory '" +
                          spec.output_dir.string() + "': " + ec.message());
    }
    {
        // Probe writability up front so a read-only target fails before any
        // simulation time is spent.
        const fs::path probe = spec.output_dir / ".qrelay_write_probe";
        std::ofstream out(probe, std::ios::binary);
        if (!out) {
            throw ConfigError("output directory '" + spec.output_dir.string() +
                              "' is not writable");
        }
        out.close();
        fs::remove(probe, ec);
    }

    ExperimentOutput output;
    for (Protocol protocol : spec.protocols) {
        for (std::uint32_t m : spec.sweep) {
            SimConfig config = spec.base;
            config.protocol = protocol;
            config.m_per_node = m;

            MetricsSummary merged = empty_summary(config);
            const std::string stem = cell_stem(protocol, m);
            for (std::uint32_t rep = 0; rep < config.replications; ++rep) {
                RunResult result = run(config, rep);
                merged = merge(merged, summarize(result, spec.burn_in_fraction));
                if (spec.write_csv) {
                    const std::string rep_stem =
                        stem + "_rep" + std::to_string(rep);
                    write_file(spec.output_dir / (rep_stem + "_timeseries.csv"),
                               timeseries_csv(spec, result), output.files);
                    write_file(spec.output_dir / (rep_stem + "_qubits.csv"),
                               qubits_csv(spec, result), output.files);
                }
            }

            const ordered_json summary = summary_to_json(merged);
            if (spec.write_json) {
                ordered_json document = summary;
                document["version"] = std::string(kVersion);
                document["spec"] = spec_echo(spec);
                write_file(spec.output_dir / (stem + "_summary.json"),
                           document.dump(2) + "\n", output.files);
            }
            if (spec.write_csv) {
                write_file(spec.output_dir / (stem + "_summary.csv"),
                           summary_csv(spec, summary), output.files);
            }
            output.groups.push_back(CellGroupOutput{protocol, m, std::move(merged)});
        }
    }
    return output;
}

OracleSuiteReport oracle_suite(
    const std::optional<oracle::CorrectionTable>& injected_link_table) {
    OracleSuiteReport report;
    report.link_table =
        injected_link_table ? *injected_link_table : oracle::derive_correction_table();
    report.teleport_table = oracle::derive_teleport_table();
    report.link = oracle::link_generation_check(report.link_table);
    for (const oracle::BranchReport& branch : report.link.branches) {
        if (!branch.passed) {
            report.failures.push_back(
                "link branch " + std::to_string(branch.outcome) + ": fidelity " +
                format_number(branch.fidelity));
        }
    }

    report.equiprobable = true;
    for (const oracle::BranchReport& branch : report.link.branches) {
        if (std::abs(branch.probability - 0.25) > oracle::kTol) {
            report.equiprobable = false;
            report.failures.push_back(
                "link branch " + std::to_string(branch.outcome) +
                ": probability " + format_number(branch.probability) +
                " is not 1/4");
        }
    }

    // Payload directions drawn uniformly on the Bloch sphere, fixed seed.
    std::mt19937_64 rng(0x5EEDED);
    report.teleport_min_fidelity = 1.0;
    const double pi = std::acos(-1.0);
    for (int i = 0; i < 100; ++i) {
        const double theta = std::acos(1.0 - 2.0 * next_uniform(rng));
        const double phi = 2.0 * pi * next_uniform(rng);
        const double fidelity = oracle::teleport_check(
            oracle::bloch_state(theta, phi), report.teleport_table);
        report.teleport_min_fidelity =
            std::min(report.teleport_min_fidelity, fidelity);
        if (fidelity < 1.0 - oracle::kTol) {
            report.failures.push_back("teleport payload " + std::to_string(i) +
                                      ": fidelity " + format_number(fidelity));
        }
    }

    report.passed = report.failures.empty();
    return report;
}

nlohmann::ordered_json oracle_report_to_json(const OracleSuiteReport& report) {
    ordered_json out;
    out["passed"] = report.passed;
    ordered_json link_table = ordered_json::array();
    ordered_json teleport_table = ordered_json::array();
    for (int outcome = 0; outcome < 4; ++outcome) {
        link_table.push_back(oracle::to_string(report.link_table[outcome]));
        teleport_table.push_back(oracle::to_string(report.teleport_table[outcome]));
    }
    out["link_correction_table"] = link_table;
    out["teleport_correction_table"] = teleport_table;
    ordered_json branches = ordered_json::array();
    for (const oracle::BranchReport& branch : report.link.branches) {
        ordered_json entry;
        entry["outcome"] = branch.outcome;
        entry["probability"] = branch.probability;
        entry["correction"] = oracle::to_string(branch.correction);
        entry["fidelity"] = branch.fidelity;
        entry["passed"] = branch.passed;
        branches.push_back(entry);
    }
    out["link_branches"] = branches;
    out["link_probability_sum"] = report.link.probability_sum;
    out["teleport_min_fidelity"] = report.teleport_min_fidelity;
    out["equiprobable"] = report.equiprobable;
    out["failures"] = report.failures;
    out["version"] = std::string(kVersion);
    return out;
}

}  // namespace qrelay
