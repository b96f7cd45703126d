// pybind11 surface of the simulator: config/run/metrics, the statevector
// checks, and the JSON-driven experiment runner. Structured values cross the
// boundary as JSON strings; the qrelay package wraps them into dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "qrelay/engine.hpp"
#include "qrelay/experiment.hpp"
#include "qrelay/metrics.hpp"
#include "qrelay/model.hpp"
#include "qrelay/oracle.hpp"
#include "qrelay/version.hpp"

namespace py = pybind11;

namespace {

qrelay::SimConfig make_config(const std::string& protocol, std::uint32_t nodes,
                              std::uint32_t m, double p, double t0,
                              std::optional<std::uint64_t> max_slots,
                              std::optional<std::uint64_t> target_completions,
                              std::uint64_t seed, std::uint32_t replications) {
    qrelay::SimConfigInput raw;
    raw.protocol = protocol;
    raw.n_repeaters = nodes;
    raw.m_per_node = m;
    raw.p_success = p;
    raw.t0_seconds = t0;
    if (max_slots) raw.max_slots = static_cast<std::int64_t>(*max_slots);
    if (target_completions) {
        raw.target_completions = static_cast<std::int64_t>(*target_completions);
    }
    raw.seed = seed;
    raw.replications = replications;
    qrelay::ConfigValidation validation = qrelay::validate_config(raw);
    if (!validation.ok()) {
        std::string message = "invalid configuration:";
        for (const std::string& error : validation.errors) {
            message += "\n  - " + error;
        }
        throw std::invalid_argument(message);
    }
    return *validation.config;
}

std::string run_experiment_json(const std::string& spec_json) {
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(spec_json);
    } catch (const nlohmann::json::parse_error& err) {
        throw qrelay::ConfigError(std::string("spec JSON: ") + err.what());
    }
    const qrelay::ExperimentSpec spec =
        qrelay::finalize_spec(qrelay::spec_input_from_json(parsed));
    const qrelay::ExperimentOutput output = qrelay::run_experiment(spec);

    nlohmann::ordered_json report;
    report["spec"] = qrelay::spec_echo(spec);
    nlohmann::ordered_json files = nlohmann::ordered_json::array();
    for (const auto& path : output.files) files.push_back(path.string());
    report["files"] = files;
    nlohmann::ordered_json groups = nlohmann::ordered_json::array();
    for (const qrelay::CellGroupOutput& group : output.groups) {
        groups.push_back(qrelay::summary_to_json(group.summary));
    }
    report["groups"] = groups;
    return report.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Slotted Monte Carlo simulator of qubit-relay protocols";
    m.attr("__version__") = std::string(qrelay::kVersion);

    py::register_exception<qrelay::ConfigError>(m, "ConfigError",
                                                PyExc_ValueError);
    py::register_exception<qrelay::NoCompletionError>(m, "NoCompletionError",
                                                      PyExc_RuntimeError);
    py::register_exception<qrelay::InsufficientDataError>(
        m, "InsufficientDataError", PyExc_RuntimeError);
    py::register_exception<qrelay::NoProgressError>(m, "NoProgressError",
                                                    PyExc_RuntimeError);

    py::class_<qrelay::SimConfig>(m, "SimConfig")
        .def(py::init(&make_config), py::kw_only(), py::arg("protocol"),
             py::arg("nodes"), py::arg("m"), py::arg("p"),
             py::arg("t0") = 1.0, py::arg("max_slots") = std::nullopt,
             py::arg("target_completions") = std::nullopt, py::arg("seed") = 0,
             py::arg("replications") = 1)
        .def_property_readonly(
            "protocol",
            [](const qrelay::SimConfig& config) {
                return std::string(qrelay::to_string(config.protocol));
            })
        .def_readonly("n_repeaters", &qrelay::SimConfig::n_repeaters)
        .def_readonly("m_per_node", &qrelay::SimConfig::m_per_node)
        .def_readonly("p_success", &qrelay::SimConfig::p_success)
        .def_readonly("t0_seconds", &qrelay::SimConfig::t0_seconds)
        .def_readonly("max_slots", &qrelay::SimConfig::max_slots)
        .def_readonly("target_completions", &qrelay::SimConfig::target_completions)
        .def_readonly("seed", &qrelay::SimConfig::seed)
        .def_readonly("replications", &qrelay::SimConfig::replications)
        .def("__eq__", [](const qrelay::SimConfig& a, const qrelay::SimConfig& b) {
            return a == b;
        });

    py::class_<qrelay::Hop>(m, "Hop")
        .def_readonly("station", &qrelay::Hop::station)
        .def_readonly("arrival_slot", &qrelay::Hop::arrival_slot);

    py::class_<qrelay::QubitRecord>(m, "QubitRecord")
        .def_readonly("qubit_id", &qrelay::QubitRecord::qubit_id)
        .def_readonly("injected_slot", &qrelay::QubitRecord::injected_slot)
        .def_readonly("hops", &qrelay::QubitRecord::hops)
        .def_readonly("completed_slot", &qrelay::QubitRecord::completed_slot)
        .def_property_readonly("completed", &qrelay::QubitRecord::completed)
        .def_property_readonly(
            "transfer_slots",
            [](const qrelay::QubitRecord& record)
                -> std::optional<std::uint64_t> {
                if (!record.completed()) return std::nullopt;
                return record.transfer_slots();
            });

    py::class_<qrelay::RunResult>(m, "RunResult")
        .def_readonly("config", &qrelay::RunResult::config)
        .def_readonly("replication_index", &qrelay::RunResult::replication_index)
        .def_readonly("total_slots", &qrelay::RunResult::total_slots)
        .def_readonly("completed_count", &qrelay::RunResult::completed_count)
        .def_readonly("records", &qrelay::RunResult::records)
        .def("completions_at", &qrelay::RunResult::completions_at,
             py::arg("slot"));

    m.def("run", &qrelay::run, py::arg("config"),
          py::arg("replication_index") = 0,
          "Run one replication to its stop condition (deterministic in "
          "(config, replication_index)).");
    m.def("replication_seed", &qrelay::replication_seed, py::arg("seed"),
          py::arg("replication_index"));

    m.def("latency_slots", &qrelay::latency_slots, py::arg("run"));
    m.def(
        "steady_throughput",
        [](const qrelay::RunResult& run, double burn_in_fraction) {
            const qrelay::ThroughputEstimate estimate =
                qrelay::steady_throughput(run, burn_in_fraction);
            return py::make_tuple(estimate.per_slot, estimate.se);
        },
        py::arg("run"), py::arg("burn_in_fraction") = 0.3,
        "Returns (per_slot, standard_error).");
    m.def(
        "transfer_time_stats",
        [](const qrelay::RunResult& run) {
            const qrelay::TransferStats stats = qrelay::transfer_time_stats(run);
            py::dict out;
            out["mean_slots"] = stats.mean_slots;
            out["se"] = stats.se;
            out["max_slots"] = stats.max_slots;
            out["completed"] = stats.completed;
            out["in_flight"] = stats.in_flight;
            out["residence"] = stats.residence;
            return out;
        },
        py::arg("run"));

    py::class_<qrelay::MetricsSummary>(m, "MetricsSummary")
        .def_readonly("config", &qrelay::MetricsSummary::config)
        .def_readonly("replications", &qrelay::MetricsSummary::replications)
        .def_property_readonly("latency_mean",
                               &qrelay::MetricsSummary::latency_mean)
        .def_property_readonly("latency_ci95",
                               &qrelay::MetricsSummary::latency_ci95)
        .def_property_readonly("throughput_mean",
                               &qrelay::MetricsSummary::throughput_mean)
        .def_property_readonly("throughput_se",
                               &qrelay::MetricsSummary::throughput_se)
        .def_property_readonly("transfer_mean",
                               &qrelay::MetricsSummary::transfer_mean)
        .def_property_readonly("transfer_se", &qrelay::MetricsSummary::transfer_se)
        .def_readonly("transfer_max", &qrelay::MetricsSummary::transfer_max)
        .def_readonly("in_flight", &qrelay::MetricsSummary::in_flight)
        .def("to_json", [](const qrelay::MetricsSummary& summary) {
            return qrelay::summary_to_json(summary).dump();
        });

    m.def("summarize", &qrelay::summarize, py::arg("run"),
          py::arg("burn_in_fraction") = 0.3);
    m.def("merge", &qrelay::merge, py::arg("a"), py::arg("b"));
    m.def("normalize_sweep", &qrelay::normalize_sweep, py::arg("points"));

    // Statevector checks. Angles are Bloch angles of the payload.
    m.def("teleport_check", [](double theta, double phi) {
        return qrelay::oracle::teleport_check(qrelay::oracle::bloch_state(theta, phi));
    }, py::arg("theta"), py::arg("phi"));
    m.def("link_correction_table", []() {
        std::vector<std::string> names;
        for (qrelay::oracle::Pauli pauli : qrelay::oracle::derive_correction_table()) {
            names.push_back(qrelay::oracle::to_string(pauli));
        }
        return names;
    });
    m.def("teleport_correction_table", []() {
        std::vector<std::string> names;
        for (qrelay::oracle::Pauli pauli : qrelay::oracle::derive_teleport_table()) {
            names.push_back(qrelay::oracle::to_string(pauli));
        }
        return names;
    });
    m.def("oracle_suite_json", []() {
        return qrelay::oracle_report_to_json(qrelay::oracle_suite()).dump();
    });

    m.def("run_experiment_json", &run_experiment_json, py::arg("spec_json"),
          "Run a full experiment from a flat JSON spec; returns a JSON report "
          "with files written and per-(protocol, M) summaries.");
}
