"""End-to-end smoke tests for the qrelay Python package and CLI binary.

The CLI tests need the QRELAY_CLI environment variable to point at the built
qrelay executable; they are skipped when it is absent so the package tests
can run standalone.
"""

import json
import os
import subprocess

import pytest

import qrelay

CLI = os.environ.get("QRELAY_CLI")
needs_cli = pytest.mark.skipif(not CLI, reason="QRELAY_CLI is not set")


def test_version_is_exposed():
    assert isinstance(qrelay.__version__, str)
    assert qrelay.__version__


def test_deterministic_pipeline_latency():
    config = qrelay.SimConfig(
        protocol="multiplexed", nodes=10, m=1, p=1.0, target_completions=1
    )
    result = qrelay.run(config)
    assert qrelay.latency_slots(result) == 11
    assert result.completed_count == 1
    record = result.records[0]
    assert record.completed
    assert record.transfer_slots == 11
    assert [hop.station for hop in record.hops] == list(range(11))


def test_replication_seed_rule():
    assert qrelay.replication_seed(7, 0) == 7
    golden = 7 ^ ((0x9E3779B97F4A7C15 * 3) % 2**64)
    assert qrelay.replication_seed(7, 3) == golden


def test_invalid_config_raises_value_error():
    with pytest.raises(ValueError, match="p_success"):
        qrelay.SimConfig(protocol="multiplexed", nodes=2, m=2, p=1.5, max_slots=10)
    with pytest.raises(ValueError, match="stop condition"):
        qrelay.SimConfig(protocol="parallelized", nodes=2, m=2, p=0.5)


def test_run_is_reproducible():
    config = qrelay.SimConfig(
        protocol="parallelized", nodes=3, m=2, p=0.4, max_slots=2000, seed=11
    )
    first = qrelay.run(config)
    second = qrelay.run(config)
    assert first.completed_count == second.completed_count
    assert first.completions_at(1000) == second.completions_at(1000)
    assert qrelay.run(config, 1).completed_count != 0


def test_summarize_and_merge():
    config = qrelay.SimConfig(
        protocol="multiplexed",
        nodes=2,
        m=2,
        p=0.5,
        max_slots=2000,
        seed=3,
        replications=2,
    )
    merged = qrelay.merge(
        qrelay.summarize(qrelay.run(config, 0)),
        qrelay.summarize(qrelay.run(config, 1)),
    )
    assert merged.replications == 2
    data = qrelay.summary_dict(merged)
    assert data["protocol"] == "multiplexed"
    assert data["replications"] == 2
    assert data["completed_count"] > 0
    assert data["throughput_per_slot"] == pytest.approx(merged.throughput_mean)
    assert list(data)[:3] == ["protocol", "n_repeaters", "m_per_node"]


def test_transfer_stats_and_sweep_normalization():
    # With p = 1 the first qubit crosses an empty pipeline in exactly one
    # slot per segment (three here: sender -> two repeaters -> receiver).
    config = qrelay.SimConfig(
        protocol="multiplexed", nodes=2, m=1, p=1.0, target_completions=1, seed=0
    )
    stats = qrelay.transfer_time_stats(qrelay.run(config))
    assert stats["mean_slots"] == pytest.approx(3.0)
    assert stats["max_slots"] == 3
    normalized = qrelay.normalize_sweep([(2, 52.0), (1, 100.0)])
    assert normalized == [(1, 1.0), (2, 0.52)]


def test_oracle_suite_passes():
    report = qrelay.oracle_suite()
    assert report["passed"] is True
    assert report["failures"] == []
    assert report["link_correction_table"] == ["X", "I", "Y", "Z"]
    assert report["teleport_correction_table"] == ["I", "X", "Z", "Y"]
    assert qrelay.link_correction_table() == ["X", "I", "Y", "Z"]
    assert qrelay.teleport_correction_table() == ["I", "X", "Z", "Y"]
    assert qrelay.teleport_check(0.7, 1.9) == pytest.approx(1.0, abs=1e-12)


def test_run_experiment_writes_artifacts(tmp_path):
    report = qrelay.run_experiment(
        {
            "protocols": ["multiplexed"],
            "nodes": 2,
            "m": 2,
            "p": 0.5,
            "slots": 400,
            "seed": 1,
            "replications": 1,
            "sample_every": 100,
            "output_dir": str(tmp_path),
        }
    )
    assert report["spec"]["n_repeaters"] == 2
    assert [os.path.basename(f) for f in report["files"]] == [
        "multiplexed_m2_rep0_timeseries.csv",
        "multiplexed_m2_rep0_qubits.csv",
        "multiplexed_m2_summary.json",
        "multiplexed_m2_summary.csv",
    ]
    for path in report["files"]:
        assert os.path.isfile(path)
    (summary,) = report["groups"]
    assert summary["protocol"] == "multiplexed"
    assert summary["completed_count"] > 0
    timeseries = (tmp_path / "multiplexed_m2_rep0_timeseries.csv").read_text()
    lines = timeseries.splitlines()
    assert lines[0].startswith("# qrelay ")
    assert lines[1] == "slot,time_seconds,completed_cumulative"


def test_run_experiment_rejects_bad_spec(tmp_path):
    with pytest.raises(ValueError, match="unknown config key"):
        qrelay.run_experiment(
            {
                "protocols": ["multiplexed"],
                "nodez": 2,
                "m": 1,
                "p": 0.5,
                "slots": 10,
                "output_dir": str(tmp_path),
            }
        )


@needs_cli
def test_cli_run_writes_outputs(tmp_path):
    out_dir = tmp_path / "cli_out"
    proc = subprocess.run(
        [
            CLI, "run", "--protocol", "multiplexed", "--nodes", "2", "--m", "2",
            "--p", "0.5", "--slots", "300", "--seed", "1", "--out", str(out_dir),
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    summary_path = out_dir / "multiplexed_m2_summary.json"
    assert summary_path.is_file()
    summary = json.loads(summary_path.read_text())
    assert summary["protocol"] == "multiplexed"
    assert summary["m_per_node"] == 2
    assert summary["spec"]["seed"] == 1


@needs_cli
def test_cli_env_var_overrides_out_flag(tmp_path):
    env_dir = tmp_path / "env_out"
    flag_dir = tmp_path / "flag_out"
    env = dict(os.environ, QRELAY_OUTPUT_DIR=str(env_dir))
    proc = subprocess.run(
        [
            CLI, "run", "--protocol", "parallelized", "--nodes", "2", "--m", "1",
            "--p", "0.9", "--slots", "200", "--seed", "4", "--out", str(flag_dir),
        ],
        env=env,
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (env_dir / "parallelized_m1_summary.json").is_file()
    assert not flag_dir.exists()


@needs_cli
def test_cli_config_error_exit_code():
    proc = subprocess.run(
        [
            CLI, "run", "--protocol", "multiplexed", "--nodes", "2", "--m", "2",
            "--p", "1.5", "--slots", "10",
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 1
    assert "p_success" in proc.stderr


@needs_cli
def test_cli_sweep_one_cell_per_m(tmp_path):
    proc = subprocess.run(
        [
            CLI, "sweep", "--protocol", "multiplexed", "--nodes", "2",
            "--m", "1", "--m", "2", "--p", "0.8", "--slots", "300",
            "--seed", "2", "--out", str(tmp_path), "--format", "json",
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    cells = [
        json.loads((tmp_path / f"multiplexed_m{m}_summary.json").read_text())
        for m in (1, 2)
    ]
    assert [cell["m_per_node"] for cell in cells] == [1, 2]


@needs_cli
def test_cli_oracle_json():
    proc = subprocess.run([CLI, "oracle", "--json"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["passed"] is True


@needs_cli
def test_cli_version_flag():
    proc = subprocess.run([CLI, "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip()
