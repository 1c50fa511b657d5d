"""
Unit tests for the command-line interface.
Tests each subcommand end to end on small inputs.
"""

import json
from pathlib import Path

import pytest  # type: ignore[reportMissingImports]

import cli
from pcnflow.loaders import load_graph, load_workload


CONFIGS = Path(__file__).resolve().parent.parent / "configs"
DIAMOND = str(CONFIGS / "diamond.json")
DIAMOND_WORKLOAD = str(CONFIGS / "diamond_workload.json")


@pytest.fixture
def printed(mocker):
    """Fixture capturing everything the CLI prints through print_output."""
    lines = []
    mocker.patch("cli.print_output", side_effect=lambda message, style="": lines.append(message))
    return lines


def joined(lines) -> str:
    return "\n".join(lines)


class TestMain:
    """Test cases for argument handling and exit codes."""

    def test_no_command(self, capsys):
        """Without a subcommand the help text is shown and the exit code is 1."""
        assert cli.main([]) == 1
        assert "usage" in capsys.readouterr().out.lower()

    def test_handled_error(self, printed, tmp_path):
        assert cli.main(["maxflow", str(tmp_path / "missing.json")]) == 1
        assert "Error" in joined(printed)

    def test_log_options(self, printed, tmp_path):
        log_file = tmp_path / "logs" / "run.log"
        assert cli.main(["--log-level", "ERROR", "--log-file", str(log_file), "--json-logs", "maxflow", DIAMOND]) == 0
        assert log_file.exists()


class TestGraphCommands:
    """Test cases for maxflow and feasible."""

    def test_maxflow_with_oracle(self, printed):
        assert cli.main(["maxflow", DIAMOND, "--check-oracle"]) == 0
        output = joined(printed)
        assert "Maximum flow 0->3:[/cyan] 4" in output
        assert "Edmonds-Karp" in output

    def test_maxflow_other_terminals(self, printed):
        assert cli.main(["maxflow", DIAMOND, "--source", "1", "--sink", "3", "--selection", "highest_label"]) == 0
        assert "Maximum flow 1->3:[/cyan] 3" in joined(printed)

    def test_maxflow_bad_terminal(self, printed):
        assert cli.main(["maxflow", DIAMOND, "--sink", "0"]) == 1

    def test_feasible(self, printed):
        assert cli.main(["feasible", DIAMOND, "--demand", "2.5"]) == 0
        assert "Feasible: 2.5 from 0 to 3" in joined(printed)

    def test_infeasible(self, printed):
        assert cli.main(["feasible", DIAMOND, "--demand", "5"]) == 0
        assert "at most 4 of 5" in joined(printed)

    def test_bad_demand(self, printed):
        assert cli.main(["feasible", DIAMOND, "--demand", "plenty"]) == 1


class TestSimulate:
    """Test cases for the simulate command."""

    def test_concurrent(self, printed):
        assert cli.main(["simulate", DIAMOND, "--workload", DIAMOND_WORKLOAD]) == 0
        assert "Concurrent: 2/2 succeeded" in joined(printed)

    def test_random_scheduler_with_checks(self, printed):
        args = ["simulate", DIAMOND, "--workload", DIAMOND_WORKLOAD, "--scheduler", "random", "--seed", "4",
                "--check-invariants"]
        assert cli.main(args) == 0

    def test_sequential(self, printed):
        assert cli.main(["simulate", DIAMOND, "--workload", DIAMOND_WORKLOAD, "--sequential"]) == 0
        assert "Sequential: 2/2 succeeded" in joined(printed)

    def test_distributed_with_trace(self, printed, tmp_path):
        trace = tmp_path / "trace.jsonl"
        args = ["simulate", DIAMOND, "--workload", DIAMOND_WORKLOAD, "--distributed", "--seed", "3", "--trace", str(trace)]
        assert cli.main(args) == 0
        assert "Distributed: 2/2 succeeded" in joined(printed)
        events = [json.loads(line) for line in trace.read_text().splitlines()]
        assert events and all("digest" in event for event in events)

    def test_distributed_zero_latency(self, printed):
        args = ["simulate", DIAMOND, "--workload", DIAMOND_WORKLOAD, "--distributed", "--zero-latency"]
        assert cli.main(args) == 0

    def test_workload_outside_graph(self, printed, tmp_path):
        workload = tmp_path / "w.json"
        workload.write_text(json.dumps({"commodities": [{"source": 0, "sink": 8, "demand_milli": 1}]}))
        assert cli.main(["simulate", DIAMOND, "--workload", str(workload)]) == 1


class TestGen:
    """Test cases for the gen command."""

    def test_to_stdout(self, capsys):
        assert cli.main(["gen", "--n", "10", "--k", "4", "--seed", "2"]) == 0
        document = json.loads(capsys.readouterr().out)
        assert document["nodes"] == 10
        assert len(document["edges"]) == 40

    def test_to_files(self, printed, tmp_path):
        graph = tmp_path / "g.json"
        workload = tmp_path / "w.json"
        args = ["gen", "--n", "16", "--k", "4", "--out", str(graph), "--workload-out", str(workload),
                "--flows", "5", "--vol-max", "3"]
        assert cli.main(args) == 0
        net = load_graph(graph)
        demands = load_workload(workload, net)
        assert len(demands) == 5
        assert all(d.amount <= 3000 for d in demands)

    def test_invalid_topology(self, printed):
        assert cli.main(["gen", "--n", "10", "--k", "3"]) == 1


class TestExperiment:
    """Test cases for the experiment command."""

    def test_writes_csv(self, printed, tmp_path):
        config = tmp_path / "exp.yml"
        config.write_text(
            "name: tiny\nruns: 2\nmaster_seed: 1\n"
            "topology: {n: 10, k: 4, cap_max: 10}\n"
            "sweep: {kind: flow_count, vol_max: 10, levels: [1, 3]}\n"
        )
        assert cli.main(["experiment", "--config", str(config), "--out", str(tmp_path / "results")]) == 0
        lines = (tmp_path / "results" / "tiny.csv").read_text().splitlines()
        assert lines[0].startswith("r,seq_suc")
        assert len(lines) == 3

    def test_invalid_config(self, printed, tmp_path):
        config = tmp_path / "exp.yml"
        config.write_text("sweep: {kind: flow_count, levels: []}\n")
        assert cli.main(["experiment", "--config", str(config)]) == 1
