"""
Unit tests for the loaders module.
Tests graph, workload and experiment file handling.
"""

import json
from pathlib import Path

import pytest  # type: ignore[reportMissingImports]

from pcnflow.experiments import ExperimentConfigError
from pcnflow.loaders import (
    LoaderError,
    load_experiment_config,
    load_graph,
    load_workload,
    parse_workload,
    read_document,
    save_graph,
    save_workload,
)
from pcnflow.network import Demand, FlowNetwork, NetworkValidationError

from conftest import S, T


CONFIGS = Path(__file__).resolve().parent.parent / "configs"


class TestDocuments:
    """Test cases for read_document."""

    def test_missing_file(self, tmp_path):
        with pytest.raises(LoaderError):
            read_document(tmp_path / "absent.json")

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{nodes: 4")
        with pytest.raises(LoaderError):
            read_document(path)

    def test_yaml_by_suffix(self, tmp_path):
        path = tmp_path / "doc.yaml"
        path.write_text("commodities:\n  - {source: 0, sink: 1, demand: 2}\n")
        assert read_document(path) == {"commodities": [{"source": 0, "sink": 1, "demand": 2}]}


class TestGraphs:
    """Test cases for load_graph and save_graph."""

    def test_load_example(self, diamond_net: FlowNetwork):
        net = load_graph(CONFIGS / "diamond.json")
        assert dict(net.capacities) == dict(diamond_net.capacities)
        assert (net.source, net.sink) == (S, T)

    def test_save_then_load(self, tmp_path, diamond_net: FlowNetwork):
        path = save_graph(diamond_net, tmp_path / "graphs" / "g.json")
        assert dict(load_graph(path).capacities) == dict(diamond_net.capacities)

    def test_not_an_object(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text("[]")
        with pytest.raises(LoaderError):
            load_graph(path)

    def test_invalid_edge(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({
            "nodes": 2, "edges": [{"from": 0, "to": 0, "capacity_milli": 1}], "source": 0, "sink": 1,
        }))
        with pytest.raises(NetworkValidationError):
            load_graph(path)

    def test_fractional_capacity_rejected(self, tmp_path):
        path = tmp_path / "frac.json"
        path.write_text(json.dumps({
            "nodes": 2, "edges": [{"from": 0, "to": 1, "capacity_milli": 1.5}], "source": 0, "sink": 1,
        }))
        with pytest.raises(NetworkValidationError):
            load_graph(path)


class TestWorkloads:
    """Test cases for parse_workload, load_workload and save_workload."""

    def test_load_example(self, diamond_net: FlowNetwork):
        assert load_workload(CONFIGS / "diamond_workload.json", diamond_net) == [
            Demand(0, 3, 2000),
            Demand(0, 3, 2000),
        ]

    def test_units_and_plain_list(self):
        demands = parse_workload([{"source": 1, "sink": 2, "demand": 1.5}], num_nodes=4)
        assert demands == [Demand(1, 2, 1500)]

    @pytest.mark.parametrize(
        "entry",
        [
            {"source": 0, "sink": 9, "demand_milli": 1},
            {"source": 2, "sink": 2, "demand_milli": 1},
            {"source": 0, "sink": 1, "demand_milli": -1},
            {"source": 0, "sink": 1, "demand_milli": True},
            {"source": 0, "sink": 1, "demand": "lots"},
            {"source": 0, "sink": 1},
            {"sink": 1, "demand_milli": 1},
            "0->1",
        ],
    )
    def test_invalid_entry(self, entry):
        with pytest.raises(LoaderError):
            parse_workload({"commodities": [entry]}, num_nodes=4)

    def test_not_a_list(self):
        with pytest.raises(LoaderError):
            parse_workload({"commodities": {"source": 0}}, num_nodes=4)

    def test_save_then_load(self, tmp_path, diamond_net: FlowNetwork):
        demands = [Demand(0, 3, 1234), Demand(1, 3, 0)]
        path = save_workload(demands, tmp_path / "w.json")
        assert load_workload(path, diamond_net) == demands


class TestExperimentConfigs:
    """Test cases for load_experiment_config."""

    def test_desk_sweep(self):
        config = load_experiment_config(CONFIGS / "desk_flow_sweep.yml")
        assert config.name == "desk_flow_count"
        assert config.topology.n == 50
        assert config.topology.cap_max == 10_000
        assert config.vol_max == 20_000
        assert config.runs == 3
        assert config.levels[-1] == 512

    @pytest.mark.parametrize("name", ["full_flow_sweep.yml", "full_volume_sweep.yml"])
    def test_full_sweeps_parse(self, name: str):
        config = load_experiment_config(CONFIGS / name)
        assert config.master_seed == 2020
        assert config.runs == 10

    def test_invalid_sweep(self, tmp_path):
        path = tmp_path / "exp.yml"
        path.write_text("sweep:\n  kind: latency\n  levels: [1]\n")
        with pytest.raises(ExperimentConfigError):
            load_experiment_config(path)

    def test_not_an_object(self, tmp_path):
        path = tmp_path / "exp.yml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(LoaderError):
            load_experiment_config(path)
