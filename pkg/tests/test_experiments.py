"""
Unit tests for the experiments module.
Tests configuration parsing, per-cell solving, summary statistics and CSV output.
"""

from pathlib import Path

import numpy as np
import pytest  # type: ignore[reportMissingImports]

from pcnflow.experiments import (
    ExperimentConfig,
    ExperimentConfigError,
    ExperimentRunner,
    Modes,
    SummaryRow,
    _cross_check,
    cell_seeds,
    emit_csv,
    run_level,
    summarize,
)
from pcnflow.loaders import load_experiment_config
from pcnflow.network import Demand, FlowAssignment, FlowNetwork
from pcnflow.outcomes import Success
from pcnflow.single_path import SinglePathRouter
from pcnflow.topology import TopologyConfig, WorkloadConfig, generate_network, sample_workload
from pcnflow.validators import InvariantViolation

from conftest import S, T, V3


CONFIGS = Path(__file__).resolve().parent.parent / "configs"
FULL_TOPOLOGY = TopologyConfig(n=200, k=10, beta=0.5, cap_max=10_000)
SMALL_TOPOLOGY = TopologyConfig(n=12, k=4, beta=0.5, cap_max=10_000)


def small_config(**overrides) -> ExperimentConfig:
    values = dict(topology=SMALL_TOPOLOGY, kind="flow_count", levels=(1, 4), runs=2, vol_max=8_000, master_seed=3)
    values.update(overrides)
    return ExperimentConfig(**values)


class TestExperimentConfig:
    """Test cases for ExperimentConfig validation and parsing."""

    @pytest.mark.parametrize(
        "overrides",
        [
            {"kind": "latency"},
            {"runs": 0},
            {"levels": ()},
            {"levels": (4, 1)},
            {"levels": (1.5, 2)},
            {"levels": (-1, 2)},
            {"modes": Modes(False, False, False)},
        ],
    )
    def test_invalid(self, overrides):
        with pytest.raises(ExperimentConfigError):
            small_config(**overrides)

    def test_from_dict_converts_units(self):
        config = ExperimentConfig.from_dict({
            "name": "vol",
            "topology": {"n": 20, "k": 4, "cap_max": 10},
            "sweep": {"kind": "volume", "fixed_k": 16, "levels": [5, 10]},
            "modes": {"single_path": False},
        })
        assert config.topology.cap_max == 10_000
        assert config.levels == (5.0, 10.0)
        assert config.level_header == "max_demand"
        assert config.modes.enabled() == ("sequential", "concurrent")
        workload = config.workload_for(5.0, seed=1)
        assert (workload.num_flows, workload.vol_max) == (16, 5_000)

    def test_from_dict_flow_count(self):
        config = ExperimentConfig.from_dict({"sweep": {"levels": [1, 2, 4], "vol_max": 20}})
        assert config.kind == "flow_count"
        assert config.level_header == "r"
        workload = config.workload_for(4.0, seed=0)
        assert (workload.num_flows, workload.vol_max) == (4, 20_000)

    @pytest.mark.parametrize(
        "data",
        [
            {},
            {"sweep": {"levels": [1]}, "topology": {"k": 3}},
            {"sweep": {"levels": ["many"]}},
        ],
    )
    def test_from_dict_errors(self, data):
        with pytest.raises(ExperimentConfigError):
            ExperimentConfig.from_dict(data)


class TestCells:
    """Test cases for seeding and per-cell solving."""

    def test_cell_seeds(self):
        assert cell_seeds(2020, 0, 0) == cell_seeds(2020, 0, 0)
        assert cell_seeds(2020, 0, 0) != cell_seeds(2020, 0, 1)
        assert cell_seeds(2020, 0, 1) != cell_seeds(2020, 1, 0)

    def test_run_level_diamond(self, diamond_net: FlowNetwork):
        workload = [Demand(S, T, 2000), Demand(S, T, 2000)]
        fractions = run_level(diamond_net, workload, Modes(), cross_check=True)
        assert fractions == {"sequential": 1.0, "concurrent": 1.0, "single_path": 0.5}

    def test_run_level_skips_disabled(self, diamond_net: FlowNetwork):
        fractions = run_level(diamond_net, [Demand(S, T, 5000)], Modes(sequential=False, single_path=False))
        assert fractions == {"concurrent": 0.0}

    def test_empty_workload_counts_as_success(self, diamond_net: FlowNetwork):
        assert run_level(diamond_net, [], Modes()) == {"sequential": 1.0, "concurrent": 1.0, "single_path": 1.0}

    def test_cross_check_detects_overdraw(self, diamond_net: FlowNetwork):
        outcomes = []
        for _ in range(2):
            flow = FlowAssignment()
            flow.push(S, V3, 2000)
            flow.push(V3, T, 2000)
            outcomes.append(Success(delivered=2000, flow=flow))
        with pytest.raises(InvariantViolation):
            _cross_check(diamond_net, [Demand(S, T, 2000)] * 2, outcomes)


class TestSummary:
    """Test cases for summarize and emit_csv."""

    def test_mean_and_half_width(self):
        runs = [
            {"sequential": 1.0, "concurrent": 0.5, "single_path": 0.25},
            {"sequential": 0.0, "concurrent": 0.5, "single_path": 0.25},
        ]
        (row,) = summarize([8], [runs], Modes())
        assert row.seq_success == pytest.approx(0.5)
        assert row.ci_seq == pytest.approx(0.98)
        assert row.conc_success == pytest.approx(0.5)
        assert row.ci_conc == 0.0
        assert row.single_path_success == pytest.approx(0.25)

    def test_single_run_has_zero_width(self):
        (row,) = summarize([1], [[{"sequential": 0.75}]], Modes(concurrent=False, single_path=False))
        assert row.seq_success == 0.75
        assert row.ci_seq == 0.0
        assert row.conc_success is None

    def test_level_without_runs(self):
        with pytest.raises(ExperimentConfigError):
            summarize([1], [[]], Modes())

    def test_flow_count_csv(self, tmp_path):
        rows = [SummaryRow(level=1.0, seq_success=1.0, conc_success=0.5, single_path_success=1 / 3,
                           ci_seq=0.0, ci_conc=0.125, ci_sp=0.0)]
        path = emit_csv(rows, tmp_path / "out.csv")
        lines = path.read_text().splitlines()
        assert lines[0] == "r,seq_suc,conc_suc,sp_suc,ci_seq,ci_conc,ci_sp"
        assert lines[1] == "1,1.0000,0.5000,0.3333,0.0000,0.1250,0.0000"

    def test_volume_csv_leaves_disabled_modes_empty(self, tmp_path):
        rows = [SummaryRow(level=12.5, conc_success=0.5, ci_conc=0.0)]
        lines = emit_csv(rows, tmp_path / "nested" / "v.csv", kind="volume").read_text().splitlines()
        assert lines[0].startswith("max_demand,")
        assert lines[1] == "12.5,,0.5000,,,0.0000,"

    def test_unknown_kind(self, tmp_path):
        with pytest.raises(ExperimentConfigError):
            emit_csv([], tmp_path / "x.csv", kind="latency")


class TestExperimentRunner:
    """Test cases for ExperimentRunner."""

    def test_rows_per_level(self):
        runner = ExperimentRunner(small_config(), max_workers=1)
        assert runner.cells() == [(0, 0), (0, 1), (1, 0), (1, 1)]
        rows = runner.run()
        assert [row.level for row in rows] == [1, 4]
        for row in rows:
            for value in (row.seq_success, row.conc_success, row.single_path_success):
                assert 0.0 <= value <= 1.0

    def test_same_seed_same_csv(self, tmp_path):
        config = small_config(name="repeat", cross_check=True)
        first = ExperimentRunner(config).write(tmp_path / "a")
        second = ExperimentRunner(config).write(tmp_path / "b")
        assert first.name == "repeat.csv"
        assert first.read_bytes() == second.read_bytes()

    def test_max_workers_from_settings(self, monkeypatch: pytest.MonkeyPatch):
        monkeypatch.setenv("PCNFLOW_MAX_WORKERS", "3")
        assert ExperimentRunner(small_config()).max_workers == 3

    @pytest.mark.slow
    def test_parallel_matches_sequential(self):
        config = small_config(levels=(2, 8), runs=3)
        sequential = ExperimentRunner(config).run()
        parallel = ExperimentRunner(config, parallel=True, max_workers=2).run()
        assert parallel == sequential


class TestReproduction:
    """Success-rate anchors of the Watts-Strogatz sweeps."""

    def test_demand_above_max_capacity_fails_single_path(self):
        net = generate_network(TopologyConfig(n=200, k=10, beta=0.5, cap_max=10_000, seed=8))
        router = SinglePathRouter(net)
        demands = sample_workload(net, WorkloadConfig(num_flows=300, vol_max=20_000, seed=8))
        large = [demand for demand in demands if demand.amount > 10_000]
        assert large
        for source, sink, amount in large:
            assert not router.route(source, sink, amount).ok
        assert router.capacity == dict(net.capacities)

    @pytest.mark.slow
    def test_desk_preset_ordering(self):
        config = load_experiment_config(CONFIGS / "desk_flow_sweep.yml")
        rows = ExperimentRunner(config).run()
        assert [row.level for row in rows] == [1, 4, 16, 64, 256, 512]

        early = [row for row in rows if row.level <= 256]
        seq = np.mean([row.seq_success for row in early])
        conc = np.mean([row.conc_success for row in early])
        single = np.mean([row.single_path_success for row in early])
        assert seq > single
        assert conc > single
        assert rows[0].seq_success >= 0.6
        assert rows[0].conc_success == rows[0].seq_success

    @pytest.mark.slow
    def test_single_path_near_half(self):
        config = ExperimentConfig(
            topology=FULL_TOPOLOGY,
            kind="flow_count",
            levels=(16,),
            runs=10,
            vol_max=20_000,
            modes=Modes(sequential=False, concurrent=False, single_path=True),
            master_seed=11,
        )
        (row,) = ExperimentRunner(config).run()
        assert 0.35 <= row.single_path_success <= 0.55

    @pytest.mark.slow
    def test_volume_sweep(self):
        config = ExperimentConfig(
            topology=FULL_TOPOLOGY,
            kind="volume",
            levels=(5, 15, 25, 35, 50),
            runs=3,
            fixed_k=128,
            modes=Modes(sequential=False, concurrent=True, single_path=True),
            master_seed=13,
        )
        rows = ExperimentRunner(config).run()
        by_level = {row.level: row for row in rows}
        assert by_level[15].conc_success >= 0.35

        # Three runs per level, so allow some noise between neighbours.
        beyond = [row.conc_success for row in rows if row.level >= 15]
        for before, after in zip(beyond, beyond[1:]):
            assert after <= before + 0.1
        single = [row.single_path_success for row in rows]
        for before, after in zip(single, single[1:]):
            assert after <= before + 0.1
        assert rows[-1].conc_success < rows[0].conc_success
