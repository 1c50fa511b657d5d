"""
Experiments - Success-rate sweeps comparing sequential, concurrent and
single-path routing on random Watts-Strogatz networks.

Every (level, run) cell gets a fresh network and workload from sub-seeds
derived from the master seed, so cells are independent and can run in
worker processes; rows are reduced in (level, run) order.
"""

import csv
import math
import time
from concurrent.futures import Future, ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .amount import Amount, to_milli
from .logger import setup_logger
from .network import Demand, FlowNetwork
from .outcomes import Outcome, success_fraction
from .pushrelabel import sequential_batch
from .schedulers import RoundRobinScheduler, concurrent_solve
from .settings import Settings
from .single_path import single_path_batch
from .topology import TopologyConfig, TopologyConfigError, WorkloadConfig, generate_network, sample_workload
from . import validators


logger = setup_logger("pcnflow.experiments")

SWEEP_KINDS = ("flow_count", "volume")
MODES = ("sequential", "concurrent", "single_path")
Z_95 = 1.96


class ExperimentConfigError(ValueError):
    """Raised when an experiment configuration is invalid."""
    pass


@dataclass(frozen=True)
class Modes:
    sequential: bool = True
    concurrent: bool = True
    single_path: bool = True

    def enabled(self) -> Tuple[str, ...]:
        """Enabled mode names in column order."""
        return tuple(mode for mode in MODES if getattr(self, mode))


@dataclass(frozen=True)
class ExperimentConfig:
    """
    One sweep.

    Flow-count sweeps vary the number of flows at a fixed vol_max; volume
    sweeps vary vol_max (whole units) at fixed_k flows.
    """

    topology: TopologyConfig
    kind: str
    levels: Tuple[float, ...]
    runs: int = 10
    vol_max: Amount = 20_000
    fixed_k: int = 128
    modes: Modes = field(default_factory=Modes)
    master_seed: int = 0
    name: str = "experiment"
    cross_check: bool = False

    def __post_init__(self) -> None:
        if self.kind not in SWEEP_KINDS:
            raise ExperimentConfigError(f"Unknown sweep kind {self.kind!r}; expected one of {SWEEP_KINDS}")
        if self.runs < 1:
            raise ExperimentConfigError(f"runs must be at least 1, got {self.runs}")
        if not self.levels:
            raise ExperimentConfigError("levels must not be empty")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ExperimentConfigError(f"levels must be strictly increasing, got {list(self.levels)}")
        if any(level < 0 for level in self.levels):
            raise ExperimentConfigError("levels must be non-negative")
        if self.kind == "flow_count" and any(int(level) != level for level in self.levels):
            raise ExperimentConfigError("flow-count levels must be integers")
        if not self.modes.enabled():
            raise ExperimentConfigError("at least one mode must be enabled")

    @property
    def level_header(self) -> str:
        return "r" if self.kind == "flow_count" else "max_demand"

    def workload_for(self, level: float, seed: int) -> WorkloadConfig:
        """Workload parameters for one level of the sweep."""
        if self.kind == "flow_count":
            return WorkloadConfig(num_flows=int(level), vol_max=self.vol_max, seed=seed)
        return WorkloadConfig(num_flows=self.fixed_k, vol_max=to_milli(level), seed=seed)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ExperimentConfig":
        """
        Build a config from a parsed YAML/JSON document.

        Capacities and volumes are given in whole units.
        """
        try:
            topo = dict(data.get("topology", {}))
            sweep = dict(data["sweep"])
            modes = dict(data.get("modes", {}))
            topology = TopologyConfig(
                n=int(topo.get("n", 200)),
                k=int(topo.get("k", 10)),
                beta=float(topo.get("beta", 0.5)),
                cap_max=to_milli(topo.get("cap_max", 10)),
            )
            return cls(
                topology=topology,
                kind=str(sweep.get("kind", "flow_count")),
                levels=tuple(float(level) for level in sweep["levels"]),
                runs=int(data.get("runs", 10)),
                vol_max=to_milli(sweep.get("vol_max", 20)),
                fixed_k=int(sweep.get("fixed_k", 128)),
                modes=Modes(
                    sequential=bool(modes.get("sequential", True)),
                    concurrent=bool(modes.get("concurrent", True)),
                    single_path=bool(modes.get("single_path", True)),
                ),
                master_seed=int(data.get("master_seed", 0)),
                name=str(data.get("name", "experiment")),
                cross_check=bool(data.get("cross_check", False)),
            )
        except KeyError as e:
            raise ExperimentConfigError(f"Missing experiment field {str(e)}")
        except TopologyConfigError as e:
            raise ExperimentConfigError(f"Invalid topology: {str(e)}")
        except (TypeError, ValueError) as e:
            if isinstance(e, ExperimentConfigError):
                raise
            raise ExperimentConfigError(f"Invalid experiment config: {str(e)}")


@dataclass(frozen=True)
class SummaryRow:
    """Mean success fraction and 95% half-width per enabled mode at one level."""

    level: float
    seq_success: Optional[float] = None
    conc_success: Optional[float] = None
    single_path_success: Optional[float] = None
    ci_seq: Optional[float] = None
    ci_conc: Optional[float] = None
    ci_sp: Optional[float] = None


@dataclass(frozen=True)
class CellResult:
    level_index: int
    run: int
    fractions: Dict[str, float]


def cell_seeds(master_seed: int, level_index: int, run: int) -> Tuple[int, int]:
    """(topology seed, workload seed) for one cell."""
    state = np.random.SeedSequence([master_seed, level_index, run]).generate_state(2)
    return int(state[0]), int(state[1])


def _cross_check(net: FlowNetwork, workload: Sequence[Demand], outcomes: Sequence[Outcome]) -> None:
    used: Dict[Tuple[int, int], Amount] = {}
    for (source, sink, amount), outcome in zip(workload, outcomes):
        if not outcome.ok:
            continue
        validators.check_feasible(net.with_terminals(source, sink), outcome.flow, amount)
        for pair, value in outcome.flow.directed().items():
            used[pair] = used.get(pair, 0) + value
    for (u, v), value in used.items():
        if value > net.capacity(u, v):
            raise validators.InvariantViolation(f"Committed flows overdraw channel ({u}, {v})")


def run_level(
    net: FlowNetwork, workload: Sequence[Demand], modes: Modes, cross_check: bool = False
) -> Dict[str, float]:
    """
    Success fraction per enabled mode on one network and workload.

    Sequential routes in workload order, concurrent uses the round-robin
    scheduler over all commodities, single path routes widest paths in order.
    """
    fractions: Dict[str, float] = {}
    if modes.sequential:
        outcomes = sequential_batch(net, workload)
        if cross_check:
            _cross_check(net, workload, outcomes)
        fractions["sequential"] = success_fraction(outcomes)
    if modes.concurrent:
        outcomes = concurrent_solve(net, workload, RoundRobinScheduler())
        if cross_check:
            _cross_check(net, workload, outcomes)
        fractions["concurrent"] = success_fraction(outcomes)
    if modes.single_path:
        fractions["single_path"] = success_fraction(single_path_batch(net, workload))
    return fractions


def run_cell(config: ExperimentConfig, level_index: int, run: int) -> CellResult:
    """Generate and solve one (level, run) cell."""
    topo_seed, workload_seed = cell_seeds(config.master_seed, level_index, run)
    topology = TopologyConfig(
        n=config.topology.n,
        k=config.topology.k,
        beta=config.topology.beta,
        cap_max=config.topology.cap_max,
        seed=topo_seed,
    )
    net = generate_network(topology)
    level = config.levels[level_index]
    workload = sample_workload(net, config.workload_for(level, workload_seed))
    fractions = run_level(net, workload, config.modes, cross_check=config.cross_check)
    logger.debug(f"cell level={level:g} run={run}: {fractions}", extra={"level_value": level, "run": run})
    return CellResult(level_index, run, fractions)


def _ci_half_width(values: Sequence[float]) -> float:
    if len(values) < 2:
        return 0.0
    return float(Z_95 * np.std(values, ddof=1) / math.sqrt(len(values)))


def summarize(
    levels: Sequence[float], results: Sequence[Sequence[Mapping[str, float]]], modes: Modes
) -> List[SummaryRow]:
    """
    Mean and normal-approximation 95% half-width per level.

    Args:
        levels: Level values in sweep order
        results: results[level_index][run] maps mode name to success fraction
        modes: Which modes were run

    Returns:
        One SummaryRow per level; disabled modes stay None
    """
    rows: List[SummaryRow] = []
    for level, runs in zip(levels, results):
        if not runs:
            raise ExperimentConfigError(f"Level {level:g} has no runs")
        values: Dict[str, Optional[float]] = {}
        for mode, mean_key, ci_key in (
            ("sequential", "seq_success", "ci_seq"),
            ("concurrent", "conc_success", "ci_conc"),
            ("single_path", "single_path_success", "ci_sp"),
        ):
            if not getattr(modes, mode):
                continue
            samples = [run[mode] for run in runs]
            values[mean_key] = float(np.mean(samples))
            values[ci_key] = _ci_half_width(samples)
        rows.append(SummaryRow(level=level, **values))
    return rows


CSV_COLUMNS = ("seq_suc", "conc_suc", "sp_suc", "ci_seq", "ci_conc", "ci_sp")


def _cell(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.4f}"


def emit_csv(rows: Sequence[SummaryRow], path: Union[str, Path], kind: str = "flow_count") -> Path:
    """
    Write summary rows; the level column is r for flow-count sweeps and
    max_demand for volume sweeps.
    """
    if kind not in SWEEP_KINDS:
        raise ExperimentConfigError(f"Unknown sweep kind {kind!r}")
    file_path = Path(path)
    header = ["r" if kind == "flow_count" else "max_demand", *CSV_COLUMNS]
    try:
        file_path.parent.mkdir(parents=True, exist_ok=True)
        with file_path.open("w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(header)
            for row in rows:
                writer.writerow([
                    f"{row.level:g}",
                    _cell(row.seq_success),
                    _cell(row.conc_success),
                    _cell(row.single_path_success),
                    _cell(row.ci_seq),
                    _cell(row.ci_conc),
                    _cell(row.ci_sp),
                ])
    except OSError as e:
        logger.error(f"Cannot write results to {file_path}: {str(e)}")
        raise
    return file_path


class ExperimentRunner:
    """Runs every (level, run) cell of a sweep and reduces them to summary rows."""

    def __init__(self, config: ExperimentConfig, parallel: bool = False, max_workers: Optional[int] = None):
        self.config = config
        self.parallel = parallel
        self.max_workers = Settings.max_workers() if max_workers is None else max_workers
        self.rows: List[SummaryRow] = []
        self.elapsed = 0.0
        logger.info(
            f"ExperimentRunner initialized for {config.name!r}: {len(config.levels)} levels x {config.runs} runs"
        )

    def cells(self) -> List[Tuple[int, int]]:
        """Every (level index, run) coordinate, levels outermost."""
        return [(li, run) for li in range(len(self.config.levels)) for run in range(self.config.runs)]

    def run(self) -> List[SummaryRow]:
        """Solve every cell, in worker processes when parallel, and summarize."""
        start_time = time.time()
        results: Dict[Tuple[int, int], CellResult] = {}

        if self.parallel:
            logger.info(f"Starting parallel sweep with {self.max_workers} workers")
            with ProcessPoolExecutor(max_workers=self.max_workers) as executor:
                futures: Dict[Future, Tuple[int, int]] = {
                    executor.submit(run_cell, self.config, li, run): (li, run) for li, run in self.cells()
                }
                for future in as_completed(list(futures.keys())):
                    li, run = futures[future]
                    try:
                        results[(li, run)] = future.result()
                    except Exception as e:
                        logger.error(f"Cell level={self.config.levels[li]:g} run={run} failed: {str(e)}")
                        raise
        else:
            logger.info("Starting sequential sweep")
            for li, run in self.cells():
                results[(li, run)] = run_cell(self.config, li, run)

        grid = [
            [results[(li, run)].fractions for run in range(self.config.runs)]
            for li in range(len(self.config.levels))
        ]
        self.rows = summarize(self.config.levels, grid, self.config.modes)
        self.elapsed = time.time() - start_time
        logger.info(f"Sweep {self.config.name!r} completed in {self.elapsed:.2f}s")
        return self.rows

    def write(self, out_dir: Union[str, Path]) -> Path:
        """Run if needed and write <name>.csv under out_dir."""
        if not self.rows:
            self.run()
        return emit_csv(self.rows, Path(out_dir) / f"{self.config.name}.csv", self.config.kind)
