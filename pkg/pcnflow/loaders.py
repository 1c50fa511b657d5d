"""
Loaders - Graph, workload and experiment files.

Graphs are JSON; workloads and experiment configs may be JSON or YAML,
chosen by file suffix.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence, Union

import yaml

from .amount import to_milli
from .logger import setup_logger
from .network import Demand, FlowNetwork


logger = setup_logger("pcnflow.loaders")

PathLike = Union[str, Path]


class LoaderError(ValueError):
    """Raised when an input file is missing, unreadable or malformed."""
    pass


def read_document(path: PathLike) -> Any:
    """Parse a JSON or YAML file."""
    file_path = Path(path)
    if not file_path.exists():
        logger.error(f"File not found: {file_path}")
        raise LoaderError(f"File not found: {file_path}")

    with file_path.open("r") as f:
        try:
            if file_path.suffix.lower() in (".yml", ".yaml"):
                return yaml.safe_load(f)
            return json.load(f)
        except (json.JSONDecodeError, yaml.YAMLError) as e:
            logger.error(f"Failed to parse {file_path}: {str(e)}")
            raise LoaderError(f"Failed to parse {file_path}: {str(e)}")


def load_graph(path: PathLike) -> FlowNetwork:
    """Load a FlowNetwork from the JSON graph format."""
    data = read_document(path)
    if not isinstance(data, Mapping):
        raise LoaderError(f"Graph file {path} must hold an object")
    net = FlowNetwork.from_dict(data)
    logger.info(f"Loaded {net!r} from {path}")
    return net


def save_graph(net: FlowNetwork, path: PathLike) -> Path:
    """Write net as graph JSON, creating parent directories."""
    file_path = Path(path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    with file_path.open("w") as f:
        json.dump(net.to_dict(), f, indent=2)
    return file_path


def _demand_amount(entry: Mapping[str, Any], index: int) -> int:
    if "demand_milli" in entry:
        value = entry["demand_milli"]
        if isinstance(value, bool) or not isinstance(value, int):
            raise LoaderError(f"Commodity {index}: demand_milli must be an integer")
        return value
    if "demand" in entry:
        try:
            return to_milli(entry["demand"])
        except ValueError as e:
            raise LoaderError(f"Commodity {index}: {str(e)}")
    raise LoaderError(f"Commodity {index}: missing demand_milli")


def parse_workload(data: Any, num_nodes: int) -> List[Demand]:
    """
    Validate {commodities: [{source, sink, demand_milli}]} against a network size.

    A plain list of commodity objects is accepted too; "demand" in whole
    units may replace demand_milli.
    """
    entries = data.get("commodities") if isinstance(data, Mapping) else data
    if not isinstance(entries, list):
        raise LoaderError("Workload must hold a list of commodities")

    demands: List[Demand] = []
    for index, entry in enumerate(entries):
        if not isinstance(entry, Mapping):
            raise LoaderError(f"Commodity {index} must be an object")
        try:
            source, sink = entry["source"], entry["sink"]
        except KeyError as e:
            raise LoaderError(f"Commodity {index}: missing field {str(e)}")
        for node in (source, sink):
            if isinstance(node, bool) or not isinstance(node, int) or not 0 <= node < num_nodes:
                raise LoaderError(f"Commodity {index}: invalid node {node!r}")
        if source == sink:
            raise LoaderError(f"Commodity {index}: source and sink are both {source}")
        amount = _demand_amount(entry, index)
        if amount < 0:
            raise LoaderError(f"Commodity {index}: negative demand {amount}")
        demands.append(Demand(source, sink, amount))
    return demands


def load_workload(path: PathLike, net: FlowNetwork) -> List[Demand]:
    """Parse a workload file against the node range of net."""
    demands = parse_workload(read_document(path), net.num_nodes)
    logger.info(f"Loaded {len(demands)} commodities from {path}")
    return demands


def save_workload(demands: Sequence[Demand], path: PathLike) -> Path:
    file_path = Path(path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    payload: Dict[str, Any] = {
        "commodities": [
            {"source": d.source, "sink": d.sink, "demand_milli": d.amount} for d in demands
        ]
    }
    with file_path.open("w") as f:
        json.dump(payload, f, indent=2)
    return file_path


def load_experiment_config(path: PathLike):
    """Parse an ExperimentConfig from YAML or JSON."""
    from .experiments import ExperimentConfig

    data = read_document(path)
    if not isinstance(data, Mapping):
        raise LoaderError(f"Experiment config {path} must hold an object")
    config = ExperimentConfig.from_dict(data)
    logger.info(f"Loaded experiment config {config.name!r} from {path}")
    return config
