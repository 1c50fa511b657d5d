"""
Topology - Watts-Strogatz channel networks and random payment workloads.

Generation is a pure function of the configuration and its seed.
"""

from dataclasses import dataclass
from typing import List

import networkx as nx
import numpy as np

from .amount import Amount
from .logger import setup_logger
from .network import ChannelEdge, Demand, FlowNetwork


logger = setup_logger("pcnflow.topology")


class TopologyConfigError(ValueError):
    """Raised when a topology or workload configuration is invalid."""
    pass


@dataclass(frozen=True)
class TopologyConfig:
    """
    Watts-Strogatz parameters.

    Attributes:
        n: Number of nodes
        k: Ring-lattice degree, even and below n
        beta: Rewiring probability in [0, 1]
        cap_max: Upper capacity bound in milli-units
        seed: Generator seed
    """

    n: int = 200
    k: int = 10
    beta: float = 0.5
    cap_max: Amount = 10_000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 2:
            raise TopologyConfigError(f"n must be at least 2, got {self.n}")
        if self.k < 0 or self.k % 2:
            raise TopologyConfigError(f"k must be a non-negative even number, got {self.k}")
        if self.k >= self.n:
            raise TopologyConfigError(f"k must be below n, got k={self.k} n={self.n}")
        if not 0.0 <= self.beta <= 1.0:
            raise TopologyConfigError(f"beta must lie in [0, 1], got {self.beta}")
        if self.cap_max < 0:
            raise TopologyConfigError(f"cap_max must be non-negative, got {self.cap_max}")


@dataclass(frozen=True)
class WorkloadConfig:
    num_flows: int = 128
    vol_max: Amount = 20_000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_flows < 0:
            raise TopologyConfigError(f"num_flows must be non-negative, got {self.num_flows}")
        if self.vol_max < 0:
            raise TopologyConfigError(f"vol_max must be non-negative, got {self.vol_max}")


@dataclass(frozen=True)
class Skeleton:
    """Undirected channel graph before capacities are assigned."""

    graph: nx.Graph
    connected: bool
    config: TopologyConfig

    @property
    def num_nodes(self) -> int:
        """Number of nodes in the skeleton."""
        return self.graph.number_of_nodes()

    @property
    def num_edges(self) -> int:
        """Number of undirected edges."""
        return self.graph.number_of_edges()


def watts_strogatz(cfg: TopologyConfig) -> Skeleton:
    """Ring lattice of degree k with each edge rewired with probability beta."""
    graph = nx.watts_strogatz_graph(cfg.n, cfg.k, cfg.beta, seed=cfg.seed)
    connected = nx.is_connected(graph)
    if not connected:
        logger.info(f"Watts-Strogatz graph n={cfg.n} k={cfg.k} beta={cfg.beta} seed={cfg.seed} is disconnected")
    return Skeleton(graph=graph, connected=connected, config=cfg)


def assign_capacities(skeleton: Skeleton, cap_max: Amount, seed: int) -> FlowNetwork:
    """
    Turn every undirected edge into two directed channels.

    Each direction draws its capacity independently and uniformly from the
    integers 0..cap_max (milli-units). Terminals are placeholders (0, n-1).
    """
    if cap_max < 0:
        raise TopologyConfigError(f"cap_max must be non-negative, got {cap_max}")
    rng = np.random.default_rng(seed)
    edges: List[ChannelEdge] = []
    for u, v in sorted(tuple(sorted(edge)) for edge in skeleton.graph.edges()):
        forward = int(rng.integers(0, cap_max, endpoint=True))
        backward = int(rng.integers(0, cap_max, endpoint=True))
        edges.append(ChannelEdge(u, v, forward))
        edges.append(ChannelEdge(v, u, backward))
    n = skeleton.num_nodes
    return FlowNetwork(n, edges, 0, n - 1)


def generate_network(cfg: TopologyConfig) -> FlowNetwork:
    """Skeleton plus capacities, both from cfg.seed."""
    return assign_capacities(watts_strogatz(cfg), cfg.cap_max, cfg.seed)


def sample_workload(net: FlowNetwork, cfg: WorkloadConfig) -> List[Demand]:
    """Uniform distinct (source, sink) pairs with demands uniform on 0..vol_max."""
    n = net.num_nodes
    rng = np.random.default_rng(cfg.seed)
    demands: List[Demand] = []
    for _ in range(cfg.num_flows):
        source = int(rng.integers(n))
        sink = int(rng.integers(n - 1))
        if sink >= source:
            sink += 1
        amount = int(rng.integers(0, cfg.vol_max, endpoint=True))
        demands.append(Demand(source, sink, amount))
    return demands
