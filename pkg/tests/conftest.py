"""
Shared fixtures: the four-node example channel network and a factory for
small random networks.
"""

import networkx as nx
import numpy as np
import pytest  # type: ignore[reportMissingImports]

from pcnflow.network import ChannelEdge, FlowAssignment, FlowNetwork, decompose_paths


S, V2, V3, T = 0, 1, 2, 3

DIAMOND_CAPACITIES = {
    (S, V2): 3000,
    (S, V3): 2000,
    (V2, V3): 2000,
    (V2, T): 1000,
    (V3, T): 3000,
}


def build_diamond() -> FlowNetwork:
    return FlowNetwork(4, [ChannelEdge(u, v, c) for (u, v), c in DIAMOND_CAPACITIES.items()], S, T)


def build_random_network(seed: int, n: int = 6, density: float = 0.5, cap_max: int = 5000) -> FlowNetwork:
    """Dense-ish random directed network with terminals (0, n-1)."""
    rng = np.random.default_rng(seed)
    edges = []
    for u in range(n):
        for v in range(n):
            if u != v and rng.random() < density:
                edges.append(ChannelEdge(u, v, int(rng.integers(0, cap_max, endpoint=True))))
    return FlowNetwork(n, edges, 0, n - 1)


def is_acyclic(flow: FlowAssignment) -> bool:
    """Whether the positive part of flow has no directed cycle."""
    return nx.is_directed_acyclic_graph(nx.DiGraph(list(flow.directed())))


def path_capacity(flow: FlowAssignment, source: int, sink: int) -> int:
    """Capacity held by the s-t paths of an acyclic flow: amount times hops, summed."""
    return sum(amount * (len(path) - 1) for path, amount in decompose_paths(flow, source, sink))


@pytest.fixture
def diamond_net() -> FlowNetwork:
    """Fixture providing the four-node example network (max flow 4)."""
    return build_diamond()


@pytest.fixture
def random_network():
    """Fixture providing the random network factory."""
    return build_random_network


@pytest.fixture(autouse=True)
def _quiet_settings(monkeypatch: pytest.MonkeyPatch):
    """Keep tests independent of a developer's PCNFLOW_* environment."""
    for key in (
        "PCNFLOW_STEP_BUDGET",
        "PCNFLOW_EVENT_BUDGET",
        "PCNFLOW_MAX_WORKERS",
        "PCNFLOW_CHECK_INVARIANTS",
    ):
        monkeypatch.delenv(key, raising=False)
