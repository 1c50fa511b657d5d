"""
Oracle - Edmonds-Karp maximum flow used as an independent reference.

Shares nothing with the push-relabel code beyond the FlowNetwork reader.
"""

from collections import deque
from typing import Dict, List, Mapping, Optional, Tuple

from .amount import Amount, NodeId
from .network import FlowNetwork


def _bfs_parents(
    residual: Dict[NodeId, Dict[NodeId, Amount]],
    source: NodeId,
    sink: NodeId,
) -> Optional[Dict[NodeId, NodeId]]:
    parent: Dict[NodeId, NodeId] = {source: source}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in sorted(residual[u]):
            if v not in parent and residual[u][v] > 0:
                parent[v] = u
                if v == sink:
                    return parent
                queue.append(v)
    return None


def edmonds_karp(
    net: FlowNetwork,
    source: Optional[NodeId] = None,
    sink: Optional[NodeId] = None,
    capacities: Optional[Mapping[Tuple[NodeId, NodeId], Amount]] = None,
) -> Amount:
    """
    Maximum s-t flow value by shortest augmenting paths.

    Args:
        net: Network providing the node set and (by default) capacities
        source: Overrides net.source
        sink: Overrides net.sink
        capacities: Overrides the capacities of net (same key space)

    Returns:
        The maximum flow value in milli-units
    """
    s = net.source if source is None else source
    t = net.sink if sink is None else sink
    caps = net.capacities if capacities is None else capacities

    residual: Dict[NodeId, Dict[NodeId, Amount]] = {u: {} for u in range(net.num_nodes)}
    for (u, v), c in caps.items():
        residual[u][v] = residual[u].get(v, 0) + c
        residual[v].setdefault(u, 0)

    total = 0
    while True:
        parent = _bfs_parents(residual, s, t)
        if parent is None:
            return total

        path: List[Tuple[NodeId, NodeId]] = []
        v = t
        while v != s:
            u = parent[v]
            path.append((u, v))
            v = u
        bottleneck = min(residual[u][v] for u, v in path)

        for u, v in path:
            residual[u][v] -= bottleneck
            residual[v][u] += bottleneck
        total += bottleneck
