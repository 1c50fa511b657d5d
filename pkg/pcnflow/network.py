"""
Network - Capacitated channel graph, flow assignments and flow predicates.

A FlowNetwork is the directed model F = (G, c, s, t). Flows are stored once
per unordered node pair and read skew-symmetrically.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, Iterator, List, Mapping, NamedTuple, Tuple, Union

import networkx as nx

from .amount import Amount, NodeId
from .logger import setup_logger


logger = setup_logger("pcnflow.network")

Pair = Tuple[NodeId, NodeId]


class NetworkValidationError(ValueError):
    """Raised when a graph or network violates its structural invariants."""
    pass


class FlowPreconditionError(RuntimeError):
    """Raised when a flow operation is invoked outside its precondition."""
    pass


@dataclass(frozen=True, order=True)
class ChannelEdge:
    """A directed payment channel with its capacity in milli-units."""

    source: NodeId
    target: NodeId
    capacity: Amount


class FlowClass(Enum):
    NOT_PSEUDO = "not_pseudo"
    PSEUDO = "pseudo"
    PRE = "pre"
    FEASIBLE = "feasible"


class FlowNetwork:
    """Directed capacitated graph with a source and a sink."""

    def __init__(
        self,
        num_nodes: int,
        edges: Iterable[ChannelEdge],
        source: NodeId,
        sink: NodeId,
    ):
        """
        Build and validate a flow network.

        Args:
            num_nodes: Size of the dense node set 0..num_nodes-1
            edges: Directed channels, at most one per ordered pair
            source: Source node s
            sink: Sink node t

        Raises:
            NetworkValidationError: On any invariant violation
        """
        if num_nodes < 2:
            raise NetworkValidationError(f"A flow network needs at least 2 nodes, got {num_nodes}")

        capacity: Dict[Pair, Amount] = {}
        for edge in edges:
            u, v = edge.source, edge.target
            if not (0 <= u < num_nodes and 0 <= v < num_nodes):
                raise NetworkValidationError(f"Edge ({u}, {v}) references a node outside 0..{num_nodes - 1}")
            if u == v:
                raise NetworkValidationError(f"Self-loop on node {u} is not allowed")
            if edge.capacity < 0:
                raise NetworkValidationError(f"Edge ({u}, {v}) has negative capacity {edge.capacity}")
            if (u, v) in capacity:
                raise NetworkValidationError(f"Parallel edge ({u}, {v}) is not allowed")
            capacity[(u, v)] = edge.capacity

        self._num_nodes = num_nodes
        self._capacity = capacity
        self._neighbors = self._build_neighbors(num_nodes, capacity)
        self._out: List[Tuple[NodeId, ...]] = self._build_out(num_nodes, capacity)
        self._source = source
        self._sink = sink
        self._check_terminals(source, sink)

    @staticmethod
    def _build_neighbors(num_nodes: int, capacity: Mapping[Pair, Amount]) -> List[Tuple[NodeId, ...]]:
        adjacent: List[set] = [set() for _ in range(num_nodes)]
        for u, v in capacity:
            adjacent[u].add(v)
            adjacent[v].add(u)
        return [tuple(sorted(nodes)) for nodes in adjacent]

    @staticmethod
    def _build_out(num_nodes: int, capacity: Mapping[Pair, Amount]) -> List[Tuple[NodeId, ...]]:
        out: List[List[NodeId]] = [[] for _ in range(num_nodes)]
        for u, v in capacity:
            out[u].append(v)
        return [tuple(sorted(targets)) for targets in out]

    def _check_terminals(self, source: NodeId, sink: NodeId) -> None:
        for name, node in (("source", source), ("sink", sink)):
            if not 0 <= node < self._num_nodes:
                raise NetworkValidationError(f"{name} {node} is not a node of the network")
        if source == sink:
            raise NetworkValidationError(f"source and sink must differ, both are {source}")

    @classmethod
    def _from_parts(
        cls,
        num_nodes: int,
        capacity: Dict[Pair, Amount],
        neighbors: List[Tuple[NodeId, ...]],
        out: List[Tuple[NodeId, ...]],
        source: NodeId,
        sink: NodeId,
    ) -> "FlowNetwork":
        net = cls.__new__(cls)
        net._num_nodes = num_nodes
        net._capacity = capacity
        net._neighbors = neighbors
        net._out = out
        net._source = source
        net._sink = sink
        net._check_terminals(source, sink)
        return net

    @property
    def num_nodes(self) -> int:
        """Number of nodes, ids 0..num_nodes-1."""
        return self._num_nodes

    @property
    def source(self) -> NodeId:
        """Source node s."""
        return self._source

    @property
    def sink(self) -> NodeId:
        """Sink node t."""
        return self._sink

    @property
    def capacities(self) -> Mapping[Pair, Amount]:
        """Read-only view of c restricted to E."""
        return self._capacity

    @property
    def edges(self) -> Tuple[ChannelEdge, ...]:
        """Directed channels sorted by (source, target)."""
        return tuple(ChannelEdge(u, v, c) for (u, v), c in sorted(self._capacity.items()))

    @property
    def num_edges(self) -> int:
        """Number of directed channels."""
        return len(self._capacity)

    def capacity(self, u: NodeId, v: NodeId) -> Amount:
        """c(u, v); zero for pairs outside E."""
        return self._capacity.get((u, v), 0)

    def has_edge(self, u: NodeId, v: NodeId) -> bool:
        """Whether (u, v) is a channel, even one of zero capacity."""
        return (u, v) in self._capacity

    def neighbors(self, u: NodeId) -> Tuple[NodeId, ...]:
        """Sorted nodes joined to u by an edge in either direction."""
        return self._neighbors[u]

    def out_neighbors(self, u: NodeId) -> Tuple[NodeId, ...]:
        """Sorted heads of the edges leaving u."""
        return self._out[u]

    def with_terminals(self, source: NodeId, sink: NodeId) -> "FlowNetwork":
        """Same graph and capacities with a different (s, t)."""
        return FlowNetwork._from_parts(
            self._num_nodes, self._capacity, self._neighbors, self._out, source, sink
        )

    def with_capacities(self, capacity: Mapping[Pair, Amount]) -> "FlowNetwork":
        """Same edge set with replaced capacities; pairs outside E are rejected."""
        updated = dict(self._capacity)
        for pair, value in capacity.items():
            if pair not in updated:
                raise NetworkValidationError(f"Pair {pair} is not an edge of the network")
            if value < 0:
                raise NetworkValidationError(f"Capacity of {pair} would become negative ({value})")
            updated[pair] = value
        return FlowNetwork._from_parts(
            self._num_nodes, updated, self._neighbors, self._out, self._source, self._sink
        )

    def consume(self, flow: "FlowAssignment") -> "FlowNetwork":
        """
        Decrement every edge capacity by the positive part of a committed flow.

        Raises:
            NetworkValidationError: If the flow exceeds a capacity
        """
        return self.with_capacities({
            (u, v): c - max(0, flow.get(u, v))
            for (u, v), c in self._capacity.items()
            if flow.get(u, v) > 0
        })

    def extended(self, extra_nodes: int, extra_edges: Iterable[ChannelEdge]) -> "FlowNetwork":
        """Copy with additional nodes appended after the existing ones."""
        edges = list(self.edges) + list(extra_edges)
        return FlowNetwork(self._num_nodes + extra_nodes, edges, self._source, self._sink)

    def to_dict(self) -> Dict[str, object]:
        """JSON graph format: {nodes, edges: [{from, to, capacity_milli}], source, sink}."""
        return {
            "nodes": self._num_nodes,
            "edges": [
                {"from": edge.source, "to": edge.target, "capacity_milli": edge.capacity}
                for edge in self.edges
            ],
            "source": self._source,
            "sink": self._sink,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "FlowNetwork":
        """
        Build a network from the JSON graph format.

        Raises:
            NetworkValidationError: On missing fields or invalid values
        """
        try:
            num_nodes = _as_int(data["nodes"], "nodes")
            edges = [
                ChannelEdge(
                    _as_int(item["from"], "from"),
                    _as_int(item["to"], "to"),
                    _as_int(item["capacity_milli"], "capacity_milli"),
                )
                for item in data["edges"]  # type: ignore[union-attr]
            ]
            source = _as_int(data["source"], "source")
            sink = _as_int(data["sink"], "sink")
        except KeyError as e:
            raise NetworkValidationError(f"Graph is missing field {e}")
        except TypeError as e:
            raise NetworkValidationError(f"Graph is malformed: {e}")
        return cls(num_nodes, edges, source, sink)

    def __repr__(self) -> str:
        return (
            f"FlowNetwork(nodes={self._num_nodes}, edges={len(self._capacity)}, "
            f"source={self._source}, sink={self._sink})"
        )


def _as_int(value: object, field: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise NetworkValidationError(f"Field {field!r} must be an integer, got {value!r}")
    return value


class FlowAssignment:
    """
    Skew-symmetric flow map with incrementally tracked excess.

    The stored value for pair (lo, hi) is f(lo, hi); f(hi, lo) is its negation.
    """

    __slots__ = ("_flow", "_excess")

    def __init__(self) -> None:
        self._flow: Dict[Pair, Amount] = {}
        self._excess: Dict[NodeId, Amount] = {}

    @classmethod
    def from_mapping(cls, mapping: Mapping[Pair, Amount]) -> "FlowAssignment":
        """
        Build an assignment from directed values {(u, v): f(u, v)}.

        Raises:
            NetworkValidationError: If both directions are given and are not negatives
        """
        assignment = cls()
        for (u, v), value in mapping.items():
            if u == v:
                raise NetworkValidationError(f"Flow on self-pair ({u}, {u}) is not allowed")
            reverse = mapping.get((v, u))
            if reverse is not None and reverse != -value:
                raise NetworkValidationError(
                    f"Skew symmetry violated: f({u},{v})={value}, f({v},{u})={reverse}"
                )
            if u < v or reverse is None:
                assignment.push(u, v, value)
        return assignment

    def get(self, u: NodeId, v: NodeId) -> Amount:
        """f(u, v)."""
        if u < v:
            return self._flow.get((u, v), 0)
        return -self._flow.get((v, u), 0)

    def excess(self, u: NodeId) -> Amount:
        """x_f(u), maintained incrementally."""
        return self._excess.get(u, 0)

    def push(self, u: NodeId, v: NodeId, delta: Amount) -> None:
        """f(u,v) += delta, f(v,u) -= delta, moving delta of excess from u to v."""
        if delta == 0:
            return
        if u < v:
            key, signed = (u, v), delta
        else:
            key, signed = (v, u), -delta
        value = self._flow.get(key, 0) + signed
        if value:
            self._flow[key] = value
        else:
            self._flow.pop(key, None)
        self._set_excess(u, self._excess.get(u, 0) - delta)
        self._set_excess(v, self._excess.get(v, 0) + delta)

    def _set_excess(self, u: NodeId, value: Amount) -> None:
        if value:
            self._excess[u] = value
        else:
            self._excess.pop(u, None)

    def pairs(self) -> Iterator[Tuple[NodeId, NodeId, Amount]]:
        """Yield (lo, hi, f(lo, hi)) for every pair carrying non-zero flow."""
        for (u, v), value in sorted(self._flow.items()):
            yield u, v, value

    def directed(self) -> Dict[Pair, Amount]:
        """Positive directed flows {(u, v): f(u, v) > 0}."""
        result: Dict[Pair, Amount] = {}
        for (u, v), value in self._flow.items():
            if value > 0:
                result[(u, v)] = value
            else:
                result[(v, u)] = -value
        return dict(sorted(result.items()))

    def nodes_with_excess(self) -> Iterator[NodeId]:
        """Nodes with non-zero excess, ascending."""
        return iter(sorted(self._excess))

    def recomputed_excess(self, u: NodeId) -> Amount:
        """Σ_v f(v,u) − Σ_v f(u,v) from the stored flows, ignoring the cache."""
        total = 0
        for (a, b), value in self._flow.items():
            if b == u:
                total += value
            elif a == u:
                total -= value
        return total

    def restrict(self, num_nodes: int) -> "FlowAssignment":
        """Copy without any pair that touches a node >= num_nodes."""
        restricted = FlowAssignment()
        for (u, v), value in sorted(self._flow.items()):
            if u < num_nodes and v < num_nodes:
                restricted.push(u, v, value)
        return restricted

    def copy(self) -> "FlowAssignment":
        """Independent copy of flows and cached excess."""
        clone = FlowAssignment()
        clone._flow = dict(self._flow)
        clone._excess = dict(self._excess)
        return clone

    def clear(self) -> None:
        self._flow.clear()
        self._excess.clear()

    def __len__(self) -> int:
        return len(self._flow)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FlowAssignment):
            return NotImplemented
        return self._flow == other._flow

    def __repr__(self) -> str:
        return f"FlowAssignment({self.directed()})"


def residual_capacity(net: FlowNetwork, f: FlowAssignment, u: NodeId, v: NodeId) -> Amount:
    """c_f(u, v) = c(u, v) − f(u, v)."""
    return net.capacity(u, v) - f.get(u, v)


def excess(f: FlowAssignment, u: NodeId) -> Amount:
    """x_f(u) = Σ_v f(v, u) − Σ_v f(u, v)."""
    return f.excess(u)


def classify_flow(
    net: FlowNetwork,
    f: Union[FlowAssignment, Mapping[Pair, Amount]],
) -> FlowClass:
    """
    Classify f as not-a-pseudo-flow, pseudo-flow, pre-flow or feasible flow.

    Raw directed mappings are checked for skew symmetry first.
    """
    if not isinstance(f, FlowAssignment):
        try:
            f = FlowAssignment.from_mapping(f)
        except NetworkValidationError:
            return FlowClass.NOT_PSEUDO

    for u, v, value in f.pairs():
        if value > net.capacity(u, v) or -value > net.capacity(v, u):
            return FlowClass.NOT_PSEUDO

    terminals = (net.source, net.sink)
    nodes = set(f.nodes_with_excess())
    for u, v, _ in f.pairs():
        nodes.update((u, v))
    non_negative = True
    conserved = True
    for node in nodes:
        value = f.excess(node)
        if value != f.recomputed_excess(node):
            return FlowClass.NOT_PSEUDO
        if node in terminals:
            continue
        if value < 0:
            non_negative = False
        if value != 0:
            conserved = False

    if conserved:
        return FlowClass.FEASIBLE
    if non_negative:
        return FlowClass.PRE
    return FlowClass.PSEUDO


def with_pre_source(net: FlowNetwork, d: Amount) -> FlowNetwork:
    """
    Attach a pre-source s' with a single edge (s', s) of capacity d.

    The new node gets id net.num_nodes and becomes the source; net is unchanged.

    Raises:
        NetworkValidationError: If d is negative
    """
    if d < 0:
        logger.error(f"Rejected negative demand {d} for pre-source construction")
        raise NetworkValidationError(f"Demand must be non-negative, got {d}")
    pre_source = net.num_nodes
    extended = net.extended(1, [ChannelEdge(pre_source, net.source, d)])
    return extended.with_terminals(pre_source, net.sink)


def cancel_cycles(f: FlowAssignment) -> FlowAssignment:
    """
    Copy of f with every directed flow cycle cancelled.

    Each cycle loses its smallest value on all of its edges, so excesses are
    unchanged and the positive part of the result never exceeds that of f.
    """
    graph = nx.DiGraph()
    for (u, v), value in f.directed().items():
        graph.add_edge(u, v, flow=value)

    result = f.copy()
    cancelled = 0
    while True:
        try:
            cycle = nx.find_cycle(graph)
        except nx.NetworkXNoCycle:
            break
        amount = min(graph[u][v]["flow"] for u, v in cycle)
        for u, v in cycle:
            result.push(v, u, amount)
            remaining = graph[u][v]["flow"] - amount
            if remaining:
                graph[u][v]["flow"] = remaining
            else:
                graph.remove_edge(u, v)
        cancelled += 1
    if cancelled:
        logger.debug("cancelled %s flow cycles", cancelled)
    return result


def decompose_paths(
    f: FlowAssignment, source: NodeId, sink: NodeId
) -> List[Tuple[Tuple[NodeId, ...], Amount]]:
    """
    Split an acyclic source-to-sink flow into paths with their amounts.

    Raises:
        FlowPreconditionError: If a walk from the source stalls or revisits a node
    """
    remaining = f.directed()
    out: Dict[NodeId, List[NodeId]] = {}
    for u, v in remaining:
        out.setdefault(u, []).append(v)

    paths: List[Tuple[Tuple[NodeId, ...], Amount]] = []
    while any(remaining.get((source, v), 0) > 0 for v in out.get(source, ())):
        path = [source]
        seen = {source}
        while path[-1] != sink:
            u = path[-1]
            v = next((w for w in out.get(u, ()) if remaining.get((u, w), 0) > 0), None)
            if v is None:
                raise FlowPreconditionError(f"Flow walk from {source} stalls at {u}")
            if v in seen:
                raise FlowPreconditionError(f"Flow walk from {source} revisits {v}; cancel cycles first")
            seen.add(v)
            path.append(v)
        hops = list(zip(path, path[1:]))
        amount = min(remaining[hop] for hop in hops)
        for hop in hops:
            remaining[hop] -= amount
        paths.append((tuple(path), amount))
    return paths


class Demand(NamedTuple):
    """One payment request (s_i, t_i, d_i)."""

    source: NodeId
    sink: NodeId
    amount: Amount
