"""
Validators - Runtime invariant checks for single- and multi-commodity flows.
Used after individual operations when invariant checking is enabled, and by tests.
"""

from typing import TYPE_CHECKING, Dict, Iterable, List, Sequence, Tuple

from .amount import Amount, NodeId
from .logger import setup_logger
from .network import FlowAssignment, FlowClass, FlowNetwork, classify_flow

if TYPE_CHECKING:
    from .actors import NodeActor
    from .locking import ConcurrentFlowSolver


logger = setup_logger("pcnflow.validators")

Pair = Tuple[NodeId, NodeId]


class InvariantViolation(AssertionError):
    """Raised when a checked flow invariant does not hold."""
    pass


def _fail(message: str) -> None:
    logger.error(message)
    raise InvariantViolation(message)


def check_preflow(net: FlowNetwork, flow: FlowAssignment) -> None:
    """Raise unless flow is a pre-flow (or feasible flow) on net."""
    kind = classify_flow(net, flow)
    if kind not in (FlowClass.PRE, FlowClass.FEASIBLE):
        _fail(f"Flow is {kind.value}, expected a pre-flow on {net!r}")


def check_height_function(net: FlowNetwork, flow: FlowAssignment, heights: Sequence[int]) -> None:
    """Raise unless h(u) <= h(v) + 1 on every residual edge and 0 <= h <= 2|V| - 1."""
    limit = 2 * net.num_nodes - 1
    for u, h_u in enumerate(heights):
        if not 0 <= h_u <= limit:
            _fail(f"Height {h_u} of node {u} outside [0, {limit}]")
    for u in range(net.num_nodes):
        for v in net.neighbors(u):
            if net.capacity(u, v) - flow.get(u, v) > 0 and heights[u] > heights[v] + 1:
                _fail(f"Residual edge ({u}, {v}) spans heights {heights[u]} -> {heights[v]}")


def check_feasible(net: FlowNetwork, flow: FlowAssignment, value: Amount) -> None:
    """Raise unless flow is feasible on net and delivers exactly value to the sink."""
    kind = classify_flow(net, flow)
    if kind is not FlowClass.FEASIBLE:
        _fail(f"Flow is {kind.value}, expected a feasible flow on {net!r}")
    if flow.excess(net.sink) != value:
        _fail(f"Flow delivers {flow.excess(net.sink)} to the sink, expected {value}")


def _pair_totals(solver: "ConcurrentFlowSolver", u: NodeId, v: NodeId) -> Tuple[Amount, Amount]:
    """(F(u,v), Σ_i max(0, f_i(u,v))) recomputed from per-commodity flows."""
    total = 0
    locked = 0
    for commodity in solver.commodities:
        value = commodity.flow.get(u, v)
        total += value
        if value > 0:
            locked += value
    return total, locked


def check_locked_pair(solver: "ConcurrentFlowSolver", u: NodeId, v: NodeId) -> None:
    """
    Check the total capacity constraint and lock-table agreement on (u,v) and (v,u).

    F(u,v) ≤ L(u,v) = Σ_i max(0, f_i(u,v)) ≤ c(u,v) in both directions.
    """
    for a, b in ((u, v), (v, u)):
        total, locked = _pair_totals(solver, a, b)
        cached = solver.locks.total(a, b)
        capacity = solver.net.capacity(a, b)
        if cached != locked:
            _fail(f"Lock table L({a},{b})={cached} disagrees with recomputed {locked}")
        if total > locked:
            _fail(f"F({a},{b})={total} exceeds L({a},{b})={locked}")
        if locked > capacity:
            _fail(f"L({a},{b})={locked} exceeds capacity {capacity}")


def check_commodity_nodes(solver: "ConcurrentFlowSolver", index: int, nodes: Iterable[NodeId]) -> None:
    """Cached excess matches the flow and stays non-negative outside the commodity's terminals."""
    commodity = solver.commodities[index]
    for node in nodes:
        cached = commodity.flow.excess(node)
        if cached != commodity.flow.recomputed_excess(node):
            _fail(f"Commodity {index}: cached excess at {node} is stale")
        if node in (commodity.pre_source, commodity.sink):
            continue
        if cached < 0:
            _fail(f"Commodity {index}: negative excess {cached} at node {node}")


def verify_locking_state(solver: "ConcurrentFlowSolver") -> None:
    """Full sweep of every invariant of the capacity-locking state."""
    pairs = set(solver.net.capacities)
    for commodity in solver.commodities:
        for u, v, _ in commodity.flow.pairs():
            pairs.add((u, v))
            pairs.add((v, u))
    pairs.update(solver.locks.pairs())
    for u, v in sorted(pairs):
        check_locked_pair(solver, u, v)

    for index, commodity in enumerate(solver.commodities):
        nodes = set(commodity.flow.nodes_with_excess())
        for u, v, _ in commodity.flow.pairs():
            nodes.update((u, v))
        check_commodity_nodes(solver, index, nodes)
        for node, height in commodity.heights.items():
            if height < 0 or height > solver.height_cap:
                _fail(f"Commodity {index}: height {height} at node {node} out of range")


def total_flow(solver: "ConcurrentFlowSolver") -> Dict[Pair, Amount]:
    """F(u,v) over every ordered pair with positive total flow."""
    totals: Dict[Pair, Amount] = {}
    for commodity in solver.commodities:
        for (u, v), value in commodity.flow.directed().items():
            totals[(u, v)] = totals.get((u, v), 0) + value
            totals[(v, u)] = totals.get((v, u), 0) - value
    return {pair: value for pair, value in sorted(totals.items()) if value > 0}


def verify_channel_agreement(actors: List["NodeActor"]) -> None:
    """Both endpoints of every channel hold the same flow and lock values."""
    for actor in actors:
        for neighbor, channel in actor.channels.items():
            mirror = actors[neighbor].channels[actor.id]
            if channel.locked_out != mirror.locked_in or channel.locked_in != mirror.locked_out:
                _fail(f"Channel {actor.id}-{neighbor}: lock views disagree")
            commodities = set(channel.flows) | set(mirror.flows)
            for index in commodities:
                if channel.flows.get(index, 0) != -mirror.flows.get(index, 0):
                    _fail(f"Channel {actor.id}-{neighbor}: commodity {index} flow views disagree")
