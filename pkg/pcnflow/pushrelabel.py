"""
Push-relabel - Sequential single-commodity maximum flow and feasible flow.

Active nodes are processed FIFO by default; admissible push targets are
scanned in ascending NodeId order through a current-arc pointer.
"""

from collections import deque
from typing import Deque, List, Optional, Sequence, Set, Tuple

from . import validators
from .amount import Amount, NodeId
from .logger import setup_logger
from .network import (
    Demand,
    FlowAssignment,
    FlowNetwork,
    FlowPreconditionError,
    cancel_cycles,
    with_pre_source,
)
from .outcomes import Infeasible, Outcome, Success
from .settings import Settings


logger = setup_logger("pcnflow.pushrelabel")

SELECTION_RULES = ("fifo", "highest_label")


class PushRelabelSolver:
    """Solver state: network, pre-flow, height labels and the active set."""

    def __init__(self, net: FlowNetwork, selection: str = "fifo", check_invariants: Optional[bool] = None):
        """
        Initialize heights and saturate the source's outgoing edges.

        Args:
            net: The flow network to solve
            selection: Active-node discipline, "fifo" or "highest_label"
            check_invariants: Re-check the pre-flow and height function after every
                push and relabel, from settings by default
        """
        if selection not in SELECTION_RULES:
            raise ValueError(f"Unknown selection rule {selection!r}; expected one of {SELECTION_RULES}")

        self.net = net
        self.selection = selection
        self.check_invariants = Settings.check_invariants() if check_invariants is None else check_invariants
        self.flow = FlowAssignment()
        self.heights: List[int] = [0] * net.num_nodes
        self.heights[net.source] = net.num_nodes
        self.pushes = 0
        self.relabels = 0

        self._capacity = net.capacities
        self._current: List[int] = [0] * net.num_nodes
        self._active: Deque[NodeId] = deque()
        self._queued: Set[NodeId] = set()
        self._height_limit = 2 * net.num_nodes - 1

        s = net.source
        for v in net.out_neighbors(s):
            c = net.capacity(s, v)
            if c > 0:
                self.flow.push(s, v, c)
        for v in net.out_neighbors(s):
            if self.flow.excess(v) > 0:
                self._activate(v)

    @property
    def active(self) -> Tuple[NodeId, ...]:
        """Nodes with positive excess, in processing order."""
        return tuple(self._active)

    def residual(self, u: NodeId, v: NodeId) -> Amount:
        """c(u,v) - f(u,v)."""
        return self._capacity.get((u, v), 0) - self.flow.get(u, v)

    def _activate(self, v: NodeId) -> None:
        if v in (self.net.source, self.net.sink) or v in self._queued:
            return
        self._queued.add(v)
        self._active.append(v)

    def _deactivate(self, u: NodeId) -> None:
        if u in self._queued:
            self._queued.discard(u)
            self._active.remove(u)

    def push(self, u: NodeId, v: NodeId) -> Amount:
        """
        Push δ = min(x_f(u), c_f(u,v)) from u to v.

        Raises:
            FlowPreconditionError: Unless x_f(u) > 0, c_f(u,v) > 0 and h(u) = h(v) + 1
        """
        x = self.flow.excess(u)
        r = self.residual(u, v)
        if x <= 0:
            raise FlowPreconditionError(f"push({u}, {v}): node {u} has no excess ({x})")
        if r <= 0:
            raise FlowPreconditionError(f"push({u}, {v}): edge has no residual capacity")
        if self.heights[u] != self.heights[v] + 1:
            raise FlowPreconditionError(
                f"push({u}, {v}): heights {self.heights[u]} and {self.heights[v]} are not one level apart"
            )

        delta = min(x, r)
        self.flow.push(u, v, delta)
        self.pushes += 1
        self._activate(v)
        if self.flow.excess(u) == 0:
            self._deactivate(u)
        self._check()
        logger.debug("push %s->%s delta=%s", u, v, delta)
        return delta

    def relabel(self, u: NodeId) -> int:
        """
        Raise h(u) to 1 + min height over residual out-neighbors.

        Raises:
            FlowPreconditionError: If u has no excess, an admissible push exists,
                or u has no residual out-edge
        """
        if self.flow.excess(u) <= 0:
            raise FlowPreconditionError(f"relabel({u}): node has no excess")

        h_u = self.heights[u]
        lowest = None
        for v in self.net.neighbors(u):
            if self.residual(u, v) > 0:
                if h_u > self.heights[v]:
                    raise FlowPreconditionError(f"relabel({u}): admissible push towards {v} exists")
                if lowest is None or self.heights[v] < lowest:
                    lowest = self.heights[v]
        if lowest is None:
            raise FlowPreconditionError(f"relabel({u}): node has no residual out-edge")

        new_height = lowest + 1
        if new_height > self._height_limit:
            raise RuntimeError(f"relabel({u}): height {new_height} exceeds bound {self._height_limit}")
        self.heights[u] = new_height
        self.relabels += 1
        self._check()
        logger.debug("relabel %s: %s -> %s", u, h_u, new_height)
        return new_height

    def _check(self) -> None:
        if self.check_invariants:
            validators.check_preflow(self.net, self.flow)
            validators.check_height_function(self.net, self.flow, self.heights)

    def discharge(self, u: NodeId) -> None:
        """Push and relabel u until its excess is gone."""
        neighbors = self.net.neighbors(u)
        heights = self.heights
        while self.flow.excess(u) > 0:
            index = self._current[u]
            if index >= len(neighbors):
                self.relabel(u)
                self._current[u] = 0
                continue
            v = neighbors[index]
            if self.residual(u, v) > 0 and heights[u] == heights[v] + 1:
                self.push(u, v)
            else:
                self._current[u] = index + 1

    def _next_active(self) -> NodeId:
        if self.selection == "fifo":
            u = self._active.popleft()
        else:
            u = max(self._active, key=lambda node: (self.heights[node], -node))
            self._active.remove(u)
        self._queued.discard(u)
        return u

    def run(self) -> Tuple[FlowAssignment, Amount]:
        """Process active nodes until none remain; returns (flow, value at sink)."""
        while self._active:
            self.discharge(self._next_active())
        return self.flow, self.flow.excess(self.net.sink)


def initialize(net: FlowNetwork, selection: str = "fifo") -> PushRelabelSolver:
    """Initial solver state with s's outgoing edges saturated."""
    return PushRelabelSolver(net, selection=selection)


def max_flow(net: FlowNetwork, selection: str = "fifo") -> Tuple[FlowAssignment, Amount]:
    """
    Maximum s-t flow.

    Returns:
        The final (feasible) flow assignment and its value x_f(t)
    """
    solver = PushRelabelSolver(net, selection=selection)
    flow, value = solver.run()
    logger.debug(
        f"max_flow on {net!r}: value={value} pushes={solver.pushes} relabels={solver.relabels}"
    )
    return flow, value


def feasible_flow(net: FlowNetwork, d: Amount) -> Outcome:
    """
    Find a flow of exactly d from net.source to net.sink.

    Runs max-flow on the pre-source extension, so at most d can ever leave s.
    Flow cycles left behind by push-relabel are cancelled before returning, so
    a committed flow holds no channel capacity beyond its s-t paths.

    Returns:
        Success with the flow restricted to the original edges, or Infeasible
        carrying the largest deliverable amount
    """
    extended = with_pre_source(net, d)
    flow, value = max_flow(extended)
    if value == d:
        return Success(delivered=d, flow=cancel_cycles(flow.restrict(net.num_nodes)))
    return Infeasible(delivered=value)


def sequential_batch_state(
    net: FlowNetwork, demands: Sequence[Demand]
) -> Tuple[List[Outcome], FlowNetwork]:
    """
    Route demands one after another, each on what the previous ones left.

    Returns:
        The per-demand outcomes and the network with committed capacity removed
    """
    current = net
    outcomes: List[Outcome] = []
    for index, (source, sink, amount) in enumerate(demands):
        outcome = feasible_flow(current.with_terminals(source, sink), amount)
        if outcome.ok:
            current = current.consume(outcome.flow)
        outcomes.append(outcome)
        logger.debug(
            f"sequential demand {index} {source}->{sink} amount={amount}: "
            f"{'success' if outcome.ok else 'infeasible'}",
            extra={"commodity": index},
        )
    return outcomes, current


def sequential_batch(net: FlowNetwork, demands: Sequence[Demand]) -> List[Outcome]:
    """Per-demand outcomes; successes consume capacity, failures roll back."""
    outcomes, _ = sequential_batch_state(net, demands)
    return outcomes
