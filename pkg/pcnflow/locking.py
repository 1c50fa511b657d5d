"""
Capacity locking - Concurrent multi-commodity push-relabel.

Each commodity runs its own push-relabel instance over shared channels.
Positive flow of any commodity on (u,v) locks that much of c(u,v) for
everyone else; a commodity may always undo its own flow, since doing so
releases its own locks.

    c_i(u,v) = c(u,v) - L(u,v) + max(0, f_i(v,u))
    L(u,v)   = Σ_j max(0, f_j(u,v))

Commodity i gets pre-source n+i with the single edge (n+i, s_i) of capacity
d_i, saturated at start; its height is fixed at n+1.
"""

from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, Iterator, List, Optional, Sequence, Set, Tuple

from . import validators
from .amount import Amount, CommodityId, NodeId
from .logger import setup_logger
from .network import (
    ChannelEdge,
    Demand,
    FlowAssignment,
    FlowNetwork,
    FlowPreconditionError,
    NetworkValidationError,
    cancel_cycles,
)
from .outcomes import Infeasible, Outcome, Success
from .settings import Settings


logger = setup_logger("pcnflow.locking")

Pair = Tuple[NodeId, NodeId]


class BudgetExhaustedError(RuntimeError):
    """Raised when a solve exceeds its operation budget."""
    pass


@dataclass(frozen=True)
class CommittedOp:
    """One applied locked push or relabel, in commit order."""

    kind: str
    commodity: CommodityId
    u: NodeId
    v: Optional[NodeId] = None
    amount: Amount = 0
    height: int = 0

    def to_dict(self) -> Dict[str, object]:
        data: Dict[str, object] = {"kind": self.kind, "commodity": self.commodity, "node": self.u}
        if self.kind == "push":
            data.update({"to": self.v, "amount_milli": self.amount})
        else:
            data["height"] = self.height
        return data


@dataclass
class Commodity:
    """Per-commodity push-relabel state."""

    index: CommodityId
    source: NodeId
    sink: NodeId
    demand: Amount
    pre_source: NodeId
    flow: FlowAssignment = field(default_factory=FlowAssignment)
    heights: Dict[NodeId, int] = field(default_factory=dict)

    def height(self, u: NodeId) -> int:
        """h_i(u); unlabelled nodes sit at 0."""
        return self.heights.get(u, 0)

    @property
    def delivered(self) -> Amount:
        """x_i(t_i)."""
        return self.flow.excess(self.sink)


class LockTable:
    """L(u,v) per ordered pair, kept current by max-delta updates."""

    def __init__(self) -> None:
        self._locked: Dict[Pair, Amount] = {}

    def total(self, u: NodeId, v: NodeId) -> Amount:
        """L(u, v)."""
        return self._locked.get((u, v), 0)

    def _adjust(self, key: Pair, delta: Amount) -> None:
        if delta == 0:
            return
        value = self._locked.get(key, 0) + delta
        if value:
            self._locked[key] = value
        else:
            self._locked.pop(key, None)

    def shift(self, u: NodeId, v: NodeId, before: Amount, after: Amount) -> None:
        """Account for one commodity's f(u,v) moving from before to after."""
        self._adjust((u, v), max(0, after) - max(0, before))
        self._adjust((v, u), max(0, -after) - max(0, -before))

    def pairs(self) -> Iterator[Pair]:
        """Ordered pairs holding a positive lock, sorted."""
        return iter(sorted(self._locked))

    def as_dict(self) -> Dict[Pair, Amount]:
        return dict(sorted(self._locked.items()))

    @staticmethod
    def recompute(flows: Sequence[FlowAssignment]) -> Dict[Pair, Amount]:
        """L from scratch over the given per-commodity flows."""
        locked: Dict[Pair, Amount] = {}
        for flow in flows:
            for pair, value in flow.directed().items():
                locked[pair] = locked.get(pair, 0) + value
        return dict(sorted(locked.items()))


class ConcurrentFlowSolver:
    """Shared state of k commodities routed concurrently over one network."""

    def __init__(
        self,
        net: FlowNetwork,
        demands: Sequence[Demand],
        step_budget: Optional[int] = None,
        check_invariants: Optional[bool] = None,
        record: bool = False,
        settle_completed: bool = False,
    ):
        """
        Build the extended network and saturate each commodity's pre-source edge.

        Args:
            net: Channel network; its own terminals are ignored
            demands: (s_i, t_i, d_i) per commodity
            step_budget: Maximum operations before BudgetExhaustedError
            check_invariants: Re-check the touched channel after every operation
            record: Keep the list of committed operations
            settle_completed: Cancel a commodity's flow cycles, and release their
                locks, as soon as its whole demand reaches the sink

        Raises:
            NetworkValidationError: On invalid endpoints or a negative demand
        """
        n = net.num_nodes
        for index, (source, sink, amount) in enumerate(demands):
            for node in (source, sink):
                if not 0 <= node < n:
                    raise NetworkValidationError(f"Commodity {index}: node {node} out of range")
            if source == sink:
                raise NetworkValidationError(f"Commodity {index}: source and sink are both {source}")
            if amount < 0:
                raise NetworkValidationError(f"Commodity {index}: negative demand {amount}")

        self.base = net
        self.num_original = n
        self.net = net.extended(
            len(demands),
            [ChannelEdge(n + i, d.source, d.amount) for i, d in enumerate(demands)],
        )
        self.height_cap = 2 * (n + 1)
        self.pre_source_height = n + 1
        self.step_budget = Settings.step_budget() if step_budget is None else step_budget
        self.check_invariants = Settings.check_invariants() if check_invariants is None else check_invariants
        self.record = record
        self.settle_completed = settle_completed
        self.operations: List[CommittedOp] = []
        self.steps = 0

        self.locks = LockTable()
        self.commodities: List[Commodity] = []
        self._queues: List[Deque[NodeId]] = []
        self._queued: List[Set[NodeId]] = []
        self._parked: List[Set[NodeId]] = []
        self._current: List[Dict[NodeId, int]] = []

        for index, (source, sink, amount) in enumerate(demands):
            pre_source = n + index
            commodity = Commodity(
                index=index,
                source=source,
                sink=sink,
                demand=amount,
                pre_source=pre_source,
                heights={pre_source: self.pre_source_height},
            )
            self.commodities.append(commodity)
            self._queues.append(deque())
            self._queued.append(set())
            self._parked.append(set())
            self._current.append({})
            if amount > 0:
                commodity.flow.push(pre_source, source, amount)
                self.locks.shift(pre_source, source, 0, amount)
                self._activate(index, source)

        logger.debug(f"concurrent solver over {net!r} with {len(demands)} commodities")

    @property
    def num_commodities(self) -> int:
        """Number of commodities k."""
        return len(self.commodities)

    def active(self, i: CommodityId) -> Tuple[NodeId, ...]:
        """Queued active nodes of commodity i, front first."""
        return tuple(self._queues[i])

    def parked(self, i: CommodityId) -> Tuple[NodeId, ...]:
        """Nodes of commodity i waiting at the height cap."""
        return tuple(sorted(self._parked[i]))

    def residual_capacity(self, i: CommodityId, u: NodeId, v: NodeId) -> Amount:
        """c_i(u,v) = c(u,v) - L(u,v) + max(0, f_i(v,u))."""
        own_back = self.commodities[i].flow.get(v, u)
        return self.net.capacity(u, v) - self.locks.total(u, v) + max(0, own_back)

    def _activate(self, i: CommodityId, v: NodeId) -> None:
        commodity = self.commodities[i]
        if v in (commodity.pre_source, commodity.sink) or v in self._queued[i]:
            return
        if commodity.flow.excess(v) <= 0:
            return
        self._parked[i].discard(v)
        self._queued[i].add(v)
        self._queues[i].append(v)

    def _deactivate(self, i: CommodityId, u: NodeId) -> None:
        if u not in self._queued[i]:
            return
        self._queued[i].discard(u)
        queue = self._queues[i]
        if queue and queue[0] == u:
            queue.popleft()
        else:
            queue.remove(u)

    def _count_step(self) -> None:
        self.steps += 1
        if self.steps > self.step_budget:
            logger.error(f"Step budget of {self.step_budget} exhausted")
            raise BudgetExhaustedError(f"Concurrent solve exceeded {self.step_budget} operations")

    def locked_push(
        self, i: CommodityId, u: NodeId, v: NodeId, limit: Optional[Amount] = None
    ) -> Amount:
        """
        Push δ = min(x_i(u), c_i(u,v)) of commodity i from u to v.

        Args:
            limit: Further caps δ; used when replaying a remote acceptance

        Raises:
            FlowPreconditionError: Unless x_i(u) > 0, c_i(u,v) > 0 and h_i(u) > h_i(v)
        """
        commodity = self.commodities[i]
        x = commodity.flow.excess(u)
        r = self.residual_capacity(i, u, v)
        if x <= 0:
            raise FlowPreconditionError(f"locked_push[{i}]({u}, {v}): node {u} has no excess")
        if r <= 0:
            raise FlowPreconditionError(f"locked_push[{i}]({u}, {v}): no residual capacity")
        if commodity.height(u) <= commodity.height(v):
            raise FlowPreconditionError(
                f"locked_push[{i}]({u}, {v}): height {commodity.height(u)} "
                f"is not above {commodity.height(v)}"
            )
        delta = min(x, r)
        if limit is not None:
            if limit <= 0:
                raise FlowPreconditionError(f"locked_push[{i}]({u}, {v}): limit must be positive")
            delta = min(delta, limit)

        before = commodity.flow.get(u, v)
        commodity.flow.push(u, v, delta)
        self.locks.shift(u, v, before, before + delta)
        self._activate(i, v)
        if commodity.flow.excess(u) == 0:
            self._deactivate(i, u)
        self._count_step()
        if self.record:
            self.operations.append(CommittedOp("push", i, u, v, amount=delta))
        if self.check_invariants:
            validators.check_locked_pair(self, u, v)
            validators.check_commodity_nodes(self, i, (u, v))
        logger.debug("locked push %s->%s delta=%s", u, v, delta, extra={"commodity": i, "node": u})
        if self.settle_completed and v == commodity.sink and commodity.delivered == commodity.demand:
            self.settle(i)
        return delta

    def relabel_height(self, i: CommodityId, u: NodeId) -> Optional[int]:
        """1 + min h_i(v) over v with c_i(u,v) > 0, or None without residual edges."""
        commodity = self.commodities[i]
        lowest = None
        for v in self.net.neighbors(u):
            if self.residual_capacity(i, u, v) > 0:
                h_v = commodity.height(v)
                if lowest is None or h_v < lowest:
                    lowest = h_v
        return None if lowest is None else lowest + 1

    def admissible_target(self, i: CommodityId, u: NodeId) -> Optional[NodeId]:
        """Lowest-id v with c_i(u,v) > 0 and h_i(u) > h_i(v)."""
        commodity = self.commodities[i]
        h_u = commodity.height(u)
        for v in self.net.neighbors(u):
            if commodity.height(v) < h_u and self.residual_capacity(i, u, v) > 0:
                return v
        return None

    def _next_admissible(self, i: CommodityId, u: NodeId) -> Optional[NodeId]:
        neighbors = self.net.neighbors(u)
        commodity = self.commodities[i]
        h_u = commodity.height(u)
        current = self._current[i]
        index = current.get(u, 0)
        while index < len(neighbors):
            v = neighbors[index]
            if commodity.height(v) < h_u and self.residual_capacity(i, u, v) > 0:
                current[u] = index
                return v
            index += 1
        current[u] = index
        return None

    def relabel_commodity(self, i: CommodityId, u: NodeId, to_height: Optional[int] = None) -> int:
        """
        Raise h_i(u) to 1 + min height over residual neighbors.

        Args:
            to_height: Explicit target; must lie above the current height and not
                exceed the computed one

        Raises:
            FlowPreconditionError: If u has no excess, can still push, has no residual
                edge, or the new height exceeds the cap
        """
        commodity = self.commodities[i]
        if commodity.flow.excess(u) <= 0:
            raise FlowPreconditionError(f"relabel[{i}]({u}): node has no excess")
        if self.admissible_target(i, u) is not None:
            raise FlowPreconditionError(f"relabel[{i}]({u}): an admissible push exists")
        target = self.relabel_height(i, u)
        if target is None:
            raise FlowPreconditionError(f"relabel[{i}]({u}): node has no residual edge")

        h_u = commodity.height(u)
        if to_height is not None:
            if not h_u < to_height <= target:
                raise FlowPreconditionError(
                    f"relabel[{i}]({u}): requested height {to_height} outside ({h_u}, {target}]"
                )
            target = to_height
        if target > self.height_cap:
            raise FlowPreconditionError(f"relabel[{i}]({u}): height {target} exceeds cap {self.height_cap}")

        commodity.heights[u] = target
        self._current[i][u] = 0
        self._count_step()
        if self.record:
            self.operations.append(CommittedOp("relabel", i, u, height=target))
        logger.debug("relabel %s: %s -> %s", u, h_u, target, extra={"commodity": i, "node": u})
        return target

    def has_work(self, i: CommodityId) -> bool:
        """Whether commodity i has a queued active node."""
        queue = self._queues[i]
        flow = self.commodities[i].flow
        while queue and flow.excess(queue[0]) <= 0:
            self._queued[i].discard(queue.popleft())
        return bool(queue)

    def step(self, i: CommodityId) -> bool:
        """
        One unit of work on the front active node of commodity i.

        Pushes to the next admissible neighbor in ascending id order from the
        node's current arc, otherwise relabels; a node that could only be
        relabeled beyond the height cap is parked.

        Returns:
            False when commodity i had no active node
        """
        if not self.has_work(i):
            return False
        u = self._queues[i][0]
        v = self._next_admissible(i, u)
        if v is None:
            # Another commodity may have released locks behind the pointer.
            v = self.admissible_target(i, u)
        if v is not None:
            self._current[i][u] = self.net.neighbors(u).index(v)
            self.locked_push(i, u, v)
            return True
        target = self.relabel_height(i, u)
        if target is None or target > self.height_cap:
            self._deactivate(i, u)
            self._parked[i].add(u)
            logger.debug("parked node %s", u, extra={"commodity": i, "node": u})
            return True
        self.relabel_commodity(i, u)
        return True

    def _can_operate(self, i: CommodityId, u: NodeId) -> bool:
        if self.commodities[i].flow.excess(u) <= 0:
            return False
        if self.admissible_target(i, u) is not None:
            return True
        target = self.relabel_height(i, u)
        return target is not None and target <= self.height_cap

    def revive_parked(self) -> List[CommodityId]:
        """Re-queue parked nodes whose commodity can move again; returns those commodities."""
        revived: List[CommodityId] = []
        for i, parked in enumerate(self._parked):
            for u in sorted(parked):
                if self._can_operate(i, u):
                    parked.discard(u)
                    self._activate(i, u)
                    if i not in revived:
                        revived.append(i)
                elif self.commodities[i].flow.excess(u) <= 0:
                    parked.discard(u)
        return revived

    def rollback(self, i: CommodityId) -> None:
        """Drop all flow of commodity i and release its locks."""
        commodity = self.commodities[i]
        for u, v, value in list(commodity.flow.pairs()):
            self.locks.shift(u, v, value, 0)
        commodity.flow.clear()
        self._queues[i].clear()
        self._queued[i].clear()
        self._parked[i].clear()
        self._current[i].clear()
        logger.debug("rolled back", extra={"commodity": i})

    def settle(self, i: CommodityId) -> Amount:
        """
        Cancel the flow cycles of completed commodity i and release their locks.

        Returns:
            Capacity released, summed over directed edges

        Raises:
            FlowPreconditionError: If commodity i has not delivered its demand
        """
        commodity = self.commodities[i]
        if commodity.delivered != commodity.demand:
            raise FlowPreconditionError(
                f"settle[{i}]: delivered {commodity.delivered} of {commodity.demand}"
            )
        before = commodity.flow
        after = cancel_cycles(before)
        released = 0
        for (u, v), value in before.directed().items():
            remaining = after.get(u, v)
            if remaining != value:
                self.locks.shift(u, v, value, remaining)
                released += value - max(0, remaining)
        commodity.flow = after
        if self.check_invariants:
            validators.verify_locking_state(self)
        if released:
            logger.debug("settled, released %s", released, extra={"commodity": i})
        return released

    def finalize(self) -> List[Outcome]:
        """
        Per-commodity outcomes; infeasible commodities are rolled back.

        Success flows are returned with their cycles cancelled; the solver's own
        state is left as committed.
        """
        outcomes: List[Outcome] = []
        for i, commodity in enumerate(self.commodities):
            delivered = commodity.delivered
            if delivered == commodity.demand:
                flow = cancel_cycles(commodity.flow.restrict(self.num_original))
                outcomes.append(Success(delivered=delivered, flow=flow))
            else:
                outcomes.append(Infeasible(delivered=delivered))
                self.rollback(i)
        if self.check_invariants:
            validators.verify_locking_state(self)
        return outcomes

    def total_flow(self) -> Dict[Pair, Amount]:
        """F(u,v) > 0 over the original nodes."""
        n = self.num_original
        return {
            (u, v): value
            for (u, v), value in validators.total_flow(self).items()
            if u < n and v < n
        }


def residual_capacity_locked(
    solver: ConcurrentFlowSolver, i: CommodityId, u: NodeId, v: NodeId
) -> Amount:
    return solver.residual_capacity(i, u, v)


def locked_push(
    solver: ConcurrentFlowSolver, i: CommodityId, u: NodeId, v: NodeId, limit: Optional[Amount] = None
) -> Amount:
    return solver.locked_push(i, u, v, limit=limit)


def relabel_commodity(
    solver: ConcurrentFlowSolver, i: CommodityId, u: NodeId, to_height: Optional[int] = None
) -> int:
    return solver.relabel_commodity(i, u, to_height=to_height)
