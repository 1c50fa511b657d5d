"""
Simulation - Seeded discrete-event harness for the distributed protocol.

Messages between a fixed ordered pair are delivered in send order. Every
push an actor accepts and every relabel it makes is committed, at that
event, to a live ConcurrentFlowSolver; that solver is the global view the
invariant checks run against.
"""

import heapq
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import validators
from .actors import ChannelState, CommitLog, CommodityRole, Message, NodeActor, ProtocolError
from .amount import Amount, CommodityId, NodeId
from .locking import BudgetExhaustedError, CommittedOp, ConcurrentFlowSolver
from .logger import setup_logger
from .network import Demand, FlowAssignment, FlowNetwork
from .outcomes import Outcome
from .settings import Settings


logger = setup_logger("pcnflow.simulation")

DEFAULT_MAX_DELAY = 10


class ZeroLatency:
    """Every message arrives in the tick it was sent."""

    def sample(self) -> int:
        return 0

    def __repr__(self) -> str:
        return "ZeroLatency()"


class UniformLatency:
    """Delays drawn uniformly from the integers 1..max_delay."""

    def __init__(self, max_delay: int = DEFAULT_MAX_DELAY, seed: Optional[int] = None):
        if max_delay < 1:
            raise ValueError(f"max_delay must be at least 1, got {max_delay}")
        self.max_delay = max_delay
        self.seed = seed
        self._rng = np.random.default_rng(seed)

    def sample(self) -> int:
        return int(self._rng.integers(1, self.max_delay, endpoint=True))

    def __repr__(self) -> str:
        return f"UniformLatency(max_delay={self.max_delay}, seed={self.seed})"


LatencyModel = Union[ZeroLatency, UniformLatency]


class EventQueue:
    """Time-ordered message queue, FIFO per ordered (src, dst) pair."""

    def __init__(self, latency: LatencyModel):
        self.latency = latency
        self.now = 0
        self._heap: List[Tuple[int, int, Message]] = []
        self._seq = 0
        self._last: Dict[Tuple[NodeId, NodeId], int] = {}

    def schedule(self, message: Message) -> int:
        """Enqueue message and return its delivery time; never overtakes an earlier message on the same link."""
        key = (message.src, message.dst)
        at = max(self.now + self.latency.sample(), self._last.get(key, 0))
        self._last[key] = at
        heapq.heappush(self._heap, (at, self._seq, message))
        self._seq += 1
        return at

    def pop(self) -> Tuple[int, Message]:
        """Next message in delivery order; advances the clock."""
        at, _, message = heapq.heappop(self._heap)
        self.now = at
        return at, message

    def __len__(self) -> int:
        return len(self._heap)


@dataclass(frozen=True)
class TraceEvent:
    time: int
    message: Dict[str, object]
    digest: str

    def to_dict(self) -> Dict[str, object]:
        return {"time": self.time, "message": self.message, "digest": self.digest}


@dataclass
class SimulationResult:
    outcomes: List[Outcome]
    operations: List[CommittedOp]
    trace: List[TraceEvent] = field(default_factory=list)
    decisions: Dict[CommodityId, bool] = field(default_factory=dict)
    delivered_messages: int = 0
    ledger: Optional[ConcurrentFlowSolver] = None
    actors: List[NodeActor] = field(default_factory=list)


class _LedgerLog(CommitLog):
    """Forwards actor commits to the live solver."""

    def __init__(self, ledger: ConcurrentFlowSolver):
        self._ledger = ledger

    def push(self, i: CommodityId, u: NodeId, v: NodeId, amount: Amount) -> None:
        applied = self._ledger.locked_push(i, u, v, limit=amount)
        if applied != amount:
            raise ProtocolError(f"Commit of {amount} on ({u}, {v}) moved {applied} in the ledger")

    def relabel(self, i: CommodityId, u: NodeId, height: int) -> None:
        self._ledger.relabel_commodity(i, u, to_height=height)


class Simulation:
    """One run of the distributed protocol over a network and a batch of demands."""

    def __init__(
        self,
        net: FlowNetwork,
        demands: Sequence[Demand],
        latency: Optional[LatencyModel] = None,
        seed: Optional[int] = None,
        record_trace: bool = False,
        event_budget: Optional[int] = None,
        step_budget: Optional[int] = None,
        check_invariants: Optional[bool] = None,
    ):
        self.demands = list(demands)
        self.latency = latency if latency is not None else UniformLatency(seed=seed)
        self.record_trace = record_trace
        self.event_budget = Settings.event_budget() if event_budget is None else event_budget
        self.check_invariants = Settings.check_invariants() if check_invariants is None else check_invariants

        self.ledger = ConcurrentFlowSolver(
            net,
            self.demands,
            step_budget=step_budget,
            check_invariants=self.check_invariants,
            record=True,
        )
        self.queue = EventQueue(self.latency)
        self.trace: List[TraceEvent] = []
        self.delivered = 0
        self.actors = self._build_actors()

    def _build_actors(self) -> List[NodeActor]:
        ext = self.ledger.net
        roles = [
            CommodityRole(sink=c.sink, pre_source=c.pre_source, demand=c.demand)
            for c in self.ledger.commodities
        ]
        initial_heights: Dict[NodeId, Dict[CommodityId, int]] = {}
        for c in self.ledger.commodities:
            initial_heights.setdefault(c.pre_source, {})[c.index] = self.ledger.pre_source_height

        log = _LedgerLog(self.ledger)
        actors = []
        for u in range(ext.num_nodes):
            channels = {
                v: ChannelState(out_capacity=ext.capacity(u, v), in_capacity=ext.capacity(v, u))
                for v in ext.neighbors(u)
            }
            incident = {u: initial_heights.get(u, {})}
            for v in channels:
                incident[v] = initial_heights.get(v, {})
            actors.append(NodeActor(u, channels, roles, incident, self.ledger.height_cap, log))

        for c in self.ledger.commodities:
            if c.demand > 0:
                actors[c.pre_source].seed_flow(c.index, c.source, c.demand)
                actors[c.source].seed_flow(c.index, c.pre_source, -c.demand)
        return actors

    def _send(self, messages: Sequence[Message]) -> None:
        for message in messages:
            self.queue.schedule(message)

    def _deliver(self, at: int, message: Message) -> None:
        self.delivered += 1
        if self.delivered > self.event_budget:
            logger.error(f"Event budget of {self.event_budget} exhausted at time {at}")
            raise BudgetExhaustedError(f"Simulation exceeded {self.event_budget} delivered messages")
        actor = self.actors[message.dst]
        replies = actor.handle(message)
        if self.record_trace:
            self.trace.append(TraceEvent(at, message.to_dict(), actor.digest()))
        logger.debug("t=%s %s %s->%s", at, message.kind, message.src, message.dst, extra={"commodity": message.commodity})
        self._send(replies)

    def _quiescent_work(self) -> List[Message]:
        messages: List[Message] = []
        for actor in self.actors:
            messages.extend(actor.progress_all())
        return messages

    def run(self) -> SimulationResult:
        """Run to global quiescence and decide every commodity."""
        logger.info(
            f"Simulating {len(self.demands)} commodities on {self.ledger.base!r} with {self.latency!r}"
        )
        for actor in self.actors:
            self._send(actor.start())

        while True:
            while len(self.queue):
                at, message = self.queue.pop()
                self._deliver(at, message)
            work = self._quiescent_work()
            if not work:
                break
            self._send(work)

        self._check_reconstruction()
        outcomes = self.ledger.finalize()
        for i, outcome in enumerate(outcomes):
            if not outcome.ok:
                for actor in self.actors:
                    actor.rollback(i)
        if self.check_invariants:
            validators.verify_channel_agreement(self.actors)

        decisions = self._decisions()
        for i, success in decisions.items():
            if success != outcomes[i].ok:
                logger.error(f"Commit for commodity {i} says {success}, quiescence says {outcomes[i].ok}")
                raise ProtocolError(f"Commodity {i}: commit decision disagrees with the final state")

        logger.info(
            f"Simulation finished at t={self.queue.now} after {self.delivered} messages: "
            f"{sum(o.ok for o in outcomes)}/{len(outcomes)} succeeded"
        )
        return SimulationResult(
            outcomes=outcomes,
            operations=list(self.ledger.operations),
            trace=self.trace,
            decisions=decisions,
            delivered_messages=self.delivered,
            ledger=self.ledger,
            actors=self.actors,
        )

    def reconstruct(self) -> List[FlowAssignment]:
        """Per-commodity global flows rebuilt from actor-local channel copies."""
        flows = [FlowAssignment() for _ in self.demands]
        for actor in self.actors:
            for neighbor in actor.channels:
                if actor.id > neighbor:
                    continue
                for i, value in actor.channels[neighbor].flows.items():
                    flows[i].push(actor.id, neighbor, value)
        return flows

    def _check_reconstruction(self) -> None:
        validators.verify_channel_agreement(self.actors)
        for i, flow in enumerate(self.reconstruct()):
            if flow != self.ledger.commodities[i].flow:
                raise validators.InvariantViolation(f"Commodity {i}: actor views disagree with the ledger")
        for actor in self.actors:
            for neighbor in actor.channels:
                channel = actor.channels[neighbor]
                if channel.locked_out != self.ledger.locks.total(actor.id, neighbor):
                    raise validators.InvariantViolation(
                        f"Channel ({actor.id}, {neighbor}): local lock disagrees with the ledger"
                    )
        if self.check_invariants:
            validators.verify_locking_state(self.ledger)

    def _decisions(self) -> Dict[CommodityId, bool]:
        decisions: Dict[CommodityId, bool] = {}
        for actor in self.actors:
            for i, success in actor.decided.items():
                if decisions.setdefault(i, success) != success:
                    raise ProtocolError(f"Commodity {i}: conflicting commit decisions")
        return dict(sorted(decisions.items()))


def run_simulation(
    net: FlowNetwork,
    demands: Sequence[Demand],
    latency: Optional[LatencyModel] = None,
    seed: Optional[int] = None,
    record_trace: bool = False,
    event_budget: Optional[int] = None,
    check_invariants: Optional[bool] = None,
) -> SimulationResult:
    """
    Simulate the distributed protocol until global quiescence.

    Args:
        net: Channel network
        demands: (s_i, t_i, d_i) per commodity
        latency: Delay model, UniformLatency(10, seed) by default
        seed: Seed for the default latency model
        record_trace: Keep one TraceEvent per delivered message
        event_budget: Delivered-message budget, from settings by default
        check_invariants: Check the total capacity constraint after every commit

    Returns:
        Outcomes, the committed operations in commit order, and the trace
    """
    simulation = Simulation(
        net,
        demands,
        latency=latency,
        seed=seed,
        record_trace=record_trace,
        event_budget=event_budget,
        check_invariants=check_invariants,
    )
    return simulation.run()


def write_trace(trace: Sequence[TraceEvent], path: Union[str, Path]) -> Path:
    """Write a trace as line-delimited JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as handle:
        for event in trace:
            handle.write(json.dumps(event.to_dict(), sort_keys=True) + "\n")
    return path
