"""
Schedulers - Interleaving policies for the concurrent solver.

A scheduler decides which commodity takes the next step. All of them run
until no commodity has an applicable operation left.
"""

from abc import ABC, abstractmethod
from collections import deque
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .logger import setup_logger
from .locking import CommittedOp, ConcurrentFlowSolver
from .network import Demand, FlowNetwork
from .outcomes import Outcome


logger = setup_logger("pcnflow.schedulers")

SCHEDULERS = ("round_robin", "random")


class Scheduler(ABC):
    """Drives a ConcurrentFlowSolver to termination."""

    name = "scheduler"

    @abstractmethod
    def drive(self, solver: ConcurrentFlowSolver) -> None:
        """Step the solver until no commodity has an applicable operation."""

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


class RoundRobinScheduler(Scheduler):
    """One step per commodity in a fixed ring order."""

    name = "round_robin"

    def drive(self, solver: ConcurrentFlowSolver) -> None:
        while True:
            ring = deque(i for i in range(solver.num_commodities) if solver.has_work(i))
            while ring:
                i = ring.popleft()
                if solver.step(i) and solver.has_work(i):
                    ring.append(i)
            if not solver.revive_parked():
                return


class RandomScheduler(Scheduler):
    """Uniformly random commodity among those with work, from a seeded generator."""

    name = "random"

    def __init__(self, seed: Optional[int] = None):
        self.seed = seed
        self._rng = np.random.default_rng(seed)

    def drive(self, solver: ConcurrentFlowSolver) -> None:
        while True:
            pending: List[int] = [i for i in range(solver.num_commodities) if solver.has_work(i)]
            while pending:
                slot = int(self._rng.integers(len(pending)))
                i = pending[slot]
                solver.step(i)
                if not solver.has_work(i):
                    pending[slot] = pending[-1]
                    pending.pop()
            if not solver.revive_parked():
                return

    def __repr__(self) -> str:
        return f"RandomScheduler(seed={self.seed})"


class ReplayScheduler(Scheduler):
    """Applies a recorded sequence of committed operations in order."""

    name = "replay"

    def __init__(self, operations: Iterable[CommittedOp]):
        self.operations = list(operations)

    def drive(self, solver: ConcurrentFlowSolver) -> None:
        for op in self.operations:
            if op.kind == "push":
                applied = solver.locked_push(op.commodity, op.u, op.v, limit=op.amount)
                if applied != op.amount:
                    raise RuntimeError(
                        f"Replayed push {op} moved {applied} instead of {op.amount}"
                    )
            else:
                solver.relabel_commodity(op.commodity, op.u, to_height=op.height)

    def __repr__(self) -> str:
        return f"ReplayScheduler({len(self.operations)} ops)"


def make_scheduler(name: str, seed: Optional[int] = None) -> Scheduler:
    """Scheduler by CLI/config name."""
    if name == "round_robin":
        return RoundRobinScheduler()
    if name == "random":
        return RandomScheduler(seed=seed)
    raise ValueError(f"Unknown scheduler {name!r}; expected one of {SCHEDULERS}")


def concurrent_solve(
    net: FlowNetwork,
    demands: Sequence[Demand],
    schedule: Optional[Scheduler] = None,
    step_budget: Optional[int] = None,
    check_invariants: Optional[bool] = None,
) -> List[Outcome]:
    """
    Route all demands concurrently with capacity locking.

    A commodity that delivers its whole demand is settled at once, so the
    capacity its flow cycles held is free for the commodities still running.

    Args:
        net: Channel network
        demands: (s_i, t_i, d_i) per commodity
        schedule: Interleaving policy, round robin by default
        step_budget: Operation budget, from settings by default
        check_invariants: Per-operation checks, from settings by default

    Returns:
        One outcome per demand, in input order
    """
    scheduler = schedule or RoundRobinScheduler()
    solver = ConcurrentFlowSolver(
        net,
        demands,
        step_budget=step_budget,
        check_invariants=check_invariants,
        settle_completed=True,
    )
    scheduler.drive(solver)
    outcomes = solver.finalize()
    logger.debug(
        f"concurrent solve with {scheduler!r}: {sum(o.ok for o in outcomes)}/{len(outcomes)} "
        f"succeeded in {solver.steps} steps"
    )
    return outcomes
