"""Per-demand outcomes shared by the sequential, concurrent and distributed solvers."""

from dataclasses import dataclass, field
from typing import Optional, Union

from .amount import Amount
from .network import FlowAssignment


@dataclass(frozen=True)
class Success:
    """The full demand was delivered; flow is restricted to the original edges."""

    delivered: Amount
    flow: FlowAssignment = field(default_factory=FlowAssignment, compare=False)
    path: Optional[tuple] = None

    @property
    def ok(self) -> bool:
        return True


@dataclass(frozen=True)
class Infeasible:
    """The demand could not be met; delivered is the achieved amount before rollback."""

    delivered: Amount

    @property
    def ok(self) -> bool:
        return False


Outcome = Union[Success, Infeasible]


def success_fraction(outcomes: "list[Outcome]") -> float:
    """Share of successful outcomes; an empty workload counts as full success."""
    if not outcomes:
        return 1.0
    return sum(1 for outcome in outcomes if outcome.ok) / len(outcomes)
