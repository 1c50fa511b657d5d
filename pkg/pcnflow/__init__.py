"""
pcnflow - Route selection for payment channel networks as flow problems.
Push-relabel feasible flows, concurrent multi-commodity routing with capacity
locking, and a message-passing simulation of the distributed protocol.
"""

__version__ = "1.0.0"
__author__ = "pcnflow developers"

from .amount import Amount, NodeId, format_amount, from_milli, to_milli
from .network import (
    ChannelEdge,
    Demand,
    FlowAssignment,
    FlowClass,
    FlowNetwork,
    FlowPreconditionError,
    NetworkValidationError,
    cancel_cycles,
    classify_flow,
    decompose_paths,
    excess,
    residual_capacity,
    with_pre_source,
)
from .outcomes import Infeasible, Outcome, Success, success_fraction
from .pushrelabel import feasible_flow, initialize, max_flow, sequential_batch
from .locking import BudgetExhaustedError, ConcurrentFlowSolver, LockTable
from .schedulers import RandomScheduler, ReplayScheduler, RoundRobinScheduler, concurrent_solve
from .simulation import UniformLatency, ZeroLatency, run_simulation
from .validators import InvariantViolation
from .logger import setup_logger

__all__ = [
    "Amount",
    "NodeId",
    "format_amount",
    "from_milli",
    "to_milli",
    "ChannelEdge",
    "Demand",
    "FlowAssignment",
    "FlowClass",
    "FlowNetwork",
    "FlowPreconditionError",
    "NetworkValidationError",
    "cancel_cycles",
    "classify_flow",
    "decompose_paths",
    "excess",
    "residual_capacity",
    "with_pre_source",
    "Infeasible",
    "Outcome",
    "Success",
    "success_fraction",
    "feasible_flow",
    "initialize",
    "max_flow",
    "sequential_batch",
    "BudgetExhaustedError",
    "ConcurrentFlowSolver",
    "LockTable",
    "RandomScheduler",
    "ReplayScheduler",
    "RoundRobinScheduler",
    "concurrent_solve",
    "UniformLatency",
    "ZeroLatency",
    "run_simulation",
    "InvariantViolation",
    "setup_logger",
]
