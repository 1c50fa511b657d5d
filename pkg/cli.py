#!/usr/bin/env python3
"""
pcnflow CLI
Command-line interface for payment-channel routing experiments.
"""

import argparse
import json
import sys
from argparse import Namespace
from pathlib import Path
from typing import Any, List, Optional, Sequence, cast

# Pre-declare names so static type checkers don't report them as possibly unbound
Console: Any = None
Progress: Any = None
console: Optional[Any] = None
rich_available: bool = False

try:
    from rich.console import Console as _Console  # type: ignore[reportMissingImports]
    from rich.progress import Progress as _Progress  # type: ignore[reportMissingImports]

    Console = cast(Any, _Console)
    Progress = cast(Any, _Progress)
    rich_available = True
    console = cast(Optional[Any], Console())
except ImportError:
    rich_available = False

from pcnflow import (
    FlowPreconditionError,
    InvariantViolation,
    NetworkValidationError,
    format_amount,
    to_milli,
)
from pcnflow.actors import ProtocolError
from pcnflow.experiments import ExperimentConfigError, ExperimentRunner
from pcnflow.loaders import LoaderError, load_experiment_config, load_graph, load_workload, save_workload
from pcnflow.locking import BudgetExhaustedError
from pcnflow.logger import configure_package_logging, setup_logger
from pcnflow.oracle import edmonds_karp
from pcnflow.outcomes import Outcome
from pcnflow.pushrelabel import feasible_flow, max_flow, sequential_batch
from pcnflow.schedulers import SCHEDULERS, concurrent_solve, make_scheduler
from pcnflow.settings import Settings, SettingsError
from pcnflow.simulation import DEFAULT_MAX_DELAY, UniformLatency, ZeroLatency, run_simulation, write_trace
from pcnflow.topology import (
    TopologyConfig,
    TopologyConfigError,
    WorkloadConfig,
    assign_capacities,
    sample_workload,
    watts_strogatz,
)


logger = setup_logger("pcnflow.cli")

HANDLED_ERRORS = (
    LoaderError,
    NetworkValidationError,
    FlowPreconditionError,
    InvariantViolation,
    BudgetExhaustedError,
    ProtocolError,
    TopologyConfigError,
    ExperimentConfigError,
    SettingsError,
    OSError,
    ValueError,
)


def print_output(message: str, style: str = ""):
    """Print output with optional Rich formatting."""
    if rich_available and console:
        console.print(message, style=style)
    else:
        print(message)


def _terminals(net, args: Namespace):
    source = net.source if args.source is None else args.source
    sink = net.sink if args.sink is None else args.sink
    return net.with_terminals(source, sink)


def _print_outcomes(label: str, outcomes: Sequence[Outcome], demands) -> None:
    ok = sum(1 for outcome in outcomes if outcome.ok)
    print_output(f"\n[cyan]{label}: {ok}/{len(outcomes)} succeeded[/cyan]")
    for index, (outcome, demand) in enumerate(zip(outcomes, demands)):
        status = "[green]✓[/green]" if outcome.ok else "[red]✗[/red]"
        print_output(
            f"{status} #{index} {demand.source}->{demand.sink} "
            f"demand={format_amount(demand.amount)} delivered={format_amount(outcome.delivered)}"
        )


def cmd_gen(args: Namespace) -> None:
    """Generate a Watts-Strogatz network and optionally a workload."""
    cfg = TopologyConfig(n=args.n, k=args.k, beta=args.beta, cap_max=to_milli(args.cap_max), seed=args.seed)
    skeleton = watts_strogatz(cfg)
    net = assign_capacities(skeleton, cfg.cap_max, cfg.seed)
    document = json.dumps(net.to_dict(), indent=2)

    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(document)
        print_output(f"[green]✓ Wrote {net!r} to {args.out}[/green]")
        if not skeleton.connected:
            print_output("[yellow]Generated graph is disconnected[/yellow]")
    else:
        print(document)

    if args.workload_out:
        workload = sample_workload(
            net, WorkloadConfig(num_flows=args.flows, vol_max=to_milli(args.vol_max), seed=args.seed)
        )
        save_workload(workload, args.workload_out)
        print_output(f"[green]✓ Wrote {len(workload)} commodities to {args.workload_out}[/green]")


def cmd_maxflow(args: Namespace) -> None:
    """Maximum flow between the graph's (or the given) terminals."""
    net = _terminals(load_graph(args.graph), args)
    _, value = max_flow(net, selection=args.selection)
    print_output(f"[cyan]Maximum flow {net.source}->{net.sink}:[/cyan] {format_amount(value)}")
    if args.check_oracle:
        reference = edmonds_karp(net)
        if reference != value:
            raise InvariantViolation(f"Push-relabel found {value}, Edmonds-Karp found {reference}")
        print_output("[green]✓ Matches Edmonds-Karp[/green]")


def cmd_feasible(args: Namespace) -> None:
    """Feasible flow of exactly --demand."""
    net = _terminals(load_graph(args.graph), args)
    demand = to_milli(args.demand)
    outcome = feasible_flow(net, demand)
    if outcome.ok:
        print_output(f"[green]✓ Feasible: {format_amount(demand)} from {net.source} to {net.sink}[/green]")
        for (u, v), value in outcome.flow.directed().items():
            print_output(f"  {u} -> {v}: {format_amount(value)}")
    else:
        print_output(
            f"[red]✗ Infeasible: at most {format_amount(outcome.delivered)} of "
            f"{format_amount(demand)} can reach {net.sink}[/red]"
        )


def cmd_simulate(args: Namespace) -> None:
    """Route a workload sequentially, concurrently or with the distributed protocol."""
    net = load_graph(args.graph)
    demands = load_workload(args.workload, net)

    if args.sequential:
        _print_outcomes("Sequential", sequential_batch(net, demands), demands)
        return

    if args.distributed:
        latency = ZeroLatency() if args.zero_latency else UniformLatency(max_delay=args.max_delay, seed=args.seed)
        result = run_simulation(
            net,
            demands,
            latency=latency,
            seed=args.seed,
            record_trace=bool(args.trace),
            check_invariants=args.check_invariants or None,
        )
        _print_outcomes("Distributed", result.outcomes, demands)
        print_output(
            f"  Messages delivered: {result.delivered_messages}, operations committed: {len(result.operations)}"
        )
        if args.trace:
            write_trace(result.trace, args.trace)
            print_output(f"[green]✓ Trace written to {args.trace}[/green]")
        return

    outcomes = concurrent_solve(
        net,
        demands,
        make_scheduler(args.scheduler, seed=args.seed),
        check_invariants=args.check_invariants or None,
    )
    _print_outcomes("Concurrent", outcomes, demands)


def cmd_experiment(args: Namespace) -> None:
    """Run a success-rate sweep and write its CSV."""
    config = load_experiment_config(args.config)
    runner = ExperimentRunner(config, parallel=args.parallel, max_workers=args.max_workers)
    cells = len(runner.cells())
    print_output(f"\n[cyan]Running {config.name}: {cells} cells[/cyan]")

    if rich_available:
        with Progress() as progress:
            task_id = progress.add_task("[cyan]Sweeping...", total=cells)
            runner.run()
            progress.update(task_id, completed=cells)
    else:
        runner.run()

    path = runner.write(args.out)
    print_output(f"\n[cyan]Experiment Summary:[/cyan]")
    for row in runner.rows:
        parts = [f"{config.level_header}={row.level:g}"]
        for label, value in (("seq", row.seq_success), ("conc", row.conc_success), ("sp", row.single_path_success)):
            if value is not None:
                parts.append(f"{label}={value:.3f}")
        print_output("  " + " ".join(parts))
    print_output(f"  Elapsed time: {runner.elapsed:.2f}s")
    print_output(f"[green]✓ Results written to {path}[/green]\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Payment channel network routing with push-relabel and capacity locking",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument('--log-level', help='Log level (default from PCNFLOW_LOG_LEVEL)')
    parser.add_argument('--log-file', help='Also log to this file')
    parser.add_argument('--json-logs', action='store_true', help='Emit JSON log records')

    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    gen_parser = subparsers.add_parser('gen', help='Generate a Watts-Strogatz network')
    gen_parser.add_argument('--n', type=int, default=200, help='Number of nodes')
    gen_parser.add_argument('--k', type=int, default=10, help='Ring lattice degree')
    gen_parser.add_argument('--beta', type=float, default=0.5, help='Rewiring probability')
    gen_parser.add_argument('--cap-max', default='10', help='Maximum channel capacity (units)')
    gen_parser.add_argument('--seed', type=int, default=0, help='Random seed')
    gen_parser.add_argument('--out', help='Graph JSON output (stdout if omitted)')
    gen_parser.add_argument('--workload-out', help='Also sample a workload into this file')
    gen_parser.add_argument('--flows', type=int, default=128, help='Workload size')
    gen_parser.add_argument('--vol-max', default='20', help='Maximum transaction volume (units)')

    maxflow_parser = subparsers.add_parser('maxflow', help='Maximum flow of a graph')
    maxflow_parser.add_argument('graph', help='Graph JSON file')
    maxflow_parser.add_argument('--source', type=int, help='Override the graph source')
    maxflow_parser.add_argument('--sink', type=int, help='Override the graph sink')
    maxflow_parser.add_argument('--selection', choices=['fifo', 'highest_label'], default='fifo',
                                help='Active node selection')
    maxflow_parser.add_argument('--check-oracle', action='store_true', help='Compare with Edmonds-Karp')

    feasible_parser = subparsers.add_parser('feasible', help='Feasible flow of a given value')
    feasible_parser.add_argument('graph', help='Graph JSON file')
    feasible_parser.add_argument('--demand', required=True, help='Payment amount (units)')
    feasible_parser.add_argument('--source', type=int, help='Override the graph source')
    feasible_parser.add_argument('--sink', type=int, help='Override the graph sink')

    simulate_parser = subparsers.add_parser('simulate', help='Route a workload')
    simulate_parser.add_argument('graph', help='Graph JSON file')
    simulate_parser.add_argument('--workload', required=True, help='Workload JSON/YAML file')
    simulate_parser.add_argument('--distributed', action='store_true', help='Message-passing simulation')
    simulate_parser.add_argument('--sequential', action='store_true', help='One payment after another')
    simulate_parser.add_argument('--scheduler', choices=list(SCHEDULERS), default='round_robin',
                                 help='Concurrent interleaving policy')
    simulate_parser.add_argument('--seed', type=int, default=0, help='Random seed')
    simulate_parser.add_argument('--max-delay', type=int, default=DEFAULT_MAX_DELAY,
                                 help='Maximum message delay in ticks')
    simulate_parser.add_argument('--zero-latency', action='store_true', help='Deliver messages instantly')
    simulate_parser.add_argument('--trace', help='Write a JSONL trace (distributed only)')
    simulate_parser.add_argument('--check-invariants', action='store_true',
                                 help='Check capacity invariants after every operation')

    experiment_parser = subparsers.add_parser('experiment', help='Run a success-rate sweep')
    experiment_parser.add_argument('--config', required=True, help='Experiment YAML/JSON file')
    experiment_parser.add_argument('--out', default='results', help='Output directory')
    experiment_parser.add_argument('--parallel', action='store_true', help='Parallel execution')
    experiment_parser.add_argument('--max-workers', type=int, help='Max worker processes')

    return parser


COMMANDS = {
    'gen': cmd_gen,
    'maxflow': cmd_maxflow,
    'feasible': cmd_feasible,
    'simulate': cmd_simulate,
    'experiment': cmd_experiment,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point; returns the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return 1

    try:
        Settings()
        configure_package_logging(log_level=args.log_level, log_file=args.log_file, json_format=args.json_logs)
        COMMANDS[args.command](args)
    except HANDLED_ERRORS as e:
        logger.error(f"{args.command} failed: {str(e)}")
        print_output(f"[red]✗ Error: {str(e)}[/red]")
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
