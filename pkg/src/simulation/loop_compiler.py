"""
Loop Compiler

Compiles a CircuitProgram onto a time-bin loop machine: interferometer cores
for the linear gates, one slot per bin on each plug-in module, and delay lines
that set which temporal modes a two-mode gate can couple.

Scheduling is greedy list scheduling: each event, in program order, goes to
the earliest bin after its operands' previous events where a matching
resource is free.
"""

import logging
from collections import defaultdict
from typing import Dict, List, Optional, Set, Tuple, Union

from fockloop_core import NonGaussianOp, UnschedulableError
from src.engines import fock_engine, gaussian_engine
from src.models.circuit_model import MODULE_FOR_KIND, CircuitProgram
from src.models.experiment_models import MachineSpec
from src.models.result_models import ScheduledEvent, TimeBinSchedule
from src.models.state_models import DensityOperator, FockState, GaussianState

logger = logging.getLogger(__name__)

State = Union[FockState, DensityOperator, GaussianState]

CORE = "core"


def _core_id(index: int) -> str:
    return f"{CORE}{index}"


def _delay_of(op) -> Optional[int]:
    if op.kind != "beamsplitter":
        return None
    return abs(op.mode_j - op.mode_i)


def _greedy(program: CircuitProgram, machine: MachineSpec, n_cores: int) -> TimeBinSchedule:
    busy: Set[Tuple[str, int]] = set()
    ready: Dict[int, int] = defaultdict(int)
    events: List[ScheduledEvent] = []
    for index, op in enumerate(program.ops):
        module = MODULE_FOR_KIND[op.kind]
        if module != CORE and module not in machine.modules:
            raise UnschedulableError(
                f"Event {index} ({op.kind}) needs the '{module}' module, which the machine lacks",
                event_index=index,
                event=op,
            )
        delay = _delay_of(op)
        if delay is not None and delay not in machine.delay_bins:
            raise UnschedulableError(
                f"Event {index} couples modes {op.mode_i} and {op.mode_j}; delay {delay} not in "
                f"{sorted(machine.delay_bins)}",
                event_index=index,
                event=op,
            )
        candidates = [_core_id(c) for c in range(n_cores)] if module == CORE else [module]
        slot = max((ready[m] for m in op.modes), default=0)
        while True:
            free = [res for res in candidates if (res, slot) not in busy]
            if free:
                break
            slot += 1
        resource = free[0]
        busy.add((resource, slot))
        for m in op.modes:
            ready[m] = slot + 1
        events.append(
            ScheduledEvent(
                bin_index=slot, resource=resource, event_index=index, op=op, operand_bins=op.modes, delay=delay
            )
        )
    makespan = max((e.bin_index + 1 for e in events), default=0)
    return TimeBinSchedule(mode_count=program.mode_count, events=events, makespan=makespan, cores_used=n_cores)


def compile(program: CircuitProgram, machine: MachineSpec) -> TimeBinSchedule:
    """
    Greedy earliest-feasible schedule of ``program`` on ``machine``.

    Every core budget from 1 to machine.n_cores is tried and the shortest
    schedule is kept (ties go to fewer cores), so adding cores never lengthens
    the result.

    Raises:
        UnschedulableError: for a missing module, an unavailable delay, or a
            program with more modes than the machine has bins.
    """
    if program.mode_count > machine.n_bins:
        raise UnschedulableError(f"Program needs {program.mode_count} bins, machine has {machine.n_bins}")
    best: Optional[TimeBinSchedule] = None
    for n_cores in range(1, machine.n_cores + 1):
        schedule = _greedy(program, machine, n_cores)
        if best is None or schedule.makespan < best.makespan:
            best = schedule
    logger.debug("Compiled %d events: makespan %d on %d core(s)", len(program), best.makespan, best.cores_used)
    return best


def validate(schedule: TimeBinSchedule, machine: MachineSpec) -> List[str]:
    """Human-readable invariant violations; empty iff the schedule is valid."""
    violations: List[str] = []
    slots: Dict[Tuple[str, int], int] = {}
    cores = {_core_id(c) for c in range(machine.n_cores)}
    last_bin: Dict[int, Tuple[int, int]] = {}
    for event in sorted(schedule.events, key=lambda e: e.event_index):
        key = (event.resource, event.bin_index)
        if key in slots:
            violations.append(
                f"bin {event.bin_index}: {event.resource} double-booked by events {slots[key]} and {event.event_index}"
            )
        else:
            slots[key] = event.event_index

        module = MODULE_FOR_KIND[event.op.kind]
        if module == CORE and event.resource not in cores:
            violations.append(f"event {event.event_index}: {event.resource} is not one of the machine's cores")
        elif module != CORE and (event.resource != module or module not in machine.modules):
            violations.append(f"event {event.event_index}: {event.op.kind} placed on unavailable '{event.resource}'")

        delay = _delay_of(event.op)
        if delay is not None and delay not in machine.delay_bins:
            violations.append(
                f"event {event.event_index}: delay {delay} not available (machine has {sorted(machine.delay_bins)})"
            )
        for b in event.operand_bins:
            if b >= machine.n_bins:
                violations.append(f"event {event.event_index}: operand bin {b} >= n_bins {machine.n_bins}")
            previous = last_bin.get(b)
            if previous is not None and previous[1] >= event.bin_index:
                violations.append(
                    f"event {event.event_index}: mode {b} used in bin {event.bin_index} "
                    f"not after event {previous[0]} in bin {previous[1]}"
                )
            last_bin[b] = (event.event_index, event.bin_index)
    return violations


def lowered_program(schedule: TimeBinSchedule) -> CircuitProgram:
    """The schedule's events as a program in bin order."""
    return CircuitProgram(mode_count=schedule.mode_count, ops=[e.op for e in schedule.ordered_events()])


def execute_schedule(schedule: TimeBinSchedule, state: State, tolerance: Optional[float] = None) -> State:
    """
    Lower events in bin order to engine calls.

    Gaussian states go through the covariance engine, which rejects Kerr and
    measurement events with NonGaussianOp.
    """
    program = lowered_program(schedule)
    if isinstance(state, GaussianState):
        try:
            return gaussian_engine.run_gaussian_program(program, state)
        except NonGaussianOp as e:
            raise NonGaussianOp(f"Schedule cannot run on a Gaussian state: {e}") from e
    return fock_engine.run_program(program, state, tolerance=tolerance)


def _label(event: ScheduledEvent) -> str:
    return f"{event.op.kind}[{','.join(str(b) for b in event.operand_bins)}]#{event.event_index}"


def render_timeline(schedule: TimeBinSchedule) -> str:
    """Per-bin text timeline, one line per occupied bin."""
    by_bin: Dict[int, List[ScheduledEvent]] = defaultdict(list)
    for event in schedule.ordered_events():
        by_bin[event.bin_index].append(event)
    lines = [f"makespan={schedule.makespan} cores={schedule.cores_used} modes={schedule.mode_count}"]
    width = len(str(max(schedule.makespan - 1, 0)))
    for slot in sorted(by_bin):
        cells = " | ".join(f"{e.resource}: {_label(e)}" for e in sorted(by_bin[slot], key=lambda e: e.resource))
        lines.append(f"bin {slot:>{width}} | {cells}")
    return "\n".join(lines) + "\n"
