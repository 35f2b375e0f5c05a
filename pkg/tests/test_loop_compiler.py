"""
Tests for compiling circuits onto the time-bin loop machine.
"""

import numpy as np
import pytest

from fockloop_core import NonGaussianOp, UnschedulableError
from src.engines import fock_engine, gaussian_engine
from src.models.circuit_model import BeamSplitter, CircuitProgram, Kerr, Phase, Squeeze
from src.models.experiment_models import LatticeSpec, MachineSpec
from src.models.result_models import ScheduledEvent, TimeBinSchedule
from src.simulation import bose_hubbard, loop_compiler


def bs(i, j, theta=0.3):
    return BeamSplitter(mode_i=i, mode_j=j, theta=theta)


def random_linear_program(rng, mode_count=5, length=30):
    ops = []
    for _ in range(length):
        if rng.random() < 0.3:
            ops.append(Phase(mode=int(rng.integers(mode_count)), phi=float(rng.random())))
        else:
            i = int(rng.integers(mode_count - 1))
            ops.append(bs(i, i + 1, float(rng.random())))
    return CircuitProgram(mode_count=mode_count, ops=ops)



def random_corpus_program(rng, mode_count=4, length=20):
    """Phases, Kerr gates and beamsplitters over one- and two-bin couplings."""
    ops = []
    for _ in range(length):
        roll = rng.random()
        if roll < 0.2:
            ops.append(Phase(mode=int(rng.integers(mode_count)), phi=float(rng.uniform(0, 2 * np.pi))))
        elif roll < 0.35:
            ops.append(Kerr(mode=int(rng.integers(mode_count)), strength=float(rng.uniform(-0.5, 0.5))))
        else:
            gap = int(rng.integers(1, 3))
            i = int(rng.integers(mode_count - gap))
            ops.append(
                BeamSplitter(
                    mode_i=i, mode_j=i + gap, theta=float(rng.uniform(0, np.pi)), phi=float(rng.uniform(0, 2 * np.pi))
                )
            )
    return CircuitProgram(mode_count=mode_count, ops=ops)


class TestCompile:
    """Tests for greedy scheduling."""

    def test_dependent_gates_serialize(self):
        """Test gates sharing a mode land in successive bins."""
        program = CircuitProgram(mode_count=3, ops=[bs(0, 1), bs(1, 2)])
        schedule = loop_compiler.compile(program, MachineSpec(n_cores=1))
        assert [e.bin_index for e in schedule.ordered_events()] == [0, 1]
        assert schedule.makespan == 2

    def test_cores_run_disjoint_gates_together(self):
        """Test two cores fire independent gates in the same bin."""
        program = CircuitProgram(mode_count=4, ops=[bs(0, 1), bs(2, 3)])
        one = loop_compiler.compile(program, MachineSpec(n_cores=1))
        two = loop_compiler.compile(program, MachineSpec(n_cores=2))
        assert one.makespan == 2
        assert two.makespan == 1
        assert two.cores_used == 2

    def test_ties_prefer_fewer_cores(self):
        """Test a serial program keeps one core even when more exist."""
        program = CircuitProgram(mode_count=3, ops=[bs(0, 1), bs(1, 2)])
        schedule = loop_compiler.compile(program, MachineSpec(n_cores=3))
        assert schedule.cores_used == 1

    def test_more_cores_never_lengthen(self):
        """Test makespan is non-increasing in the core count."""
        program = random_linear_program(np.random.default_rng(4))
        spans = [loop_compiler.compile(program, MachineSpec(n_cores=n)).makespan for n in (1, 2, 3, 4)]
        assert all(a >= b for a, b in zip(spans, spans[1:]))

    def test_module_contention(self):
        """Test one squeezer handles one bin at a time."""
        program = CircuitProgram(mode_count=2, ops=[Squeeze(mode=0, r=0.1), Squeeze(mode=1, r=0.1)])
        schedule = loop_compiler.compile(program, MachineSpec(n_cores=2))
        assert [e.bin_index for e in schedule.ordered_events()] == [0, 1]
        assert {e.resource for e in schedule.events} == {"squeezer"}

    def test_missing_module(self):
        """Test a Kerr event without a Kerr module is unschedulable."""
        program = CircuitProgram(mode_count=2, ops=[bs(0, 1), Kerr(mode=0, strength=0.1)])
        machine = MachineSpec(modules=frozenset({"squeezer"}))
        with pytest.raises(UnschedulableError) as info:
            loop_compiler.compile(program, machine)
        assert info.value.event_index == 1

    def test_missing_delay(self):
        """Test coupling modes two bins apart needs a delay of two."""
        program = CircuitProgram(mode_count=3, ops=[bs(0, 2)])
        with pytest.raises(UnschedulableError):
            loop_compiler.compile(program, MachineSpec(delay_bins=frozenset({1})))
        schedule = loop_compiler.compile(program, MachineSpec(delay_bins=frozenset({1, 2})))
        assert schedule.events[0].delay == 2

    def test_too_many_modes(self):
        """Test a program wider than the machine's bins is refused."""
        with pytest.raises(UnschedulableError):
            loop_compiler.compile(CircuitProgram(mode_count=5, ops=[]), MachineSpec(n_bins=4))

    def test_empty_program(self):
        """Test an empty program has zero makespan."""
        schedule = loop_compiler.compile(CircuitProgram(mode_count=2, ops=[]), MachineSpec())
        assert schedule.makespan == 0
        assert schedule.events == []


class TestValidate:
    """Tests for schedule validation."""

    def test_compiled_schedules_are_valid(self):
        """Test compiled random programs pass validation."""
        machine = MachineSpec(n_cores=2)
        for seed in range(5):
            program = random_linear_program(np.random.default_rng(seed))
            assert loop_compiler.validate(loop_compiler.compile(program, machine), machine) == []

    def test_double_booking_reported(self):
        """Test two events on one core in one bin are reported."""
        events = [
            ScheduledEvent(bin_index=0, resource="core0", event_index=0, op=bs(0, 1), operand_bins=(0, 1), delay=1),
            ScheduledEvent(bin_index=0, resource="core0", event_index=1, op=bs(2, 3), operand_bins=(2, 3), delay=1),
        ]
        schedule = TimeBinSchedule(mode_count=4, events=events, makespan=1, cores_used=1)
        violations = loop_compiler.validate(schedule, MachineSpec(n_cores=1))
        assert violations == ["bin 0: core0 double-booked by events 0 and 1"]

    def test_dependency_order_reported(self):
        """Test an event on a mode must come after the mode's previous event."""
        events = [
            ScheduledEvent(bin_index=1, resource="core0", event_index=0, op=bs(0, 1), operand_bins=(0, 1), delay=1),
            ScheduledEvent(bin_index=1, resource="core1", event_index=1, op=bs(1, 2), operand_bins=(1, 2), delay=1),
        ]
        schedule = TimeBinSchedule(mode_count=3, events=events, makespan=2, cores_used=2)
        violations = loop_compiler.validate(schedule, MachineSpec(n_cores=2))
        assert len(violations) == 1
        assert "mode 1" in violations[0]

    def test_unavailable_resources_reported(self):
        """Test missing cores, modules and delays are reported."""
        events = [
            ScheduledEvent(bin_index=0, resource="core3", event_index=0, op=bs(0, 2), operand_bins=(0, 2), delay=2),
            ScheduledEvent(
                bin_index=1, resource="kerr", event_index=1, op=Kerr(mode=1, strength=0.1), operand_bins=(1,)
            ),
        ]
        schedule = TimeBinSchedule(mode_count=3, events=events, makespan=2, cores_used=1)
        violations = loop_compiler.validate(schedule, MachineSpec(n_cores=1, modules=frozenset({"squeezer"})))
        assert len(violations) == 3


class TestExecution:
    """Tests for lowering schedules to the engines."""

    def test_fock_execution_matches_program(self):
        """Test reordered execution gives the same state as the source program."""
        program = random_linear_program(np.random.default_rng(2), mode_count=3, length=12)
        state = fock_engine.fock_state([1, 0, 1], 3)
        schedule = loop_compiler.compile(program, MachineSpec(n_cores=2))
        direct = fock_engine.run_program(program, state)
        scheduled = loop_compiler.execute_schedule(schedule, state)
        assert fock_engine.fidelity(direct, scheduled) == pytest.approx(1.0, abs=1e-12)

    def test_random_corpus_matches_direct_execution(self):
        """Test fifty random programs execute identically when scheduled, and a second core never lengthens them."""
        machine_one = MachineSpec(n_cores=1, delay_bins=frozenset({1, 2}))
        machine_two = MachineSpec(n_cores=2, delay_bins=frozenset({1, 2}))
        state = fock_engine.fock_state([1, 0, 1, 0], 3)
        for seed in np.random.SeedSequence(1234).spawn(50):
            program = random_corpus_program(np.random.default_rng(seed))
            one = loop_compiler.compile(program, machine_one)
            two = loop_compiler.compile(program, machine_two)
            assert two.makespan <= one.makespan
            assert loop_compiler.validate(two, machine_two) == []
            direct = fock_engine.run_program(program, state)
            scheduled = loop_compiler.execute_schedule(two, state)
            assert 1.0 - fock_engine.fidelity(direct, scheduled) < 1e-10

    def test_gaussian_execution(self):
        """Test Gaussian states run through the covariance engine."""
        ops = [Squeeze(mode=0, r=0.3), Squeeze(mode=1, r=0.2), bs(0, 1, np.pi / 4)]
        program = CircuitProgram(mode_count=2, ops=ops)
        schedule = loop_compiler.compile(program, MachineSpec(n_cores=1))
        out = loop_compiler.execute_schedule(schedule, gaussian_engine.vacuum_state(2))
        assert np.allclose(out.dense_cov, gaussian_engine.run_gaussian_program(program).dense_cov)

    def test_gaussian_execution_rejects_kerr(self):
        """Test Kerr events cannot run on a Gaussian state."""
        program = CircuitProgram(mode_count=1, ops=[Kerr(mode=0, strength=0.2)])
        schedule = loop_compiler.compile(program, MachineSpec())
        with pytest.raises(NonGaussianOp):
            loop_compiler.execute_schedule(schedule, gaussian_engine.vacuum_state(1))

    def test_trotter_circuit_on_loop_machine(self):
        """Test a compiled Bose-Hubbard circuit reproduces the direct simulation."""
        spec = LatticeSpec(n_sites=3, U=1.0, t=0.5)
        program = bose_hubbard.trotter_compile(spec, 10)
        schedule = loop_compiler.compile(program, MachineSpec(n_cores=2))
        assert loop_compiler.validate(schedule, MachineSpec(n_cores=2)) == []
        state = fock_engine.fock_state([2, 0, 0], 3)
        final = loop_compiler.execute_schedule(schedule, state)
        configs = bose_hubbard.basis(3, 2)
        scheduled = bose_hubbard.config_distribution(final, configs)
        direct = bose_hubbard.simulate_dynamics(spec, (2, 0, 0), 10)
        assert scheduled.tv_distance(direct) == pytest.approx(0.0, abs=1e-12)


class TestTimeline:
    """Tests for the text timeline."""

    def test_render(self):
        """Test the header and one line per occupied bin."""
        program = CircuitProgram(mode_count=3, ops=[bs(0, 1), Kerr(mode=2, strength=0.1), bs(1, 2)])
        schedule = loop_compiler.compile(program, MachineSpec(n_cores=1))
        lines = loop_compiler.render_timeline(schedule).splitlines()
        assert lines[0] == "makespan=2 cores=1 modes=3"
        assert lines[1] == "bin 0 | core0: beamsplitter[0,1]#0 | kerr: kerr[2]#1"
        assert lines[2] == "bin 1 | core0: beamsplitter[1,2]#2"

    def test_schedule_json(self):
        """Test the JSON view lists events in bin order."""
        program = CircuitProgram(mode_count=2, ops=[bs(0, 1), Phase(mode=0, phi=0.2)])
        data = loop_compiler.compile(program, MachineSpec()).to_json_dict()
        assert data["makespan"] == 2
        assert [e["op"]["kind"] for e in data["events"]] == ["beamsplitter", "phase"]
