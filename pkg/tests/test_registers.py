import itertools
import math

import numpy as np
import pytest

from jumpsim.pulsegates import Gate, GateSchedule, TAU_CNOT, recovery_duration, unitary_of
from jumpsim.registers import (
    block_fidelity,
    block_rate,
    cnot_admissible,
    cnot_speed_bound,
    compile_global,
    compile_program,
    encode_layout,
    logical_action,
    make_layout,
    parse_layout,
    recovery_for,
    rewind_recovery,
)
from jumpsim.statevec import apply_jump, evolve_inplace, fidelity
from jumpsim.tentmap import gate_matrix, phase_distance
from jumpsim.trajectories import Program, run_trajectory

from oracles import random_state


def test_layout_examples():
    lay = make_layout([1, 1])
    assert [r.offset for r in lay.registers] == [0, 4] and lay.total_physical == 8
    assert make_layout([6]).total_physical == 14
    lay = make_layout([2, 3])
    assert [r.offset for r in lay.registers] == [0, 6] and lay.total_physical == 14
    assert lay.total_logical == 5 and str(lay) == "2,3"
    assert lay.locate(3) == (1, 1)
    assert parse_layout("1, 2") == make_layout([1, 2])
    with pytest.raises(ValueError):
        make_layout([])
    with pytest.raises(ValueError):
        make_layout([0, 1])


LAYOUTS = [[1, 1], [2, 1], [1, 2]]


def all_gates(total):
    for i in range(total):
        yield Gate("not", (i,))
        yield Gate("h", (i,))
        yield Gate("phase", (i,), 0.9)
    for i, j in itertools.permutations(range(total), 2):
        yield Gate("cnot", (i, j))
        yield Gate("cphase", (i, j), -2.2)
        yield Gate("cphase", (i, j), math.pi)


@pytest.mark.parametrize("widths", LAYOUTS)
@pytest.mark.parametrize("sequential", [False, True])
def test_global_gates_match_targets(widths, sequential):
    lay = make_layout(widths)
    for gate in all_gates(lay.total_logical):
        action, leak = logical_action(compile_global(gate, lay, sequential), lay)
        assert leak < 1e-10, gate
        assert phase_distance(action, gate_matrix(gate, lay.total_logical)) < 1e-10, gate


def test_cross_register_cnot_structure():
    lay = make_layout([1, 1])
    sched = compile_global(Gate("cnot", (0, 1)), lay)
    labels = [p.label for p in sched.pulses]
    assert labels == ["z", "x", "z", "h_ent", "z", "x", "z"]
    assert sched.total_duration == pytest.approx(TAU_CNOT)
    intra = compile_global(Gate("cnot", (0, 1)), make_layout([2, 1]))
    assert intra.total_duration == pytest.approx(TAU_CNOT)


def test_cp_pi_across_registers():
    lay = make_layout([1, 1])
    action, _ = logical_action(compile_global(Gate("cp_pi", (0, 1)), lay), lay)
    assert phase_distance(action, np.diag([1, 1, 1, -1])) < 1e-12
    with pytest.raises(ValueError):
        compile_global(Gate("cp_pi", (0, 1)), make_layout([2]))
    with pytest.raises(ValueError):
        compile_global(Gate("cnot", (0, 5)), lay)


def test_recovery_for_examples():
    lay = make_layout([1, 1])
    rec = recovery_for(5, lay)
    support = set().union(*(p.hamiltonian.support for p in rec.pulses))
    assert support == {4, 5, 6, 7}
    assert rec.total_duration == pytest.approx(13 * math.pi / 2)
    assert recovery_for(3, make_layout([6])).total_duration == pytest.approx(24 * math.pi)
    with pytest.raises(ValueError):
        recovery_for(8, lay)


def test_recoveries_in_different_registers_commute():
    lay = make_layout([1, 1])
    a, b = recovery_for(1, lay), recovery_for(6, lay)
    ua, ub = unitary_of(a, 8), unitary_of(b, 8)
    assert np.allclose(ua @ ub, ub @ ua, atol=1e-12)


def test_recovery_is_confined_to_register():
    lay = make_layout([2, 1, 1])
    for alpha in range(lay.total_physical):
        reg = lay.registers[lay.register_of(alpha)]
        for p in recovery_for(alpha, lay).pulses:
            assert p.hamiltonian.support_mask & ~reg.mask == 0


def random_encoded(lay, rng):
    return encode_layout(random_state(rng, lay.total_logical), lay)


def test_simultaneous_jumps_in_both_registers_are_corrected():
    lay = make_layout([1, 1])
    rng = np.random.default_rng(8)
    idle = GateSchedule(compile_global(Gate("h", (0,)), lay).pulses)
    for a in range(4):
        for b in range(4, 8):
            psi = random_encoded(lay, rng)
            for order in ((a, b), (b, a)):
                prog = Program(idle, 1, psi, lay)
                t = rng.uniform(0, idle.total_duration)
                res = run_trajectory(prog, 0.0, forced_jumps=[(t, order[0]), (t, order[1])])
                assert res.fidelities[-1] > 1 - 1e-9
                assert not any(e.during_recovery for e in res.jumps)


def test_successive_jumps_in_both_registers_are_corrected():
    lay = make_layout([1, 1])
    rng = np.random.default_rng(9)
    step = compile_program([Gate("h", (0,)), Gate("cnot", (0, 1)), Gate("phase", (1,), 0.4)], lay)
    for _ in range(20):
        a, b = rng.integers(0, 4), rng.integers(4, 8)
        t1, t2 = sorted(rng.uniform(0, step.total_duration, 2))
        prog = Program(step, 2, random_encoded(lay, rng), lay)
        res = run_trajectory(prog, 0.0, forced_jumps=[(t1, int(a)), (t2, int(b))])
        assert res.fidelities[-1] > 1 - 1e-9


def test_mid_entangling_pulse_recovery():
    lay = make_layout([1, 1])
    rng = np.random.default_rng(10)
    pulse = compile_global(Gate("cp_pi", (0, 1)), lay).pulses[0]
    for _ in range(30):
        psi = random_encoded(lay, rng)
        want = psi.copy()
        evolve_inplace(want, pulse.hamiltonian, pulse.duration)
        s = rng.uniform(0, pulse.duration)
        alpha = int(rng.integers(0, 8))
        for recovery in (rewind_recovery(pulse, s, (alpha,), lay), recovery_for(alpha, lay, coupled={0, 1})):
            got = psi.copy()
            evolve_inplace(got, pulse.hamiltonian, s)
            got, w = apply_jump(got, alpha)
            got /= math.sqrt(w)
            for p in recovery.pulses:
                evolve_inplace(got, p.hamiltonian, p.duration)
            evolve_inplace(got, pulse.hamiltonian, pulse.duration - s)
            assert fidelity(got, want) > 1 - 1e-9


def test_rewind_rejects_two_decays_in_one_register():
    lay = make_layout([1, 1])
    pulse = compile_global(Gate("cp_pi", (0, 1)), lay).pulses[0]
    with pytest.raises(ValueError):
        rewind_recovery(pulse, 0.1, (0, 2), lay)


def test_block_rate_examples():
    k = 1e-3
    assert block_rate(make_layout([1, 1]), k) == pytest.approx(52 * math.pi * k**2)
    assert block_rate(make_layout([6]), k) == pytest.approx((7 * k) ** 2 * 24 * math.pi)
    assert block_fidelity(make_layout([1, 1]), 0.0, 100.0, 30) == 1
    assert recovery_duration(4) == pytest.approx(13 * math.pi / 2)


def test_speed_bound():
    k = 2 / (3 * math.pi) * 1e-4
    assert cnot_speed_bound(6, k) == pytest.approx(206.08, abs=0.01)
    assert cnot_admissible(6, k)
    assert cnot_speed_bound(1, 0.01) == pytest.approx(1 / (32 * 0.01))
    assert cnot_speed_bound(3, 1e-3) > cnot_speed_bound(3, 2e-3)
    with pytest.raises(ValueError):
        cnot_speed_bound(6, 0.0)
