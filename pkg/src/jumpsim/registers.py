"""Blockwise encoding: several KL registers side by side.

Register 0 occupies the lowest physical qubits. Logical qubits are numbered
globally in the same order, so global logical qubit 0 is logical qubit 0 of
register 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .jumpcodes import kl_basis
from .statevec import evolve_inplace
from .pulsegates import (
    TAU_CNOT,
    Gate,
    GateSchedule,
    LogicalTarget,
    Pulse,
    compile_cp_pi,
    compile_gate,
    compile_recovery_on,
    recovery_duration,
    wrap_angle,
)


@dataclass(frozen=True)
class Register:
    n_L: int
    offset: int
    logical_offset: int

    @property
    def n_reg(self) -> int:
        return 2 * self.n_L + 2

    @property
    def qubits(self) -> range:
        return range(self.offset, self.offset + self.n_reg)

    @property
    def mask(self) -> int:
        return ((1 << self.n_reg) - 1) << self.offset

    @property
    def target(self) -> LogicalTarget:
        return LogicalTarget(self.n_L, self.offset)


@dataclass(frozen=True)
class RegisterLayout:
    registers: tuple[Register, ...]

    @property
    def total_physical(self) -> int:
        last = self.registers[-1]
        return last.offset + last.n_reg

    @property
    def total_logical(self) -> int:
        last = self.registers[-1]
        return last.logical_offset + last.n_L

    @property
    def widths(self) -> tuple[int, ...]:
        return tuple(r.n_L for r in self.registers)

    def __str__(self):
        return ",".join(str(w) for w in self.widths)

    def locate(self, logical: int) -> tuple[int, int]:
        """(register index, local logical index) of a global logical qubit."""
        for k, reg in enumerate(self.registers):
            if reg.logical_offset <= logical < reg.logical_offset + reg.n_L:
                return k, logical - reg.logical_offset
        raise ValueError(f"logical qubit {logical} outside layout {self}")

    def register_of(self, qubit: int) -> int:
        for k, reg in enumerate(self.registers):
            if reg.offset <= qubit < reg.offset + reg.n_reg:
                return k
        raise ValueError(f"physical qubit {qubit} outside layout {self}")

    def registers_touching(self, mask: int) -> frozenset[int]:
        return frozenset(k for k, reg in enumerate(self.registers) if mask & reg.mask)


def make_layout(widths: Iterable[int]) -> RegisterLayout:
    widths = [int(w) for w in widths]
    if not widths:
        raise ValueError("layout needs at least one register")
    regs = []
    offset = logical = 0
    for w in widths:
        if w < 1:
            raise ValueError(f"register width must be >= 1, got {w}")
        regs.append(Register(w, offset, logical))
        offset += 2 * w + 2
        logical += w
    return RegisterLayout(tuple(regs))


def parse_layout(text: str) -> RegisterLayout:
    return make_layout(int(part) for part in text.split(",") if part.strip())


def _cp_pi(layout: RegisterLayout, i: int, j: int, sequential: bool) -> GateSchedule:
    (ra, ja), (rb, jb) = layout.locate(i), layout.locate(j)
    a, b = layout.registers[ra], layout.registers[rb]
    if a.offset < b.offset:
        a, b, ja, jb = b, a, jb, ja
    return compile_cp_pi(ja, jb, a.n_L, b.n_L, a.offset, b.offset, sequential)


def compile_global(gate: Gate, layout: RegisterLayout, sequential: bool = False) -> GateSchedule:
    """Compile a gate on global logical indices.

    Gates inside one register use that register's pulse library. Across
    registers, ``cp_pi`` is the entangling pulse, CNOT is Hadamard-conjugated
    ``cp_pi`` and a general controlled phase ``p`` is
    ``Phase_i(p/2) Phase_j(p/2) CNOT Phase_j(-p/2) CNOT``.
    """
    if len(gate.qubits) > 2:
        raise ValueError("gates act on at most two logical qubits")
    located = [layout.locate(q) for q in gate.qubits]
    regs = {r for r, _ in located}
    if len(regs) == 1 and gate.kind != "cp_pi":
        (r,) = regs
        local = Gate(gate.kind, tuple(loc for _, loc in located), gate.angle)
        return compile_gate(local, layout.registers[r].target)
    if gate.kind == "cp_pi":
        if len(regs) != 2:
            raise ValueError("cp_pi couples logical qubits of two different registers")
        return _cp_pi(layout, *gate.qubits, sequential)
    i, j = gate.qubits
    if gate.kind == "cnot":
        h = compile_global(Gate("h", (j,)), layout)
        sched = GateSchedule.concat([h, _cp_pi(layout, i, j, sequential), h])
    elif gate.kind == "cphase":
        phi = wrap_angle(gate.angle)
        if abs(phi - math.pi) < 1e-14:
            sched = _cp_pi(layout, i, j, sequential)
        else:
            cnot = compile_global(Gate("cnot", (i, j)), layout, sequential)
            sched = GateSchedule.concat(
                [
                    compile_global(Gate("phase", (i,), phi / 2), layout),
                    compile_global(Gate("phase", (j,), phi / 2), layout),
                    cnot,
                    compile_global(Gate("phase", (j,), -phi / 2), layout),
                    cnot,
                ]
            )
    else:
        raise ValueError(f"unknown two-register gate kind {gate.kind!r}")
    sched.markers = [(0, str(gate))]
    return sched


def compile_program(gates: Sequence[Gate], layout: RegisterLayout, sequential: bool = False) -> GateSchedule:
    return GateSchedule.concat(compile_global(g, layout, sequential) for g in gates)


def recovery_for(alpha: int, layout: RegisterLayout, coupled: Iterable[int] = ()) -> GateSchedule:
    """Recovery for a decay of physical qubit ``alpha``.

    Normally confined to ``alpha``'s register. ``coupled`` lists registers
    entangled with it by an interrupted inter-register pulse; the recovery
    then spans all their qubits jointly.
    """
    if not 0 <= alpha < layout.total_physical:
        raise ValueError(f"qubit {alpha} outside layout {layout}")
    group = {layout.register_of(alpha), *coupled}
    qubits = [q for k in sorted(group) for q in layout.registers[k].qubits]
    return compile_recovery_on(alpha, qubits)


def logical_basis_states(layout: RegisterLayout) -> np.ndarray:
    """Columns are the encoded images of global logical basis states (bit g = logical qubit g)."""
    per_reg = []
    for reg in layout.registers:
        enc = kl_basis(reg.n_L)
        per_reg.append([enc.basis_state(s) for s in range(2**reg.n_L)])
    cols = []
    for g in range(2**layout.total_logical):
        vec = np.ones(1, dtype=complex)
        for reg, states in zip(layout.registers, per_reg):
            local = (g >> reg.logical_offset) & ((1 << reg.n_L) - 1)
            vec = np.kron(states[local], vec)
        cols.append(vec)
    return np.array(cols).T


def encode_layout(logical: np.ndarray, layout: RegisterLayout) -> np.ndarray:
    logical = np.asarray(logical, dtype=complex)
    if logical.shape != (2**layout.total_logical,):
        raise ValueError(f"expected {2**layout.total_logical} logical amplitudes")
    return logical_basis_states(layout) @ logical


def logical_action(schedule: GateSchedule, layout: RegisterLayout) -> tuple[np.ndarray, float]:
    """Matrix of ``schedule`` on the logical space and the largest norm leaked out of it."""
    basis = logical_basis_states(layout)
    image = basis.copy()
    for col in range(image.shape[1]):
        psi = np.ascontiguousarray(image[:, col])
        for pulse in schedule.pulses:
            evolve_inplace(psi, pulse.hamiltonian, pulse.duration)
        image[:, col] = psi
    action = basis.conj().T @ image
    leak = float(np.max(np.linalg.norm(image - basis @ action, axis=0)))
    return action, leak


def rewind_recovery(pulse: Pulse, elapsed: float, alphas: Sequence[int], layout: RegisterLayout) -> GateSchedule:
    """Recovery for decays of ``alphas`` that struck ``elapsed`` into a cross-register pulse.

    The pulse is diagonal, so each decay commutes through it with ``Z`` of
    the decayed qubit pinned to -1. The schedule runs the pinned Hamiltonian
    backwards for ``elapsed``, recovers every hit register on its own, then
    re-applies the elapsed part. At most one decay per register.
    """
    if not pulse.hamiltonian.is_diagonal:
        raise ValueError("rewinding needs a diagonal pulse")
    homes = [layout.register_of(a) for a in alphas]
    if len(set(homes)) != len(homes):
        raise ValueError("two decays in one register cannot be recovered")
    undo = pulse.hamiltonian
    for a in alphas:
        undo = undo.pinned(a, -1)
    parts = []
    if undo.terms:
        parts.append(GateSchedule([Pulse(-undo, elapsed, "rewind")]))
    parts += [recovery_for(a, layout) for a in alphas]
    parts.append(GateSchedule([Pulse(pulse.hamiltonian, elapsed, "replay")]))
    sched = GateSchedule.concat(parts)
    sched.name = "rewind(" + ",".join(str(a) for a in alphas) + ")"
    return sched


def block_rate(layout: RegisterLayout, kappa: float) -> float:
    """Fidelity decay rate from decays that hit a register during its own recovery."""
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    return (kappa / 2) ** 2 * math.fsum(recovery_duration(r.n_reg) * r.n_reg**2 for r in layout.registers)


def block_fidelity(layout: RegisterLayout, kappa: float, tau_it: float, t: float) -> float:
    return math.exp(-block_rate(layout, kappa) * tau_it * t)


def cnot_speed_bound(n_L: int, kappa: float) -> float:
    """Upper scale ``n_L / (4 kappa (n_L+1)^3)`` that the CNOT duration must stay well below."""
    if kappa <= 0:
        raise ValueError("speed bound needs kappa > 0")
    return n_L / (4 * kappa * (n_L + 1) ** 3)


def cnot_admissible(n_L: int, kappa: float, tau_cnot: float = TAU_CNOT, margin: float = 10.0) -> bool:
    """True when ``tau_cnot`` sits at least ``margin`` times below the bound."""
    return tau_cnot * margin <= cnot_speed_bound(n_L, kappa)
