"""Hamiltonian pulse library and gate compiler.

Gates are compiled against a *target*, which supplies the three driving
Hamiltonians ``x(i)``, ``z(i)`` and ``zz(i, j)``. A :class:`LogicalTarget`
maps them onto the exchange and Ising couplings that keep a KL register
inside its code space; a :class:`PhysicalTarget` drives bare qubits (used
for unencoded runs and for recovery circuits).

Pulse sequences, all equal to the target gate up to a global phase:

=========  ===========================================  ===============
gate       pulses                                        duration
=========  ===========================================  ===============
NOT        (x, pi/2)                                     pi/2
Phase(p)   (sign(p) z, |p|/2)                            |p|/2
Hadamard   (z, pi/4) (x, pi/4) (z, pi/4)                 3pi/4
CPhase(p)  (sign(p) (z_i + z_j - zz_ij), |p|/4)          |p|/4
CNOT       H(t), CPhase(pi), H(t)                        7pi/4
=========  ===========================================  ===============

Angles are wrapped to ``(-pi, pi]`` and negative angles flip the sign of
the drive, so no pulse is longer than it has to be.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .statevec import PauliSum, T, X, Z, ZZ

TAU_CNOT = 7 * math.pi / 4
TAU_HADAMARD = 3 * math.pi / 4
TAU_NOT = math.pi / 2
ANGLE_EPS = 1e-14


def recovery_duration(n_q: int) -> float:
    return n_q * TAU_CNOT - math.pi / 2


@dataclass(frozen=True)
class Pulse:
    hamiltonian: PauliSum
    duration: float
    label: str = ""

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError(f"pulse duration must be positive, got {self.duration}")


@dataclass
class GateSchedule:
    """Ordered pulses; ``markers`` holds ``(first pulse index, gate label)``."""

    pulses: list[Pulse] = field(default_factory=list)
    markers: list[tuple[int, str]] = field(default_factory=list)
    name: str = ""

    @property
    def total_duration(self) -> float:
        return math.fsum(p.duration for p in self.pulses)

    def __len__(self):
        return len(self.pulses)

    def extend(self, other: GateSchedule) -> GateSchedule:
        base = len(self.pulses)
        self.pulses.extend(other.pulses)
        self.markers.extend((base + i, label) for i, label in other.markers)
        return self

    def __add__(self, other: GateSchedule) -> GateSchedule:
        return GateSchedule(list(self.pulses), list(self.markers), self.name).extend(other)

    @classmethod
    def concat(cls, parts: Iterable[GateSchedule]) -> GateSchedule:
        out = cls()
        for part in parts:
            out.extend(part)
        return out

    @property
    def gate_count(self) -> int:
        return len(self.markers)

    def describe(self) -> str:
        starts = {i: label for i, label in self.markers}
        lines = []
        for i, p in enumerate(self.pulses):
            if i in starts:
                lines.append(f"# {starts[i]}")
            lines.append(f"  {p.duration / math.pi:8.5f} pi  {p.label:<10s} {p.hamiltonian}")
        lines.append(f"total {self.total_duration / math.pi:.5f} pi over {len(self.pulses)} pulses")
        return "\n".join(lines)


@dataclass(frozen=True)
class Gate:
    """Logical gate: kind in {not, h, phase, cphase, cnot}."""

    kind: str
    qubits: tuple[int, ...]
    angle: float | None = None

    def __str__(self):
        args = ",".join(str(q) for q in self.qubits)
        if self.angle is not None:
            args += f";{self.angle / math.pi:.6g}pi"
        return f"{self.kind}({args})"


GATE_ARITY = {"not": 1, "h": 1, "phase": 1, "cphase": 2, "cnot": 2}


@dataclass(frozen=True)
class LogicalTarget:
    """KL register of ``n_L`` logical qubits starting at physical qubit ``offset``."""

    n_L: int
    offset: int = 0

    @property
    def width(self) -> int:
        return self.n_L

    @property
    def n_physical(self) -> int:
        return 2 * self.n_L + 2

    def _check(self, *idx):
        for i in idx:
            if not 0 <= i < self.n_L:
                raise ValueError(f"logical qubit {i} outside register of {self.n_L}")

    def x(self, i: int) -> PauliSum:
        return logical_X(i, self.offset, self.n_L)

    def z(self, i: int) -> PauliSum:
        return logical_Z(i, self.offset, self.n_L)

    def zz(self, i: int, j: int) -> PauliSum:
        return logical_ZZ(i, j, self.offset, self.n_L)


@dataclass(frozen=True)
class PhysicalTarget:
    """Bare qubits ``offset .. offset + n - 1``, or an explicit ``qubits`` list."""

    n: int
    offset: int = 0
    qubits: tuple[int, ...] | None = None

    @classmethod
    def on(cls, qubits) -> PhysicalTarget:
        qubits = tuple(int(q) for q in qubits)
        return cls(len(qubits), 0, qubits)

    @property
    def width(self) -> int:
        return self.n

    def _check(self, *idx):
        for i in idx:
            if not 0 <= i < self.n:
                raise ValueError(f"qubit {i} outside register of {self.n}")

    def physical(self, i: int) -> int:
        self._check(i)
        return self.qubits[i] if self.qubits is not None else self.offset + i

    def x(self, i: int) -> PauliSum:
        return X(self.physical(i))

    def z(self, i: int) -> PauliSum:
        return Z(self.physical(i))

    def zz(self, i: int, j: int) -> PauliSum:
        if i == j:
            raise ValueError("zz needs two distinct qubits")
        return ZZ(self.physical(i), self.physical(j))


def logical_X(i: int, offset: int = 0, n_L: int | None = None) -> PauliSum:
    if i < 0 or (n_L is not None and i >= n_L):
        raise ValueError(f"logical index {i} out of range")
    return T(offset + 2 * i + 3, offset + 2 * i + 2)


def logical_Z(i: int, offset: int = 0, n_L: int | None = None) -> PauliSum:
    if i < 0 or (n_L is not None and i >= n_L):
        raise ValueError(f"logical index {i} out of range")
    return ZZ(offset + 2 * i + 3, offset + 1)


def logical_ZZ(i: int, j: int, offset: int = 0, n_L: int | None = None) -> PauliSum:
    if i == j:
        raise ValueError("logical ZZ needs two distinct qubits")
    for k in (i, j):
        if k < 0 or (n_L is not None and k >= n_L):
            raise ValueError(f"logical index {k} out of range")
    return ZZ(offset + 2 * i + 3, offset + 2 * j + 3)


def ent_hamiltonian(j_a: int, j_b: int, nL_a: int, nL_b: int, offset_a: int, offset_b: int) -> PauliSum:
    """Four-term Ising coupling whose pi/4 pulse is a controlled-pi phase between registers."""
    for j, n in ((j_a, nL_a), (j_b, nL_b)):
        if not 0 <= j < n:
            raise ValueError(f"logical index {j} outside register of {n}")
    a_range = range(offset_a, offset_a + 2 * nL_a + 2)
    b_range = range(offset_b, offset_b + 2 * nL_b + 2)
    if set(a_range) & set(b_range):
        raise ValueError("registers overlap")
    a, b = offset_a, offset_b
    return (
        ZZ(a, b)
        + ZZ(a + 2 * j_a + 2, b + 1)
        + ZZ(a + 1, b + 2 * j_b + 2)
        + ZZ(a + 2 * j_a + 3, b + 2 * j_b + 3)
    )


def wrap_angle(phi: float) -> float:
    """Representative of ``phi`` modulo 2 pi in ``(-pi, pi]``."""
    w = math.remainder(phi, 2 * math.pi)
    return math.pi if w == -math.pi else w


def _signed(h: PauliSum, angle: float) -> PauliSum:
    return h if angle > 0 else -h


def compile_gate(gate: Gate, target) -> GateSchedule:
    kind = gate.kind
    if kind not in GATE_ARITY:
        raise ValueError(f"unknown gate kind {kind!r}")
    if len(gate.qubits) != GATE_ARITY[kind]:
        raise ValueError(f"{kind} takes {GATE_ARITY[kind]} qubits")
    target._check(*gate.qubits)
    label = str(gate)
    if kind == "not":
        (i,) = gate.qubits
        sched = GateSchedule([Pulse(target.x(i), TAU_NOT, "x")])
    elif kind == "h":
        (i,) = gate.qubits
        quarter = math.pi / 4
        sched = GateSchedule(
            [Pulse(target.z(i), quarter, "z"), Pulse(target.x(i), quarter, "x"), Pulse(target.z(i), quarter, "z")]
        )
    elif kind == "phase":
        (i,) = gate.qubits
        phi = wrap_angle(gate.angle)
        if abs(phi) < ANGLE_EPS:
            return GateSchedule()
        sched = GateSchedule([Pulse(_signed(target.z(i), phi), abs(phi) / 2, "z")])
    elif kind == "cphase":
        i, j = gate.qubits
        if i == j:
            raise ValueError("controlled phase needs two distinct qubits")
        phi = wrap_angle(gate.angle)
        if abs(phi) < ANGLE_EPS:
            return GateSchedule()
        h = target.z(i) + target.z(j) - target.zz(i, j)
        sched = GateSchedule([Pulse(_signed(h, phi), abs(phi) / 4, "z+z-zz")])
    else:  # cnot
        c, t = gate.qubits
        if c == t:
            raise ValueError("CNOT needs two distinct qubits")
        sched = GateSchedule.concat(
            [
                compile_gate(Gate("h", (t,)), target),
                compile_gate(Gate("cphase", (c, t), math.pi), target),
                compile_gate(Gate("h", (t,)), target),
            ]
        )
        sched.markers = []
    sched.markers = [(0, label)]
    return sched


def compile_cp_pi(
    j_a: int, j_b: int, nL_a: int, nL_b: int, offset_a: int, offset_b: int, sequential: bool = False
) -> GateSchedule:
    """Controlled-pi phase between logical qubits of two different registers."""
    h = ent_hamiltonian(j_a, j_b, nL_a, nL_b, offset_a, offset_b)
    label = f"cp_pi(a{j_a},b{j_b})"
    quarter = math.pi / 4
    if sequential:
        pulses = [Pulse(PauliSum((term,)), quarter, "zz") for term in h.terms]
    else:
        pulses = [Pulse(h, quarter, "h_ent")]
    return GateSchedule(pulses, [(0, label)])


def compile_recovery(alpha: int, n_q: int, offset: int = 0) -> GateSchedule:
    """Physical-pulse realisation of ``R_alpha`` on qubits ``offset .. offset+n_q-1``."""
    if not 0 <= alpha < n_q:
        raise ValueError(f"qubit {alpha} outside {n_q}-qubit register")
    return compile_recovery_on(offset + alpha, range(offset, offset + n_q))


def compile_recovery_on(alpha: int, qubits) -> GateSchedule:
    """``R_alpha`` over an explicit set of physical qubits containing ``alpha``.

    CNOT targets run in ascending physical order; they share the control
    and therefore commute.
    """
    qubits = sorted(int(q) for q in qubits)
    if alpha not in qubits:
        raise ValueError(f"qubit {alpha} not in recovery set {qubits}")
    target = PhysicalTarget.on(qubits)
    a = qubits.index(alpha)
    parts = [compile_gate(Gate("h", (a,)), target)]
    parts += [compile_gate(Gate("cnot", (a, b)), target) for b in range(len(qubits)) if b != a]
    parts.append(compile_gate(Gate("not", (a,)), target))
    sched = GateSchedule.concat(parts)
    sched.name = f"recover({alpha})"
    return sched


def pulse_unitary(pulse: Pulse, n: int) -> np.ndarray:
    """Dense ``exp(-i H tau)``; terms commute, so it factorises term by term."""
    out = np.eye(2**n, dtype=complex)
    for c, p in pulse.hamiltonian.terms:
        theta = c * pulse.duration
        out = (math.cos(theta) * np.eye(2**n) - 1j * math.sin(theta) * p.to_dense(n)) @ out
    return out


MAX_DENSE_QUBITS = 12


def unitary_of(schedule: GateSchedule, n: int) -> np.ndarray:
    """Dense product of the pulse exponentials, first pulse acting first."""
    if n > MAX_DENSE_QUBITS:
        raise ValueError(f"dense unitary limited to {MAX_DENSE_QUBITS} qubits")
    out = np.eye(2**n, dtype=complex)
    for pulse in schedule.pulses:
        out = pulse_unitary(pulse, n) @ out
    return out
