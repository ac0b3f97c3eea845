"""Quantum tent map: dense one-step oracle and its gate-level decomposition.

Position ``x_j = 2 pi j / N`` is stored in the computational basis ``|j>``
of ``n_L`` qubits. Momentum uses the symmetric grid ``n in [-N/2, N/2)``
labelled in two's complement, so the momentum transform is an inverse QFT
with no extra phase corrections.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pulsegates import Gate, GateSchedule, LogicalTarget, PhysicalTarget, compile_gate

REFERENCE_GATE_COUNT = 125
REFERENCE_UNIVERSAL_GATES = 437
REFERENCE_TAU_IT = 67.2 * math.pi
IMAGE_TERMS = 3


@dataclass(frozen=True)
class TentMapParams:
    n_L: int
    T: float
    k: float

    @classmethod
    def default(cls, n_L: int, kT: float = 1.7) -> TentMapParams:
        T = 2 * math.pi / 2**n_L
        return cls(n_L, T, kT / T)

    @property
    def N(self) -> int:
        return 2**self.n_L

    def positions(self) -> np.ndarray:
        return 2 * math.pi * np.arange(self.N) / self.N

    def momenta(self) -> np.ndarray:
        k = np.arange(self.N)
        return np.where(k < self.N // 2, k, k - self.N)


def tent_potential(x):
    """Continuous periodic potential whose force is the tent ``x - pi/2`` / ``3pi/2 - x``."""
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x >= 2 * math.pi)):
        raise ValueError("tent potential is defined on [0, 2 pi)")
    left = -(x**2) / 2 + math.pi * x / 2
    right = x**2 / 2 - 3 * math.pi * x / 2 + math.pi**2
    out = np.where(x < math.pi, left, right)
    return out if out.ndim else float(out)


def tent_force(x):
    x = np.asarray(x, dtype=float)
    return np.where(x < math.pi, x - math.pi / 2, 1.5 * math.pi - x)


MAX_ORACLE_QUBITS = 12


def momentum_transform(params: TentMapParams) -> np.ndarray:
    """``F[n, j] = exp(-i n x_j) / sqrt(N)`` on the symmetric momentum grid."""
    return np.exp(-1j * np.outer(params.momenta(), params.positions())) / math.sqrt(params.N)


def oracle_step(params: TentMapParams) -> np.ndarray:
    if params.n_L > MAX_ORACLE_QUBITS:
        raise ValueError(f"dense oracle limited to {MAX_ORACLE_QUBITS} qubits")
    F = momentum_transform(params)
    kick = np.exp(-1j * params.k * tent_potential(params.positions()))
    kinetic = np.exp(-1j * params.T * params.momenta() ** 2 / 2)
    return F.conj().T @ (kinetic[:, None] * F) * kick[None, :]


def coherent_state(params: TentMapParams, x0: float = 5.35, p0: int = 0) -> np.ndarray:
    """Periodised Gaussian with position variance ``T/2`` centred at ``(x0, p0)``."""
    if not 0 <= x0 < 2 * math.pi:
        raise ValueError("x0 must lie in [0, 2 pi)")
    if params.T <= 0:
        raise ValueError("coherent state needs T > 0")
    x = params.positions()
    env = sum(
        np.exp(-((x - x0 + 2 * math.pi * m) ** 2) / (2 * params.T))
        for m in range(-IMAGE_TERMS, IMAGE_TERMS + 1)
    )
    psi = env * np.exp(1j * p0 * x)
    return psi / np.linalg.norm(psi)


def multilinear_coefficients(values: np.ndarray) -> np.ndarray:
    """Moebius transform: ``values[s] = sum over subsets S of s of coef[S]``."""
    coef = np.array(values, dtype=float)
    n = coef.shape[0].bit_length() - 1
    for b in range(n):
        bit = 1 << b
        idx = np.arange(coef.shape[0])
        upper = idx[(idx & bit) != 0]
        coef[upper] -= coef[upper ^ bit]
    return coef


def diagonal_gates(phases: np.ndarray, qubits: list[int] | None = None, tol: float = 1e-9) -> list[Gate]:
    """Gates realising ``diag(exp(i phases))`` up to a global phase.

    The phase table is expanded as a polynomial in the bits. Linear and
    quadratic monomials become phase and controlled-phase gates; a cubic
    monomial ``x_a x_b x_c`` (a the highest index) uses
    ``x_b x_c = (x_b + x_c - (x_b XOR x_c)) / 2`` with the XOR computed by a
    CNOT pair. Higher orders are rejected.
    """
    phases = np.asarray(phases, dtype=float)
    n = phases.shape[0].bit_length() - 1
    qubits = list(range(n)) if qubits is None else list(qubits)
    coef = multilinear_coefficients(phases)
    singles: dict[int, float] = {}
    pairs: dict[tuple[int, int], float] = {}
    xor_blocks: list[Gate] = []
    for s in range(1, coef.shape[0]):
        c = coef[s]
        bits = [b for b in range(n) if (s >> b) & 1]
        if len(bits) == 1:
            singles[bits[0]] = singles.get(bits[0], 0.0) + c
        elif len(bits) == 2:
            pairs[(bits[0], bits[1])] = pairs.get((bits[0], bits[1]), 0.0) + c
        elif len(bits) == 3:
            b, cq, a = bits
            pairs[(b, a)] = pairs.get((b, a), 0.0) + c / 2
            pairs[(cq, a)] = pairs.get((cq, a), 0.0) + c / 2
            if abs(math.remainder(c / 2, 2 * math.pi)) > tol:
                xor_blocks += [
                    Gate("cnot", (qubits[b], qubits[cq])),
                    Gate("cphase", (qubits[a], qubits[cq]), -c / 2),
                    Gate("cnot", (qubits[b], qubits[cq])),
                ]
        elif abs(math.remainder(c, 2 * math.pi)) > tol:
            raise ValueError(f"phase table has a degree-{len(bits)} component")
    gates = [
        Gate("phase", (qubits[b],), c) for b, c in sorted(singles.items()) if abs(math.remainder(c, 2 * math.pi)) > tol
    ]
    gates += [
        Gate("cphase", (qubits[i], qubits[j]), c)
        for (i, j), c in sorted(pairs.items())
        if abs(math.remainder(c, 2 * math.pi)) > tol
    ]
    return gates + xor_blocks


def qft_gates(n: int, inverse: bool = False) -> list[Gate]:
    """Swap-free QFT network acting as ``QFT * P`` with ``P`` the bit reversal."""
    gates: list[Gate] = []
    for i in range(n):
        gates.append(Gate("h", (i,)))
        for m in range(i + 1, n):
            gates.append(Gate("cphase", (m, i), math.pi / 2 ** (m - i)))
    if inverse:
        gates = [Gate(g.kind, g.qubits, None if g.angle is None else -g.angle) for g in reversed(gates)]
    return gates


def _bit_reverse(values: np.ndarray, n: int) -> np.ndarray:
    idx = np.arange(2**n)
    rev = np.zeros_like(idx)
    for b in range(n):
        rev |= ((idx >> b) & 1) << (n - 1 - b)
    return values[rev]


def circuit_step(params: TentMapParams) -> list[Gate]:
    """One map iteration as Hadamard, phase, controlled-phase and CNOT gates."""
    n = params.n_L
    if n < 2:
        raise ValueError("circuit decomposition needs n_L >= 2")
    kick = -params.k * tent_potential(params.positions())
    kinetic = -params.T * params.momenta().astype(float) ** 2 / 2
    # QFT = Q P, so QFT D QFT^dag = Q (P D P) Q^dag
    return (
        diagonal_gates(kick)
        + qft_gates(n, inverse=True)
        + diagonal_gates(_bit_reverse(kinetic, n))
        + qft_gates(n)
    )


def gate_matrix(gate: Gate, n: int) -> np.ndarray:
    """Dense matrix of an ideal logical gate on ``n`` qubits."""
    dim = 2**n
    idx = np.arange(dim)

    def bit(q):
        return (idx >> q) & 1

    if gate.kind == "phase":
        (q,) = gate.qubits
        return np.diag(np.exp(1j * gate.angle * bit(q)))
    if gate.kind == "cphase":
        a, b = gate.qubits
        return np.diag(np.exp(1j * gate.angle * bit(a) * bit(b)))
    if gate.kind in ("not", "cnot"):
        if gate.kind == "not":
            perm = idx ^ (1 << gate.qubits[0])
        else:
            c, t = gate.qubits
            perm = np.where(bit(c) == 1, idx ^ (1 << t), idx)
        out = np.zeros((dim, dim), dtype=complex)
        out[perm, idx] = 1.0
        return out
    if gate.kind == "h":
        (q,) = gate.qubits
        h = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
        return np.kron(np.kron(np.eye(2 ** (n - 1 - q)), h), np.eye(2**q))
    raise ValueError(f"unknown gate kind {gate.kind!r}")


def circuit_unitary(gates: list[Gate], n: int) -> np.ndarray:
    out = np.eye(2**n, dtype=complex)
    for g in gates:
        out = gate_matrix(g, n) @ out
    return out


def phase_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Spectral-norm distance between ``u`` and ``v`` after aligning the global phase."""
    tr = np.vdot(v, u)
    phase = tr / abs(tr) if abs(tr) > 0 else 1.0
    return float(np.linalg.norm(u - phase * v, 2))


def compile_circuit(gates: list[Gate], target) -> GateSchedule:
    return GateSchedule.concat(compile_gate(g, target) for g in gates)


@dataclass
class CircuitReport:
    n_L: int
    gate_count: int
    pulse_count: int
    tau_it: float
    distance: float | None

    def lines(self) -> list[str]:
        out = [
            f"n_L = {self.n_L}",
            f"gates per iteration: {self.gate_count} (reference {REFERENCE_GATE_COUNT})",
            f"pulses per iteration: {self.pulse_count} (reference {REFERENCE_UNIVERSAL_GATES})",
            f"tau_it = {self.tau_it / math.pi:.4f} pi (reference {REFERENCE_TAU_IT / math.pi:.1f} pi)",
            f"tau_it / n_g = {self.tau_it / self.gate_count / math.pi:.4f} pi",
        ]
        if self.distance is not None:
            out.append(f"circuit vs oracle distance: {self.distance:.3e}")
        return out


def circuit_report(params: TentMapParams, check: bool = True) -> CircuitReport:
    gates = circuit_step(params)
    sched = compile_circuit(gates, LogicalTarget(params.n_L))
    distance = None
    if check:
        distance = phase_distance(circuit_unitary(gates, params.n_L), oracle_step(params))
    return CircuitReport(params.n_L, len(gates), len(sched.pulses), sched.total_duration, distance)


def bare_target(n_L: int) -> PhysicalTarget:
    return PhysicalTarget(n_L)


def tentmap_program(params: TentMapParams, iterations: int, layout=None, x0: float = 5.35):
    """Trajectory program iterating the compiled map.

    Without ``layout`` the map runs on ``n_L`` bare qubits; otherwise on the
    KL-encoded registers of ``layout``, whose logical width must be ``n_L``.
    """
    from .registers import compile_program, encode_layout
    from .trajectories import Program

    gates = circuit_step(params)
    psi = coherent_state(params, x0)
    if layout is None:
        return Program(compile_circuit(gates, bare_target(params.n_L)), iterations, psi)
    if layout.total_logical != params.n_L:
        raise ValueError(f"layout {layout} holds {layout.total_logical} logical qubits, map needs {params.n_L}")
    return Program(compile_program(gates, layout), iterations, encode_layout(psi, layout), layout)
