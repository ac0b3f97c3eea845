"""Pairing jump codes, the addressable KL subspace and recovery circuits.

A pairing code on ``n_q`` qubits has one code word ``(|b> + |~b>)/sqrt(2)``
for every complementary pair of bit strings with exactly ``n_q/2`` ones.
Code words are stored by their representative ``b`` (the member of the pair
whose top bit is 0), so even 14-qubit codes stay cheap.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .statevec import fidelity, num_qubits

SQRT_HALF = np.sqrt(0.5)

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)


@dataclass(frozen=True)
class JumpCode:
    n_q: int
    representatives: np.ndarray = field(repr=False)

    @property
    def dimension(self) -> int:
        return len(self.representatives)

    @property
    def complements(self) -> np.ndarray:
        return self.representatives ^ ((1 << self.n_q) - 1)

    def codeword(self, k: int) -> np.ndarray:
        psi = np.zeros(2**self.n_q, dtype=complex)
        psi[self.representatives[k]] = SQRT_HALF
        psi[self.complements[k]] = SQRT_HALF
        return psi

    def codeword_matrix(self) -> np.ndarray:
        """Dense ``2**n_q x dim`` matrix whose columns are the code words."""
        if self.n_q > 12:
            raise ValueError("dense code-word matrix limited to n_q <= 12")
        out = np.zeros((2**self.n_q, self.dimension), dtype=complex)
        cols = np.arange(self.dimension)
        out[self.representatives, cols] = SQRT_HALF
        out[self.complements, cols] = SQRT_HALF
        return out

    def coordinates(self, state: np.ndarray) -> np.ndarray:
        return (state[self.representatives] + state[self.complements]) * SQRT_HALF


def pairing_code_basis(n_q: int) -> JumpCode:
    if n_q < 2 or n_q % 2:
        raise ValueError(f"pairing codes need an even n_q >= 2, got {n_q}")
    reps = [b for b in range(1 << (n_q - 1)) if b.bit_count() == n_q // 2]
    code = JumpCode(n_q, np.array(reps, dtype=np.int64))
    assert code.dimension == comb(n_q, n_q // 2) // 2
    return code


def code_span_residual(state: np.ndarray, code: JumpCode) -> float:
    """Squared norm of the part of ``state`` outside the code-word span."""
    if num_qubits(state) != code.n_q:
        raise ValueError("state and code sizes differ")
    total = float(np.vdot(state, state).real)
    inside = float(np.sum(np.abs(code.coordinates(state)) ** 2))
    return max(total - inside, 0.0)


@dataclass(frozen=True)
class KLEncoding:
    """Logical basis with one individually addressable pair per logical qubit.

    Logical bit ``i`` sits on physical pair ``(2i+3, 2i+2)``: ``|01>`` for 0
    and ``|10>`` for 1 in the first branch. Pair ``(1, 0)`` is ``|01>`` in the
    first branch, and the second branch is the bitwise complement.
    """

    n_L: int
    first_branch: np.ndarray = field(repr=False)

    @property
    def n_q(self) -> int:
        return 2 * self.n_L + 2

    @property
    def second_branch(self) -> np.ndarray:
        return self.first_branch ^ ((1 << self.n_q) - 1)

    def basis_state(self, s: int | str) -> np.ndarray:
        if isinstance(s, str):
            if len(s) != self.n_L:
                raise ValueError(f"logical string {s!r} has wrong length")
            s = int(s, 2)
        psi = np.zeros(2**self.n_q, dtype=complex)
        psi[self.first_branch[s]] = SQRT_HALF
        psi[self.second_branch[s]] = SQRT_HALF
        return psi

    def basis(self) -> dict[str, np.ndarray]:
        return {format(s, f"0{self.n_L}b"): self.basis_state(s) for s in range(2**self.n_L)}


def kl_basis(n_L: int) -> KLEncoding:
    if n_L < 1:
        raise ValueError("need at least one logical qubit")
    first = np.full(2**n_L, 1, dtype=np.int64)  # pair (1,0) = |01>
    s = np.arange(2**n_L)
    for i in range(n_L):
        bit = (s >> i) & 1
        first += np.where(bit == 1, 1 << (2 * i + 3), 1 << (2 * i + 2))
    return KLEncoding(n_L, first)


def encode(logical: np.ndarray, enc: KLEncoding) -> np.ndarray:
    logical = np.asarray(logical, dtype=complex)
    if logical.shape != (2**enc.n_L,):
        raise ValueError(f"expected {2**enc.n_L} logical amplitudes, got {logical.shape}")
    psi = np.zeros(2**enc.n_q, dtype=complex)
    psi[enc.first_branch] = logical * SQRT_HALF
    psi[enc.second_branch] += logical * SQRT_HALF
    return psi


def decode(physical: np.ndarray, enc: KLEncoding) -> tuple[np.ndarray, float]:
    """Logical amplitudes and the squared norm left outside the KL span."""
    if num_qubits(physical) != enc.n_q:
        raise ValueError("state and encoding sizes differ")
    logical = (physical[enc.first_branch] + physical[enc.second_branch]) * SQRT_HALF
    total = float(np.vdot(physical, physical).real)
    residual = max(total - float(np.sum(np.abs(logical) ** 2)), 0.0)
    return logical, residual


@dataclass(frozen=True)
class RecoveryCircuit:
    """``R_alpha = X_alpha (prod_beta CNOT_{alpha,beta}) H_alpha``, listed in time order."""

    alpha: int
    n_q: int
    gates: tuple[tuple, ...]


def recovery_circuit(alpha: int, n_q: int) -> RecoveryCircuit:
    if not 0 <= alpha < n_q:
        raise ValueError(f"qubit {alpha} outside {n_q}-qubit code")
    gates = [("H", alpha)]
    gates += [("CNOT", alpha, beta) for beta in range(n_q) if beta != alpha]
    gates.append(("X", alpha))
    return RecoveryCircuit(alpha, n_q, tuple(gates))


def _gate_matrix(gate: tuple, n: int) -> np.ndarray:
    dim = 2**n
    idx = np.arange(dim)
    kind = gate[0]
    if kind == "CNOT":
        c, t = gate[1], gate[2]
        perm = np.where((idx >> c) & 1, idx ^ (1 << t), idx)
        out = np.zeros((dim, dim), dtype=complex)
        out[perm, idx] = 1.0
        return out
    single = _H if kind == "H" else _X
    q = gate[1]
    return np.kron(np.kron(np.eye(2 ** (n - 1 - q)), single), np.eye(2**q))


def circuit_matrix(circuit: RecoveryCircuit) -> np.ndarray:
    """Dense unitary of an ideal recovery circuit (``n_q <= 10``)."""
    if circuit.n_q > 10:
        raise ValueError("dense recovery matrix limited to n_q <= 10")
    out = np.eye(2**circuit.n_q, dtype=complex)
    for gate in circuit.gates:
        out = _gate_matrix(gate, circuit.n_q) @ out
    return out


def jump_matrix(alpha: int, n: int) -> np.ndarray:
    lower = np.array([[0, 1], [0, 0]], dtype=complex)
    return np.kron(np.kron(np.eye(2 ** (n - 1 - alpha)), lower), np.eye(2**alpha))


@dataclass
class CodeReport:
    n_q: int
    dimension: int
    expected_dimension: int
    orthonormality_residual: float
    worst_recovery_fidelity: float

    @property
    def ok(self) -> bool:
        return (
            self.dimension == self.expected_dimension
            and self.orthonormality_residual <= 1e-12
            and self.worst_recovery_fidelity >= 1 - 1e-10
        )


def verify_code(n_q: int, trials: int = 100, seed: int = 0) -> CodeReport:
    """Dimension, orthonormality and jump-then-recover fidelity for a pairing code."""
    code = pairing_code_basis(n_q)
    basis = code.codeword_matrix()
    gram = basis.conj().T @ basis
    ortho = float(np.max(np.abs(gram - np.eye(code.dimension))))
    rng = np.random.default_rng(seed)
    coeffs = rng.normal(size=(code.dimension, trials)) + 1j * rng.normal(size=(code.dimension, trials))
    states = basis @ (coeffs / np.linalg.norm(coeffs, axis=0))
    worst = 1.0
    for alpha in range(n_q):
        recovered = circuit_matrix(recovery_circuit(alpha, n_q)) @ jump_matrix(alpha, n_q) @ states
        for k in range(trials):
            worst = min(worst, fidelity(states[:, k], recovered[:, k]))
    return CodeReport(n_q, code.dimension, comb(n_q, n_q // 2) // 2, ortho, worst)
