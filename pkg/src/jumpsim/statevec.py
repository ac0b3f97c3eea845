"""Dense state vectors, commuting Pauli sums and the pulse propagators.

States are plain 1-D ``complex128`` arrays of length ``2**n``. Basis index
bit ``q`` holds qubit ``q``, so the bit string ``"q_{n-1} ... q_1 q_0"``
reads qubit 0 at the right.

Rate convention: ``kappa`` is the jump rate of one excited qubit. The
no-jump generator is ``-iH - (kappa/2) N`` with ``N`` the total excitation
number, and decay channel ``alpha`` fires with intensity
``kappa * <n_alpha>``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import combinations
from typing import Iterable

import numpy as np
from scipy.linalg import expm

from . import kernels

NORM_SLACK = 1e-12

_LETTER_MATRIX = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def num_qubits(state: np.ndarray) -> int:
    dim = state.shape[0]
    n = dim.bit_length() - 1
    if state.ndim != 1 or dim != 1 << n:
        raise ValueError(f"state length {dim} is not a power of two")
    return n


@dataclass(frozen=True)
class PauliString:
    """Tensor product of X/Y/Z letters on an ordered set of distinct qubits."""

    support: tuple[int, ...]
    letters: str

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(int(q) for q in self.support))
        if len(self.support) != len(self.letters):
            raise ValueError("support and letters differ in length")
        if len(set(self.support)) != len(self.support):
            raise ValueError(f"repeated qubit in support {self.support}")
        if any(q < 0 for q in self.support):
            raise ValueError("negative qubit index")
        if any(c not in "XYZ" for c in self.letters):
            raise ValueError(f"invalid Pauli letters {self.letters!r}")

    @cached_property
    def xmask(self) -> int:
        return sum(1 << q for q, c in zip(self.support, self.letters) if c in "XY")

    @cached_property
    def zmask(self) -> int:
        return sum(1 << q for q, c in zip(self.support, self.letters) if c in "YZ")

    @cached_property
    def ny(self) -> int:
        # P = i^ny X^x Z^z, since Y = iXZ
        return self.letters.count("Y")

    @property
    def is_diagonal(self) -> bool:
        return self.xmask == 0

    def commutes_with(self, other: PauliString) -> bool:
        anti = (self.xmask & other.zmask).bit_count() + (self.zmask & other.xmask).bit_count()
        return anti % 2 == 0

    def shifted(self, offset: int) -> PauliString:
        return PauliString(tuple(q + offset for q in self.support), self.letters)

    def to_dense(self, n: int) -> np.ndarray:
        """Explicit ``2**n`` matrix (qubit ``n-1`` is the leftmost kron factor)."""
        if self.support and max(self.support) >= n:
            raise ValueError("support exceeds register")
        letter_of = dict(zip(self.support, self.letters))
        out = np.ones((1, 1), dtype=complex)
        for q in range(n - 1, -1, -1):
            out = np.kron(out, _LETTER_MATRIX[letter_of[q]] if q in letter_of else np.eye(2))
        return out

    def __str__(self):
        return "".join(f"{c}{q}" for q, c in zip(self.support, self.letters))


@dataclass(frozen=True)
class PauliSum:
    """Real combination of pairwise commuting Pauli strings."""

    terms: tuple[tuple[float, PauliString], ...]

    def __post_init__(self):
        terms = tuple((float(c), p) for c, p in self.terms)
        object.__setattr__(self, "terms", terms)
        for (_, a), (_, b) in combinations(terms, 2):
            if not a.commutes_with(b):
                raise ValueError(f"terms {a} and {b} do not commute")

    def __add__(self, other: PauliSum) -> PauliSum:
        return PauliSum(self.terms + other.terms)

    def __neg__(self) -> PauliSum:
        return PauliSum(tuple((-c, p) for c, p in self.terms))

    def __sub__(self, other: PauliSum) -> PauliSum:
        return self + (-other)

    def scaled(self, factor: float) -> PauliSum:
        return PauliSum(tuple((factor * c, p) for c, p in self.terms))

    def shifted(self, offset: int) -> PauliSum:
        return PauliSum(tuple((c, p.shifted(offset)) for c, p in self.terms))

    def pinned(self, qubit: int, z: int) -> PauliSum:
        """Substitute the eigenvalue ``z`` for ``Z`` on ``qubit``; constant terms are dropped."""
        if z not in (1, -1):
            raise ValueError("Z eigenvalue must be +1 or -1")
        out = []
        for c, p in self.terms:
            if qubit not in p.support:
                out.append((c, p))
                continue
            k = p.support.index(qubit)
            if p.letters[k] != "Z":
                raise ValueError(f"term {p} is not diagonal on qubit {qubit}")
            if len(p.support) > 1:
                out.append((c * z, PauliString(p.support[:k] + p.support[k + 1 :], p.letters[:k] + p.letters[k + 1 :])))
        return PauliSum(tuple(out))

    @cached_property
    def support(self) -> tuple[int, ...]:
        return tuple(sorted({q for _, p in self.terms for q in p.support}))

    @cached_property
    def support_mask(self) -> int:
        return sum(1 << q for q in self.support)

    @cached_property
    def is_diagonal(self) -> bool:
        return all(p.is_diagonal for _, p in self.terms)

    @cached_property
    def _diag_signs(self) -> np.ndarray:
        # row p: sign of each term for sign pattern p (bit k set -> term k is -1)
        k = len(self.terms)
        patterns = np.arange(2**k)
        return 1.0 - 2.0 * ((patterns[:, None] >> np.arange(k)) & 1)

    @cached_property
    def _coefs(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms], dtype=np.float64)

    def phase_table(self, tau: float) -> np.ndarray:
        return np.exp(-1j * tau * (self._diag_signs @ self._coefs))

    def sign_pattern(self, dim: int) -> np.ndarray:
        cache = self.__dict__.setdefault("_patterns", {})
        if dim not in cache:
            cache[dim] = kernels.sign_pattern(dim, [p.zmask for _, p in self.terms])
        return cache[dim]

    def local_dense(self) -> np.ndarray:
        """Matrix on the support only; local bit ``b`` is qubit ``support[b]``."""
        relabel = {q: b for b, q in enumerate(self.support)}
        k = len(self.support)
        out = np.zeros((2**k, 2**k), dtype=complex)
        for c, p in self.terms:
            local = PauliString(tuple(relabel[q] for q in p.support), p.letters)
            out += c * local.to_dense(k)
        return out

    @cached_property
    def conserves_excitations(self) -> bool:
        """True when the Hamiltonian commutes with the excitation number."""
        if self.is_diagonal:
            return True
        h = self.local_dense()
        k = len(self.support)
        counts = np.array([bin(s).count("1") for s in range(2**k)], dtype=float)
        return bool(np.allclose(h * counts[None, :], h * counts[:, None], atol=1e-14))

    def to_dense(self, n: int) -> np.ndarray:
        out = np.zeros((2**n, 2**n), dtype=complex)
        for c, p in self.terms:
            out += c * p.to_dense(n)
        return out

    def __str__(self):
        return " + ".join(f"{c:g}*{p}" for c, p in self.terms) or "0"


def pauli_sum(*terms: tuple[float, str, Iterable[int]]) -> PauliSum:
    """Build a PauliSum from ``(coef, letters, qubits)`` triples."""
    return PauliSum(tuple((c, PauliString(tuple(qs), letters)) for c, letters, qs in terms))


ZERO = PauliSum(())


def X(q: int) -> PauliSum:
    return pauli_sum((1.0, "X", (q,)))


def Z(q: int) -> PauliSum:
    return pauli_sum((1.0, "Z", (q,)))


def ZZ(a: int, b: int) -> PauliSum:
    return pauli_sum((1.0, "ZZ", (a, b)))


def T(a: int, b: int) -> PauliSum:
    """Exchange coupling (XX + YY)/2 between qubits a and b."""
    return pauli_sum((0.5, "XX", (a, b)), (0.5, "YY", (a, b)))


def basis_state(n: int, bits: str) -> np.ndarray:
    if len(bits) != n or any(c not in "01" for c in bits):
        raise ValueError(f"bit string {bits!r} does not describe {n} qubits")
    psi = np.zeros(2**n, dtype=complex)
    psi[int(bits, 2) if bits else 0] = 1.0
    return psi


def _check_support(psi: np.ndarray, h: PauliSum) -> None:
    if h.support and h.support[-1] >= num_qubits(psi):
        raise ValueError(f"Hamiltonian support {h.support} exceeds the state")


@lru_cache(maxsize=4096)
def _block_propagator(h: PauliSum, kappa: float, tau: float) -> np.ndarray:
    k = len(h.support)
    counts = np.array([bin(s).count("1") for s in range(2**k)], dtype=float)
    gen = -1j * h.local_dense() - 0.5 * kappa * np.diag(counts)
    return expm(gen * tau)


_FULL_MASK = (1 << 62) - 1
MAX_BLOCK_QUBITS = 4


def evolve_inplace(psi: np.ndarray, h: PauliSum, tau: float, kappa: float = 0.0) -> float:
    """Apply ``exp((-iH - kappa/2 N) tau)`` in place and return the new norm squared.

    Diagonal Hamiltonians use a per-index phase table. Other Hamiltonians on
    at most four qubits get the exact block propagator with the excitation
    number of the support folded in, while qubits outside the support are
    damped by ``exp(-kappa tau/2)`` per excitation (the two parts commute).
    Larger non-diagonal Hamiltonians must conserve excitations; they are
    applied term by term before a uniform damping pass.
    """
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    factor = math.exp(-0.5 * kappa * tau)
    if h.is_diagonal:
        dim = psi.shape[0]
        if not h.terms:
            return kernels.damp(psi, _FULL_MASK, factor)
        return kernels.diag_evolve(psi, h.sign_pattern(dim), h.phase_table(tau), factor)
    if len(h.support) <= MAX_BLOCK_QUBITS:
        return kernels.block_evolve(psi, h.support, _block_propagator(h, float(kappa), float(tau)), factor)
    if kappa > 0 and not h.conserves_excitations:
        raise NotImplementedError(
            f"non-conserving Hamiltonian on {len(h.support)} qubits (limit {MAX_BLOCK_QUBITS})"
        )
    # commuting terms: exp(-i tau sum c P) = prod exp(-i tau c P)
    for c, p in h.terms:
        kernels.pauli_rotate(psi, p.xmask, p.zmask, p.ny, c * tau)
    return kernels.damp(psi, _FULL_MASK, factor)


def apply_pulse(state: np.ndarray, h: PauliSum, tau: float) -> np.ndarray:
    """Return ``exp(-iH tau) state``."""
    _check_support(state, h)
    psi = np.array(state, dtype=complex)
    evolve_inplace(psi, h, tau)
    return psi


def apply_effective_pulse(state: np.ndarray, h: PauliSum, tau: float, kappa: float) -> np.ndarray:
    """Return the no-jump branch ``exp((-iH - kappa/2 N) tau) state`` (not renormalised)."""
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    _check_support(state, h)
    psi = np.array(state, dtype=complex)
    evolve_inplace(psi, h, tau, kappa)
    return psi


def apply_jump(state: np.ndarray, alpha: int) -> tuple[np.ndarray, float]:
    """Apply ``|0><1|`` on qubit ``alpha``; return the unnormalised result and its weight."""
    n = num_qubits(state)
    if not 0 <= alpha < n:
        raise ValueError(f"qubit {alpha} outside {n}-qubit state")
    bit = 1 << alpha
    idx = np.arange(state.shape[0])
    excited = idx[(idx & bit) != 0]
    out = np.zeros_like(state, dtype=complex)
    out[excited ^ bit] = state[excited]
    return out, norm2(out)


def excitation_expectations(state: np.ndarray) -> np.ndarray:
    """Per-qubit excited-state populations of the normalised state."""
    n = num_qubits(state)
    probs = np.abs(state) ** 2
    total = probs.sum()
    if total <= 0:
        raise ValueError("zero-norm state")
    tensor = probs.reshape((2,) * n)
    # qubit q is tensor axis n - 1 - q
    return np.array([tensor.take(1, axis=n - 1 - q).sum() for q in range(n)]) / total


def overlap(a: np.ndarray, b: np.ndarray) -> complex:
    if a.shape != b.shape:
        raise ValueError("dimension mismatch")
    return complex(np.vdot(a, b))


def norm2(state: np.ndarray) -> float:
    return float(np.vdot(state, state).real)


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """Phase-insensitive overlap ``|<a|b>|^2 / (|a|^2 |b|^2)``."""
    na, nb = norm2(a), norm2(b)
    if na == 0 or nb == 0:
        return 0.0
    return abs(overlap(a, b)) ** 2 / (na * nb)
