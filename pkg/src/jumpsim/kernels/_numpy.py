"""Vectorised numpy implementations of the state-vector kernels.

Every kernel mutates ``psi`` in place. Basis index bit ``q`` is qubit ``q``.
The ``*_evolve`` kernels also multiply amplitude ``i`` by
``factor ** popcount(i outside the support)`` and return the new squared norm.
"""
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=32)
def _indices(dim):
    idx = np.arange(dim, dtype=np.int64)
    idx.setflags(write=False)
    return idx


@lru_cache(maxsize=32)
def popcounts(dim):
    counts = np.bitwise_count(_indices(dim)).astype(np.int64)
    counts.setflags(write=False)
    return counts


def sign_pattern(dim, zmasks):
    """Bit ``k`` of entry ``i`` is the parity of ``i & zmasks[k]``."""
    idx = _indices(dim)
    pattern = np.zeros(dim, dtype=np.int64)
    for k, zmask in enumerate(zmasks):
        pattern |= (np.bitwise_count(idx & int(zmask)).astype(np.int64) & 1) << k
    return pattern


def _powers(dim, factor):
    n = dim.bit_length() - 1
    return float(factor) ** np.arange(n + 1, dtype=np.float64)


def diag_evolve(psi, pattern, table, factor):
    if factor == 1.0:
        psi *= table[pattern]
    else:
        psi *= table[pattern] * _powers(psi.shape[0], factor)[popcounts(psi.shape[0])]
    return float(np.vdot(psi, psi).real)


def _block_axes(n, qubits):
    # axis of qubit q in the C-ordered tensor is n - 1 - q; local bit b <-> qubits[b]
    return [n - 1 - int(q) for q in qubits[::-1]]


def block_evolve(psi, qubits, matrix, factor):
    k = len(qubits)
    dim = psi.shape[0]
    n = dim.bit_length() - 1
    axes = _block_axes(n, qubits)
    tensor = psi.reshape((2,) * n)
    moved = np.moveaxis(tensor, axes, range(k)).reshape(2**k, -1)
    out = matrix @ moved
    if factor != 1.0:
        # columns enumerate the remaining qubits; their excitation count sets the damping
        rest = np.moveaxis(popcounts(dim).reshape((2,) * n), axes, range(k)).reshape(2**k, -1)[0]
        out *= _powers(dim, factor)[rest][None, :]
    psi[:] = np.moveaxis(out.reshape((2,) * n), range(k), axes).reshape(-1)
    return float(np.vdot(psi, psi).real)


def _signs(idx, zmask):
    return 1.0 - 2.0 * (np.bitwise_count(idx & zmask) & 1)


def pauli_rotate(psi, xmask, zmask, ny, angle):
    idx = _indices(psi.shape[0])
    c, s = np.cos(angle), np.sin(angle)
    if xmask == 0:
        psi *= c - 1j * s * _signs(idx, zmask)
        return
    partner = idx ^ xmask
    p_psi = (1j**ny) * _signs(partner, zmask) * psi[partner]
    psi[:] = c * psi - 1j * s * p_psi


def damp(psi, mask, factor):
    if mask != 0 and factor != 1.0:
        idx = _indices(psi.shape[0])
        psi *= float(factor) ** np.bitwise_count(idx & mask)
    return float(np.vdot(psi, psi).real)


def norm2(psi):
    return float(np.vdot(psi, psi).real)
