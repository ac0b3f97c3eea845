"""Numba-compiled state-vector kernels; same contracts as ``_numpy``."""
import numpy as np
from numba import njit

from ._numpy import popcounts, sign_pattern  # noqa: F401  (one-off table builders)


@njit(cache=True, inline="always")
def _popcount(v):
    # indices stay below 2**31, so 32-bit constants cannot overflow int64
    v = v - ((v >> 1) & 0x55555555)
    v = (v & 0x33333333) + ((v >> 2) & 0x33333333)
    v = (v + (v >> 4)) & 0x0F0F0F0F
    return ((v * 0x01010101) & 0xFFFFFFFF) >> 24


@njit(cache=True)
def _diag_evolve(psi, pattern, table, counts, powers):
    total = 0.0
    for i in range(psi.shape[0]):
        v = psi[i] * table[pattern[i]] * powers[counts[i]]
        psi[i] = v
        total += v.real * v.real + v.imag * v.imag
    return total


@njit(cache=True)
def _block_evolve(psi, offsets, suppmask, matrix, counts, powers):
    d = offsets.shape[0]
    local = np.empty(d, dtype=np.complex128)
    total = 0.0
    for i in range(psi.shape[0]):
        if i & suppmask:
            continue
        # support bits of i are clear, so counts[i] is the excitation outside the block
        w = powers[counts[i]]
        for s in range(d):
            local[s] = psi[i + offsets[s]]
        for r in range(d):
            acc = 0j
            for s in range(d):
                acc += matrix[r, s] * local[s]
            acc *= w
            psi[i + offsets[r]] = acc
            total += acc.real * acc.real + acc.imag * acc.imag
    return total


@njit(cache=True)
def _pauli_rotate(psi, xmask, zmask, ny, angle):
    c = np.cos(angle)
    s = np.sin(angle)
    dim = psi.shape[0]
    if xmask == 0:
        plus = complex(c, -s)
        minus = complex(c, s)
        for i in range(dim):
            if _popcount(i & zmask) & 1:
                psi[i] *= minus
            else:
                psi[i] *= plus
        return
    base = (-1j * s) * (1j**ny)
    for i in range(dim):
        j = i ^ xmask
        if i < j:
            a = psi[i]
            b = psi[j]
            si = 1.0 - 2.0 * (_popcount(i & zmask) & 1)
            sj = 1.0 - 2.0 * (_popcount(j & zmask) & 1)
            psi[i] = c * a + base * sj * b
            psi[j] = c * b + base * si * a


@njit(cache=True)
def _damp(psi, mask, powers):
    total = 0.0
    for i in range(psi.shape[0]):
        v = psi[i] * powers[_popcount(i & mask)]
        psi[i] = v
        total += v.real * v.real + v.imag * v.imag
    return total


@njit(cache=True)
def _norm2(psi):
    total = 0.0
    for i in range(psi.shape[0]):
        v = psi[i]
        total += v.real * v.real + v.imag * v.imag
    return total


def _powers(dim, factor):
    n = dim.bit_length() - 1
    return float(factor) ** np.arange(n + 1, dtype=np.float64)


def diag_evolve(psi, pattern, table, factor):
    dim = psi.shape[0]
    return _diag_evolve(psi, pattern, table, popcounts(dim), _powers(dim, factor))


def block_evolve(psi, qubits, matrix, factor):
    k = len(qubits)
    offsets = np.zeros(2**k, dtype=np.int64)
    for s in range(2**k):
        for b in range(k):
            if (s >> b) & 1:
                offsets[s] += 1 << int(qubits[b])
    suppmask = 0
    for q in qubits:
        suppmask |= 1 << int(q)
    dim = psi.shape[0]
    return _block_evolve(
        psi,
        offsets,
        np.int64(suppmask),
        np.ascontiguousarray(matrix, dtype=np.complex128),
        popcounts(dim),
        _powers(dim, factor),
    )


def pauli_rotate(psi, xmask, zmask, ny, angle):
    _pauli_rotate(psi, np.int64(xmask), np.int64(zmask), np.int64(ny), float(angle))


def damp(psi, mask, factor):
    return _damp(psi, np.int64(mask), _powers(psi.shape[0], factor))


def norm2(psi):
    return float(_norm2(psi))
