import math
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jumpsim.jumpcodes import (
    circuit_matrix,
    code_span_residual,
    decode,
    encode,
    kl_basis,
    pairing_code_basis,
    recovery_circuit,
    verify_code,
)
from jumpsim.statevec import apply_effective_pulse, apply_jump, basis_state, fidelity, ZERO

from oracles import PAULI, embed, number_operator


def ket(bits):
    return basis_state(len(bits), bits)


def cat(bits):
    flipped = "".join("1" if b == "0" else "0" for b in bits)
    return (ket(bits) + ket(flipped)) / math.sqrt(2)


def oracle_recovery(alpha, n):
    """X_alpha prod CNOT(alpha -> beta) H_alpha from explicit matrices."""
    h = embed(n, {alpha: (PAULI["X"] + PAULI["Z"]) / math.sqrt(2)})
    proj0 = embed(n, {alpha: np.diag([1, 0]).astype(complex)})
    proj1 = embed(n, {alpha: np.diag([0, 1]).astype(complex)})
    r = h
    for beta in range(n):
        if beta != alpha:
            r = (proj0 + proj1 @ embed(n, {beta: PAULI["X"]})) @ r
    return embed(n, {alpha: PAULI["X"]}) @ r


def test_four_qubit_code_words():
    code = pairing_code_basis(4)
    want = [cat("0011"), cat("0101"), cat("0110")]
    for k, w in enumerate(want):
        assert np.allclose(code.codeword(k), w)


@pytest.mark.parametrize("n_q", [2, 4, 6, 8, 10])
def test_dimension(n_q):
    assert pairing_code_basis(n_q).dimension == comb(n_q, n_q // 2) // 2


def test_odd_size_rejected():
    with pytest.raises(ValueError):
        pairing_code_basis(5)


@pytest.mark.parametrize("n_q", [4, 6, 8])
def test_code_words_orthonormal_and_half_excited(n_q):
    code = pairing_code_basis(n_q)
    basis = code.codeword_matrix()
    assert np.max(np.abs(basis.conj().T @ basis - np.eye(code.dimension))) < 1e-12
    N = np.diag(number_operator(n_q)).real
    for k in range(code.dimension):
        assert np.allclose(N[np.abs(basis[:, k]) > 0], n_q / 2)


def test_no_relative_dephasing_under_idle_decay():
    code = pairing_code_basis(6)
    psi = code.codeword_matrix() @ np.linspace(1, 2, code.dimension)
    psi /= np.linalg.norm(psi)
    out = apply_effective_pulse(psi, ZERO, 2.3, 0.4)
    assert np.allclose(out, math.exp(-0.4 * 2.3 * 3 / 2) * psi)


def test_kl_basis_examples():
    enc = kl_basis(1)
    assert np.allclose(enc.basis_state(0), cat("0101"))
    assert np.allclose(enc.basis_state(1), cat("1001"))
    assert np.allclose(kl_basis(2).basis_state("00"), cat("010101"))
    with pytest.raises(ValueError):
        kl_basis(0)


@pytest.mark.parametrize("n_L", [1, 2, 3, 4])
def test_kl_basis_inside_code_and_orthonormal(n_L):
    enc = kl_basis(n_L)
    code = pairing_code_basis(enc.n_q)
    states = np.array(list(enc.basis().values())).T
    assert np.max(np.abs(states.conj().T @ states - np.eye(2**n_L))) < 1e-12
    for k in range(2**n_L):
        assert code_span_residual(states[:, k], code) < 1e-12


def test_encode_decode():
    enc = kl_basis(1)
    plus = np.array([1, 1]) / math.sqrt(2)
    want = (ket("0101") + ket("1010") + ket("1001") + ket("0110")) / 2
    assert np.allclose(encode(plus, enc), want)
    logical, residual = decode(encode(np.array([0, 1]), enc), enc)
    assert np.allclose(logical, [0, 1]) and residual < 1e-15
    logical, residual = decode(ket("0101"), enc)
    assert np.allclose(logical, [1 / math.sqrt(2), 0]) and residual == pytest.approx(0.5)
    logical, residual = decode(np.zeros(16, dtype=complex), enc)
    assert not logical.any() and residual == 0
    with pytest.raises(ValueError):
        encode(np.ones(3), enc)


@settings(max_examples=30, deadline=None)
@given(n_L=st.integers(1, 4), seed=st.integers(0, 2**32 - 1))
def test_encode_round_trip(n_L, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=2**n_L) + 1j * rng.normal(size=2**n_L)
    v /= np.linalg.norm(v)
    logical, residual = decode(encode(v, kl_basis(n_L)), kl_basis(n_L))
    assert np.allclose(logical, v, atol=1e-14) and residual < 1e-14


def test_code_span_residual_examples():
    code = pairing_code_basis(4)
    assert code_span_residual(code.codeword(1), code) < 1e-15
    assert code_span_residual(ket("0011"), code) == pytest.approx(0.5)


def test_recovery_circuit_gate_order():
    rc = recovery_circuit(2, 4)
    assert rc.gates == (("H", 2), ("CNOT", 2, 0), ("CNOT", 2, 1), ("CNOT", 2, 3), ("X", 2))
    with pytest.raises(ValueError):
        recovery_circuit(4, 4)


def test_recovery_worked_example():
    c0 = cat("0011")
    jumped, _ = apply_jump(c0, 2)
    assert np.allclose(jumped, ket("1000") / math.sqrt(2))
    out = circuit_matrix(recovery_circuit(2, 4)) @ jumped
    assert fidelity(out, c0) == pytest.approx(1, abs=1e-15)


@pytest.mark.parametrize("n_q", [4, 6])
def test_circuit_matrix_matches_oracle(n_q):
    for alpha in range(n_q):
        assert np.allclose(circuit_matrix(recovery_circuit(alpha, n_q)), oracle_recovery(alpha, n_q))


def test_cnot_order_is_irrelevant():
    n = 4
    rc = recovery_circuit(1, n)
    shuffled = type(rc)(1, n, (rc.gates[0],) + tuple(reversed(rc.gates[1:-1])) + (rc.gates[-1],))
    assert np.allclose(circuit_matrix(rc), circuit_matrix(shuffled))


@pytest.mark.parametrize("n_q", [4, 6, 8])
def test_recovery_restores_every_code_word(n_q):
    code = pairing_code_basis(n_q)
    for alpha in range(n_q):
        r = oracle_recovery(alpha, n_q)
        for k in range(code.dimension):
            c = code.codeword(k)
            jumped, w = apply_jump(c, alpha)
            assert fidelity(r @ (jumped / math.sqrt(w)), c) > 1 - 1e-12


@pytest.mark.parametrize("n_q", [4, 6, 8])
def test_verify_code(n_q):
    rep = verify_code(n_q)
    assert rep.ok
    assert rep.worst_recovery_fidelity >= 1 - 1e-10
