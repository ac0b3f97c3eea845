import pytest

from jumpsim import kernels

BACKENDS = {"numpy": kernels.numpy_backend, "numba": kernels.numba_backend}
KERNEL_NAMES = ("diag_evolve", "block_evolve", "pauli_rotate", "damp", "norm2")


@pytest.fixture(params=sorted(BACKENDS))
def backend(request, monkeypatch):
    """Route jumpsim.kernels through one backend for the duration of a test."""
    module = BACKENDS[request.param]
    if module is None:
        pytest.skip(f"{request.param} backend unavailable")
    for name in KERNEL_NAMES:
        monkeypatch.setattr(kernels, name, getattr(module, name))
    return request.param
