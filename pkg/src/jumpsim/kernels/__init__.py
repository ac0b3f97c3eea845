"""Hot state-vector kernels with a selectable backend.

The numba backend is used when numba imports cleanly. Setting the
environment variable ``JUMPSIM_DISABLE_NUMBA=1`` (read at import time)
forces the vectorised numpy fallback. Both backends expose the same
functions and are tested against each other.
"""
import os

from . import _numpy as numpy_backend

try:
    from . import _numba as numba_backend
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_backend = None

DISABLE_ENV = "JUMPSIM_DISABLE_NUMBA"


def _select():
    flag = os.environ.get(DISABLE_ENV, "").strip().lower()
    if flag in ("1", "true", "yes") or numba_backend is None:
        return numpy_backend
    return numba_backend


backend = _select()
BACKEND_NAME = "numba" if backend is numba_backend else "numpy"

diag_evolve = backend.diag_evolve
block_evolve = backend.block_evolve
pauli_rotate = backend.pauli_rotate
damp = backend.damp
norm2 = backend.norm2
popcounts = numpy_backend.popcounts
sign_pattern = numpy_backend.sign_pattern
