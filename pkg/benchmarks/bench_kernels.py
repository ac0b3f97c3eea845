"""Time the numba kernels against the numpy fallback.

Each backend runs in its own interpreter because the choice is made at
import time from JUMPSIM_DISABLE_NUMBA.

    python benchmarks/bench_kernels.py [--qubits 14] [--repeat 200]
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, math, sys, time
import numpy as np
from jumpsim import kernels
from jumpsim.statevec import T, ZZ, Z, evolve_inplace
from jumpsim.tentmap import TentMapParams, tentmap_program
from jumpsim.registers import make_layout
from jumpsim.trajectories import run_trajectory, trajectory_rng

n, repeat = int(sys.argv[1]), int(sys.argv[2])
rng = np.random.default_rng(0)
psi = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
psi /= np.linalg.norm(psi)
cases = {
    "diagonal (z+z-zz)": Z(1) + Z(3) - ZZ(1, 3),
    "exchange block (T)": T(2, 3),
}
out = {"backend": kernels.BACKEND_NAME}
for name, h in cases.items():
    evolve_inplace(psi.copy(), h, 0.3, 1e-3)  # warm-up / compile
    work = psi.copy()
    t0 = time.perf_counter()
    for _ in range(repeat):
        evolve_inplace(work, h, 1e-3, 1e-4)
    out[name] = (time.perf_counter() - t0) / repeat * 1e6
n_L = (n - 2) // 2
prog = tentmap_program(TentMapParams.default(n_L), 5, make_layout([n_L]))
prog.reference_states
run_trajectory(prog, 2e-4, trajectory_rng(0, 0))
t0 = time.perf_counter()
for m in range(3):
    run_trajectory(prog, 2e-4, trajectory_rng(0, m))
out["trajectory, 5 iterations"] = (time.perf_counter() - t0) / 3 * 1e6
print(json.dumps(out))
"""


def run(disable: bool, qubits: int, repeat: int) -> dict:
    env = dict(os.environ, JUMPSIM_DISABLE_NUMBA="1" if disable else "0")
    res = subprocess.run(
        [sys.executable, "-c", WORKER, str(qubits), str(repeat)], env=env, capture_output=True, text=True, check=True
    )
    return json.loads(res.stdout)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--qubits", type=int, default=14)
    parser.add_argument("--repeat", type=int, default=200)
    args = parser.parse_args()
    fast = run(False, args.qubits, args.repeat)
    slow = run(True, args.qubits, args.repeat)
    print(f"{args.qubits} qubits; times in microseconds per call")
    print(f"{'case':<28s}{fast['backend']:>12s}{slow['backend']:>12s}{'speedup':>10s}")
    for key in fast:
        if key == "backend":
            continue
        print(f"{key:<28s}{fast[key]:12.1f}{slow[key]:12.1f}{slow[key] / fast[key]:10.2f}")


if __name__ == "__main__":
    main()
