"""Quantum-trajectory simulation of jump-code protected quantum maps."""
from .jumpcodes import JumpCode, KLEncoding, decode, encode, kl_basis, pairing_code_basis, verify_code
from .pulsegates import Gate, GateSchedule, Pulse, compile_gate, compile_recovery
from .registers import RegisterLayout, compile_global, make_layout, recovery_for
from .statevec import PauliString, PauliSum, apply_effective_pulse, apply_jump, apply_pulse
from .tentmap import TentMapParams, circuit_step, oracle_step, tentmap_program
from .trajectories import Program, TrajectoryConfig, ensemble_fidelity, run_ensemble, run_trajectory

__version__ = "0.1.0"
