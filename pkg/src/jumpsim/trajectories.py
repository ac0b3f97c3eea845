"""Quantum-trajectory unravelling with interrupt / recover / resume control.

Between jumps the state follows the no-jump generator
``-iH - (kappa/2) N`` without renormalisation. A uniform threshold ``r`` is
drawn after every jump; the next jump happens when the squared norm falls to
``r``. The crossing time inside a pulse is located by bracketed root finding
on the exact propagator, so there is no time-step error.

On a jump the running pulse is frozen on a stack, the recovery for the
decayed qubit is pushed on top, and the frozen pulse resumes with its
remaining duration once the recovery finishes. A decay inside a
cross-register pulse gets a rewind recovery (see
``registers.rewind_recovery``); further decays at the same instant in other
registers are merged into it. Decays that strike while any
recovery acting on the decayed qubit is on the stack are flagged
``during_recovery``; those are the events a one-error code cannot undo.

Trajectory ``m`` of an ensemble with seed ``s`` draws from
``numpy.random.Generator(PCG64(SeedSequence([s, m])))``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .pulsegates import GateSchedule, Pulse, recovery_duration
from .registers import RegisterLayout, block_fidelity, recovery_for, rewind_recovery
from .statevec import apply_jump, evolve_inplace, excitation_expectations

CROSSING_RTOL = 1e-12
WORKERS_ENV = "JUMPSIM_WORKERS"
# recoveries nested deeper than this mean kappa is far above the correctable regime
MAX_NESTING = 256


@dataclass(frozen=True)
class JumpEvent:
    time: float
    qubit: int
    during_recovery: bool


@dataclass
class Program:
    """``iterations`` repetitions of ``step`` applied to ``initial``.

    ``layout`` is ``None`` for unencoded runs, where jumps are never
    recovered.
    """

    step: GateSchedule
    iterations: int
    initial: np.ndarray
    layout: RegisterLayout | None = None
    tau_it: float | None = None

    def __post_init__(self):
        self.initial = np.asarray(self.initial, dtype=complex)
        if self.tau_it is None:
            self.tau_it = self.step.total_duration

    @property
    def encoded(self) -> bool:
        return self.layout is not None

    @property
    def num_qubits(self) -> int:
        return self.initial.shape[0].bit_length() - 1

    @cached_property
    def reference_states(self) -> list[np.ndarray]:
        """Ideal states at every record point ``t = 0 .. iterations``."""
        psi = self.initial.copy()
        out = [psi.copy()]
        for _ in range(self.iterations):
            for pulse in self.step.pulses:
                evolve_inplace(psi, pulse.hamiltonian, pulse.duration)
            out.append(psi.copy())
        return out

    def recovery(self, alpha: int) -> GateSchedule:
        cache = self.__dict__.setdefault("_recoveries", {})
        if alpha not in cache:
            cache[alpha] = recovery_for(alpha, self.layout)
        return cache[alpha]


@dataclass
class _Frame:
    schedule: GateSchedule
    recovery: bool = False
    mask: int = 0
    index: int = 0
    elapsed: float = 0.0
    # (interrupted pulse, its elapsed time, decayed qubits) for rewind recoveries
    rewind: tuple | None = None

    @property
    def pulse(self) -> Pulse:
        return self.schedule.pulses[self.index]


@dataclass
class ProgramCounter:
    """Stack of partially executed schedules; the top frame runs."""

    frames: list[_Frame] = field(default_factory=list)

    def push(self, schedule: GateSchedule, recovery: bool = False, rewind: tuple | None = None) -> None:
        if schedule.pulses:
            mask = 0
            for p in schedule.pulses if recovery else ():
                mask |= p.hamiltonian.support_mask
            self.frames.append(_Frame(schedule, recovery, mask, rewind=rewind))

    def current(self) -> _Frame | None:
        while self.frames and self.frames[-1].index >= len(self.frames[-1].schedule.pulses):
            self.frames.pop()
        return self.frames[-1] if self.frames else None

    @property
    def in_recovery(self) -> bool:
        return any(f.recovery for f in self.frames)

    def recovering(self, qubit: int) -> bool:
        """True while an unfinished recovery acts on ``qubit``."""
        return any(f.recovery and (f.mask >> qubit) & 1 for f in self.frames)


def _crossing(psi, pulse, horizon, kappa, r):
    """Evolve ``psi`` through ``pulse`` for at most ``horizon``.

    Returns ``(state, elapsed, crossed)``; when the squared norm reaches ``r``
    inside the horizon, ``elapsed`` is the crossing time.
    """
    trial = psi.copy()
    n2 = evolve_inplace(trial, pulse.hamiltonian, horizon, kappa)
    if n2 > r:
        return trial, horizon, False
    h = pulse.hamiltonian
    log_r = math.log(r)

    def excess(s):
        t = psi.copy()
        return math.log(evolve_inplace(t, h, s, kappa)) - log_r

    s = brentq(excess, 0.0, horizon, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    trial = psi.copy()
    n2 = evolve_inplace(trial, h, s, kappa)
    if abs(n2 - r) > CROSSING_RTOL * r:
        # polish by bisection on the monotone norm
        lo, hi = (s, horizon) if n2 > r else (0.0, s)
        for _ in range(200):
            s = 0.5 * (lo + hi)
            trial = psi.copy()
            n2 = evolve_inplace(trial, h, s, kappa)
            if abs(n2 - r) <= CROSSING_RTOL * r:
                break
            lo, hi = (s, hi) if n2 > r else (lo, s)
    return trial, s, True


@dataclass
class NoJumpStop:
    pulse_index: int
    time: float


def evolve_no_jump(state: np.ndarray, schedule: GateSchedule, kappa: float, r: float):
    """No-jump evolution through ``schedule`` until the squared norm reaches ``r``.

    Returns ``(state, None)`` on completion or ``(state, NoJumpStop)`` at the
    crossing, with the state evolved exactly up to that time.
    """
    if not 0 < r <= 1:
        raise ValueError("threshold must lie in (0, 1]")
    psi = np.array(state, dtype=complex)
    clock = 0.0
    for k, pulse in enumerate(schedule.pulses):
        psi, dt, crossed = _crossing(psi, pulse, pulse.duration, kappa, r)
        clock += dt
        if crossed:
            return psi, NoJumpStop(k, clock)
    return psi, None


def sample_jump_channel(state: np.ndarray, rng: np.random.Generator) -> int:
    """Draw the decaying qubit with probability proportional to its excitation."""
    weights = excitation_expectations(state)
    total = weights.sum()
    if total <= 0:
        raise ValueError("no excited qubit can decay")
    cdf = np.cumsum(weights)
    return int(min(np.searchsorted(cdf, rng.random() * total, side="right"), len(weights) - 1))


def _threshold(rng: np.random.Generator) -> float:
    return 1.0 - rng.random()


@dataclass
class TrajectoryResult:
    overlaps: np.ndarray
    jump_counts: np.ndarray
    jumps: list[JumpEvent]
    final_state: np.ndarray

    @property
    def fidelities(self) -> np.ndarray:
        return np.abs(self.overlaps) ** 2


def _push_recovery(program: Program, pc: ProgramCounter, alpha: int) -> bool:
    """Schedule the recovery for a decay of ``alpha``; True if it is uncorrectable."""
    layout = program.layout
    top = pc.frames[-1]
    if top.rewind is not None and top.index == 0 and top.elapsed == 0.0:
        # simultaneous with the decay that queued this rewind: merge if in another register
        pulse, elapsed, alphas = top.rewind
        homes = {layout.register_of(a) for a in alphas}
        if layout.register_of(alpha) not in homes:
            pc.frames.pop()
            alphas = alphas + (alpha,)
            pc.push(rewind_recovery(pulse, elapsed, alphas, layout), True, (pulse, elapsed, alphas))
            return False
    flagged = pc.recovering(alpha)
    if not top.recovery and top.elapsed > 0:
        pulse = top.pulse
        regs = layout.registers_touching(pulse.hamiltonian.support_mask)
        if len(regs) > 1 and layout.register_of(alpha) in regs:
            rewind = (pulse, top.elapsed, (alpha,))
            pc.push(rewind_recovery(pulse, top.elapsed, (alpha,), layout), True, rewind)
            return flagged
    pc.push(program.recovery(alpha), recovery=True)
    return flagged


def run_trajectory(
    program: Program,
    kappa: float,
    rng: np.random.Generator | None = None,
    forced_jumps: Sequence[tuple[float, int]] = (),
    recover: bool | None = None,
) -> TrajectoryResult:
    """Unravel one trajectory.

    ``forced_jumps`` are ``(time, qubit)`` decays injected at fixed global
    times (recoveries included in the clock); they are applied on top of the
    stochastic ones and are mainly useful at ``kappa = 0``. ``recover``
    defaults to ``program.encoded``.
    """
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    if recover is None:
        recover = program.encoded
    if recover and not program.encoded:
        raise ValueError("recovery needs a register layout")
    rng = rng if rng is not None else np.random.default_rng()
    forced = sorted(forced_jumps)
    refs = program.reference_states
    psi = program.initial.copy()
    overlaps = np.empty(program.iterations + 1, dtype=complex)
    counts = np.zeros(program.iterations + 1, dtype=np.int64)
    overlaps[0] = np.vdot(refs[0], psi) / math.sqrt(np.vdot(psi, psi).real)
    events: list[JumpEvent] = []
    clock = 0.0
    r = _threshold(rng) if kappa > 0 else 0.0

    def jump(alpha: int) -> None:
        nonlocal psi, r
        new, weight = apply_jump(psi, alpha)
        if weight <= 0:
            return
        psi = new / math.sqrt(weight)
        flagged = _push_recovery(program, pc, alpha) if recover else False
        if len(pc.frames) > MAX_NESTING:
            raise RuntimeError(f"recoveries nested {MAX_NESTING} deep; kappa = {kappa:g} is too large")
        events.append(JumpEvent(clock, alpha, flagged))
        if kappa > 0:
            r = _threshold(rng)

    for t in range(1, program.iterations + 1):
        pc = ProgramCounter()
        pc.push(program.step)
        while (frame := pc.current()) is not None:
            pulse = frame.pulse
            remaining = pulse.duration - frame.elapsed
            horizon, forced_here = remaining, False
            if forced and forced[0][0] - clock < remaining:
                horizon, forced_here = max(forced[0][0] - clock, 0.0), True
            if kappa > 0:
                psi, dt, crossed = _crossing(psi, pulse, horizon, kappa, r)
            else:
                evolve_inplace(psi, pulse.hamiltonian, horizon)
                dt, crossed = horizon, False
            clock += dt
            frame.elapsed += dt
            if crossed:
                jump(sample_jump_channel(psi, rng))
            elif forced_here:
                jump(forced.pop(0)[1])
            else:
                frame.index += 1
                frame.elapsed = 0.0
        norm = math.sqrt(np.vdot(psi, psi).real)
        overlaps[t] = np.vdot(refs[t], psi) / norm
        counts[t] = len(events)
    return TrajectoryResult(overlaps, counts, events, psi / math.sqrt(np.vdot(psi, psi).real))


@dataclass(frozen=True)
class TrajectoryConfig:
    kappa: float
    num_trajectories: int
    seed: int = 0
    workers: int | None = None

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")
        if self.num_trajectories < 1:
            raise ValueError("need at least one trajectory")


@dataclass(frozen=True)
class FidelityRecord:
    t: int
    mean_fidelity: float
    stderr: float
    mean_jumps: float
    f_analytic: float


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def _run_chunk(program: Program, kappa: float, seed: int, indices: range):
    fids = np.empty((len(indices), program.iterations + 1))
    counts = np.empty((len(indices), program.iterations + 1))
    lost = 0
    for row, m in enumerate(indices):
        res = run_trajectory(program, kappa, trajectory_rng(seed, m))
        fids[row] = res.fidelities
        counts[row] = res.jump_counts
        lost += sum(e.during_recovery for e in res.jumps)
    return fids, counts, lost


def default_workers() -> int:
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


@dataclass
class EnsembleResult:
    records: list[FidelityRecord]
    fidelities: np.ndarray
    jump_counts: np.ndarray
    uncorrectable: int


def run_ensemble(program: Program, config: TrajectoryConfig) -> EnsembleResult:
    """Run ``config.num_trajectories`` trajectories; the result is independent of the worker count."""
    workers = config.workers or default_workers()
    M = config.num_trajectories
    bounds = np.linspace(0, M, min(workers, M) + 1).astype(int)
    chunks = [range(a, b) for a, b in zip(bounds[:-1], bounds[1:])]
    if len(chunks) == 1:
        parts = [_run_chunk(program, config.kappa, config.seed, chunks[0])]
    else:
        with ProcessPoolExecutor(len(chunks)) as pool:
            futures = [pool.submit(_run_chunk, program, config.kappa, config.seed, c) for c in chunks]
            parts = [f.result() for f in futures]
    fids = np.concatenate([p[0] for p in parts])
    counts = np.concatenate([p[1] for p in parts])
    lost = sum(p[2] for p in parts)
    mean = fids.mean(axis=0)
    stderr = fids.std(axis=0, ddof=1) / math.sqrt(M) if M > 1 else np.zeros_like(mean)
    jumps = counts.mean(axis=0)
    records = [
        FidelityRecord(t, float(mean[t]), float(stderr[t]), float(jumps[t]), analytic_for(program, config.kappa, t))
        for t in range(program.iterations + 1)
    ]
    return EnsembleResult(records, fids, counts, lost)


def ensemble_fidelity(config: TrajectoryConfig, program: Program) -> list[FidelityRecord]:
    return run_ensemble(program, config).records


def analytic_fidelity_bare(n_q: int, kappa: float, tau_it: float, t: float) -> float:
    return math.exp(-(n_q / 2) * kappa * tau_it * t)


def analytic_fidelity_ec(n_q: int, kappa: float, tau_rec: float, tau_it: float, t: float) -> float:
    return math.exp(-(((n_q / 2) * kappa) ** 2) * tau_rec * tau_it * t)


def mean_jumps(n_q: int, kappa: float, tau_it: float, t: float) -> float:
    return (n_q / 2) * kappa * tau_it * t


def analytic_for(program: Program, kappa: float, t: float) -> float:
    """The approximate closed-form fidelity matching the program's encoding."""
    if not program.encoded:
        return analytic_fidelity_bare(program.num_qubits, kappa, program.tau_it, t)
    layout = program.layout
    if len(layout.registers) == 1:
        n_q = layout.total_physical
        return analytic_fidelity_ec(n_q, kappa, recovery_duration(n_q), program.tau_it, t)
    return block_fidelity(layout, kappa, program.tau_it, t)
