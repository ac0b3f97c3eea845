"""Command-line front end: code checks, gate compilation, tent-map checks, trajectory runs."""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

from . import kernels
from .jumpcodes import verify_code
from .pulsegates import TAU_CNOT, Gate, recovery_duration
from .registers import block_fidelity, cnot_admissible, cnot_speed_bound, compile_global, logical_action, make_layout
from .tentmap import TentMapParams, circuit_report, gate_matrix, phase_distance, tentmap_program
from .trajectories import (
    TrajectoryConfig,
    analytic_fidelity_bare,
    analytic_fidelity_ec,
    mean_jumps,
    run_ensemble,
)

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2
TOLERANCE = 1e-10
DEFAULT_NL = 6
CSV_HEADER = ["t", "mean_fidelity", "stderr", "mean_jumps", "f_analytic", "mode", "kappa", "layout"]


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    mode: str = "encoded"
    registers: tuple[int, ...] | None = None
    kappa: tuple[float, ...] = field(default_factory=tuple)
    iterations: int = 30
    trajectories: int = 100
    seed: int = 0
    out: str | None = None
    kT: float = 1.7
    nl: int | None = None
    workers: int | None = None

    def validate(self) -> None:
        if self.nl is None:
            self.nl = sum(self.registers) if self.registers else DEFAULT_NL
        if self.mode not in ("bare", "encoded"):
            raise ConfigError(f"mode must be bare or encoded, got {self.mode!r}")
        if not self.kappa:
            raise ConfigError("at least one kappa value is required")
        if any(k < 0 for k in self.kappa):
            raise ConfigError("kappa must be non-negative")
        if self.trajectories < 1:
            raise ConfigError("trajectories must be >= 1")
        if self.iterations < 0:
            raise ConfigError("iterations must be >= 0")
        if self.nl < 2:
            raise ConfigError("nl must be >= 2")
        if self.workers is not None and self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.registers is not None:
            if any(w < 1 for w in self.registers):
                raise ConfigError("register widths must be >= 1")
            if sum(self.registers) != self.nl:
                raise ConfigError(f"registers {self.registers} do not add up to nl = {self.nl}")

    @property
    def widths(self) -> tuple[int, ...]:
        return self.registers if self.registers is not None else (self.nl,)


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(",") if part.strip())


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(",") if part.strip())


_PARSERS = {
    "mode": str.strip,
    "registers": _int_list,
    "kappa": _float_list,
    "iterations": int,
    "trajectories": int,
    "seed": int,
    "out": str.strip,
    "kT": float,
    "nl": int,
    "workers": int,
}


def parse_config_text(text: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment. Unknown keys are errors."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    return values


def build_config(file_values: dict, flag_values: dict) -> ExperimentConfig:
    merged = {**file_values, **{k: v for k, v in flag_values.items() if v is not None}}
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(merged) - known
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}")
    cfg = ExperimentConfig(**merged)
    cfg.validate()
    return cfg


def run_experiment(cfg: ExperimentConfig) -> str:
    """Run every kappa and return the CSV text."""
    params = TentMapParams.default(cfg.nl, cfg.kT)
    layout = make_layout(cfg.widths) if cfg.mode == "encoded" else None
    program = tentmap_program(params, cfg.iterations, layout)
    label = ",".join(str(w) for w in cfg.widths) if layout is not None else str(cfg.nl)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for kappa in cfg.kappa:
        config = TrajectoryConfig(kappa, cfg.trajectories, cfg.seed, cfg.workers)
        for rec in run_ensemble(program, config).records:
            writer.writerow(
                [
                    rec.t,
                    f"{rec.mean_fidelity:.12g}",
                    f"{rec.stderr:.12g}",
                    f"{rec.mean_jumps:.12g}",
                    f"{rec.f_analytic:.12g}",
                    cfg.mode,
                    f"{kappa:.12g}",
                    label,
                ]
            )
    return buf.getvalue()


def _cmd_run(args) -> int:
    file_values = {}
    if args.config:
        try:
            file_values = parse_config_text(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    flags = {
        "mode": args.mode,
        "registers": _int_list(args.registers) if args.registers else None,
        "kappa": _float_list(args.kappa) if args.kappa else None,
        "iterations": args.iterations,
        "trajectories": args.trajectories,
        "seed": args.seed,
        "out": args.out,
        "kT": args.kT,
        "nl": args.nl,
        "workers": args.workers,
    }
    cfg = build_config(file_values, flags)
    text = run_experiment(cfg)
    if cfg.out:
        # written only once the whole run has finished
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_verify_codes(args) -> int:
    status = EXIT_OK
    for n_q in args.nq:
        if n_q < 2 or n_q % 2:
            raise ConfigError(f"n_q must be even and >= 2, got {n_q}")
        rep = verify_code(n_q, args.trials, args.seed)
        print(
            f"n_q = {n_q}: codewords {rep.dimension} (expected {rep.expected_dimension}), "
            f"orthonormality residual {rep.orthonormality_residual:.2e}, "
            f"worst recovery infidelity {1 - rep.worst_recovery_fidelity:.2e} -> {'ok' if rep.ok else 'FAILED'}"
        )
        if not rep.ok:
            status = EXIT_FAILED
    return status


def _cmd_compile(args) -> int:
    try:
        gate = Gate(args.gate, _int_list(args.qubits), args.angle)
        if gate.kind in ("phase", "cphase") and gate.angle is None:
            raise ValueError(f"{gate.kind} needs --angle")
        layout = make_layout(_int_list(args.registers) if args.registers else (args.nl,))
        sched = compile_global(gate, layout, args.sequential)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    print(sched.describe())
    action, leak = logical_action(sched, layout)
    distance = phase_distance(action, gate_matrix(gate, layout.total_logical))
    print(f"distance to target up to global phase: {distance:.3e}; leakage out of the code: {leak:.3e}")
    return EXIT_OK if distance <= TOLERANCE and leak <= TOLERANCE else EXIT_FAILED


def _cmd_tentmap_check(args) -> int:
    if args.nl < 2:
        raise ConfigError("nl must be >= 2")
    params = TentMapParams.default(args.nl, args.kT)
    rep = circuit_report(params, check=args.nl <= 10)
    for line in rep.lines():
        print(line)
    if rep.distance is not None and rep.distance > TOLERANCE:
        return EXIT_FAILED
    return EXIT_OK


def _cmd_analytic(args) -> int:
    n_q = args.nq
    if n_q < 4 or n_q % 2:
        raise ConfigError("n_q must be even and >= 4")
    if args.kappa < 0 or args.t < 0:
        raise ConfigError("kappa and t must be non-negative")
    n_L = (n_q - 2) // 2
    if args.tau_it is not None:
        tau_it, source = args.tau_it, "given"
    elif n_L >= 2:
        tau_it, source = circuit_report(TentMapParams.default(n_L), check=False).tau_it, f"compiled tent map, n_L = {n_L}"
    else:
        raise ConfigError("pass --tau-it for n_q < 6")
    tau_rec = recovery_duration(n_q)
    print(f"n_q = {n_q}, kappa = {args.kappa:.12g}, t = {args.t:g}")
    print(f"tau_it = {tau_it:.12g} ({tau_it / math.pi:.6g} pi, {source})")
    print(f"tau_rec = {tau_rec:.12g} ({tau_rec / math.pi:.6g} pi)")
    print(f"mean jumps = {mean_jumps(n_q, args.kappa, tau_it, args.t):.12g}")
    print(f"f_bare = {analytic_fidelity_bare(n_q, args.kappa, tau_it, args.t):.12g}")
    print(f"f_ec1 = {analytic_fidelity_ec(n_q, args.kappa, tau_rec, tau_it, args.t):.12g}")
    if args.registers:
        layout = make_layout(_int_list(args.registers))
        print(f"f_ec2 [{layout}] = {block_fidelity(layout, args.kappa, tau_it, args.t):.12g}")
    if args.kappa > 0:
        widths = _int_list(args.registers) if args.registers else (n_L,)
        for w in sorted(set(widths)):
            bound = cnot_speed_bound(w, args.kappa)
            verdict = "admissible" if cnot_admissible(w, args.kappa) else "NOT admissible"
            print(f"cnot speed bound (n_L = {w}) = {bound:.12g}; tau_cnot = {TAU_CNOT:.6g} {verdict}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jumpsim", description=__doc__)
    parser.add_argument("--backend", action="store_true", help="print the kernel backend and exit")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("verify-codes", help="check pairing codes and their recoveries")
    p.add_argument("--nq", type=int, nargs="+", default=[4, 6, 8])
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_verify_codes)

    p = sub.add_parser("compile", help="compile one logical gate to pulses")
    p.add_argument("--gate", required=True, choices=["not", "h", "phase", "cphase", "cnot"])
    p.add_argument("--qubits", required=True, help="comma-separated global logical indices")
    p.add_argument("--angle", type=float, default=None, help="phase angle in radians")
    p.add_argument("--nl", type=int, default=2, help="width of a single register")
    p.add_argument("--registers", help="layout as comma-separated logical widths (overrides --nl)")
    p.add_argument("--sequential", action="store_true", help="split the entangling pulse term by term")
    p.set_defaults(func=_cmd_compile)

    p = sub.add_parser("tentmap-check", help="compare the tent-map circuit with the dense map")
    p.add_argument("--nl", type=int, default=6)
    p.add_argument("--kT", type=float, default=1.7)
    p.set_defaults(func=_cmd_tentmap_check)

    p = sub.add_parser("run", help="trajectory ensemble, CSV output")
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--mode", choices=["bare", "encoded"])
    p.add_argument("--registers")
    p.add_argument("--kappa", help="comma-separated decay rates")
    p.add_argument("--iterations", type=int)
    p.add_argument("--trajectories", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--kT", type=float)
    p.add_argument("--nl", type=int)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("analytic", help="closed-form fidelity estimates and the CNOT speed bound")
    p.add_argument("--nq", type=int, required=True)
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--t", type=float, default=30)
    p.add_argument("--tau-it", type=float, default=None)
    p.add_argument("--registers")
    p.set_defaults(func=_cmd_analytic)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    if args.backend:
        print(f"jumpsim kernels: {kernels.BACKEND_NAME} (set {kernels.DISABLE_ENV}=1 for numpy)")
        return EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"jumpsim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
