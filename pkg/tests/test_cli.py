import csv
import math

import pytest

from jumpsim.cli import (
    CSV_HEADER,
    EXIT_CONFIG,
    EXIT_OK,
    ConfigError,
    build_config,
    main,
    parse_config_text,
)


def test_config_file_parsing():
    text = """
    # experiment
    mode = bare   # no encoding
    kappa = 1e-3, 2e-3
    registers = 1,1
    seed = 7
    """
    values = parse_config_text(text)
    assert values == {"mode": "bare", "kappa": (1e-3, 2e-3), "registers": (1, 1), "seed": 7}


@pytest.mark.parametrize("text", ["bogus = 1", "kappa 1e-3", "iterations = ten"])
def test_bad_config_lines_are_rejected(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_flags_override_file():
    cfg = build_config({"kappa": (1e-3,), "seed": 1, "trajectories": 5}, {"seed": 9, "trajectories": None})
    assert cfg.seed == 9 and cfg.trajectories == 5 and cfg.kappa == (1e-3,)


def test_nl_follows_registers():
    assert build_config({"kappa": (1e-3,), "registers": (1, 2)}, {}).nl == 3
    assert build_config({"kappa": (1e-3,)}, {}).widths == (6,)
    with pytest.raises(ConfigError):
        build_config({"kappa": (1e-3,), "registers": (1, 2), "nl": 4}, {})


@pytest.mark.parametrize(
    "values",
    [{}, {"kappa": (-1.0,)}, {"kappa": (1e-3,), "trajectories": 0}, {"kappa": (1e-3,), "mode": "other"}],
)
def test_invalid_configs(values):
    with pytest.raises(ConfigError):
        build_config(values, {})


def run_args(out, *extra):
    return ["run", "--registers", "1,1", "--kappa", "1e-3,5e-3", "--iterations", "2",
            "--trajectories", "3", "--seed", "7", "--out", str(out), *extra]


def test_run_writes_csv(tmp_path):
    out = tmp_path / "f.csv"
    assert main(run_args(out)) == EXIT_OK
    rows = list(csv.reader(out.open()))
    assert rows[0] == CSV_HEADER
    assert len(rows) == 1 + 2 * 3
    assert [r[0] for r in rows[1:4]] == ["0", "1", "2"]
    assert {r[5] for r in rows[1:]} == {"encoded"} and {r[7] for r in rows[1:]} == {"1,1"}
    assert float(rows[1][1]) == pytest.approx(1.0)


def test_same_seed_gives_identical_csv(tmp_path):
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    assert main(run_args(a, "--workers", "1")) == EXIT_OK
    assert main(run_args(b, "--workers", "2")) == EXIT_OK
    assert main(run_args(c, "--workers", "1")) == EXIT_OK
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()


def test_zero_trajectories_is_a_config_error(tmp_path):
    out = tmp_path / "none.csv"
    args = run_args(out)
    args[args.index("--trajectories") + 1] = "0"
    assert main(args) == EXIT_CONFIG
    assert not out.exists()


def test_run_from_config_file(tmp_path):
    conf = tmp_path / "exp.conf"
    out = tmp_path / "bare.csv"
    conf.write_text(f"mode = bare\nnl = 2\nkappa = 1e-3\niterations = 1\ntrajectories = 2\nout = {out}\n")
    assert main(["run", "--config", str(conf)]) == EXIT_OK
    rows = list(csv.reader(out.open()))
    assert rows[1][5] == "bare" and rows[1][7] == "2"
    conf.write_text("colour = blue\n")
    assert main(["run", "--config", str(conf)]) == EXIT_CONFIG


def test_verify_codes(capsys):
    assert main(["verify-codes", "--nq", "4", "8"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "n_q = 8: codewords 35" in out
    assert main(["verify-codes", "--nq", "5"]) == EXIT_CONFIG


def test_compile(capsys):
    assert main(["compile", "--gate", "cnot", "--qubits", "0,1", "--nl", "2"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "total 1.75000 pi" in out
    assert main(["compile", "--gate", "cphase", "--qubits", "0,1", "--registers", "1,1", "--angle", str(math.pi)]) == 0
    assert main(["compile", "--gate", "phase", "--qubits", "0"]) == EXIT_CONFIG
    assert main(["compile", "--gate", "h", "--qubits", "5"]) == EXIT_CONFIG


def test_tentmap_check(capsys):
    assert main(["tentmap-check", "--nl", "3"]) == EXIT_OK
    assert main(["tentmap-check", "--nl", "1"]) == EXIT_CONFIG


def test_analytic(capsys):
    assert main(["analytic", "--nq", "14", "--kappa", "2.122e-4", "--t", "30", "--tau-it", str(67.2 * math.pi)]) == 0
    out = capsys.readouterr().out
    line = next(l for l in out.splitlines() if l.startswith("f_ec1"))
    assert float(line.split("=")[1]) == pytest.approx(0.349, abs=2e-3)
    assert "admissible" in out
    assert main(["analytic", "--nq", "8", "--kappa", "1e-4", "--registers", "1,1,1"]) == EXIT_OK
    assert "f_ec2 [1,1,1]" in capsys.readouterr().out


def test_usage_errors():
    assert main([]) == EXIT_CONFIG
    assert main(["frobnicate"]) == EXIT_CONFIG
    assert main(["analytic", "--nq", "7", "--kappa", "1e-4"]) == EXIT_CONFIG
    assert main(["--backend"]) == EXIT_OK
