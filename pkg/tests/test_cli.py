import numpy as np
import pytest

from radgas import cli, io
from radgas.diagnostics import CSV_COLUMNS


def write_power_series(path, p):
    t = np.linspace(0, 100, 40)
    with open(path, "w") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for ti in t:
            row = [ti] + [(1 + ti) ** p] * (len(CSV_COLUMNS) - 1)
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


def test_verify_rates_pass_and_fail(tmp_path, capsys):
    s = tmp_path / "s.csv"
    write_power_series(s, -0.25)
    assert cli.main(["verify-rates", "--series", str(s), "--column", "sup_v",
                     "--expect", "-0.25", "--tol", "0.15"]) == cli.EXIT_OK
    assert "PASS" in capsys.readouterr().out
    assert cli.main(["verify-rates", "--series", str(s), "--column", "sup_v",
                     "--expect", "-1.0", "--tol", "0.15"]) == cli.EXIT_ASSERTION
    assert cli.main(["verify-rates", "--series", str(s)]) == cli.EXIT_OK
    assert cli.main(["verify-rates", "--series", str(s), "--column", "nope"]) == cli.EXIT_CONFIG


def test_check_inequalities(monkeypatch, capsys):
    monkeypatch.setenv("RADGAS_THREADS", "2")
    assert cli.main(["check-inequalities", "--seed", "42", "--trials", "10"]) == cli.EXIT_OK
    assert "GN" in capsys.readouterr().out
    monkeypatch.setenv("RADGAS_THREADS", "many")
    assert cli.main(["check-inequalities", "--trials", "1"]) == cli.EXIT_CONFIG


def test_elliptic_mms(capsys):
    assert cli.main(["elliptic-mms"]) == cli.EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()[2:]
    ratios = [float(line.split()[-1]) for line in lines]
    assert all(3.5 <= r <= 4.5 for r in ratios)


def test_stationary(tmp_path, capsys):
    out = tmp_path / "p.csv"
    assert cli.main(["stationary", "--lx", "60", "--n", "1024", "--out", str(out)]) == cli.EXIT_OK
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    assert data.shape == (1025, 5) and data[0, 1] == -1.0
    assert cli.main(["stationary", "--u-minus", "-0.2", "--u-plus", "-0.5"]) == cli.EXIT_CONFIG
    assert cli.main(["stationary", "--lx", "10", "--n", "1024"]) == cli.EXIT_CONFIG


def test_bad_arguments():
    assert cli.main(["frobnicate"]) == cli.EXIT_CONFIG
    assert cli.main([]) == cli.EXIT_CONFIG


def small_cfg(tmp_path, extra=""):
    p = tmp_path / "run.cfg"
    p.write_text("grid.nx = 128\ngrid.ny = 16\ngrid.lx = 64\ngrid.ly = 8\nt_end = 20\n"
                 "perturbation.kind = gaussian\nperturbation.amp = 0.005\nperturbation.y0 = 4\n"
                 "record_every = 5\n" + extra)
    return p


def test_evolve_checkpoint_resume(tmp_path):
    cfg = small_cfg(tmp_path)
    full, a, b = tmp_path / "full.csv", tmp_path / "a.csv", tmp_path / "b.csv"
    ck, man = tmp_path / "c.bin", tmp_path / "m.json"
    assert cli.main(["evolve", "--config", str(cfg), "--out", str(full), "--max-steps", "40"]) == 0
    assert cli.main(["evolve", "--config", str(cfg), "--out", str(a), "--max-steps", "20",
                     "--checkpoint", str(ck), "--manifest", str(man)]) == 0
    assert cli.main(["evolve", "--config", str(cfg), "--out", str(b), "--max-steps", "20",
                     "--resume", str(ck), "--resume-manifest", str(man)]) == 0
    joined = a.read_text() + "".join(b.read_text().splitlines(keepends=True)[1:])
    assert joined == full.read_text()
    data = io.read_manifest(man)
    assert data["extra"]["checkpoint_step"] == 20
    assert all(tmp_path.joinpath(p).exists() for p in data["outputs"])


def test_evolve_errors(tmp_path, monkeypatch):
    bad = tmp_path / "bad.cfg"
    bad.write_text("u_minus = -0.2\nu_plus = -0.5\n")
    assert cli.main(["evolve", "--config", str(bad)]) == cli.EXIT_CONFIG
    assert cli.main(["evolve", "--config", str(tmp_path / "missing.cfg")]) == cli.EXIT_CONFIG
    from radgas.errors import NaNDetected
    from radgas.evolution import RunAborted

    def boom(*a, **k):
        raise RunAborted(NaNDetected(1.0), [])

    monkeypatch.setattr(cli, "run", boom)
    out = tmp_path / "s.csv"
    assert cli.main(["evolve", "--config", str(small_cfg(tmp_path)), "--out", str(out)]) == cli.EXIT_NUMERICAL
    assert out.read_text().startswith("t,sup_v")
