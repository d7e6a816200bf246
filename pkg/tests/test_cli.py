import subprocess
import sys

import pytest

from gpricing.cli import EXIT_FAILED, EXIT_INVALID, EXIT_OK, parse_payoff, run, write_atomic
from gpricing.errors import ValidationError


@pytest.fixture
def cfg(tmp_path):
    def write(text, name="driver.cfg"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)

    return write


def test_price_black_scholes(cfg, tmp_path, capsys):
    out = tmp_path / "price.txt"
    rc = run(["price", "--driver", cfg("driver=black_scholes r=0.05 b=0.05 sigma=0.2"), "--out", str(out)])
    assert rc == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0].startswith("price 10.45")
    assert lines[1] == "steps,price,change"
    assert [int(r.split(",")[0]) for r in lines[2:]] == [250, 500, 1000, 2000]


def test_price_to_stdout(cfg, capsys):
    assert run(["price", "--driver", cfg("driver=abs_z mu=3"), "--payoff", "linear:2", "--steps", "64", "--ladder", "1"]) == 0
    assert capsys.readouterr().out.startswith("price 6.0000000000")


def test_recover(cfg, tmp_path):
    out = tmp_path / "surface.csv"
    assert run(["recover", "--driver", cfg("driver=abs_z mu=3"), "--out", str(out)]) == EXIT_OK
    est = [float(r.split(",")[1]) for r in out.read_text().splitlines()[1:]]
    assert est == pytest.approx([6, 3, 0, 3, 6], abs=1e-9)


def test_pde_check(cfg, tmp_path):
    out, grid = tmp_path / "pde.csv", tmp_path / "u.csv"
    rc = run(["pde-check", "--driver", cfg("driver=gmu mu=0.5"), "--payoff", "put:100", "--drift", "0",
              "--steps", "500", "--m", "200", "--tolerance", "0.1", "--out", str(out), "--grid-out", str(grid)])
    assert rc == EXIT_OK
    assert out.read_text().strip().endswith("pass")
    assert grid.read_text().startswith("t,")


def test_synth_then_scan(cfg, tmp_path, capsys):
    q, rep = tmp_path / "q.csv", tmp_path / "rep.txt"
    drv = cfg("driver=black_scholes r=0.05 b=0.05 sigma=0.2")
    assert run(["synth", "--driver", drv, "--strikes", "95,105", "--expiries", "1,20", "--steps", "60", "--out", str(q)]) == 0
    assert len(q.read_text().splitlines()) == 1 + 8
    rc = run(["scan", "--quotes", str(q), "--sigma", "0.2", "--drift", "0.05", "--steps", "60", "--out", str(rep)])
    assert rc == EXIT_OK
    assert "0 violations" in capsys.readouterr().err
    assert "# 0 violations" in rep.read_text()


def test_scan_violation_exit(tmp_path):
    q = tmp_path / "q.csv"
    q.write_text(
        "quote_date,expiry,underlying,strike,type,side,price\n"
        "2024-01-02,2024-02-01,100,100,C,trade,2\n"
        "2024-01-02,2024-02-01,100,110,C,trade,5\n"
    )
    assert run(["scan", "--quotes", str(q), "--sigma", "0.2"]) == EXIT_FAILED


def test_props_constant_fails(cfg, tmp_path, capsys):
    out = tmp_path / "props.txt"
    rc = run(["props", "--driver", cfg("driver=constant c=1"), "--count", "5", "--out", str(out)])
    assert rc == EXIT_FAILED
    assert "self_financing: fail" in capsys.readouterr().err
    assert "property=self_financing verdict=fail" in out.read_text()


def test_props_deterministic(cfg, tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    drv = cfg("driver=abs_z mu=2")
    run(["props", "--driver", drv, "--count", "4", "--seed", "7", "--out", str(a)])
    run(["props", "--driver", drv, "--count", "4", "--seed", "7", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize(
    "argv,flag",
    [
        (["price"], "--driver"),
        (["price", "--driver", "missing.cfg"], "--driver"),
        (["scan", "--sigma", "0.2"], "--quotes"),
        (["bogus"], "invalid choice"),
        (["price", "--steps", "0", "--driver", "x"], "--steps"),
        (["synth", "--sigma", "-1", "--driver", "x"], "--sigma"),
    ],
)
def test_invalid_input(argv, flag, capsys):
    assert run(argv) == EXIT_INVALID
    assert flag in capsys.readouterr().err


def test_scan_requires_sigma(tmp_path, capsys):
    q = tmp_path / "q.csv"
    q.write_text("quote_date,expiry,underlying,strike,type,side,price\n")
    assert run(["scan", "--quotes", str(q)]) == EXIT_INVALID
    assert "--sigma" in capsys.readouterr().err


def test_bad_driver_config(cfg, capsys):
    assert run(["price", "--driver", cfg("driver=gmu")]) == EXIT_INVALID
    assert "missing parameter mu" in capsys.readouterr().err


def test_courant_violation_is_invalid(cfg, capsys):
    assert run(["price", "--driver", cfg("driver=gmu mu=25"), "--steps", "8", "--ladder", "1"]) == EXIT_INVALID
    assert "n=50" in capsys.readouterr().err


def test_atomic_write_leaves_no_temp(tmp_path):
    target = tmp_path / "sub" / "out.txt"
    write_atomic(target, "hello\n")
    write_atomic(target, "again\n")
    assert target.read_text() == "again\n"
    assert [p.name for p in target.parent.iterdir()] == ["out.txt"]


def test_failed_run_leaves_output_untouched(cfg, tmp_path):
    out = tmp_path / "price.txt"
    out.write_text("previous\n")
    run(["price", "--driver", cfg("driver=gmu mu=25"), "--steps", "8", "--out", str(out)])
    assert out.read_text() == "previous\n"


@pytest.mark.parametrize("text", ["call", "call:x", "swap:1"])
def test_parse_payoff_errors(text):
    with pytest.raises(ValidationError):
        parse_payoff(text, 1.0)


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "gpricing.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for sub in ("price", "props", "recover", "pde-check", "scan", "synth"):
        assert sub in res.stdout
