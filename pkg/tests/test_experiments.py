import csv
import io
import subprocess
import sys

import numpy as np
import pytest

from stokesreg import cli
from stokesreg.experiments import (ConfigError, ExperimentConfig, convergence_report,
                                   near_surface_points, parse_h, run_experiment)
from stokesreg import sphere


def test_convergence_report_examples():
    assert convergence_report([8e-3, 1e-3]) == [pytest.approx(3.0)]
    assert convergence_report([1e-3, 1e-3]) == [0.0]
    assert convergence_report([1e-3, 0.0]) == [None]
    # consecutive orders from a halving sequence of errors
    orders = convergence_report([1.21e-4, 6.24e-6, 3.06e-7])
    assert orders == [pytest.approx(4.277, abs=1e-3), pytest.approx(4.350, abs=1e-3)]
    with pytest.raises(ValueError):
        convergence_report([1.0])


def test_parse_h():
    assert parse_h("1/16,1/32") == [1 / 16, 1 / 32]
    with pytest.raises(ConfigError):
        parse_h("1/0")


@pytest.mark.parametrize("kwargs", [
    dict(experiment="nope"),
    dict(experiment="single-layer", h=[1 / 16, 1 / 64]),
    dict(experiment="single-layer", mode="corrected"),
    dict(experiment="two-spheres", mode="on"),
    dict(experiment="single-layer", h=[-1.0]),
])
def test_config_errors(kwargs):
    with pytest.raises(ConfigError):
        ExperimentConfig(**kwargs)


def test_near_surface_points_band():
    h = 1 / 8
    t = near_surface_points(sphere(), h, "outside")
    r = np.linalg.norm(t.points, axis=1)
    assert np.all((r > 1) & (r <= 1 + h + 1e-12))
    both = near_surface_points(sphere(), h, "both")
    assert np.any(np.linalg.norm(both.points, axis=1) < 1)


def test_quadpts_csv_schema():
    res = run_experiment(ExperimentConfig("quadpts", "sphere", [1 / 8]))
    buf = io.StringIO()
    res.write(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "x,y,z,nx,ny,nz,weight,axis_set"
    rows = [r for r in csv.reader(lines[1:]) if not r[0].startswith("#")]
    assert len(rows) == res.levels[0].nodes
    assert all(len(r) == 8 for r in rows)
    assert lines[-1].startswith("# h=0.125 nodes=1062")


def test_single_layer_summary_rows():
    res = run_experiment(ExperimentConfig("single-layer", "sphere", [1 / 8, 1 / 16], mode="on"))
    buf = io.StringIO()
    res.write(buf)
    text = buf.getvalue()
    assert "# order_max=" in text and "# order_l2=" in text
    assert res.levels[1].max_error < res.levels[0].max_error


def test_cli_exit_codes(tmp_path):
    assert cli.main(["single-layer", "--h", "1/16,1/64"]) == 2
    out = tmp_path / "q.csv"
    assert cli.main(["quadpts", "--h", "1/8", "-o", str(out)]) == 0
    assert out.read_text().startswith("x,y,z")
    with pytest.raises(SystemExit) as info:
        cli.main(["quadpts", "--corrections", "maybe"])
    assert info.value.code == 2


def test_cli_nonconvergence_exit_code(monkeypatch):
    import stokesreg.experiments as ex
    real = ex.InterfaceProblem

    def capped(*args, **kwargs):
        p = real(*args, **kwargs)
        p.max_iter = 1
        return p

    monkeypatch.setattr(ex, "InterfaceProblem", capped)
    assert cli.main(["interface", "--h", "1/8"]) == 3


def test_cli_reproducible(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert cli.main(["sum-layers", "--h", "1/8", "--mode", "near", "--max-targets", "40",
                         "--seed", "3", "-o", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_console_script_runs():
    proc = subprocess.run([sys.executable, "-m", "stokesreg.cli", "quadpts", "--h", "1/4"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.startswith("x,y,z")
