import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from rectify import cli, curve, measures
from rectify.geometry import save_points


def run_cli(args, cwd):
    return subprocess.run([sys.executable, "-m", "rectify.cli", *args],
                          cwd=cwd, capture_output=True, text=True)


@pytest.fixture()
def workspace(tmp_path):
    rc = cli.main(["gen", "--kind", "segment", "--n", "120",
                   "--params", "dim=2", "--out", str(tmp_path / "m.json")])
    assert rc == 0
    rc = cli.main(["family", "--measure", str(tmp_path / "m.json"),
                   "--k0", "0", "--k-max", "7",
                   "--out", str(tmp_path / "f.json")])
    assert rc == 0
    return tmp_path


def test_gen_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert cli.main(["gen", "--kind", "cantor4", "--params", "depth=3",
                         "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_jones_csv(workspace):
    mu = measures.load_measure(workspace / "m.json")
    save_points(workspace / "pts.json", mu.atoms[::30])
    rc = cli.main(["jones", "--measure", str(workspace / "m.json"),
                   "--family", str(workspace / "f.json"),
                   "--points", str(workspace / "pts.json"),
                   "--out", str(workspace / "prof.csv")])
    assert rc == 0
    rows = (workspace / "prof.csv").read_text().strip().splitlines()
    assert rows[0] == "point_id,k,partial_sum,label"
    assert all(r.endswith("bounded") for r in rows[1:])


def test_curve_and_render(workspace):
    mu = measures.load_measure(workspace / "m.json")
    h = curve.hierarchy_from_points(mu.atoms, n_gens=6)
    curve.save_hierarchy(workspace / "h.json", h)
    rc = cli.main(["curve", "--hierarchy", str(workspace / "h.json"),
                   "--out", str(workspace / "g.json"),
                   "--svg", str(workspace / "g.svg")])
    assert rc == 0
    payload = json.loads((workspace / "g.json").read_text())
    assert payload["ledger"]["n_bridges"] == 0
    assert payload["ledger"]["h1_gamma"] == pytest.approx(1.0, abs=1e-9)
    svg = (workspace / "g.svg").read_text()
    assert svg.startswith("<svg") and "<line" in svg
    rc = cli.main(["render", "--gamma", str(workspace / "g.json"),
                   "--hierarchy", str(workspace / "h.json"),
                   "--out", str(workspace / "g2.svg")])
    assert rc == 0
    assert (workspace / "g.svg").read_bytes() == \
        (workspace / "g2.svg").read_bytes()


def test_missing_file_exit_code(tmp_path, capsys):
    rc = cli.main(["family", "--measure", str(tmp_path / "nope.json"),
                   "--k-max", "4", "--out", str(tmp_path / "f.json")])
    assert rc == 2
    err = capsys.readouterr().err
    assert err.startswith("error:") and "nope.json" in err


def test_invalid_config_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text('[measure]\nkind = "segment"\n[family]\nk_max = 4\n'
                   '[curve]\nepsilon = 0.5\n')
    rc = cli.main(["run", "--config", str(cfg)])
    assert rc == 2
    assert capsys.readouterr().err.startswith("error:")


def test_run_pipeline_deterministic(tmp_path):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text(
        'seed = 3\n[measure]\nkind = "segment"\nn = 100\n'
        '[measure.params]\ndim = 2\n'
        '[family]\nk0 = 0\nk_max = 6\n[jones]\nsamples = 10\n'
        '[curve]\nn_gens = 5\n')
    for sub in ("r1", "r2"):
        rc = cli.main(["run", "--config", str(cfg),
                       "--out-dir", str(tmp_path / sub)])
        assert rc == 0
    for name in ("measure.json", "family.json", "betas.csv", "jones.csv",
                 "gamma.json", "gamma.svg", "summary.json"):
        assert (tmp_path / "r1" / name).read_bytes() == \
            (tmp_path / "r2" / name).read_bytes(), name
    summary = json.loads((tmp_path / "r1" / "summary.json").read_text())
    assert summary["curve"]["connected"] is True


def test_cones_csv(workspace):
    rc = cli.main(["cones", "--measure", str(workspace / "m.json"),
                   "--out", str(workspace / "labels.csv")])
    assert rc == 0
    rows = (workspace / "labels.csv").read_text().strip().splitlines()
    assert rows[0] == "atom_id,label,best_V,best_alpha,min_ratio"
    assert len(rows) == 121
    assert all(r.split(",")[1] == "1" for r in rows[1:])


def test_entry_point_subprocess(tmp_path):
    res = run_cli(["gen", "--kind", "circle", "--n", "32",
                   "--out", str(tmp_path / "c.json")], tmp_path)
    assert res.returncode == 0
    res = run_cli(["gen", "--kind", "nope", "--out",
                   str(tmp_path / "x.json")], tmp_path)
    assert res.returncode == 2
    assert res.stderr.startswith("error:")
