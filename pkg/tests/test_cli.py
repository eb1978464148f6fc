import hashlib
import json
import shutil

import numpy as np
import pytest

from ccpp import fixtures
from ccpp.cli import main
from ccpp.config import format_config
from ccpp.trajectory_io import HEADER

from conftest import cylinder_config, outdoor_config


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    fixtures.export(fixtures.preset("cylinder", dims={"radius": 1.0, "height": 4.0}), d / "cyl.xyz")
    fixtures.export(fixtures.preset("twin-pillars"), d / "pillars.xyz")
    (d / "cyl.cfg").write_text(format_config(cylinder_config(2)))
    return d


def _digests(folder):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(folder.glob("trajectory_*.csv"))}


def test_plan_writes_outputs(workspace, capsys):
    out = workspace / "run1"
    rc = main(["plan", "--model", str(workspace / "cyl.xyz"), "--config", str(workspace / "cyl.cfg"),
               "--out", str(out), "--dump-debug"])
    assert rc == 0
    assert sorted(p.name for p in out.glob("trajectory_*.csv")) == ["trajectory_0.csv", "trajectory_1.csv"]
    assert (out / "trajectory_0.csv").read_text().splitlines()[0] == HEADER
    man = json.loads((out / "manifest.json").read_text())
    assert man["seed"] == 0 and set(man["timings_ms"]) >= {"load", "slice", "topology", "offset", "mission"}
    assert man["outputs"]["trajectory_0.csv"] == _digests(out)["trajectory_0.csv"]
    summary = json.loads((out / "mission.json").read_text())
    assert summary["n_agents"] == 2 and len(summary["agents"]) == 2
    assert any((out / "debug" / "offsets").iterdir())
    assert "planned 2 agent(s)" in capsys.readouterr().out


def test_plan_is_deterministic(workspace):
    a, b = workspace / "det_a", workspace / "det_b"
    for o in (a, b):
        assert main(["plan", "--model", str(workspace / "cyl.xyz"), "--config", str(workspace / "cyl.cfg"),
                     "--out", str(o), "--agents", "3"]) == 0
    assert _digests(a) == _digests(b) and len(_digests(a)) == 3
    assert (a / "mission.json").read_bytes() == (b / "mission.json").read_bytes()


def test_verify_fresh_plan(workspace, capsys):
    out = workspace / "run1"
    if not out.exists():
        test_plan_writes_outputs(workspace, capsys)
    rc = main(["verify", "--model", str(workspace / "cyl.xyz"), "--trajectories", str(out),
               "--config", str(workspace / "cyl.cfg"), "--out", str(workspace / "rep")])
    text = capsys.readouterr().out
    assert rc == 0
    assert json.loads(text)["violation_count"] == 0
    assert (workspace / "rep" / "report.json").exists()
    assert (workspace / "rep" / "uncovered.txt").exists()


def test_verify_forced_conflict(workspace, capsys):
    src = workspace / "run1"
    bad = workspace / "conflict"
    bad.mkdir()
    shutil.copy(src / "trajectory_0.csv", bad / "trajectory_0.csv")
    shutil.copy(src / "trajectory_0.csv", bad / "trajectory_1.csv")
    rc = main(["verify", "--model", str(workspace / "cyl.xyz"), "--trajectories", str(bad),
               "--config", str(workspace / "cyl.cfg")])
    err = capsys.readouterr().err
    assert rc == 4
    assert "violation(s)" in err and "separation=" in err


def test_verify_corrupt_row(workspace, capsys):
    bad = workspace / "corrupt"
    bad.mkdir()
    (bad / "trajectory_0.csv").write_text(HEADER + "\n0,0,0,0,0,0,0,0\n1,x,0,0,0,0,0,0\n")
    rc = main(["verify", "--model", str(workspace / "cyl.xyz"), "--trajectories", str(bad),
               "--config", str(workspace / "cyl.cfg")])
    err = capsys.readouterr().err
    assert rc == 2
    assert "error [verify]" in err and "trajectory_0.csv:3" in err


def test_bad_config_names_stage(workspace, capsys):
    cfg = workspace / "bad.cfg"
    cfg.write_text(format_config(cylinder_config(2)).replace("omega = 0.5", "omega = 3.0"))
    rc = main(["plan", "--model", str(workspace / "cyl.xyz"), "--config", str(cfg), "--out", str(workspace / "x")])
    assert rc == 2
    assert "error [config]" in capsys.readouterr().err


def test_strict_infeasible_exit_3(tmp_path, capsys):
    fixtures.export(fixtures.preset("three-pillars"), tmp_path / "p.xyz")
    (tmp_path / "c.cfg").write_text(format_config(outdoor_config(2)))
    rc = main(["plan", "--model", str(tmp_path / "p.xyz"), "--config", str(tmp_path / "c.cfg"),
               "--out", str(tmp_path / "o"), "--strict"])
    assert rc == 3
    assert "error [mission]" in capsys.readouterr().err


def test_inspect_model(workspace, capsys):
    rc = main(["inspect-model", "--model", str(workspace / "pillars.xyz"), "--delta-lambda", "0.433", "--d-min", "0.2"])
    out = capsys.readouterr().out
    assert rc == 0
    ks = [int(l.rsplit(" ", 1)[1]) for l in out.splitlines() if l.startswith("slice ")]
    assert ks and all(k == 2 for k in ks)


def test_inspect_empty_file(tmp_path, capsys):
    (tmp_path / "e.xyz").write_text("")
    assert main(["inspect-model", "--model", str(tmp_path / "e.xyz"), "--delta-lambda", "0.4", "--d-min", "0.2"]) == 2
    assert "error [model]" in capsys.readouterr().err


def test_missing_model_io_exit(tmp_path, capsys):
    (tmp_path / "c.cfg").write_text(format_config(cylinder_config(2)))
    rc = main(["plan", "--model", str(tmp_path / "none.xyz"), "--config", str(tmp_path / "c.cfg"),
               "--out", str(tmp_path / "o")])
    assert rc == 5


def test_fixture_and_config_commands(tmp_path, capsys):
    assert main(["fixture", "boxes", "--out", str(tmp_path / "b.xyz"), "--dim", "layers=2"]) == 0
    pts = np.loadtxt(tmp_path / "b.xyz")
    assert pts[:, 2].max() == pytest.approx(0.6)
    assert main(["fixture", "boxes", "--out", str(tmp_path / "b.xyz"), "--dim", "layers"]) == 2
    capsys.readouterr()
    assert main(["config", "indoor"]) == 0
    assert "omega = 0.2" in capsys.readouterr().out
