import json

import pytest

from lightfront import cli
from lightfront import scenario as S
from lightfront.dynamics import IntegrationFailure

CFG = """[scenario]
kind = vacuum-general
name = tiny
[pump]
envelope = bump
a0 = 1
half_width_um = 4
"""


@pytest.fixture
def cfg(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(CFG)
    return path


def test_list_scenarios(capsys):
    assert cli.main(["list-scenarios"]) == 0
    out = capsys.readouterr().out
    assert "fig2_left" in out and "fig4_plasma" in out and "plasma-family" in out


def test_validate_ok_and_bad(cfg, tmp_path, capsys):
    assert cli.main(["validate", str(cfg)]) == 0
    bad = tmp_path / "bad.cfg"
    bad.write_text(CFG + "speed = 3\n")
    assert cli.main(["validate", str(bad)]) == 2
    assert "bad.cfg:8" in capsys.readouterr().err
    assert cli.main(["validate", str(tmp_path / "none.cfg")]) == 2


def test_validate_bundled_by_name():
    assert cli.main(["validate", "fig2_left"]) == 0


def test_run_out_dir_and_overrides(cfg, tmp_path):
    out = tmp_path / "o"
    assert cli.main(["run", str(cfg), "--out-dir", str(out), "--rtol", "1e-10",
                     "--threads", "2"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["scenario"]["numerics"]["rtol"] == 1e-10 and manifest["threads"] == 2
    again = tmp_path / "again"
    assert cli.main(["run", str(out / "manifest.json"), "--out-dir", str(again)]) == 0
    assert (again / "summary.json").read_bytes() == (out / "summary.json").read_bytes()


def test_env_output_root(cfg, tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "root"))
    assert cli.main(["run", str(cfg)]) == 0
    assert (tmp_path / "root" / "tiny" / "summary.json").exists()


def test_warnings_keep_exit_zero(tmp_path, capsys):
    path = tmp_path / "w.cfg"
    path.write_text(CFG + "[field]\nkappa_per_um = 0.2\n")
    assert cli.main(["run", str(path), "--out-dir", str(tmp_path / "w")]) == 0
    summary = json.loads((tmp_path / "w" / "summary.json").read_text())
    assert summary["warnings"] and summary["status"] == "s-collapse"
    assert "warning:" in capsys.readouterr().err


def test_numerical_failure_exit_code(cfg, tmp_path, monkeypatch):
    def boom(*a):
        raise IntegrationFailure("required step size is less than spacing between numbers")
    monkeypatch.setitem(S.RUNNERS, "vacuum-general", boom)
    assert cli.main(["run", str(cfg), "--out-dir", str(tmp_path / "f")]) == 3


def test_bad_flag_values(cfg):
    with pytest.raises(SystemExit) as exc:
        cli.main(["run", str(cfg), "--threads", "0"])
    assert exc.value.code == 2
