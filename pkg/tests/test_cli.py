import json

import pytest

from gcflab import cli


def test_translator_command(tmp_path, capsys):
    rc = cli.dispatch(["translator", "--domain", "interval:-1.5707963,1.5707963", "--res", "256",
                       "--out", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "grim reaper" in out
    assert (tmp_path / "translator.csv").exists()


def test_flow_command(tmp_path, capsys):
    rc = cli.dispatch(["flow", "--domain", "disk:1", "--res", "64", "--t", "0.2", "--out", str(tmp_path)])
    assert rc == 0
    head = (tmp_path / "flow.csv").read_text().splitlines()[0]
    assert head.startswith("t,vol,h_plus")
    assert json.loads((tmp_path / "flow.json").read_text())["kind"] == "curve"


def test_oval_command_negative_lists(tmp_path, capsys):
    rc = cli.dispatch(["oval", "--t", "-4", "--s", "-5,-10", "--res", "128", "--out", str(tmp_path)])
    assert rc == 0
    assert (tmp_path / "oval_table.csv").exists()
    assert "hausdorff" in capsys.readouterr().out


def test_verify_single_check(tmp_path, capsys):
    rc = cli.dispatch(["verify", "--suite", "volume_interval", "--out", str(tmp_path)])
    assert rc == 0
    assert "[PASS] volume_interval" in capsys.readouterr().out
    rc = cli.dispatch(["verify", "--suite", "volume_interval", "--tol", "volume_interval=1e-12",
                       "--out", str(tmp_path)])
    assert rc == 1


def test_env_overrides_out(tmp_path, monkeypatch):
    monkeypatch.setenv("GCFLAB_OUT", str(tmp_path / "env"))
    assert cli.dispatch(["verify", "--suite", "radial_translator", "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "env" / "summary.json").exists()
    assert not (tmp_path / "flag").exists()


def test_config_file(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[flow]\ndomain = sphere:1\nres = 64\nt = 0.05\n")
    assert cli.dispatch(["flow", "--config", str(ini), "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "flow.json").read_text())["kind"] == "axisym"
    # flags win over the file
    assert cli.dispatch(["flow", "--config", str(ini), "--domain", "ellipse:1,0.5", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "flow.json").read_text())["kind"] == "curve"


@pytest.mark.parametrize("argv", [
    ["bogus"],
    [],
    ["oval", "--s", "-5,-3"],
    ["oval", "--s", "-5,x"],
    ["flow", "--domain", "square:1"],
    ["flow", "--t", "-1"],
    ["verify", "--suite", "nope"],
    ["verify", "--tol", "garbage"],
])
def test_bad_input_gives_usage(argv, capsys, tmp_path):
    assert cli.dispatch(argv + ["--out", str(tmp_path)] if argv else argv) == 2
    assert "usage" in capsys.readouterr().err


def test_bad_config_key(tmp_path):
    ini = tmp_path / "bad.ini"
    ini.write_text("[flow]\nwhat = 1\n")
    assert cli.dispatch(["flow", "--config", str(ini)]) == 2
