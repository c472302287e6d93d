import json

import pytest

from gcflab import report as R


def test_registry_covers_all_criteria():
    assert {s.criterion for s in R.REGISTRY.values()} == set(range(1, 13))
    assert R.SUITES["core"] == list(R.REGISTRY)
    assert set(R.SUITES["quick"]) <= set(R.REGISTRY)


def test_unknown_check_rejected_before_running():
    calls = []
    with pytest.raises(KeyError):
        R.run_suite(["volume_interval", "no_such_check"], progress=calls.append)
    assert calls == []
    with pytest.raises(KeyError):
        R.run_suite({"checks": ["volume_interval"], "tolerance": {"bogus": 1.0}})


@pytest.mark.parametrize("norm,measured,expected,value,ok", [
    ("abs", 1.0005, 1.0, 1e-3, True),
    ("abs", 1.01, 1.0, 1e-3, False),
    ("rel", -6.3, -6.2832, 5e-3, True),
    ("max", [1e-4, 2e-4], 0.0, 5e-4, True),
    ("min", [0.1, -1e-5], 0.0, -1e-6, False),
    ("range", 2.0, None, (1.5, 2.5), True),
])
def test_within(norm, measured, expected, value, ok):
    assert R.within(measured, expected, {"norm": norm, "value": value}) is ok


def test_emit_and_determinism(tmp_path):
    cfg = {"checks": ["volume_interval", "grim_reaper", "speed_identity_interval"]}
    res = R.run_suite(cfg)
    assert [r.check for r in res] == cfg["checks"]
    assert all(r.passed for r in res)
    assert R.emit(res, tmp_path / "a") == 0
    assert R.emit(R.run_suite(cfg), tmp_path / "b") == 0
    a = (tmp_path / "a" / "grim_reaper_convergence.csv").read_bytes()
    b = (tmp_path / "b" / "grim_reaper_convergence.csv").read_bytes()
    assert a == b
    doc = json.loads((tmp_path / "a" / "summary.json").read_text())
    keys = list(doc["checks"][0])
    assert keys[:9] == ["check", "claim", "anchor", "measured", "expected", "provenance", "tolerance",
                        "status", "runtime_s"]
    assert all(c["provenance"] for c in doc["checks"])


def test_failing_check_sets_exit_status(tmp_path):
    # an impossible tolerance makes the check fail without stopping the suite
    res = R.run_suite({"checks": ["volume_interval", "speed_identity_interval"],
                       "tolerance": {"volume_interval": 1e-12}})
    assert [r.status for r in res] == ["fail", "pass"]
    assert R.emit(res, tmp_path) == 1


def test_emit_summary_only(tmp_path):
    res = R.run_suite(["radial_translator"])
    assert R.emit(res, tmp_path, series=False) == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["summary.csv", "summary.json"]


def test_emit_rejects_empty_and_unwritable(tmp_path):
    with pytest.raises(ValueError):
        R.emit([], tmp_path)
    blocker = tmp_path / "file"
    blocker.write_text("x")
    res = R.run_suite(["radial_translator"])
    with pytest.raises(OSError):
        R.emit(res, blocker / "sub")


def test_error_is_reported_not_raised(monkeypatch):
    spec = R.REGISTRY["radial_translator"]

    def boom(c, p):
        raise RuntimeError("solver blew up")
    monkeypatch.setattr(spec, "fn", boom)
    res = R.run_suite(["radial_translator", "volume_interval"])
    assert res[0].status == "error" and "solver blew up" in res[0].detail["error"]
    assert res[1].passed
