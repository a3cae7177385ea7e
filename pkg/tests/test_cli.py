from __future__ import annotations

import io
import json

import pytest

from wpvol.cli import RunConfig, UsageError, main


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


def test_volume():
    assert run("volume", "--g", "1", "--n", "1") == (0, "(q1 + 4*P)/48\n")
    assert run("volume", "--g", "0", "--n", "4", "--normalized") == (0, "1 + q1 + q2 + q3 + q4\n")
    code, text = run("volume", "--g", "1", "--n", "1", "--format", "json")
    assert json.loads(text)["variables"] == ["q1", "P"]
    code, text = run("volume", "--g", "1", "--n", "1", "--format", "latex")
    assert r"\pi^{2}" in text


def test_intersect():
    assert run("intersect", "--g", "0", "--kappa", "2", "--psi", "0,0,0,0,0") == (0, "5\n")
    assert run("intersect", "--g", "2", "--psi", "4") == (0, "1/1152\n")


@pytest.mark.parametrize(
    "argv",
    [
        ("volume", "--g", "0", "--n", "2"),
        ("intersect", "--g", "0", "--psi", "1,a"),
        ("intersect", "--g", "0", "--psi", "0,0"),
        ("verify", "cross", "--dmax", "-1"),
        ("verify", "kernel", "--tol", "0"),
        ("frobnicate",),
        ("cache", "info"),
    ],
)
def test_usage_errors(argv, monkeypatch):
    monkeypatch.delenv("WPV_CACHE", raising=False)
    assert run(*argv)[0] == 2


def test_config_validation():
    with pytest.raises(UsageError):
        RunConfig(nmax=0)
    with pytest.raises(UsageError):
        RunConfig(jobs=0)


def test_verify_commands_pass_and_are_deterministic():
    for argv in (
        ("verify", "cross", "--dmax", "3"),
        ("verify", "virasoro", "--gmax", "1", "--nmax", "3", "--kmax", "3"),
        ("verify", "kdv", "--gmax", "1", "--nmax", "6"),
        ("verify", "kernel", "--kmax", "1"),
    ):
        first = run(*argv)
        assert first[0] == 0, first[1]
        assert "FAIL" not in first[1]
        assert run(*argv) == first
        assert run("--jobs", "3", *argv) == first


def test_kernel_csv():
    code, text = run("verify", "kernel", "--kmax", "0")
    lines = text.splitlines()
    assert lines[0] == "kind,k,t,numeric,exact,abs_err,panels_used,status"
    assert lines[1].startswith("single,0,0,0.166666666667,0.166666666667,")


def test_table_and_emit(tmp_path):
    out = tmp_path / "t.json"
    assert run("table", "--dmax", "2", "--out", str(out))[0] == 0
    rows = json.loads(out.read_text())
    assert {"g": 1, "kappa": 2, "psi": [0, 0], "value": "1/8"} in rows
    code, text = run("emit", "G", "--gmax", "1", "--nmax", "2")
    assert {"monomial": [1, 1], "coeff": "1/24"} in json.loads(text)
    code, text = run("emit", "F", "--gmax", "0", "--nmax", "3", "--format", "latex")
    assert text.strip() == r"\frac{1}{6} t_{0}^{3}"


def test_cache_flag_and_env(tmp_path, monkeypatch):
    env_path = tmp_path / "env.jsonl"
    flag_path = tmp_path / "flag.jsonl"
    monkeypatch.setenv("WPV_CACHE", str(env_path))
    assert run("cache", "warm", "--dmax", "3")[0] == 0
    assert env_path.exists()
    code, text = run("--cache", str(flag_path), "cache", "warm", "--dmax", "2")
    assert flag_path.exists()
    code, text = run("cache", "info")
    assert "loaded\t" in text and "computed\t0" in text
    env_path.write_text("garbage\n")
    assert run("intersect", "--g", "1", "--psi", "1")[0] == 2
