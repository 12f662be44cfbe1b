import json
import shutil
import subprocess
import sys

import pytest

from phical.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_associate_json(capsys):
    code, out, _ = run(capsys, "associate", "--p", "x^2", "--order", "6", "--json")
    assert code == 0
    body = json.loads(out)
    assert body["schema"] == "phical/1"
    assert body["rows"] == [f"x^{n + 1}" if n else "x" for n in range(7)]


def test_log_exp_suite(capsys):
    code, out, _ = run(capsys, "check-suite", "--name", "log-exp", "--order", "12")
    assert code == 0 and "log-exp: pass" in out


def test_build_and_verify_cache(capsys, tmp_path):
    cache = str(tmp_path / "m.qbg")
    code, _, _ = run(capsys, "qbg-build", "--system", "rat", "--q", "-1", "--depth", "2", "--floor", "-4",
                     "--cache", cache)
    assert code == 0
    code, out, _ = run(capsys, "qbg-verify", "--cache", cache, "--json")
    assert code == 0 and json.loads(out)["pass"]
    code, out, _ = run(capsys, "cache-info", "--cache", cache, "--json")
    info = json.loads(out)
    assert info["version"] == 1 and info["header"]["q"] == "-1" and info["basis"] == 37


def test_cache_matches_in_memory(capsys, tmp_path):
    from phical.fockrep import SystemKind, TruncPolicy, build_module

    cache = str(tmp_path / "t.qbg")
    run(capsys, "qbg-build", "--system", "trig", "--q", "1", "--cache", cache)
    _, out, _ = run(capsys, "qbg-verify", "--cache", cache, "--window", "2", "--json")
    fresh = build_module(SystemKind.make("trig", "1"), TruncPolicy(2, -3)).verify_relations(window=2)
    body = json.loads(out)
    assert {k: body[k] for k in ("check", "pass", "violations", "meta")} == \
        {k: v for k, v in fresh.to_json().items() if k != "schema"} | {"check": fresh.name, "pass": fresh.passed}


def test_default_cache_dir(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("PHICAL_CACHE_DIR", str(tmp_path))
    code, out, _ = run(capsys, "qbg-build", "--system", "rat", "--q", "1", "--depth", "1", "--floor", "-2", "--json")
    assert code == 0
    path = json.loads(out)["cache"]
    assert path.startswith(str(tmp_path)) and path.endswith(".qbg")


def test_deterministic_json(capsys):
    argv = ["yphi", "--q", "-1", "--order", "2", "--state", "b-1", "--json"]
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second
    rows = json.loads(first)["states"]["b-1"]
    assert rows["-1"] == {"0": "(1)*b-1"}


def test_modes(capsys):
    code, out, _ = run(capsys, "modes", "--q", "1", "--n", "0", "--n", "1", "--json")
    body = json.loads(out)
    assert code == 0
    assert all(v == {"0": f"(1)*{w}"} for w, v in body["modes"]["0"].items())
    assert all(v == {} for v in body["modes"]["1"].values())


def test_coeffs_specialization_first(capsys):
    code, out, _ = run(capsys, "coeffs", "--system", "rat", "--q", "1", "--order", "3", "--json")
    assert code == 0 and json.loads(out)["mu"] == ["1", "0", "0"]


def test_iota(capsys):
    code, out, _ = run(capsys, "iota", "--f", "(x - q*z)/(q*x - z)", "--outer", "z", "--inner", "x",
                       "--order", "3", "--json")
    cells = json.loads(out)["coefficients"]
    assert cells == [[[0, 0], "q"], [[-1, 1], "q^2-1"], [[-2, 2], "q^3-q"]]


def test_verify_with_probe(capsys):
    code, out, _ = run(capsys, "verify", "--p", "x", "--order", "5", "--injective", "x1 - x", "--json")
    body = json.loads(out)
    assert code == 0 and body["meta"]["parts"] == {"associate": True, "inverse-flow": True, "injectivity": True}


@pytest.mark.parametrize("argv", [
    ["associate", "--p", "x + "],
    ["associate", "--p", "x", "--bogus"],
    ["associate", "--p", "z"],
    ["coeffs", "--q", "0"],
    ["nope"],
    ["qbg-verify", "--cache", "/nonexistent/m.qbg"],
    ["modes", "--n", "0", "--state", "b-9"],
])
def test_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_parse_error_reports_offset(capsys):
    code, out, err = run(capsys, "associate", "--p", "x + ", "--json")
    assert code == 2
    assert json.loads(out)["error"] == "usage" and "offset 4" in err


def test_corrupt_cache(capsys, tmp_path):
    bad = tmp_path / "bad.qbg"
    bad.write_bytes(b"garbage")
    assert run(capsys, "cache-info", "--cache", str(bad))[0] == 2


def test_window_error_exit_code(capsys):
    assert run(capsys, "associate", "--p", "x^-1", "--order", "0")[0] == 2
    assert run(capsys, "iota", "--f", "x + z", "--outer", "x1")[0] == 2
    assert run(capsys, "modes", "--q", "-1", "--order", "2", "--n", "-5", "--state", "1")[0] == 3
    code, _, _ = run(capsys, "yphi", "--system", "trig", "--q", "-1", "--multiplier", "1", "--order", "2")
    assert code == 1


@pytest.mark.skipif(shutil.which("phical") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["phical", "check-suite", "--name", "delta", "--json"], capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["pass"]


def test_module_entry():
    res = subprocess.run([sys.executable, "-m", "phical.cli", "associate", "--p", "1", "--order", "2"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "f_1 = 1" in res.stdout
