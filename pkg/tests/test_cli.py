import io
import json
import subprocess
import sys

import pytest

from delta_moments.cli import RunConfig, main, parse_args, run


def _run(argv):
    cfg = parse_args(argv)
    buf = io.StringIO()
    code = run(cfg, stdout=buf)
    return code, buf.getvalue()


def test_parse_example():
    cfg = parse_args(["moments", "--a", "-0.25", "--k", "3", "--tmax", "1048576", "--y", "auto"])
    assert cfg == RunConfig(command="moments", a=-0.25, k=3, y="auto", t_max=1048576.0)


@pytest.mark.parametrize("argv, flag", [
    (["constants", "--a", "0.1"], "a must lie in (-1/2, 0)"),
    (["constants", "--a", "-0.5"], "a must lie in (-1/2, 0)"),
    (["constants", "--a", "-0.25", "--k", "8"], "--k"),
    (["constants", "--a", "-0.25", "--y", "zero"], "--y"),
    (["moments", "--a", "-0.25", "--tmax", str(2 ** 31)], "--tmax"),
    (["moments", "--a", "-0.25", "--quad-order", "4"], "--quad-order"),
    (["relations", "--a", "-0.25", "--pattern", "0,1,1"], "--pattern"),
    (["launch", "--a", "-0.25"], "command"),
])
def test_usage_errors(argv, flag, capsys):
    with pytest.raises(SystemExit) as exc:
        parse_args(argv)
    assert exc.value.code == 2
    assert flag in capsys.readouterr().err
    assert main(argv) == 2


def test_constants_schema():
    code, out = _run(["constants", "--a", "-0.25", "--k", "3", "--y", "500", "--format", "json"])
    assert code == 0
    d = json.loads(out)
    assert list(d) == ["a", "k", "y", "s_kl", "B_k", "C_k_density", "C_k_integrated", "b_a", "A0",
                       "alpha", "delta", "branch", "corollary_delta"]
    assert d["b_a"] == 1.625 and d["A0"] == pytest.approx(5.0) and d["branch"] == "SmallK"
    assert d["delta"] == pytest.approx(1 / 28) and d["s_kl"]["1"] == d["s_kl"]["2"]


def test_constants_k2_nulls():
    d = json.loads(_run(["constants", "--a", "-0.25", "--k", "2", "--y", "100"])[1])
    assert d["b_a"] is None and d["corollary_delta"] is None and d["B_k"] > 0


def test_constants_csv():
    code, out = _run(["constants", "--a", "-0.1", "--k", "4", "--y", "40", "--format", "csv"])
    assert code == 0 and out.startswith("name,value\n") and "s_4;2" in out


def test_relations_csv():
    code, out = _run(["relations", "--a", "-0.25", "--k", "3", "--y", "20", "--format", "csv"])
    lines = out.splitlines()
    assert code == 0 and lines[0] == "n1,n2,n3,i1,i2,l" and len(lines) == 12


def test_near_solution_count():
    code, out = _run(["relations", "--a", "-0.25", "--k", "3", "--y", "8", "--pattern", "1,1",
                      "--delta", "0.5"])
    assert code == 0 and json.loads(out)["count"] >= 0


def test_computation_error_exit_code(capsys):
    code, _ = _run(["relations", "--a", "-0.25", "--k", "3", "--y", "1000", "--delta", "0.5"])
    assert code == 1
    assert "CapacityError" in capsys.readouterr().err


def test_moments_lines():
    code, out = _run(["moments", "--a", "-0.25", "--k", "2", "--tmin", "256", "--tmax", "16384"])
    lines = [json.loads(s) for s in out.splitlines()]
    assert code == 0 and len(lines) == 7
    assert all(r["window"] == "Dyadic" for r in lines[:6])
    assert "slope" in lines[-1] and lines[-1]["target"] == 1.25


def test_fit_command():
    code, out = _run(["fit", "--a", "-0.1", "--k", "4", "--y", "30", "--tmin", "256", "--tmax", "16384"])
    assert code == 0 and json.loads(out)["target"] == pytest.approx(1.8)


def test_fit_needs_windows():
    code, _ = _run(["fit", "--a", "-0.1", "--k", "2", "--tmin", "256", "--tmax", "2048"])
    assert code == 1


def test_voronoi_outputs(tmp_path):
    code, _ = _run(["voronoi", "--a", "-0.25", "--tmin", "1024", "--y", "64", "--format", "csv",
                    "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "voronoi.csv").read_text().startswith("x,delta,r_a1,residual\n")
    s = json.loads((tmp_path / "voronoi_summary.json").read_text())
    assert set(s) >= {"T", "y", "residual_l2", "fitted_slopes"}


def test_verify_passes():
    code, out = _run(["verify", "--a", "-0.25"])
    assert code == 0
    assert out.count("PASS") == len(out.splitlines()) >= 10


def test_report_table():
    code, out = _run(["report", "--a", "-0.25", "--k", "3", "--y", "50", "--tmin", "512", "--tmax", "4096"])
    assert code == 0 and "| quantity | value |" in out and "A0 = 8(1-a^2)/(1-2a) | 5 |" in out


def test_deterministic_and_thread_independent():
    base = ["moments", "--a", "-0.25", "--k", "3", "--y", "40", "--tmin", "512", "--tmax", "16384"]
    first = _run(base)[1]
    assert _run(base)[1] == first
    assert _run(base + ["--threads", "3"])[1] == first


def test_cache_does_not_change_output(tmp_path, monkeypatch):
    base = ["moments", "--a", "-0.1", "--k", "2", "--tmin", "256", "--tmax", "8192"]
    plain = _run(base)[1]
    cached = _run(base + ["--cache-dir", str(tmp_path)])[1]
    again = _run(base + ["--cache-dir", str(tmp_path)])[1]
    assert plain == cached == again
    assert any(tmp_path.iterdir())


def test_env_overrides_cache_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("DELTA_MOMENTS_CACHE", str(tmp_path / "env"))
    cfg = parse_args(["constants", "--a", "-0.25", "--cache-dir", str(tmp_path / "flag")])
    assert cfg.cache_dir == str(tmp_path / "env")


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "delta_moments", "constants", "--a", "-0.25",
                          "--k", "3", "--y", "30"], capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["k"] == 3
