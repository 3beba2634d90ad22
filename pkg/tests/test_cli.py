import json
import math
from pathlib import Path

import numpy as np
import pytest

from gprimes import li_eval, pi_count, read_prime_system, riemann_pi, N_count, \
    M_sum, L_sum
from gprimes.cli import main

GOLDEN = Path(__file__).resolve().parent.parent / "golden"


def run(args):
    return main([str(a) for a in args])


def test_discretize_li_count(tmp_path):
    out = tmp_path / "li.psys"
    assert run(["discretize", "--template", "li", "--seed", "42",
                "--x-max", "1e6", "-o", out]) == 0
    ps = read_prime_system(str(out))
    assert abs(ps.count - math.floor(li_eval(1e6))) <= 1


def test_discretize_log_cell_completion(tmp_path):
    # log(148.4) = 4.9999...: four complete cells, so four primes
    out = tmp_path / "log.psys"
    assert run(["discretize", "--template", "log", "--seed", "3",
                "--x-max", "148.4", "-o", out]) == 0
    ps = read_prime_system(str(out))
    assert ps.count == math.floor(math.log(148.4))
    assert ps.count == 4


def test_discretize_deterministic(tmp_path):
    a, b = tmp_path / "a.psys", tmp_path / "b.psys"
    run(["discretize", "--template", "li", "--seed", "9", "--x-max", "500", "-o", a])
    run(["discretize", "--template", "li", "--seed", "9", "--x-max", "500", "-o", b])
    assert a.read_bytes() == b.read_bytes()


def test_golden_psys_regenerates(tmp_path):
    out = tmp_path / "li.psys"
    run(["discretize", "--template", "li", "--seed", "42", "--x-max", "1e4",
         "-o", out])
    assert out.read_bytes() == (GOLDEN / "li_seed42_x1e4.psys").read_bytes()


def test_golden_analytics_regenerates(tmp_path):
    csv = tmp_path / "a.csv"
    run(["analyze", "--ps", GOLDEN / "li_seed42_x1e4.psys",
         "--x-grid", "log:2:10000:8", "-o", csv])
    assert csv.read_bytes() == (GOLDEN / "li_seed42_x1e4_analytics.csv").read_bytes()


def test_analyze_rows_match_module(tmp_path):
    csv = tmp_path / "a.csv"
    ps_path = GOLDEN / "li_seed42_x1e4.psys"
    run(["analyze", "--ps", ps_path, "--x-grid", "1,100,5000", "-o", csv])
    ps = read_prime_system(str(ps_path))
    lines = csv.read_text().splitlines()
    assert lines[0] == "x,pi,Pi,N,M,L"
    # row below the first prime: the empty product only
    assert lines[1].split(",") == ["1", "0", "0", "1", "1", "1"]
    for line in lines[2:]:
        x, pi_v, Pi_v, n_v, m_v, l_v = line.split(",")
        x = float(x)
        assert int(pi_v) == pi_count(ps, x)
        assert float(Pi_v) == pytest.approx(riemann_pi(ps, x), rel=1e-15)
        assert int(n_v) == N_count(ps, x)
        assert int(m_v) == M_sum(ps, x)
        assert int(l_v) == L_sum(ps, x)


def test_zeta_command(tmp_path, capsys):
    rc = run(["zeta", "--ps", GOLDEN / "li_seed42_x1e4.psys", "--s", "2",
              "--method", "all"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["s"] == [2.0, 0.0]
    diff = abs(doc["euler"]["value"][0] - doc["dirichlet"]["value"][0])
    assert diff <= doc["euler"]["tail_bound"] + doc["dirichlet"]["tail_bound"]
    assert "z" in doc


def test_verify_passes_on_golden(tmp_path, capsys):
    rc = run(["verify", "--ps", GOLDEN / "li_seed42_x1e4.psys",
              "--template", "li", "--t-grid", "0,1,10,100",
              "--out-dir", tmp_path / "rep"])
    assert rc == 0
    doc = json.loads((tmp_path / "rep" / "summary.json").read_text())
    assert doc["passed"]
    assert doc["count_deviation"] <= 1.0
    assert (tmp_path / "rep" / "deviation.csv").exists()


def test_verify_fails_on_corrupted(tmp_path, capsys):
    # move one prime out of its cell: the counting bound must break
    src = (GOLDEN / "li_seed42_x1e4.psys").read_text().splitlines()
    header, primes = src[0], [float(v) for v in src[1:]]
    primes[0] = 999.0
    primes.sort()
    bad = tmp_path / "bad.psys"
    bad.write_text("\n".join([header] + [f"{p:.17g}" for p in primes]) + "\n")
    rc = run(["verify", "--ps", bad, "--template", "li", "--t-grid", "0",
              "--out-dir", tmp_path / "rep"])
    assert rc == 1
    doc = json.loads((tmp_path / "rep" / "summary.json").read_text())
    assert not doc["count_ok"]


def test_verify_u0(capsys):
    assert run(["verify", "--check", "u0"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["u0"] == pytest.approx(1.79328, abs=5e-6)
    assert doc["residual"] < 1e-10


def test_template_check_oscillating(capsys):
    rc = run(["template-check", "--template",
              json.dumps({"kind": "oscillating", "tau0": 50.0, "n_blocks": 2}),
              "--x-max", "1e5"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["blocks_disjoint"]
    assert doc["passed"]


def test_report_merges(tmp_path, capsys):
    (tmp_path / "one.json").write_text(json.dumps({"passed": True}))
    (tmp_path / "two.json").write_text(json.dumps({"passed": False}))
    rc = run(["report", "--inputs", tmp_path / "one.json", tmp_path / "two.json",
              "-o", tmp_path / "merged.json"])
    assert rc == 1
    merged = json.loads((tmp_path / "merged.json").read_text())
    assert merged["passed"] is False
    out = capsys.readouterr().out
    assert "PASS  one.json" in out
    assert "FAIL  two.json" in out


def test_config_file_defaults(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "discretize": {"template": "log", "seed": 4, "x-max": 100.0,
                       "output": str(tmp_path / "from_cfg.psys")}}))
    assert run(["--config", cfg, "discretize"]) == 0
    ps = read_prime_system(str(tmp_path / "from_cfg.psys"))
    assert ps.count == math.floor(math.log(100.0))


def test_exit_code_on_missing_file(tmp_path):
    assert run(["analyze", "--ps", tmp_path / "nope.psys", "--x-grid", "1",
                "-o", tmp_path / "x.csv"]) == 2


def test_exit_code_on_bad_template(tmp_path):
    assert run(["discretize", "--template", "nonsense", "--seed", "1",
                "--x-max", "10", "-o", tmp_path / "x.psys"]) == 2


def test_missing_required_after_config(tmp_path):
    assert run(["discretize", "--template", "log", "--seed", "1"]) == 2
