import json
import math

import pytest

from outerbilliard import cli, generating


@pytest.fixture()
def circle_file(tmp_path):
    p = tmp_path / "circle.json"
    p.write_text('{"kind": "circle", "radius": 1.0}')
    return str(p)


@pytest.fixture()
def ellipse_file(tmp_path):
    p = tmp_path / "ellipse.json"
    p.write_text('{"kind": "ellipse", "a": 2.0, "b": 1.0}')
    return str(p)


@pytest.fixture()
def wobbly_file(tmp_path):
    p = tmp_path / "wobbly.json"
    p.write_text('{"kind": "fourier", "a0": 1.0, "cos": [0, 0, 0.05]}')
    return str(p)


def run(argv):
    return cli.main(argv)


def test_simulate_three_periodic(circle_file, tmp_path):
    out = tmp_path / "orbit.csv"
    code = run(["--curve", circle_file, "--cmd", "simulate",
                "--seed", "2", "0", "--steps", "3", "--out", str(out)])
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "n,x,y,p,phi"
    assert len(lines) == 5
    last = lines[4].split(",")
    assert float(last[1]) == pytest.approx(2.0, abs=1e-9)
    assert float(last[2]) == pytest.approx(0.0, abs=1e-9)


def test_simulate_to_stdout(circle_file, capsys):
    assert run(["--curve", circle_file, "--cmd", "simulate",
                "--seed", "2", "0", "--steps", "1"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "n,x,y,p,phi"
    assert len(lines) == 3


def test_simulate_zero_steps(circle_file, tmp_path):
    out = tmp_path / "orbit.csv"
    assert run(["--curve", circle_file, "--cmd", "simulate",
                "--seed", "2", "0", "--steps", "0", "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 2


def test_simulate_cw_orientation(circle_file, tmp_path):
    out = tmp_path / "orbit.csv"
    assert run(["--curve", circle_file, "--cmd", "simulate", "--seed", "2", "0",
                "--steps", "1", "--orientation", "cw", "--out", str(out)]) == 0
    row = out.read_text().strip().splitlines()[2].split(",")
    assert float(row[1]) == pytest.approx(-1.0, abs=1e-9)
    assert float(row[2]) == pytest.approx(-math.sqrt(3.0), abs=1e-9)


def test_simulate_ellipse_footer(ellipse_file, tmp_path):
    out = tmp_path / "orbit.csv"
    assert run(["--curve", ellipse_file, "--cmd", "simulate",
                "--seed", "4", "0", "--steps", "200", "--out", str(out)]) == 0
    footer = out.read_text().strip().splitlines()[-1]
    assert footer.startswith("# homothetic_ellipse_invariant_max_rel_dev=")
    assert float(footer.split("=")[1]) < 1e-8


def test_simulate_interior_seed_exit_3(circle_file, tmp_path):
    assert run(["--curve", circle_file, "--cmd", "simulate",
                "--seed", "0.5", "0", "--out", str(tmp_path / "o.csv")]) == 3


def test_invalid_curve_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"kind": "fourier", "a0": 1.0, "cos": [0, 0, 0.2]}')
    assert run(["--curve", str(bad), "--cmd", "verify"]) == 2
    missing = tmp_path / "missing.json"
    assert run(["--curve", str(missing), "--cmd", "verify"]) == 2


def test_grid_flag_validation(circle_file):
    with pytest.raises(SystemExit) as exc:
        run(["--curve", circle_file, "--cmd", "verify", "--phi-grid", "100"])
    assert exc.value.code == 2


def test_verify_passes(circle_file, tmp_path):
    out = tmp_path / "verify.json"
    assert run(["--curve", circle_file, "--cmd", "verify", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["all_passed"] is True
    names = {c["name"] for c in doc["checks"]}
    assert {"chain_rule_exactness", "twist_negative", "symplecticity",
            "map_consistency_p", "integrand_decomposition"} <= names
    assert doc["config"]["command"] == "verify"
    assert "workers" not in doc["config"]


def test_verify_fault_injection_fails(circle_file, tmp_path, monkeypatch):
    monkeypatch.setattr(generating, "S12_FAULT_SIGN", -1.0)
    out = tmp_path / "verify.json"
    assert run(["--curve", circle_file, "--cmd", "verify", "--out", str(out)]) == 1
    doc = json.loads(out.read_text())
    assert doc["all_passed"] is False
    twist = next(c for c in doc["checks"] if c["name"] == "twist_negative")
    assert twist["passed"] is False


def test_rigidity_ellipse(ellipse_file, tmp_path):
    out = tmp_path / "rig.json"
    assert run(["--curve", ellipse_file, "--cmd", "rigidity", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["equality_case"] is True
    assert doc["eq_qq_holds"] is True
    assert abs(doc["q_defect"]) < 1e-7
    assert abs(doc["bs_product"] - math.pi**2) < 1e-7
    assert doc["config"]["phi_grid"] == 2048


def test_rigidity_with_conjugate_scan(wobbly_file, tmp_path):
    out = tmp_path / "rig.json"
    assert run(["--curve", wobbly_file, "--cmd", "rigidity", "--conjugate-scan",
                "--t-grid", "64", "--steps", "300", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["certifies_non_minimizing"] is True
    scan = doc["conjugate_scan"]
    assert scan["found_count"] > 0
    assert scan["first_found"]["n_conjugate"] <= 300


def test_twist_scan_json(circle_file, tmp_path):
    out = tmp_path / "twist.json"
    assert run(["--curve", circle_file, "--cmd", "twist-scan", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["twist_negative"] is True
    assert doc["max_s12"] < 0


def test_twist_scan_csv_table(circle_file, tmp_path):
    out = tmp_path / "table.csv"
    assert run(["--curve", circle_file, "--cmd", "twist-scan", "--format", "csv",
                "--phi-grid", "64", "--t-grid", "64", "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "phi,t,S,S1,S2,S11,S12,S22,J"
    assert len(lines) == 64 * 64 + 1


def test_portrait(circle_file, tmp_path):
    out = tmp_path / "portrait.csv"
    assert run(["--curve", circle_file, "--cmd", "portrait", "--steps", "5",
                "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "seed,n,x,y,p,phi"
    assert len(lines) == 1 + 64 * 6


def test_conjugate_scan_csv(wobbly_file, tmp_path):
    out = tmp_path / "scan.csv"
    assert run(["--curve", wobbly_file, "--cmd", "conjugate-scan", "--steps", "100",
                "--format", "csv", "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "seed_phi,seed_t,n_conjugate"
    assert len(lines) == 1 + 64 * 64
    assert any(line.split(",")[2] != "" for line in lines[1:])


def test_conjugate_scan_json_rows(wobbly_file, tmp_path):
    out = tmp_path / "scan.json"
    assert run(["--curve", wobbly_file, "--cmd", "conjugate-scan", "--steps", "100",
                "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert len(doc["rows"]) == 64 * 64
    row = doc["rows"][0]
    assert set(row) == {"seed_phi", "seed_t", "n_conjugate"}
    assert doc["found_count"] == sum(r["n_conjugate"] is not None for r in doc["rows"])


def test_optimizer_failure_exit_4(ellipse_file, tmp_path, monkeypatch):
    from outerbilliard import rigidity
    from outerbilliard.errors import ConvergenceError

    def no_convergence(*args, **kwargs):
        raise ConvergenceError("simplex descent exhausted its budget")

    monkeypatch.setattr(rigidity, "santalo_point", no_convergence)
    assert run(["--curve", ellipse_file, "--cmd", "rigidity",
                "--out", str(tmp_path / "r.json")]) == 4


def test_reports_are_deterministic(wobbly_file, tmp_path):
    outs = []
    for i, workers in enumerate((1, 4)):
        out = tmp_path / f"rig{i}.json"
        assert run(["--curve", wobbly_file, "--cmd", "rigidity", "--conjugate-scan",
                    "--steps", "200", "--workers", str(workers),
                    "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
