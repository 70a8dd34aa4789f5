"""Command-line behaviour: reports, exit codes, files."""

import json

import pytest

from kawahara.catalog import instantiate
from kawahara.cli import PRESETS, ConfigError, RunConfig, main
from kawahara.expr import to_text


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_single_case(capsys, tmp_path):
    report = tmp_path / "r.json"
    code, out, _ = run(capsys, "verify", "--kind", "conservation", "--case", "C1b", "--json", str(report))
    assert code == 0 and "ZERO" in out
    assert json.loads(report.read_text()) == [{"case": "C1b", "status": "ZERO", "residual": None}]


def test_verify_s3_default_is_zero(capsys):
    code, out, _ = run(capsys, "verify", "--kind", "symmetry", "--case", "S3")
    assert code == 0 and "S3 [corrected] ZERO" in out


def test_verify_printed_c5_reports_residual(capsys, tmp_path):
    report = tmp_path / "r.json"
    code, out, _ = run(capsys, "verify", "--kind", "conservation", "--case", "C5",
                       "--variant", "as-printed", "--json", str(report))
    assert code == 1 and "NONZERO" in out
    (rep,) = json.loads(report.read_text())
    assert rep["status"] == "NONZERO" and rep["residual"].startswith("adjoint:")


def test_verify_bad_case_is_usage_error(capsys):
    code, _, err = run(capsys, "verify", "--kind", "symmetry", "--case", "C1a")
    assert code == 2 and "unknown case" in err


def test_derive_examples(capsys):
    code, out, _ = run(capsys, "derive", "-q", "u")
    assert code == 0 and "T = 1/2*u^2" in out and "D_t T + D_x X: ZERO" in out
    code, out, _ = run(capsys, "derive", "-q", "1")
    assert code == 0 and "T = u\n" in out
    code, out, _ = run(capsys, "derive", "-q", "u_x")
    assert code == 1 and "NotAMultiplier" in out and "helmholtz1: 2" in out


def test_derive_singular_base(capsys):
    inst = instantiate("C3", {"f3": "-3/2"})
    pde = inst.pde.describe()
    args = ["derive", "-q", to_text(inst.Q), "--b", pde["b"], "--c", pde["c"], "--f", pde["f"]]
    code, out, _ = run(capsys, *args, "--base=-f2")
    assert code == 1 and "SingularHomotopy" in out


def test_detgen(capsys, tmp_path):
    path = tmp_path / "sym.json"
    code, out, _ = run(capsys, "detgen", "symmetry", "--out", str(path))
    assert code == 0
    doc = json.loads(path.read_text())
    assert len(doc["equations"]) > 0 and f"{len(doc['equations'])} equations" in out


def test_detgen_multiplier_groups(capsys, tmp_path):
    path = tmp_path / "mult.json"
    assert run(capsys, "detgen", "multiplier", "--out", str(path))[0] == 0
    groups = {m.split(":")[0] for m in json.loads(path.read_text())["monomials"]}
    assert {"helmholtz0", "helmholtz1", "helmholtz2", "helmholtz3"} <= groups


def test_detgen_invalid_target():
    with pytest.raises(SystemExit) as err:
        main(["detgen", "gauge", "--out", "x.json"])
    assert err.value.code == 2


def test_detgen_unwritable_path(capsys, tmp_path):
    code, _, err = run(capsys, "detgen", "symmetry", "--out", str(tmp_path / "missing" / "x.json"))
    assert code == 2 and "cannot write" in err


def test_simulate_kawahara_preset(capsys, tmp_path):
    csv = tmp_path / "k.csv"
    code, out, _ = run(capsys, "simulate", "--preset", "kawahara", "--csv", str(csv))
    assert code == 0
    assert csv.read_text().startswith("t,C1,C2,C3,umax,l2\n")
    drifts = {line.split()[3][:-1]: float(line.split()[-1]) for line in out.splitlines() if "drift" in line}
    assert drifts["C1"] <= 1e-8 and drifts["C2"] <= 1e-8


def test_simulate_dispersion_preset(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "--preset", "dispersion", "--csv", str(tmp_path / "d.csv"))
    assert code == 0
    err = float(out.strip().splitlines()[-1].split()[-1])
    assert err <= 1e-8


def test_simulate_malformed_config(capsys, tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[pde]\nf = u\nbogus = 3\n")
    code, _, err = run(capsys, "simulate", str(cfg))
    assert code == 2 and "bogus" in err


def test_simulate_blowup_exit_code(capsys, tmp_path):
    cfg = tmp_path / "blow.ini"
    cfg.write_text("[pde]\nf = u^4\nc = 40\n[solver]\nN = 32\ndt = 1/10\nt_end = 10\n"
                   "[initial]\nu0 = 3*sin(x)\n")
    code, out, _ = run(capsys, "simulate", str(cfg), "--csv", str(tmp_path / "b.csv"))
    assert code == 3 and "BlowUp" in out


def test_simulate_csv_is_byte_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(capsys, "simulate", "--preset", "s2-family", "--csv", str(a))
    run(capsys, "simulate", "--preset", "s2-family", "--csv", str(b))
    assert a.read_bytes() == b.read_bytes()


def test_run_config_checks():
    rc = RunConfig.from_text(PRESETS["s2-family"])
    assert rc.solver.monitor_names == ["C1", "C2"]
    with pytest.raises(ConfigError):
        RunConfig.from_text("[pde]\nfamily = S3\nf3 = 0\n")
    with pytest.raises(ConfigError):
        RunConfig.from_text("[solver]\nmonitors = C1, C3\n[pde]\nb = t\n")
    with pytest.raises(ConfigError):
        RunConfig.from_text("[extra]\nkey = 1\n")
