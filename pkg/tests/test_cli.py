import argparse
import json

import pytest

from cli import main, parse_complex, parse_parts
from config import TOLERANCES


def run(tmp_path, *argv, name="out.json"):
    path = tmp_path / name
    code = main(list(argv) + ["--output", str(path)])
    return code, path.read_text()


def test_parse_complex_forms():
    assert parse_complex("0.5+0.5i") == 0.5 + 0.5j
    assert parse_complex("-2j") == -2j
    assert parse_complex("2:0") == pytest.approx(2.0)
    assert parse_complex("1:1.5707963267948966") == pytest.approx(1j)
    with pytest.raises(argparse.ArgumentTypeError):
        parse_complex("abc")


def test_parse_parts():
    assert parse_parts("2,4,6") == (2, 4, 6)
    with pytest.raises(argparse.ArgumentTypeError):
        parse_parts("2,x")


def test_verify_default_exit_zero(tmp_path):
    code, text = run(tmp_path, "verify", "--L-max", "3", "--samples", "3")
    assert code == 0
    data = json.loads(text)
    assert data["header"]["config"]["subcommand"] == "verify"
    assert "version" in data["header"]
    assert data["passed"] is True


def test_verify_fault_exit_one(tmp_path):
    code, text = run(tmp_path, "verify", "--ell", "2", "--amk-scale", "1.5", "--L-max", "3", "--samples", "2")
    assert code == 1
    data = json.loads(text)
    assert "coassociativity" in data["failures"]
    labels = {entry["name"]: entry["label"] for entry in data["identities"]}
    assert labels["coassociativity"] == "Eq. Coassociativity"
    assert labels["nilpotency"] == "Eq. Nilpotency Q^2 = 0"


def test_verify_higher_spin_complex_y(tmp_path):
    code, _ = run(tmp_path, "verify", "--ell", "3", "--y", "0.5+0.5i", "--L-max", "3", "--samples", "2")
    assert code == 0


def test_usage_errors_exit_two():
    with pytest.raises(SystemExit) as excinfo:
        main(["spectrum", "--y", "abc"])
    assert excinfo.value.code == 2
    with pytest.raises(SystemExit) as excinfo:
        main(["overlap"])
    assert excinfo.value.code == 2


def test_spectrum_json(tmp_path):
    code, text = run(tmp_path, "spectrum", "--L", "2")
    assert code == 0
    data = json.loads(text)
    assert data["eigenvalues"] == pytest.approx([0.0, 1.0, 2.0, 2.0], abs=1e-12)
    assert data["zero_multiplicity"] == 1
    assert "tolerances" in data["header"]


def test_spectrum_rejects_one_site(tmp_path):
    code = main(["spectrum", "--L", "1", "--output", str(tmp_path / "x.json")])
    assert code == 1


def test_cohomology_csv(tmp_path):
    code, text = run(tmp_path, "cohomology", "--Lmax", "4", "--format", "csv", name="betti.csv")
    assert code == 0
    lines = text.splitlines()
    assert lines[0].startswith("# version:")
    assert lines[3].startswith("L,")
    assert [line.split(",")[3] for line in lines[4:]] == ["1", "1", "1", "1"]


def test_scan_csv(tmp_path):
    code, text = run(tmp_path, "scan", "--L", "3", "--j", "1", "--k", "2", "--steps", "3",
                     "--format", "csv", name="scan.csv")
    assert code == 0
    rows = [line for line in text.splitlines() if not line.startswith("#")]
    assert rows[0].startswith("rho,E3_0")
    assert len(rows) == 4


def test_overlap_and_fidelity(tmp_path):
    code, text = run(tmp_path, "overlap", "--kind", "Z", "--parts", "2,2")
    assert code == 0
    assert json.loads(text)["residual"] < 1e-9
    code, text = run(tmp_path, "fidelity", "--L1", "1", "--L2", "1")
    assert code == 0
    assert json.loads(text)["defined"] is False


def test_fidelity_scan_csv(tmp_path):
    code, text = run(tmp_path, "fidelity-scan", "--L", "100", "--x-steps", "4", "--format", "csv",
                     name="lbf.csv")
    assert code == 0
    rows = [line for line in text.splitlines() if not line.startswith("#")]
    assert rows[0] == "x,L1,L2,F,prediction,deviation"


def test_ground(tmp_path):
    code, text = run(tmp_path, "ground", "--L", "4")
    data = json.loads(text)
    assert code == 0
    assert data["distinguished_component"] == pytest.approx(data["conjectured_component"], abs=1e-10)


def test_report_marks_spin_one_sections(tmp_path):
    code, text = run(tmp_path, "report", "--ell", "2", "--L-max", "3")
    sections = json.loads(text)["sections"]
    assert code == 0
    assert sections["conjecture"]["status"] == "not applicable"
    assert sections["fidelity"]["status"] == "not applicable"
    assert sections["first_excited"]["status"] == "not applicable"
    assert sections["betti"]["status"] == "ok"


def test_tolerance_flags_are_scoped(tmp_path):
    before = dict(TOLERANCES)
    code, text = run(tmp_path, "verify", "--L-max", "2", "--samples", "1", "--tol-identity=-1")
    assert code == 1
    assert json.loads(text)["header"]["tolerances"]["identity"] == -1.0
    assert TOLERANCES == before


def test_output_deterministic_apart_from_timestamp(tmp_path):
    _, first = run(tmp_path, "cohomology", "--Lmax", "3", name="a.json")
    _, second = run(tmp_path, "cohomology", "--Lmax", "3", name="b.json")
    a, b = json.loads(first), json.loads(second)
    for data in (a, b):
        data["header"].pop("timestamp")
        data["header"]["config"].pop("output")
    assert a == b
