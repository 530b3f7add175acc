import numpy as np
import pytest

from verify import IDENTITY_LABELS, IDENTITY_NAMES, identity_label, run_identity_suite, sample_points


def test_default_battery_passes():
    report = run_identity_suite(1, L_max=5, samples=5)
    assert report.passed, report.failures
    names = {r.name for r in report.results}
    assert len(names) >= 12
    assert {"coassociativity", "nilpotency", "contracting_homotopy", "xi_basis_inverse"} <= names
    for result in report.worst().values():
        assert result.residual < 1e-11 or result.name == "hamiltonian_hermitian"


@pytest.mark.parametrize("ell", [2, 3])
def test_battery_passes_for_higher_spin(ell):
    report = run_identity_suite(ell, y=0.5 + 0.5j, L_max=4, samples=3)
    assert report.passed, report.failures
    assert "pauli_reference" not in {r.name for r in report.results}


@pytest.mark.slow
@pytest.mark.parametrize("ell,L_max", [(1, 6), (2, 6), (3, 6)])
def test_full_battery(ell, L_max):
    assert run_identity_suite(ell, L_max=L_max, samples=20).passed


def test_corrupted_coefficient_is_reported():
    report = run_identity_suite(2, L_max=3, samples=2, amk_scale=1.5)
    assert not report.passed
    assert "coassociativity" in report.failures
    assert "nilpotency" in report.failures
    assert report.to_dict()["failures"] == report.failures


def test_suite_is_deterministic():
    a = run_identity_suite(1, L_max=3, samples=4, seed=7)
    b = run_identity_suite(1, L_max=3, samples=4, seed=7)
    assert a.samples == b.samples
    assert [r.residual for r in a.results] == [r.residual for r in b.results]


def test_sample_points_cover_special_values():
    points = sample_points(0.2 + 0.1j, 6, np.random.default_rng(0))
    assert points[0] == 0.2 + 0.1j
    assert 0j in points
    assert any(abs(abs(y) - 1.0) < 1e-12 for y in points)
    assert len(points) == 6


def test_selected_identities_only():
    report = run_identity_suite(1, L_max=3, samples=2, names=["nilpotency"])
    assert {r.name for r in report.results} == {"nilpotency"}
    with pytest.raises(ValueError):
        run_identity_suite(1, names=["associativity"])
    assert len(IDENTITY_NAMES) == len(set(IDENTITY_NAMES))


def test_tolerance_override_triggers_failures():
    report = run_identity_suite(1, L_max=3, samples=2, tolerances={"identity": -1.0},
                                names=["density_explicit_path"])
    assert report.failures == ["density_explicit_path"]


def test_every_identity_has_a_label():
    assert set(IDENTITY_LABELS) == set(IDENTITY_NAMES)
    assert all(label.startswith("Eq. ") for label in IDENTITY_LABELS.values())
    assert identity_label("coassociativity") == "Eq. Coassociativity"
    assert identity_label("unlisted") == "unlisted"


def test_failure_log_uses_labels(caplog):
    with caplog.at_level("ERROR", logger="susy_chain"):
        run_identity_suite(2, L_max=2, samples=2, amk_scale=1.5, names=["coassociativity"])
    assert "Identity Eq. Coassociativity failed" in caplog.text
