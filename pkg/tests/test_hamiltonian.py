import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hamiltonian import (
    HamiltonianError,
    assemble,
    boundary_pauli_closed_form,
    boundary_pauli_coefficients,
    boundary_term,
    canonical_parameters,
    density_coeffs,
    density_explicit,
    density_from_supercharge,
    pauli_reference,
)
from operators import SuperchargeSpec, charge_rotation, magnetisation, parity, spin_reversal
from qcore import SpinParams, c_coefficients
from spectra import full_spectrum
from tests.conftest import nonzero_y


def test_spin_half_density():
    h = density_explicit(SpinParams(1)).toarray()
    expected = np.array([
        [1.0, 0, 0, 0],
        [0, 0.5, -1.0, 0],
        [0, -1.0, 0.5, 0],
        [0, 0, 0, 1.0],
    ])
    assert np.allclose(h, expected, atol=1e-14)


@pytest.mark.parametrize("ell", [1, 2, 3])
def test_density_paths_agree(ell):
    p = SpinParams(ell)
    assert (density_explicit(p) - density_from_supercharge(p)).max_abs() < 1e-12


@given(y=nonzero_y(), ell=st.integers(1, 3))
def test_density_independent_of_y(y, ell):
    p = SpinParams(ell)
    assert (density_from_supercharge(p, y) - density_from_supercharge(p)).max_abs() < 1e-11


@pytest.mark.parametrize("ell", [1, 2, 3])
def test_density_diagonal_entry(ell):
    p = SpinParams(ell)
    c = c_coefficients(p)
    index = 0 * p.d + ell
    assert density_explicit(p).toarray()[index, index] == pytest.approx(c[1] + c[ell + 1])


def test_beta_symmetry():
    beta = density_coeffs(3).beta
    for (m1, m2, n), value in beta.items():
        if n > 0:
            assert beta[(m2, m1, -n)] == value


@pytest.mark.parametrize("ell", [1, 2, 3])
def test_boundary_term_at_zero_is_diagonal(ell):
    p = SpinParams(ell)
    h = boundary_term(p, 0).toarray()
    assert np.allclose(h, np.diag(c_coefficients(p)[: p.d]), atol=1e-13)


def test_boundary_pauli_form_on_grid():
    p = SpinParams(1)
    for rho in (0.0, 0.4, 1.0, 1.7, 3.0):
        for theta in (0.0, 0.9, 2.0, 3.5, 5.6):
            y = cmath.rect(rho, theta)
            measured = boundary_pauli_coefficients(boundary_term(p, y))
            assert np.allclose(measured, boundary_pauli_closed_form(y), atol=1e-12)


def test_boundary_label_shifts_y():
    p = SpinParams(2)
    y = 0.6 + 0.3j
    shifted = p.root_power(2 * (1 + 1)) * y
    assert (boundary_term(p, y, 1) - boundary_term(p, shifted)).max_abs() < 1e-14


def test_assemble_needs_two_sites():
    with pytest.raises(HamiltonianError):
        assemble(SuperchargeSpec.create(1, 1))


@pytest.mark.parametrize("L", range(2, 9))
def test_spin_half_chain_matches_pauli_form(L):
    H = assemble(SuperchargeSpec.create(1, L)).H
    assert (H - pauli_reference(L)).max_abs() < 1e-12


def test_two_site_spectrum():
    report = full_spectrum(assemble(SuperchargeSpec.create(1, 2)))
    assert np.allclose(report.eigenvalues, [0.0, 1.0, 2.0, 2.0], atol=1e-12)
    assert report.zero_multiplicity == 1


@given(y=nonzero_y(), ell=st.integers(1, 2), L=st.integers(2, 4), data=st.data())
def test_cross_path_residual_small(y, ell, L, data):
    j = data.draw(st.integers(0, ell + 1))
    k = data.draw(st.integers(0, ell + 1))
    hs = assemble(SuperchargeSpec.create(ell, L, y, j, k))
    assert hs.cross_residual < 1e-11
    assert hs.hermitian_residual < 1e-12


@pytest.mark.parametrize("ell,j,k", [(1, 0, 1), (1, 2, 0), (2, 0, 2), (2, 3, 1), (3, 1, 4)])
def test_canonical_parameters_preserve_spectrum(ell, j, k):
    spec = SuperchargeSpec.create(ell, 3, cmath.rect(0.8, 1.1), j, k)
    canon = canonical_parameters(spec)
    assert canon.k == ell + 1
    assert canon.y.imag == 0 and canon.y.real >= 0
    assert canon.j >= (ell + 1) // 2
    before = full_spectrum(assemble(spec)).eigenvalues
    after = full_spectrum(assemble(canon)).eigenvalues
    assert np.allclose(before, after, atol=1e-10)


def test_pauli_reference_needs_two_sites():
    with pytest.raises(HamiltonianError):
        pauli_reference(1)


def _H(ell, L, y=0j, j=None, k=None):
    return assemble(SuperchargeSpec.create(ell, L, y, j, k), cross_check=False).H


@pytest.mark.parametrize("ell,L,y,j", [(1, 4, 0.6 + 0.3j, 2), (2, 3, 0j, 3), (2, 3, -0.4 + 1.1j, 1), (3, 3, 0.9, 0)])
def test_parity_symmetry_for_equal_labels(ell, L, y, j):
    H, P = _H(ell, L, y, j, j), parity(SpinParams(ell), L)
    assert (P @ H @ P - H).max_abs() < 1e-12


def test_parity_exchanges_boundary_labels():
    H, P = _H(2, 3, 0.5 - 0.2j, 0, 2), parity(SpinParams(2), 3)
    assert (P @ H @ P - _H(2, 3, 0.5 - 0.2j, 2, 0)).max_abs() < 1e-12


@pytest.mark.parametrize("ell,L,y", [(1, 4, 0.6), (2, 3, 1.7), (2, 3, 0.4 + 0.9j), (3, 3, 2.0)])
def test_spin_reversal_inverts_y(ell, L, y):
    H, R = _H(ell, L, y), spin_reversal(SpinParams(ell), L)
    assert (R @ H @ R - _H(ell, L, 1.0 / y)).max_abs() < 1e-11


def test_spin_reversal_mirrors_boundary_labels():
    ell, y = 2, 0.7 + 0.2j
    H, R = _H(ell, 3, y, 0, 1), spin_reversal(SpinParams(ell), 3)
    assert (R @ H @ R - _H(ell, 3, 1.0 / y, ell, ell - 1)).max_abs() < 1e-11


@pytest.mark.parametrize("ell,L", [(1, 5), (2, 3), (3, 3)])
def test_magnetisation_conserved_at_zero(ell, L):
    H, M = _H(ell, L), magnetisation(SpinParams(ell), L)
    assert (H @ M - M @ H).max_abs() < 1e-12


def test_magnetisation_broken_for_nonzero_y():
    H, M = _H(2, 3, 0.5), magnetisation(SpinParams(2), 3)
    assert (H @ M - M @ H).max_abs() > 1e-3


@given(y=nonzero_y(), theta=st.floats(0.0, 2.0 * math.pi), ell=st.integers(1, 3))
def test_charge_rotation_covariance(y, theta, ell):
    p, L = SpinParams(ell), 3
    lhs = charge_rotation(p, L, theta) @ _H(ell, L, y) @ charge_rotation(p, L, -theta)
    assert (lhs - _H(ell, L, np.exp(-1j * theta) * y)).max_abs() < 1e-11


@given(y=nonzero_y(), theta=st.floats(0.0, 2.0 * math.pi), ell=st.integers(1, 3), data=st.data())
def test_boundary_charge_covariance(y, theta, ell, data):
    p = SpinParams(ell)
    label = data.draw(st.integers(0, ell + 1))
    lhs = charge_rotation(p, 1, theta) @ boundary_term(p, y, label) @ charge_rotation(p, 1, -theta)
    assert (lhs - boundary_term(p, np.exp(-1j * theta) * y, label)).max_abs() < 1e-12
