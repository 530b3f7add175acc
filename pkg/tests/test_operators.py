import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from operators import (
    BasisIndex,
    LinearMap,
    OperatorError,
    StateVector,
    SuperchargeSpec,
    digits_to_index,
    embed_local,
    from_triplet_text,
    global_supercharge,
    homotopy_s,
    identity,
    index_to_digits,
    load_binary,
    local_supercharge,
    local_supercharge_deformed,
    magnetisation,
    parity,
    reversed_supercharge,
    s_map,
    save_binary,
    spin_reversal,
    to_triplet_text,
)
from qcore import ParameterError, SpinParams, amk, chi_vector
from tests.conftest import any_y, nonzero_y


def test_index_convention_site_one_most_significant():
    assert digits_to_index((1, 0, 0), 2) == 4
    assert index_to_digits(4, 2, 3) == (1, 0, 0)
    assert BasisIndex(2, (2, 1)).flat == 7
    assert BasisIndex.from_flat(2, 2, 7).digits == (2, 1)


def test_basis_index_validation():
    with pytest.raises(ParameterError):
        BasisIndex(1, (0, 2))
    with pytest.raises(ParameterError):
        BasisIndex.from_flat(1, 2, 4)


def test_state_vector_basics():
    a = StateVector.basis(1, (0, 1))
    b = StateVector.basis(1, (1,))
    ab = a.tensor(b)
    assert ab.length == 3
    assert ab.component((0, 1, 1)) == 1
    assert StateVector.empty(1).tensor(b).amplitudes.tolist() == b.amplitudes.tolist()
    with pytest.raises(OperatorError):
        StateVector(1, 2, np.ones(3))
    with pytest.raises(OperatorError):
        a.vdot(b)
    with pytest.raises(OperatorError):
        (a * 0).normalized()


def test_linear_map_length_checks(ell1):
    q = local_supercharge(ell1)
    with pytest.raises(OperatorError):
        q @ q
    with pytest.raises(OperatorError):
        q @ StateVector.basis(1, (0, 0))
    with pytest.raises(OperatorError):
        LinearMap(1, 1, 2, np.zeros((2, 2)))


def test_spin_half_local_supercharge(ell1):
    q = local_supercharge(ell1).toarray()
    assert q.shape == (4, 2)
    assert q[0, 1] == pytest.approx(1.0)
    assert np.count_nonzero(q) == 1


@pytest.mark.parametrize("y", [0.0, 0.4, 1.0, 1.8, -0.7])
def test_spin_half_deformed_charge_on_basis(ell1, y):
    x = 1.0 / math.sqrt(1.0 + y ** 6)
    q = local_supercharge_deformed(ell1, y).toarray()
    # columns |0>, |1>; rows |00>, |01>, |10>, |11>
    assert np.allclose(q[:, 0], x * np.array([-2 * y, -y ** 2, -y ** 2, y ** 3]), atol=1e-14)
    assert np.allclose(q[:, 1], x * np.array([1.0, -y, -y, -2 * y ** 2]), atol=1e-14)


@pytest.mark.parametrize("ell", [1, 2, 3, 4])
def test_adjoint_matches_basis_action(ell):
    p = SpinParams(ell)
    d = p.d
    expected = np.zeros((d, d * d))
    for m1 in range(d):
        for m2 in range(d):
            if m1 + m2 < ell:
                expected[m1 + m2 + 1, m1 * d + m2] = amk(p, m1 + m2 + 1, m1)
    assert np.allclose(local_supercharge(p).adjoint().toarray(), expected, atol=1e-14)


def test_embed_local_matches_kron(rng):
    d, L, site = 3, 4, 1
    A = rng.standard_normal((d, d))
    expected = sp.kron(sp.kron(sp.identity(d ** site), A), sp.identity(d ** (L - site - 1)))
    assert np.allclose(embed_local(A, d, L, site, 1, 1).toarray(), expected.toarray())


def test_embed_local_rejects_overflow():
    with pytest.raises(OperatorError):
        embed_local(np.eye(4), 2, 2, 1, 2, 2)


@given(y=any_y(), ell=st.integers(1, 2), L=st.integers(1, 4), data=st.data())
def test_supercharge_is_nilpotent(y, ell, L, data):
    j = data.draw(st.integers(0, ell + 1))
    k = data.draw(st.integers(0, ell + 1))
    spec = SuperchargeSpec.create(ell, L, y, j, k)
    QQ = global_supercharge(spec.with_length(L + 1)) @ global_supercharge(spec)
    assert QQ.max_abs() < 1e-11


def test_supercharge_shape_and_defaults():
    spec = SuperchargeSpec.create(2, 3)
    assert (spec.j, spec.k) == (3, 3)
    Q = global_supercharge(spec)
    assert Q.matrix.shape == (3 ** 4, 3 ** 3)


def test_supercharge_spec_validation():
    with pytest.raises(ParameterError):
        SuperchargeSpec.create(1, 0)
    with pytest.raises(ParameterError):
        SuperchargeSpec.create(1, 2, 0.5, 4, 0)


def test_magnetisation_on_basis(ell1):
    M = magnetisation(ell1, 3)
    psi = StateVector.basis(1, (0, 1, 1))
    assert (M @ psi).component((0, 1, 1)) == pytest.approx(1.5 - 2)


def test_parity_and_reversal_are_involutions():
    p = SpinParams(2)
    for op in (parity(p, 3), spin_reversal(p, 3)):
        assert ((op @ op) - identity(p, 3)).max_abs() == 0
    psi = StateVector.basis(2, (0, 1, 2))
    assert (parity(p, 3) @ psi).component((2, 1, 0)) == 1
    assert (spin_reversal(p, 3) @ psi).component((2, 1, 0)) == 1


def test_reversed_supercharge_is_nilpotent():
    spec = SuperchargeSpec.create(2, 2, 0.3 + 0.4j, 1, 0)
    QQ = reversed_supercharge(spec.with_length(3)) @ reversed_supercharge(spec)
    assert QQ.max_abs() < 1e-11


@given(y=nonzero_y(), ell=st.integers(1, 3), L=st.integers(2, 4), data=st.data())
def test_contracting_homotopy(y, ell, L, data):
    p = SpinParams(ell)
    j = data.draw(st.integers(0, ell + 1))
    k = data.draw(st.integers(0, ell + 1))
    spec = SuperchargeSpec(p, L, y, j, k)
    total = (
        homotopy_s(p, y, j, L + 1) @ global_supercharge(spec)
        + global_supercharge(spec.with_length(L - 1)) @ homotopy_s(p, y, j, L)
    )
    assert (total - identity(p, L)).max_abs() < 1e-9


def test_homotopy_undefined_at_zero(ell1):
    with pytest.raises(ParameterError):
        homotopy_s(ell1, 0, 0, 3)


def test_s_map_appends_chi():
    p = SpinParams(2)
    psi = StateVector.basis(2, (1,))
    image = s_map(p, 1) @ psi
    assert np.allclose(image.amplitudes, np.kron(psi.amplitudes, chi_vector(p).amplitudes))


def test_triplet_text_round_trip():
    Q = global_supercharge(SuperchargeSpec.create(2, 2, 0.5 - 0.25j, 0, 1))
    text = to_triplet_text(Q)
    assert text.startswith(f"# ell=2 L_in=2 L_out=3 nnz={Q.nnz}")
    back = from_triplet_text(text)
    assert (back - Q).max_abs() == 0


def test_triplet_text_rejects_bad_input():
    with pytest.raises(OperatorError):
        from_triplet_text("0 0 1.0 0.0\n")
    with pytest.raises(OperatorError):
        from_triplet_text("# ell=1 L_in=1 L_out=2 nnz=2\n0 1 1.0 0.0\n")


def test_binary_export(tmp_path):
    Q = global_supercharge(SuperchargeSpec.create(1, 3, 0.8j, 1, 0))
    path = str(tmp_path / "q.npz")
    save_binary(Q, path)
    back = load_binary(path)
    assert (back.L_in, back.L_out) == (3, 4)
    assert (back - Q).max_abs() == 0
