import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qcore import (
    ParameterError,
    SpinParams,
    amk,
    asymptotic_constants,
    c_coefficients,
    chi_vector,
    log_normalised_component,
    log_seq_AV,
    log_seq_N8,
    normalised_component_conjecture,
    phi_vector,
    qnum,
    seq_AV,
    seq_N8,
    xi_matrix,
    xi_vector,
)
from tests.conftest import nonzero_y


def test_spin_params_validation():
    with pytest.raises(ParameterError):
        SpinParams(0)
    with pytest.raises(ParameterError):
        SpinParams(True)
    with pytest.raises(ParameterError):
        SpinParams(1.5)
    p = SpinParams(3)
    assert (p.d, p.period) == (4, 5)


def test_qnum_values():
    p1, p2 = SpinParams(1), SpinParams(2)
    assert qnum(p1, 1) == pytest.approx(1.0)
    assert qnum(p1, 2) == pytest.approx(1.0)
    assert qnum(p2, 2) == pytest.approx(math.sqrt(2.0))
    assert qnum(p2, 3) == pytest.approx(1.0)


def test_qnum_vanishes_exactly_at_period():
    for ell in (1, 2, 3):
        p = SpinParams(ell)
        assert qnum(p, p.period) == 0.0
        assert qnum(p, 2 * p.period) == 0.0
        assert qnum(p, 0) == 0.0


def test_top_qnum_is_one():
    for ell in (1, 2, 3, 4):
        p = SpinParams(ell)
        assert qnum(p, ell + 1) == pytest.approx(1.0)


def test_amk_spin_half():
    assert amk(SpinParams(1), 1, 0) == pytest.approx(1.0)


def test_amk_rejects_bad_indices():
    p = SpinParams(2)
    for m, k in [(0, 0), (2, 2), (3, 0), (1, -1)]:
        with pytest.raises(ParameterError):
            amk(p, m, k)


def test_amk_scale_only_touches_top_coefficient():
    p, faulty = SpinParams(2), SpinParams(2, amk_scale=2.0)
    assert amk(faulty, 2, 0) == pytest.approx(2.0 * amk(p, 2, 0))
    assert amk(faulty, 2, 1) == pytest.approx(amk(p, 2, 1))
    assert amk(faulty, 1, 0) == pytest.approx(amk(p, 1, 0))


def test_c_coefficients_spin_half():
    assert np.allclose(c_coefficients(SpinParams(1)), [0.0, 0.5, 0.0])


def test_chi_spin_half():
    assert np.allclose(chi_vector(SpinParams(1)).amplitudes, [0, 1, 1, 0])


def test_phi_components():
    p, y = SpinParams(2), 0.7 - 0.2j
    expected = [-(y ** (m + 1)) / math.sqrt(qnum(p, m + 1)) for m in range(3)]
    assert np.allclose(phi_vector(p, y).amplitudes, expected)


def test_xi_of_last_label_is_zero():
    p = SpinParams(2)
    assert not np.any(xi_vector(p, 0.4 + 0.1j, p.ell + 1).amplitudes)


def test_xi_spin_half_closed_form():
    p, y = SpinParams(1), 1.0
    x = 1.0 / math.sqrt(2.0)
    expected = [
        x * (-1.0 / math.sqrt(qnum(p, m + 1))) * (1 - p.root_power(2 * (m + 1)))
        for m in range(2)
    ]
    assert np.allclose(xi_vector(p, y, 0).amplitudes, expected)


def test_xi_label_out_of_range():
    with pytest.raises(ParameterError):
        xi_vector(SpinParams(1), 0.5, 3)


@given(y=nonzero_y(), ell=st.integers(1, 3))
def test_xi_matrix_inverse(y, ell):
    xi, inverse = xi_matrix(SpinParams(ell), y)
    assert np.allclose(xi @ inverse, np.eye(ell + 1), atol=1e-10)


def test_xi_matrix_rejects_zero():
    with pytest.raises(ParameterError):
        xi_matrix(SpinParams(1), 0)


def test_sequences_small_values():
    assert [seq_AV(n).value for n in (1, 2, 3)] == [1, 3, 26]
    assert [seq_N8(n).value for n in (1, 2, 3, 4)] == [1, 2, 11, 170]


def test_sequences_are_integers():
    for n in range(1, 51):
        av, n8 = seq_AV(n).value, seq_N8(n).value
        assert isinstance(av, int) and av >= 1
        assert isinstance(n8, int) and n8 >= 1


@pytest.mark.parametrize("n", range(1, 31))
def test_sequence_logs_match_exact(n):
    assert log_seq_AV(n) == pytest.approx(math.log(seq_AV(n).value), rel=1e-12, abs=1e-12)
    assert log_seq_N8(n) == pytest.approx(math.log(seq_N8(n).value), rel=1e-12, abs=1e-12)


def test_inexact_sequence_value():
    value = seq_AV(40, exact=False)
    assert value.value is None
    assert value.as_decimal().startswith("exp(")


def test_sequence_index_must_be_positive():
    with pytest.raises(ParameterError):
        seq_N8(0)


def test_normalised_component_small_lengths():
    assert normalised_component_conjecture(1) == pytest.approx(1.0)
    assert normalised_component_conjecture(2) == pytest.approx(math.sqrt(0.5))
    assert normalised_component_conjecture(3) == pytest.approx(math.sqrt(2.0 / 3.0))
    assert normalised_component_conjecture(4) == pytest.approx(math.sqrt(3.0 / 11.0))


def test_log_component_agrees_with_exact():
    for L in (5, 20, 77, 120):
        assert log_normalised_component(L) == pytest.approx(
            math.log(normalised_component_conjecture(L)), abs=1e-9
        )


def test_asymptotic_constants():
    c1, c2 = asymptotic_constants()
    assert c1 == pytest.approx(1.22940, abs=1e-5)
    assert c2 == pytest.approx(1.00928, abs=1e-5)
    assert c1 * c2 == pytest.approx((2.0 / math.sqrt(3.0)) ** 1.5)
