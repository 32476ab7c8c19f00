"""Laurent polynomial matrices: evaluation, fitting, degree bookkeeping."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyqr.errors import ConditioningError, ParameterError
from polyqr.lpmat import (
    LaurentPolyMatrix,
    base_matrix,
    degree_of_hermitian,
    degree_of_product,
    degree_of_sum,
    eval_many,
    fit_from_samples,
    from_coeffs,
    hermitian,
    tone_point,
)


def random_lp(rng, rows, cols, v1, v2):
    n = v1 + v2 + 1
    coeffs = rng.standard_normal((n, rows, cols)) + 1j * rng.standard_normal(
        (n, rows, cols)
    )
    return from_coeffs(coeffs, v1, v2)


def test_eval_matches_horner_sum(rng):
    lp = random_lp(rng, 3, 2, 2, 4)
    s = np.exp(0.7j)
    direct = sum(
        lp.coeff(v) * s ** (-v) for v in range(-lp.v1, lp.v2 + 1)
    )
    got = eval_many(lp, [s])[0]
    assert np.allclose(got, direct, atol=1e-12)


def test_tone_point_unit_circle():
    p = tone_point(3, 8)
    assert p.tone_index == 3 and p.grid_size == 8
    assert abs(abs(p.value) - 1) < 1e-12
    assert np.isclose(p.value, np.exp(2j * np.pi * 3 / 8))


def test_fit_recovers_coefficients(rng):
    lp = random_lp(rng, 2, 2, 1, 3)
    pts = [np.exp(2j * np.pi * k / 7) for k in range(5)]
    samples = eval_many(lp, pts)
    fitted = fit_from_samples(pts, samples, 1, 3)
    assert np.allclose(fitted.coeffs, lp.coeffs, atol=1e-9)


def test_fit_needs_enough_points(rng):
    lp = random_lp(rng, 2, 2, 1, 3)
    pts = [np.exp(2j * np.pi * k / 7) for k in range(4)]
    samples = eval_many(lp, pts)
    with pytest.raises(ParameterError):
        fit_from_samples(pts, samples, 1, 3)


def test_fit_rejects_repeated_points(rng):
    lp = random_lp(rng, 1, 1, 0, 1)
    pts = [1.0 + 0j, 1.0 + 0j, -1.0 + 0j]
    samples = eval_many(lp, pts)
    with pytest.raises((ParameterError, ConditioningError)):
        fit_from_samples(pts, samples, 0, 1)


@settings(max_examples=25, deadline=None)
@given(
    v1=st.integers(0, 3),
    v2=st.integers(0, 3),
    extra=st.integers(0, 3),
    seed=st.integers(0, 2**31 - 1),
)
def test_fit_then_eval_roundtrip(v1, v2, extra, seed):
    """A fit from v1+v2+1+extra samples reproduces the LP anywhere."""
    rng = np.random.default_rng(seed)
    lp = random_lp(rng, 2, 3, v1, v2)
    n_pts = v1 + v2 + 1 + extra
    pts = [np.exp(2j * np.pi * (k + 0.3) / (n_pts + 1)) for k in range(n_pts)]
    fitted = fit_from_samples(pts, eval_many(lp, pts), v1, v2)
    probe = [np.exp(1.1j), np.exp(-0.4j)]
    assert np.allclose(eval_many(fitted, probe), eval_many(lp, probe), atol=1e-8)


def test_base_matrix_row_layout():
    """Each row runs from s^{v1} down to s^{-v2}."""
    s = np.exp(0.5j)
    row = base_matrix([s], 1, 2)[0]
    assert np.allclose(row, [s, 1, s**-1, s**-2])


def test_degree_arithmetic():
    assert degree_of_product((1, 2), (3, 1)) == (4, 3)
    assert degree_of_sum((1, 2), (3, 1)) == (3, 2)
    assert degree_of_hermitian((1, 2)) == (2, 1)


def test_hermitian_eval_is_conjugate_transpose(rng):
    lp = random_lp(rng, 3, 2, 1, 2)
    lph = hermitian(lp)
    s = np.exp(0.9j)  # on the unit circle 1/conj(s) = s
    a = eval_many(lp, [s])[0]
    b = eval_many(lph, [s])[0]
    assert np.allclose(b, a.conj().T, atol=1e-12)


def test_json_roundtrip(rng):
    lp = random_lp(rng, 2, 2, 1, 1)
    back = LaurentPolyMatrix.from_json(lp.to_json())
    assert back.v1 == lp.v1 and back.v2 == lp.v2
    assert np.allclose(back.coeffs, lp.coeffs)


def test_coeffs_are_frozen(rng):
    lp = random_lp(rng, 2, 2, 1, 1)
    with pytest.raises((ValueError, RuntimeError)):
        lp.coeffs[0, 0, 0] = 0
