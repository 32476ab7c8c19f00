"""Interpolation engines: direct, pruned-FFT upsampling, FIR banks."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyqr.errors import ConditioningError, ParameterError
from polyqr.interp import (
    EquidistantGrid,
    InterpolationDesign,
    fir_apply,
    fir_design,
    fir_full_matrix,
    fir_support,
    interpolation_matrix,
    point_matrices,
    upsample_fft,
)
from polyqr.lpmat import eval_many, from_coeffs


def random_lp_scalar(rng, v1, v2):
    n = v1 + v2 + 1
    c = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return from_coeffs(c.reshape(-1, 1, 1), v1, v2)


def circle(idx, N):
    return np.exp(2j * np.pi * np.asarray(idx) / N)


def test_point_matrices_layout():
    s = np.exp(0.5j)
    B, T = point_matrices([s], [s**2], 1, 2)
    assert np.allclose(B[0], [s, 1, 1 / s, 1 / s**2])
    assert np.allclose(T[0], [s**2, 1, s**-2, s**-4])


def test_interpolation_matrix_identity_on_base():
    pts = circle(np.arange(4), 4)
    M = interpolation_matrix(pts, pts, 1, 2)
    assert np.allclose(M, np.eye(4), atol=1e-12)


def test_interpolation_matrix_real_for_symmetric_degrees():
    base = circle(np.arange(5), 5)
    tgt = circle(np.arange(3) + 0.37, 7)
    M = interpolation_matrix(base, tgt, 2, 2)
    assert np.abs(M.imag).max() < 1e-12


def test_interpolation_exactness(rng):
    lp = random_lp_scalar(rng, 1, 2)
    base = circle(np.arange(4), 4)
    tgt = circle([1, 3, 5], 11)
    M = interpolation_matrix(base, tgt, 1, 2)
    samples = eval_many(lp, list(base))[:, 0, 0]
    want = eval_many(lp, list(tgt))[:, 0, 0]
    assert np.allclose(M @ samples, want, atol=1e-10)


def test_interpolation_needs_enough_base_points():
    base = circle(np.arange(3), 3)
    with pytest.raises((ParameterError, ConditioningError)):
        interpolation_matrix(base, circle([1], 5), 2, 2)


@settings(max_examples=20, deadline=None)
@given(
    v1=st.integers(0, 4),
    v2=st.integers(0, 4),
    seed=st.integers(0, 2**31 - 1),
)
def test_direct_engine_exact_on_random_lps(v1, v2, seed):
    rng = np.random.default_rng(seed)
    lp = random_lp_scalar(rng, v1, v2)
    n = v1 + v2 + 1
    base = circle(np.arange(n + 2), n + 2)
    tgt = circle(np.arange(5) * 7 + 3, 64)
    M = interpolation_matrix(base, tgt, v1, v2)
    got = M @ eval_many(lp, list(base))[:, 0, 0]
    want = eval_many(lp, list(tgt))[:, 0, 0]
    assert np.abs(got - want).max() < 1e-9 * max(1.0, np.abs(want).max())


def test_grid_layout():
    g = EquidistantGrid.upsampling(8, 4)
    assert g.B == 8 and g.R == 4 and g.N == 32
    assert np.allclose(g.base_points(), circle(np.arange(0, 32, 4), 32))


def test_upsample_fft_matches_direct(rng):
    B, R = 8, 4
    g = EquidistantGrid.upsampling(B, R)
    v1, v2 = 4, 3
    lp = random_lp_scalar(rng, v1, v2)
    base_vals = eval_many(lp, list(g.base_points()))[:, 0, 0]
    got, _ = upsample_fft(base_vals, g, v1, v2)
    want = eval_many(lp, list(g.target_points()))[:, 0, 0]
    assert np.allclose(got, want, atol=1e-10)


def test_upsample_fft_rejects_excess_degree(rng):
    from polyqr.errors import UnsupportedRegimeError

    g = EquidistantGrid.upsampling(8, 2)
    with pytest.raises(UnsupportedRegimeError):
        upsample_fft(np.ones(8, dtype=complex), g, 4, 4)


def test_fir_support_is_contiguous_modulo_wrap():
    s = fir_support(16, 6)
    assert len(s) == 6
    assert len(np.unique(s % 16)) == 6


def test_fir_design_full_support_equals_direct(rng):
    g = EquidistantGrid.upsampling(8, 4)
    v1, v2 = 3, 4
    d = fir_design(g, v1, v2)  # B' defaults to B: exact
    lp = random_lp_scalar(rng, v1, v2)
    base_vals = eval_many(lp, list(g.base_points()))[:, 0, 0]
    got = fir_apply(d, base_vals)
    want = eval_many(lp, list(g.target_points()))[:, 0, 0]
    assert np.allclose(got, want, atol=1e-10)


def test_fir_truncated_is_inexact_but_close(rng):
    g = EquidistantGrid.upsampling(16, 4)
    v1 = v2 = 7
    d = fir_design(g, v1, v2, B_prime=8)
    lp = random_lp_scalar(rng, v1, v2)
    base_vals = eval_many(lp, list(g.base_points()))[:, 0, 0]
    got = fir_apply(d, base_vals)
    want = eval_many(lp, list(g.target_points()))[:, 0, 0]
    err = np.abs(got - want).max()
    assert 0 < err  # truncation loses exactness
    assert err < 10.0  # but not wildly


def test_fir_rows_conjugate_symmetry(rng):
    """Row r of the bank mirrors row R-r conjugated and index-reversed."""
    g = EquidistantGrid.upsampling(16, 4)
    d = fir_design(g, 6, 8, B_prime=8)
    F0 = d.F0
    R = F0.shape[0] + 1
    assert np.abs(F0.imag).max() > 1e-6  # genuinely complex taps
    for r in range(1, R):
        lhs = F0[r - 1]
        rhs = np.conj(F0[R - r - 1][::-1])
        assert np.abs(lhs - rhs).max() < 1e-12


def test_fir_symmetric_degrees_real_taps():
    g = EquidistantGrid.upsampling(16, 2)
    d = fir_design(g, 7, 7, B_prime=8)
    assert np.abs(d.F0.imag).max() < 1e-12
    assert d.mult_count_per_target == Fraction(1, 8) * 8 / 2


def test_fir_asymmetric_degrees_priced_complex():
    g = EquidistantGrid.upsampling(16, 2)
    d = fir_design(g, 6, 8, B_prime=8)
    assert d.mult_count_per_target == Fraction(1, 4) * 8 / 2


def test_fir_odd_b_prime_rejected():
    g = EquidistantGrid.upsampling(16, 2)
    with pytest.raises(ParameterError):
        fir_design(g, 7, 7, B_prime=7)


def test_fir_full_matrix_matches_apply(rng):
    g = EquidistantGrid.upsampling(8, 4)
    d = fir_design(g, 3, 3, B_prime=4)
    base = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    assert np.allclose(fir_full_matrix(d) @ base, fir_apply(d, base), atol=1e-12)


def test_design_json_roundtrip():
    g = EquidistantGrid.upsampling(8, 2)
    d = fir_design(g, 3, 3, B_prime=4)
    import json

    back = InterpolationDesign.from_json_dict(json.loads(d.to_json()))
    assert back.B == d.B and back.B_prime == d.B_prime
    assert back.mult_count_per_target == d.mult_count_per_target
    assert np.allclose(back.F0, d.F0)
